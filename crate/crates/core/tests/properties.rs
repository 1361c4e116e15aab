mod common;

use std::collections::HashSet;
use std::sync::OnceLock;

use chrono::{DateTime, Duration, TimeZone, Utc};
use proptest::prelude::*;
use rand::seq::{IndexedRandom, SliceRandom};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

use newswatch::clustering::{dbscan_matrix, ClusterLabel, ClusteringConfig, DistanceMatrix};
use newswatch::corpus::{
    article_id, parse_articles, select_window, write_articles_jsonl, Article, ArticleFormat, Period,
};
use newswatch::dedup::{dedup_event, default_stopwords, jaccard, shingles, DedupConfig};
use newswatch::eval::{tune_dedup, DedupGrid, DedupPair};
use newswatch::features::lexicon::shipped;
use newswatch::features::{tokenize, FeatureConfig, FeaturePipeline, FeatureVector};
use newswatch::model::logistic::fit;
use newswatch::model::{Model, TrainOptions};
use newswatch::synthetic::{generate, SyntheticConfig};

use common::*;

fn model() -> &'static Model {
    static MODEL: OnceLock<Model> = OnceLock::new();
    MODEL.get_or_init(small_model)
}

fn base_time() -> DateTime<Utc> {
    Utc.with_ymd_and_hms(2024, 5, 1, 0, 0, 0).unwrap()
}

fn article_strategy() -> impl Strategy<Value = Article> {
    (
        "https://[a-z]{1,8}\\.example/[a-z0-9/_-]{0,20}",
        "[a-z_]{1,10}",
        "\\PC{0,40}",
        "\\PC{1,200}",
        -100_000i64..100_000,
        prop::option::of(0i64..1000),
    )
        .prop_filter("text must not be blank", |(_, _, _, text, _, _)| {
            !text.trim().is_empty()
        })
        .prop_map(|(url, source, title, text, offset, fetched)| {
            let published = base_time() + Duration::seconds(offset);
            let mut article = Article::new(url, source, title, text, published);
            article.fetched_at = fetched.map(|s| published + Duration::seconds(s));
            article
        })
}

/// Points in a few tight, well separated groups plus scattered singles,
/// drawn on a grid coarse enough that no distance lands exactly on ε.
fn separated_points(seed: u64, n: usize) -> Vec<[f64; 2]> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let centers: Vec<[f64; 2]> = (0..rng.random_range(1..5))
        .map(|k| [k as f64 * 10.0, rng.random_range(0..3) as f64 * 10.0])
        .collect();
    (0..n)
        .map(|_| {
            if rng.random_bool(0.8) {
                let c = centers.choose(&mut rng).unwrap();
                [
                    c[0] + rng.random_range(0..8) as f64 * 0.125,
                    c[1] + rng.random_range(0..8) as f64 * 0.125,
                ]
            } else {
                [
                    rng.random_range(0..400) as f64 * 0.125 + 100.0,
                    rng.random_range(0..400) as f64 * 0.125 + 100.0,
                ]
            }
        })
        .collect()
}

fn euclid(a: [f64; 2], b: [f64; 2]) -> f64 {
    ((a[0] - b[0]).powi(2) + (a[1] - b[1]).powi(2)).sqrt()
}

fn cluster_points(points: &[[f64; 2]], eps: f64, min_members: usize) -> Vec<ClusterLabel> {
    let matrix = DistanceMatrix::from_fn(points.len(), |i, j| euclid(points[i], points[j]));
    dbscan_matrix(&matrix, &ClusteringConfig { eps, min_members })
}

/// True when some non-core point is within ε of core points from two
/// different clusters, the one case where scan order decides membership.
fn has_contested_border(points: &[[f64; 2]], labels: &[ClusterLabel], eps: f64, min_members: usize) -> bool {
    let n = points.len();
    let core: Vec<bool> = (0..n)
        .map(|i| (0..n).filter(|&j| euclid(points[i], points[j]) <= eps).count() >= min_members)
        .collect();
    (0..n).any(|i| {
        !core[i] && {
            let reached: HashSet<usize> = (0..n)
                .filter(|&j| core[j] && euclid(points[i], points[j]) <= eps)
                .filter_map(|j| labels[j].cluster())
                .collect();
            reached.len() > 1
        }
    })
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(64))]

    #[test]
    fn dbscan_partition_ignores_input_order(
        seed in any::<u64>(),
        n in 2usize..60,
        eps in prop::sample::select(vec![0.3, 0.6, 1.1, 2.7]),
        min_members in 2usize..5,
        shuffle_seed in any::<u64>(),
    ) {
        let points = separated_points(seed, n);
        let labels = cluster_points(&points, eps, min_members);
        prop_assume!(!has_contested_border(&points, &labels, eps, min_members));

        let mut order: Vec<usize> = (0..n).collect();
        order.shuffle(&mut ChaCha8Rng::seed_from_u64(shuffle_seed));
        let shuffled: Vec<[f64; 2]> = order.iter().map(|&i| points[i]).collect();
        let shuffled_labels = cluster_points(&shuffled, eps, min_members);

        // Map back to original indices before comparing partitions.
        let mut restored = vec![ClusterLabel::Noise; n];
        for (pos, &orig) in order.iter().enumerate() {
            restored[orig] = shuffled_labels[pos];
        }
        prop_assert_eq!(partition(&labels), partition(&restored));
    }

    #[test]
    fn larger_eps_never_adds_noise(seed in any::<u64>(), n in 2usize..80) {
        let points = separated_points(seed, n);
        let mut last_noise = usize::MAX;
        for eps in [0.1, 0.2, 0.4, 0.8, 1.6, 3.2, 6.4, 12.8, 25.6] {
            let noise = partition(&cluster_points(&points, eps, 2)).1.len();
            prop_assert!(noise <= last_noise, "eps {}: {} > {}", eps, noise, last_noise);
            last_noise = noise;
        }
    }

    #[test]
    fn articles_round_trip_through_jsonl(articles in prop::collection::vec(article_strategy(), 0..20)) {
        let dir = tempfile::tempdir().unwrap();
        let path = dir.path().join("a.jsonl");
        write_articles_jsonl(&path, &articles).unwrap();
        let loaded = parse_articles(&std::fs::read_to_string(&path).unwrap(), ArticleFormat::Jsonl);
        prop_assert!(loaded.skipped.is_empty(), "{:?}", loaded.skipped);
        prop_assert_eq!(&loaded.records, &articles);

        write_articles_jsonl(&path, &loaded.records).unwrap();
        let again = parse_articles(&std::fs::read_to_string(&path).unwrap(), ArticleFormat::Jsonl);
        prop_assert_eq!(again.records, articles);
    }

    #[test]
    fn window_selection_is_idempotent(
        articles in prop::collection::vec(article_strategy(), 0..40),
        end_offset in -100_000i64..100_000,
        hours in 1i64..72,
    ) {
        let end = base_time() + Duration::seconds(end_offset);
        let period = Period::hours(hours).unwrap();
        let once = select_window(&articles, end, period);
        let twice = select_window(&once.articles, end, period);
        prop_assert_eq!(&once, &twice);
        for a in &once.articles {
            prop_assert!(a.published_at >= once.window_start && a.published_at < end);
        }
    }

    #[test]
    fn score_is_deterministic_and_finite(title in "\\PC{0,60}", text in "\\PC{1,400}") {
        let a = model().score_article(Some(&title), &text).unwrap();
        let b = model().score_article(Some(&title), &text).unwrap();
        prop_assert_eq!(&a, &b);
        prop_assert!(a.logit.is_finite());
        prop_assert!(a.propaganda_index > 0.0 && a.propaganda_index < 1.0);
        let sum: f64 = a.family_contributions.iter().map(|c| c.value).sum::<f64>() + a.bias;
        prop_assert!((sum - a.logit).abs() <= 1e-9 * a.logit.abs().max(1.0));
    }

    #[test]
    fn dedup_accounting_and_idempotence(
        seed in any::<u64>(),
        n in 1usize..12,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = ["harbor", "fire", "council", "budget", "storm", "rail", "vote", "school", "night", "crowd"];
        let articles: Vec<Article> = (0..n)
            .map(|i| {
                let len = rng.random_range(3..15);
                let text: Vec<&str> = (0..len).map(|_| *words.choose(&mut rng).unwrap()).collect();
                Article::new(
                    format!("https://x.example/{i}"),
                    "x",
                    "t",
                    text.join(" "),
                    base_time() + Duration::minutes(rng.random_range(0..100)),
                )
            })
            .collect();
        let config = DedupConfig::new(2, 0.5, default_stopwords()).unwrap();
        let outcome = dedup_event(&articles, &config);
        let removed: usize = outcome.dup_groups.iter().map(|g| g.len() - 1).sum();
        prop_assert_eq!(outcome.kept.len() + removed, articles.len());
        let again = dedup_event(&outcome.kept, &config);
        prop_assert_eq!(&again.kept, &outcome.kept);
        prop_assert!(again.dup_groups.is_empty());
    }

    #[test]
    fn tune_dedup_best_cell_matches_recomputation(
        seed in any::<u64>(),
        n_pairs in 2usize..20,
    ) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let words = ["a1", "b2", "c3", "d4", "e5", "f6", "g7", "h8"];
        let text = |rng: &mut ChaCha8Rng| -> String {
            let len = rng.random_range(2..10);
            (0..len).map(|_| *words.choose(rng).unwrap()).collect::<Vec<_>>().join(" ")
        };
        let mut pairs: Vec<DedupPair> = (0..n_pairs)
            .map(|_| DedupPair { text_a: text(&mut rng), text_b: text(&mut rng), derived: rng.random_bool(0.5) })
            .collect();
        pairs[0].derived = true;
        pairs[1].derived = false;
        let grid = DedupGrid { ns: vec![1, 2, 3], thetas: vec![0.2, 0.4, 0.6, 0.8] };
        let stopwords = Default::default();
        let tuning = tune_dedup(&pairs, &grid, &stopwords).unwrap();
        prop_assert_eq!(tuning.cells.len(), 12);

        // Recompute the best cell's F1 from scratch.
        let config = DedupConfig::new(tuning.best.n, tuning.best.theta, Default::default()).unwrap();
        let (mut tp, mut fp, mut fn_) = (0usize, 0usize, 0usize);
        for p in &pairs {
            let predicted = jaccard(&shingles(&p.text_a, &config), &shingles(&p.text_b, &config)) >= tuning.best.theta;
            match (predicted, p.derived) {
                (true, true) => tp += 1,
                (true, false) => fp += 1,
                (false, true) => fn_ += 1,
                _ => {}
            }
        }
        let f1 = if tp == 0 { 0.0 } else { 2.0 * tp as f64 / (2 * tp + fp + fn_) as f64 };
        prop_assert!((f1 - tuning.best.f1).abs() < 1e-12, "{} vs {}", f1, tuning.best.f1);
        for cell in &tuning.cells {
            prop_assert!(cell.f1 <= tuning.best.f1);
        }
    }
}

proptest! {
    #![proptest_config(ProptestConfig::with_cases(24))]

    #[test]
    fn doubled_data_with_doubled_lambda_keeps_weights(seed in any::<u64>()) {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        let dim = rng.random_range(1..6);
        let n = rng.random_range(4..30);
        let xs: Vec<FeatureVector> = (0..n)
            .map(|_| {
                let dense: Vec<f64> = (0..dim).map(|_| rng.random_range(-3.0..3.0)).collect();
                FeatureVector::from_dense(&dense)
            })
            .collect();
        let mut ys: Vec<bool> = (0..n).map(|_| rng.random_bool(0.5)).collect();
        ys[0] = true;
        ys[1] = false;
        let lambda = rng.random_range(0.05..2.0);

        let tight = |l2_lambda| TrainOptions { l2_lambda, tolerance: 1e-10, max_iterations: 5000 };
        let single = fit(&xs, &ys, &tight(lambda)).unwrap();
        let xs2: Vec<FeatureVector> = xs.iter().chain(&xs).cloned().collect();
        let ys2: Vec<bool> = ys.iter().chain(&ys).copied().collect();
        let double = fit(&xs2, &ys2, &tight(2.0 * lambda)).unwrap();

        for (a, b) in single.weights.iter().zip(&double.weights) {
            prop_assert!((a - b).abs() <= 1e-6, "{} vs {}", a, b);
        }
        prop_assert!((single.bias - double.bias).abs() <= 1e-6);
    }
}

#[test]
fn article_ids_are_injective_on_ten_thousand_items() {
    let mut rng = ChaCha8Rng::seed_from_u64(7);
    let mut pairs = HashSet::new();
    while pairs.len() < 10_000 {
        let url = format!(
            "https://news{}.example/story/{}",
            rng.random_range(0..50),
            rng.random_range(0..2000)
        );
        let when = base_time() + Duration::seconds(rng.random_range(0..86_400 * 30));
        pairs.insert((url, when));
    }
    // Same url at different times and different urls at the same time.
    for k in 0..500 {
        pairs.insert(("https://same.example/".into(), base_time() + Duration::seconds(k)));
        pairs.insert((format!("https://same.example/{k}"), base_time()));
    }
    let ids: HashSet<String> = pairs.iter().map(|(u, t)| article_id(u, *t)).collect();
    assert_eq!(ids.len(), pairs.len());
}

/// Every feature, before and after standardization, stays finite on a
/// large fuzz corpus of odd texts.
#[test]
fn features_are_finite_on_a_fuzz_corpus() {
    let docs: Vec<String> = generate(&SyntheticConfig {
        n_docs: 200,
        seed: 3,
        ..SyntheticConfig::default()
    })
    .unwrap()
    .into_iter()
    .map(|d| d.text)
    .collect();
    let pipeline = FeaturePipeline::fitted(FeatureConfig::default(), shipped::default_set(), &docs).unwrap();

    let alphabet: Vec<&str> = vec![
        "a",
        "the",
        "I",
        "we",
        "not",
        "!",
        "?",
        ".",
        "...",
        ",",
        "\"",
        "'",
        "ALL",
        "CAPS",
        "x",
        "rhythm",
        "é",
        "ß",
        "日本",
        "🙂",
        "\n",
        "\t",
        " ",
        "  ",
        "123",
        "4.5",
        "http://a.b/c",
        "Mr.",
        "e.g.",
        "-",
        "\u{2014}",
        "(",
        ")",
        "awful",
        "glorious",
        "queue",
        "strengths",
        "Z",
        "",
    ];
    let failures: Vec<(u64, String)> = (0..100_000u64)
        .into_par_iter()
        .filter_map(|i| {
            let mut rng = ChaCha8Rng::seed_from_u64(i);
            let len = rng.random_range(0..40);
            let joiner = if rng.random_bool(0.5) { " " } else { "" };
            let text = (0..len)
                .map(|_| *alphabet.choose(&mut rng).unwrap())
                .collect::<Vec<_>>()
                .join(joiner);
            let raw = pipeline.dense_raw(&text, &tokenize(&text));
            let assembled = pipeline.assemble(&text).ok()?;
            let finite = raw.iter().all(|v| v.is_finite()) && assembled.values.iter().all(|v| v.is_finite());
            (!finite).then_some((i, text))
        })
        .collect();
    assert!(
        failures.is_empty(),
        "{} non-finite documents, first {:?}",
        failures.len(),
        failures.first()
    );
}
