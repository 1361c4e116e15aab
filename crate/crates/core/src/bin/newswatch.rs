use std::net::{IpAddr, Ipv4Addr, SocketAddr};
use std::path::{Path, PathBuf};
use std::process::ExitCode;
use std::time::Instant;

use clap::{Parser, Subcommand};

use newswatch::config::Config;
use newswatch::corpus::{load_labeled, parse_timestamp, ArticleFormat, LoadReport};
use newswatch::eval::{
    default_eps_grid, load_grouped, load_pairs, run_experiment, tune_dedup, tune_eps, DedupGrid, ExperimentConfig,
};
use newswatch::features::lexicon::shipped;
use newswatch::features::{FamilyFlags, FeatureConfig};
use newswatch::model::{save_model, train_model, TrainOptions};
use newswatch::service::{parse_scheduler, read_ingest_file, run_batch, serve, RunStore, ServeOptions};
use newswatch::{Error, Result};

#[derive(Parser)]
#[command(name = "newswatch", version, about = "News event clustering and propaganda scoring")]
struct Cli {
    /// TOML configuration file.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Add articles from a file (or a URL) to the article store.
    Ingest {
        #[arg(long, required_unless_present = "url")]
        input: Option<PathBuf>,
        #[arg(long, default_value = "jsonl")]
        format: ArticleFormat,
        /// Fetch one article page instead (needs the `fetch` feature).
        #[arg(long, requires = "source")]
        url: Option<String>,
        #[arg(long)]
        source: Option<String>,
    },
    /// Train a model on a labeled `label<TAB>text` corpus.
    Train {
        #[arg(long)]
        corpus: PathBuf,
        /// Comma-separated families (ngrams, lexicon, style, nela) or `all`.
        #[arg(long)]
        features: Option<FamilyFlags>,
        #[arg(long)]
        l2: Option<f64>,
        #[arg(long)]
        min_df: Option<usize>,
        /// Output path; defaults to the configured model path.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Compare the word n-gram baseline with the full feature set.
    Eval {
        #[arg(long)]
        corpus: PathBuf,
        #[arg(long, default_value_t = newswatch::eval::DEFAULT_SEED)]
        seed: u64,
        #[arg(long, default_value_t = newswatch::eval::DEFAULT_TEST_FRACTION)]
        test_fraction: f64,
        #[arg(long)]
        l2: Option<f64>,
        /// Choose the regularization strength by cross-validation over these values.
        #[arg(long, value_delimiter = ',')]
        lambda_grid: Option<Vec<f64>>,
        #[arg(long)]
        features: Option<FamilyFlags>,
        /// McNemar without continuity correction.
        #[arg(long)]
        uncorrected: bool,
        #[arg(long)]
        json: bool,
    },
    /// Grid search of shingle size and Jaccard threshold on labeled pairs.
    TuneDedup {
        #[arg(long)]
        pairs: PathBuf,
        #[arg(long, value_delimiter = ',')]
        ns: Option<Vec<usize>>,
        #[arg(long, value_delimiter = ',')]
        thetas: Option<Vec<f64>>,
        #[arg(long)]
        json: bool,
    },
    /// Grid search of the clustering radius on `group<TAB>text` documents.
    TuneEps {
        #[arg(long)]
        docs: PathBuf,
        #[arg(long, value_delimiter = ',')]
        grid: Option<Vec<f64>>,
        #[arg(long)]
        min_members: Option<usize>,
        #[arg(long)]
        json: bool,
    },
    /// Process the batch window ending at the given time.
    RunBatch {
        #[arg(long, value_parser = parse_time)]
        window_end: chrono::DateTime<chrono::Utc>,
    },
    /// Serve the HTTP API.
    Serve {
        #[arg(long)]
        port: Option<u16>,
        #[arg(long)]
        model: Option<PathBuf>,
        #[arg(long, default_value_t = IpAddr::V4(Ipv4Addr::LOCALHOST))]
        host: IpAddr,
        #[arg(long)]
        static_dir: Option<PathBuf>,
        /// Run batches periodically, e.g. `period=24h`.
        #[arg(long)]
        with_scheduler: Option<String>,
    },
}

fn parse_time(raw: &str) -> std::result::Result<chrono::DateTime<chrono::Utc>, String> {
    parse_timestamp(raw)
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::FAILURE
        }
    }
}

fn run(cli: Cli) -> Result<()> {
    let mut config = Config::load(cli.config.as_deref())?;
    match cli.command {
        Command::Ingest {
            input,
            format,
            url,
            source,
        } => {
            let store = RunStore::new(&config.data_dir);
            let articles = match (input, url) {
                (Some(path), _) => {
                    let LoadReport { records, skipped } = read_ingest_file(&path, format)?;
                    println!("read {} articles, skipped {} lines", records.len(), skipped.len());
                    records
                }
                (None, Some(url)) => vec![fetch(&url, source.as_deref().unwrap_or_default(), store.root())?],
                (None, None) => unreachable!("clap requires --input or --url"),
            };
            let added = store.ingest(&articles)?;
            println!("added {added} new articles to {}", store.articles_path().display());
        }
        Command::Train {
            corpus,
            features,
            l2,
            min_df,
            out,
        } => {
            let docs = read_labeled(&corpus)?;
            let flags = match features {
                Some(f) => f,
                None => config.families()?,
            };
            let l2 = l2.unwrap_or(config.features.l2_lambda);
            let texts: Vec<&str> = docs.iter().map(|d| d.text.as_str()).collect();
            let labels: Vec<bool> = docs.iter().map(|d| d.label.is_propaganda()).collect();
            let feature_config = FeatureConfig {
                flags,
                min_df: min_df.unwrap_or(config.features.min_df),
            };
            let clock = Instant::now();
            let (model, fit) = train_model(
                &texts,
                &labels,
                feature_config,
                shipped::default_set(),
                &TrainOptions::with_lambda(l2),
            )?;
            let out = out.unwrap_or_else(|| config.model_path());
            if let Some(parent) = out.parent().filter(|p| !p.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent).map_err(|e| Error::Config(format!("{}: {e}", parent.display())))?;
            }
            save_model(&model, &out)?;
            println!(
                "trained on {} documents, {} columns, {} iterations ({:?}) in {:.1}s",
                docs.len(),
                model.width(),
                fit.iterations,
                fit.stop,
                clock.elapsed().as_secs_f64()
            );
            println!("model {} fingerprint {}", out.display(), model.fingerprint());
        }
        Command::Eval {
            corpus,
            seed,
            test_fraction,
            l2,
            lambda_grid,
            features,
            uncorrected,
            json,
        } => {
            let docs = read_labeled(&corpus)?;
            let experiment = ExperimentConfig {
                seed,
                test_fraction,
                l2_lambda: l2.unwrap_or(config.features.l2_lambda),
                lambda_grid,
                min_df: config.features.min_df,
                full_features: features.unwrap_or(FamilyFlags::ALL),
                continuity_correction: !uncorrected,
                ..ExperimentConfig::default()
            };
            let report = run_experiment(&docs, &experiment)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&report)?);
            } else {
                print!("{}", report.to_table());
            }
        }
        Command::TuneDedup {
            pairs,
            ns,
            thetas,
            json,
        } => {
            let LoadReport { records, .. } = load_pairs(&pairs)?;
            let defaults = DedupGrid::default();
            let grid = DedupGrid {
                ns: ns.unwrap_or(defaults.ns),
                thetas: thetas.unwrap_or(defaults.thetas),
            };
            let tuning = tune_dedup(&records, &grid, &config.dedup_config()?.stopwords)?;
            if json {
                println!("{}", serde_json::to_string_pretty(&tuning)?);
            } else {
                print!("{}", tuning.to_table());
            }
        }
        Command::TuneEps {
            docs,
            grid,
            min_members,
            json,
        } => {
            let LoadReport { records, .. } = load_grouped(&docs)?;
            let provider = config.embedding_provider()?;
            let tuning = tune_eps(
                &records,
                &grid.unwrap_or_else(default_eps_grid),
                min_members.unwrap_or(config.cluster.min_members),
                provider.as_ref(),
            )?;
            if json {
                println!("{}", serde_json::to_string_pretty(&tuning)?);
            } else {
                print!("{}", tuning.to_table());
            }
        }
        Command::RunBatch { window_end } => {
            let run = run_batch(&config, window_end)?;
            println!("{}", serde_json::to_string_pretty(&run)?);
            println!("timings (s): {:?}", run.timings);
        }
        Command::Serve {
            port,
            model,
            host,
            static_dir,
            with_scheduler,
        } => {
            if let Some(model) = model {
                config.service.model_path = Some(model);
            }
            if let Some(dir) = static_dir {
                config.service.static_dir = Some(dir);
            }
            let port = port.unwrap_or(config.service.port);
            let scheduler = with_scheduler.as_deref().map(parse_scheduler).transpose()?;
            let options = ServeOptions {
                addr: SocketAddr::new(host, port),
                scheduler,
            };
            let runtime = tokio::runtime::Runtime::new().map_err(|e| Error::Config(format!("tokio runtime: {e}")))?;
            runtime.block_on(serve(config, options))?;
        }
    }
    Ok(())
}

fn read_labeled(path: &Path) -> Result<Vec<newswatch::corpus::LabeledDoc>> {
    let LoadReport { records, skipped } = load_labeled(path)?;
    for skip in &skipped {
        log::warn!("{}: {skip}", path.display());
    }
    Ok(records)
}

#[cfg(feature = "fetch")]
fn fetch(url: &str, source: &str, data_dir: &Path) -> Result<newswatch::corpus::Article> {
    newswatch::corpus::html::fetch_article(url, source, &data_dir.join("raw"))
}

#[cfg(not(feature = "fetch"))]
fn fetch(url: &str, _source: &str, _data_dir: &Path) -> Result<newswatch::corpus::Article> {
    Err(Error::Fetch {
        url: url.to_string(),
        reason: "built without the `fetch` feature".into(),
    })
}
