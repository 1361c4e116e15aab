//! Confusion-matrix metrics, McNemar's test and the chi-square tail.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub precision: f64,
    pub recall: f64,
    pub f1: f64,
    pub tp: usize,
    pub fp: usize,
    #[serde(rename = "fn")]
    pub fn_: usize,
    pub tn: usize,
    pub n_test: usize,
}

/// Ratio with `0/0 = 0`.
pub(crate) fn ratio(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        num as f64 / den as f64
    }
}

pub(crate) fn f1_score(precision: f64, recall: f64) -> f64 {
    if precision + recall == 0.0 {
        0.0
    } else {
        2.0 * precision * recall / (precision + recall)
    }
}

impl EvalReport {
    pub fn from_counts(tp: usize, fp: usize, fn_: usize, tn: usize) -> Self {
        let precision = ratio(tp, tp + fp);
        let recall = ratio(tp, tp + fn_);
        EvalReport {
            precision,
            recall,
            f1: f1_score(precision, recall),
            tp,
            fp,
            fn_,
            tn,
            n_test: tp + fp + fn_ + tn,
        }
    }
}

/// Metrics with propaganda (`true`) as the positive class.
pub fn score(pred: &[bool], gold: &[bool]) -> Result<EvalReport> {
    if pred.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "{} predictions but {} gold labels",
            pred.len(),
            gold.len()
        )));
    }
    if pred.is_empty() {
        return Err(Error::InvalidInput("cannot score zero predictions".into()));
    }
    let (mut tp, mut fp, mut fn_, mut tn) = (0, 0, 0, 0);
    for (&p, &g) in pred.iter().zip(gold) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => tn += 1,
        }
    }
    Ok(EvalReport::from_counts(tp, fp, fn_, tn))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct McNemarResult {
    /// Examples system A gets right and system B gets wrong.
    pub b: usize,
    /// Examples system A gets wrong and system B gets right.
    pub c: usize,
    pub statistic: f64,
    pub p_value: f64,
    pub continuity_correction: bool,
}

/// McNemar's test on paired predictions.
///
/// With continuity correction the statistic is `(|b − c| − 1)² / (b + c)`,
/// otherwise `(b − c)² / (b + c)`; both are 0 when `b + c = 0`. The p-value
/// is the upper tail of a chi-square distribution with one degree of
/// freedom.
pub fn mcnemar(pred_a: &[bool], pred_b: &[bool], gold: &[bool], continuity_correction: bool) -> Result<McNemarResult> {
    if pred_a.len() != gold.len() || pred_b.len() != gold.len() {
        return Err(Error::InvalidInput(format!(
            "prediction lengths {} and {} differ from gold length {}",
            pred_a.len(),
            pred_b.len(),
            gold.len()
        )));
    }
    let (mut b, mut c) = (0, 0);
    for ((&a, &bb), &g) in pred_a.iter().zip(pred_b).zip(gold) {
        match (a == g, bb == g) {
            (true, false) => b += 1,
            (false, true) => c += 1,
            _ => {}
        }
    }
    Ok(mcnemar_from_counts(b, c, continuity_correction))
}

pub fn mcnemar_from_counts(b: usize, c: usize, continuity_correction: bool) -> McNemarResult {
    let statistic = if b + c == 0 {
        0.0
    } else {
        let diff = b.abs_diff(c) as f64;
        let diff = if continuity_correction {
            (diff - 1.0).max(0.0)
        } else {
            diff
        };
        diff * diff / (b + c) as f64
    };
    McNemarResult {
        b,
        c,
        statistic,
        p_value: chi_square_sf(statistic, 1.0),
        continuity_correction,
    }
}

const LANCZOS_G: f64 = 7.0;
const LANCZOS: [f64; 9] = [
    0.999_999_999_999_809_9,
    676.520_368_121_885_1,
    -1_259.139_216_722_402_8,
    771.323_428_777_653_1,
    -176.615_029_162_140_6,
    12.507_343_278_686_905,
    -0.138_571_095_265_720_12,
    9.984_369_578_019_572e-6,
    1.505_632_735_149_311_6e-7,
];

/// `ln Γ(x)` for `x > 0` (Lanczos, g = 7, n = 9).
pub fn ln_gamma(x: f64) -> f64 {
    if x < 0.5 {
        // Reflection: Γ(x) Γ(1 − x) = π / sin(πx).
        let pi = std::f64::consts::PI;
        return (pi / (pi * x).sin()).ln() - ln_gamma(1.0 - x);
    }
    let x = x - 1.0;
    let mut sum = LANCZOS[0];
    for (k, c) in LANCZOS.iter().enumerate().skip(1) {
        sum += c / (x + k as f64);
    }
    let t = x + LANCZOS_G + 0.5;
    0.5 * (2.0 * std::f64::consts::PI).ln() + (x + 0.5) * t.ln() - t + sum.ln()
}

const GAMMA_EPS: f64 = 1e-15;
const GAMMA_MAX_ITER: usize = 500;

/// Regularized lower incomplete gamma `P(a, x)` by its power series.
/// Converges quickly for `x < a + 1`.
fn gamma_p_series(a: f64, x: f64) -> f64 {
    let mut term = 1.0 / a;
    let mut sum = term;
    let mut ap = a;
    for _ in 0..GAMMA_MAX_ITER {
        ap += 1.0;
        term *= x / ap;
        sum += term;
        if term.abs() < sum.abs() * GAMMA_EPS {
            break;
        }
    }
    (sum.ln() - x + a * x.ln() - ln_gamma(a)).exp()
}

/// Regularized upper incomplete gamma `Q(a, x)` by its continued fraction
/// (modified Lentz). Converges quickly for `x ≥ a + 1`.
fn gamma_q_continued_fraction(a: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    let mut b = x + 1.0 - a;
    let mut c = 1.0 / TINY;
    let mut d = 1.0 / b;
    let mut h = d;
    for i in 1..=GAMMA_MAX_ITER {
        let an = -(i as f64) * (i as f64 - a);
        b += 2.0;
        d = an * d + b;
        if d.abs() < TINY {
            d = TINY;
        }
        c = b + an / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let delta = d * c;
        h *= delta;
        if (delta - 1.0).abs() < GAMMA_EPS {
            break;
        }
    }
    (-x + a * x.ln() - ln_gamma(a)).exp() * h
}

/// Regularized upper incomplete gamma `Q(a, x) = Γ(a, x) / Γ(a)`.
pub fn gamma_q(a: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 1.0;
    }
    if x < a + 1.0 {
        1.0 - gamma_p_series(a, x)
    } else {
        gamma_q_continued_fraction(a, x)
    }
}

/// Upper tail `1 − F(x)` of the chi-square distribution with `df`
/// degrees of freedom, clamped to `[0, 1]`.
pub fn chi_square_sf(x: f64, df: f64) -> f64 {
    if x.is_nan() {
        return f64::NAN;
    }
    gamma_q(df / 2.0, x / 2.0).clamp(0.0, 1.0)
}
