//! L2-regularized binary logistic regression.
//!
//! Minimizes
//!
//! ```text
//! J(w, b) = Σᵢ [softplus(zᵢ) − yᵢ zᵢ] + λ‖w‖²,   zᵢ = w·xᵢ + b
//! ```
//!
//! which is the negative log-likelihood plus the penalty; the bias is not
//! penalized. The optimizer is limited-memory BFGS on the gradient oracle
//! only (no Hessian is ever formed), with Armijo backtracking so that `J`
//! never increases, started from zero. Iteration stops once
//! `‖∇J‖∞ ≤ tolerance` or after `max_iterations`.

use std::collections::VecDeque;

use rayon::prelude::*;

use crate::error::{Error, Result};
use crate::features::FeatureVector;

pub const DEFAULT_L2_LAMBDA: f64 = 1.0;
pub const DEFAULT_TOLERANCE: f64 = 1e-6;
pub const DEFAULT_MAX_ITERATIONS: usize = 1000;

const HISTORY: usize = 10;
const ARMIJO_C1: f64 = 1e-4;
const MAX_BACKTRACKS: usize = 60;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct TrainOptions {
    pub l2_lambda: f64,
    pub tolerance: f64,
    pub max_iterations: usize,
}

impl Default for TrainOptions {
    fn default() -> Self {
        TrainOptions {
            l2_lambda: DEFAULT_L2_LAMBDA,
            tolerance: DEFAULT_TOLERANCE,
            max_iterations: DEFAULT_MAX_ITERATIONS,
        }
    }
}

impl TrainOptions {
    pub fn with_lambda(l2_lambda: f64) -> Self {
        TrainOptions {
            l2_lambda,
            ..TrainOptions::default()
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum StopReason {
    Converged,
    MaxIterations,
    /// No step along the search direction decreased `J` any further,
    /// which happens at the limit of floating-point resolution.
    LineSearchStalled,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LogisticFit {
    pub weights: Vec<f64>,
    pub bias: f64,
    /// `J` at the start point and after every accepted step.
    pub objective_trace: Vec<f64>,
    pub iterations: usize,
    pub gradient_inf_norm: f64,
    pub stop: StopReason,
}

/// Numerically stable `ln(1 + e^z)`.
pub fn softplus(z: f64) -> f64 {
    z.max(0.0) + (-z.abs()).exp().ln_1p()
}

/// Logistic function, unclamped.
pub fn sigmoid(z: f64) -> f64 {
    if z >= 0.0 {
        1.0 / (1.0 + (-z).exp())
    } else {
        let e = z.exp();
        e / (1.0 + e)
    }
}

/// Training problem with validated inputs.
#[derive(Debug)]
pub struct Problem<'a> {
    xs: &'a [FeatureVector],
    ys: Vec<f64>,
    width: usize,
    l2_lambda: f64,
}

impl<'a> Problem<'a> {
    pub fn new(xs: &'a [FeatureVector], ys: &[bool], l2_lambda: f64) -> Result<Self> {
        if xs.len() != ys.len() {
            return Err(Error::InvalidInput(format!(
                "{} feature rows but {} labels",
                xs.len(),
                ys.len()
            )));
        }
        if xs.len() < 2 || ys.iter().all(|&y| y) || ys.iter().all(|&y| !y) {
            return Err(Error::SingleClass);
        }
        if !(l2_lambda.is_finite() && l2_lambda > 0.0) {
            return Err(Error::Config(format!("l2_lambda must be positive, got {l2_lambda}")));
        }
        let width = xs[0].width;
        for (example, x) in xs.iter().enumerate() {
            if x.width != width {
                return Err(Error::DimensionMismatch {
                    expected: width,
                    actual: x.width,
                });
            }
            if x.indices.iter().any(|&i| i >= width) {
                return Err(Error::InvalidInput(format!(
                    "example {example} has a column outside width {width}"
                )));
            }
            if let Some(k) = x.values.iter().position(|v| !v.is_finite()) {
                return Err(Error::NonFiniteFeature {
                    example,
                    column: x.indices[k],
                });
            }
        }
        Ok(Problem {
            xs,
            ys: ys.iter().map(|&y| if y { 1.0 } else { 0.0 }).collect(),
            width,
            l2_lambda,
        })
    }

    /// Number of parameters: the weights followed by the bias.
    pub fn dim(&self) -> usize {
        self.width + 1
    }

    fn margins(&self, theta: &[f64]) -> Vec<f64> {
        let (w, b) = theta.split_at(self.width);
        self.xs.par_iter().map(|x| x.dot(w) + b[0]).collect()
    }

    pub fn objective(&self, theta: &[f64]) -> f64 {
        let z = self.margins(theta);
        self.objective_from_margins(theta, &z)
    }

    fn objective_from_margins(&self, theta: &[f64], z: &[f64]) -> f64 {
        let w = &theta[..self.width];
        let nll: f64 = z.iter().zip(&self.ys).map(|(&z, &y)| softplus(z) - y * z).sum();
        nll + self.l2_lambda * w.iter().map(|v| v * v).sum::<f64>()
    }

    pub fn gradient(&self, theta: &[f64]) -> Vec<f64> {
        let z = self.margins(theta);
        self.gradient_from_margins(theta, &z)
    }

    fn gradient_from_margins(&self, theta: &[f64], z: &[f64]) -> Vec<f64> {
        let mut g: Vec<f64> = theta[..self.width].iter().map(|w| 2.0 * self.l2_lambda * w).collect();
        let mut gb = 0.0;
        for ((x, &z), &y) in self.xs.iter().zip(z).zip(&self.ys) {
            let r = sigmoid(z) - y;
            for (&i, &v) in x.indices.iter().zip(&x.values) {
                g[i] += r * v;
            }
            gb += r;
        }
        g.push(gb);
        g
    }

    fn evaluate(&self, theta: &[f64]) -> (f64, Vec<f64>, Vec<f64>) {
        let z = self.margins(theta);
        let f = self.objective_from_margins(theta, &z);
        let g = self.gradient_from_margins(theta, &z);
        (f, g, z)
    }

    /// Margin change `x·d_w + d_b` of every example along `direction`.
    fn margin_slopes(&self, direction: &[f64]) -> Vec<f64> {
        self.margins(direction)
    }

    /// `J(θ + step·d) − J(θ)` without cancellation against the size of `J`.
    ///
    /// Each example's loss is `softplus(m)` with the signed margin
    /// `m = (1 − 2y) z`, and
    /// `softplus(m + δ) − softplus(m) = ln(1 + σ(m)(e^δ − 1))`.
    pub fn objective_change(&self, theta: &[f64], direction: &[f64], step: f64) -> f64 {
        let z = self.margins(theta);
        let dz = self.margin_slopes(direction);
        self.objective_change_from(theta, direction, step, &z, &dz)
    }

    fn objective_change_from(&self, theta: &[f64], direction: &[f64], step: f64, z: &[f64], dz: &[f64]) -> f64 {
        let terms: Vec<f64> = z
            .par_iter()
            .zip(dz)
            .zip(&self.ys)
            .map(|((&z, &dz), &y)| {
                let sign = 1.0 - 2.0 * y;
                let m = sign * z;
                let delta = sign * step * dz;
                if delta > 700.0 {
                    softplus(m + delta) - softplus(m)
                } else {
                    (sigmoid(m) * delta.exp_m1()).ln_1p()
                }
            })
            .collect();
        let loss: f64 = terms.iter().sum();
        let penalty: f64 = theta[..self.width]
            .iter()
            .zip(&direction[..self.width])
            .map(|(w, d)| step * d * (2.0 * w + step * d))
            .sum();
        loss + self.l2_lambda * penalty
    }
}

fn dot(a: &[f64], b: &[f64]) -> f64 {
    a.iter().zip(b).map(|(x, y)| x * y).sum()
}

fn inf_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0, |m, x| m.max(x.abs()))
}

/// Two-loop recursion: returns `-H g` for the implicit inverse Hessian.
fn lbfgs_direction(g: &[f64], history: &VecDeque<(Vec<f64>, Vec<f64>, f64)>) -> Vec<f64> {
    let mut q = g.to_vec();
    let mut alphas = Vec::with_capacity(history.len());
    for (s, y, rho) in history.iter().rev() {
        let a = rho * dot(s, &q);
        q.iter_mut().zip(y).for_each(|(qi, yi)| *qi -= a * yi);
        alphas.push(a);
    }
    let (s, y, _) = history.back().expect("non-empty history");
    let gamma = dot(s, y) / dot(y, y);
    q.iter_mut().for_each(|qi| *qi *= gamma);
    for ((s, y, rho), a) in history.iter().zip(alphas.iter().rev()) {
        let beta = rho * dot(y, &q);
        q.iter_mut().zip(s).for_each(|(qi, si)| *qi += (a - beta) * si);
    }
    q.iter_mut().for_each(|qi| *qi = -*qi);
    q
}

fn steepest_descent(g: &[f64]) -> Vec<f64> {
    let norm = dot(g, g).sqrt();
    g.iter().map(|x| -x / norm).collect()
}

pub fn fit(xs: &[FeatureVector], ys: &[bool], options: &TrainOptions) -> Result<LogisticFit> {
    let problem = Problem::new(xs, ys, options.l2_lambda)?;
    Ok(minimize(&problem, options))
}

/// Runs the optimizer from zero.
///
/// The objective trace starts at the exact `J(0)` and adds the change of
/// every accepted step as computed by [`Problem::objective_change`], which
/// stays accurate when the change is far below the resolution of `J`
/// itself. Steps are only accepted when that change is negative and
/// satisfies the Armijo condition.
pub fn minimize(problem: &Problem<'_>, options: &TrainOptions) -> LogisticFit {
    let mut theta = vec![0.0; problem.dim()];
    let (mut f, mut g, mut z) = problem.evaluate(&theta);
    let mut trace = vec![f];
    let mut history: VecDeque<(Vec<f64>, Vec<f64>, f64)> = VecDeque::with_capacity(HISTORY);
    let mut iterations = 0;
    let mut stop = StopReason::MaxIterations;

    while iterations < options.max_iterations {
        if inf_norm(&g) <= options.tolerance {
            stop = StopReason::Converged;
            break;
        }
        let mut d = if history.is_empty() {
            steepest_descent(&g)
        } else {
            lbfgs_direction(&g, &history)
        };
        let mut slope = dot(&g, &d);
        if slope.is_nan() || slope >= 0.0 {
            history.clear();
            d = steepest_descent(&g);
            slope = dot(&g, &d);
        }
        let dz = problem.margin_slopes(&d);

        let mut step = 1.0;
        let mut change = None;
        for _ in 0..MAX_BACKTRACKS {
            let delta = problem.objective_change_from(&theta, &d, step, &z, &dz);
            if delta.is_finite() && delta < 0.0 && delta <= ARMIJO_C1 * step * slope {
                change = Some(delta);
                break;
            }
            step *= 0.5;
        }
        let Some(delta) = change else {
            stop = StopReason::LineSearchStalled;
            break;
        };

        let next: Vec<f64> = theta.iter().zip(&d).map(|(t, di)| t + step * di).collect();
        let z_next = problem.margins(&next);
        let g_next = problem.gradient_from_margins(&next, &z_next);
        let s: Vec<f64> = next.iter().zip(&theta).map(|(a, b)| a - b).collect();
        let y: Vec<f64> = g_next.iter().zip(&g).map(|(a, b)| a - b).collect();
        let sy = dot(&s, &y);
        if sy > 1e-12 * dot(&y, &y).sqrt() * dot(&s, &s).sqrt() {
            if history.len() == HISTORY {
                history.pop_front();
            }
            history.push_back((s, y, 1.0 / sy));
        }
        theta = next;
        z = z_next;
        g = g_next;
        f += delta;
        trace.push(f);
        iterations += 1;
        log::trace!(
            "iteration {iterations}: J = {f:.9e}, |g|inf = {:.3e}, step = {step}",
            inf_norm(&g)
        );
    }
    if stop == StopReason::MaxIterations && inf_norm(&g) <= options.tolerance {
        stop = StopReason::Converged;
    }

    log::debug!(
        "optimizer stopped after {iterations} iterations ({stop:?}), J = {f:.9e}, |g|inf = {:.3e}",
        inf_norm(&g)
    );
    let bias = theta.pop().expect("bias parameter");
    LogisticFit {
        weights: theta,
        bias,
        objective_trace: trace,
        iterations,
        gradient_inf_norm: inf_norm(&g),
        stop,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn rows(values: &[&[f64]]) -> Vec<FeatureVector> {
        values.iter().map(|v| FeatureVector::from_dense(v)).collect()
    }

    #[test]
    fn softplus_is_stable() {
        assert_eq!(softplus(1000.0), 1000.0);
        assert!(softplus(-1000.0) >= 0.0 && softplus(-1000.0) < 1e-300);
        assert!((softplus(0.0) - 2f64.ln()).abs() < 1e-15);
        assert!((sigmoid(3f64.ln()) - 0.75).abs() < 1e-15);
        assert_eq!(sigmoid(0.0), 0.5);
    }

    #[test]
    fn symmetric_one_feature_problem() {
        let xs = rows(&[&[-1.0], &[1.0]]);
        let fit = fit(&xs, &[false, true], &TrainOptions::with_lambda(0.1)).unwrap();
        assert_eq!(fit.stop, StopReason::Converged);
        assert!(fit.weights[0] > 0.0);
        assert!(fit.bias.abs() < 1e-6);
        assert!(sigmoid(fit.weights[0] + fit.bias) > 0.5);
        assert!(sigmoid(-fit.weights[0] + fit.bias) < 0.5);
        // Stationarity: 2λw = 2σ(−w)·1 for the symmetric pair.
        let w = fit.weights[0];
        assert!((0.2 * w - 2.0 * sigmoid(-w)).abs() < 1e-6);
    }

    #[test]
    fn zero_features_learn_prior_logit() {
        let xs = vec![FeatureVector::from_dense(&[0.0, 0.0]); 10];
        let ys = [true, true, true, false, false, false, false, false, false, false];
        let fit = fit(&xs, &ys, &TrainOptions::default()).unwrap();
        assert_eq!(fit.weights, [0.0, 0.0]);
        assert!((fit.bias - (0.3f64 / 0.7).ln()).abs() < 1e-6);
    }

    #[test]
    fn huge_lambda_shrinks_weights() {
        let xs = rows(&[&[-1.0, 0.5], &[1.0, 0.2], &[0.8, -0.3], &[-0.6, 0.1]]);
        let ys = [false, true, true, false];
        let fit = fit(&xs, &ys, &TrainOptions::with_lambda(1e6)).unwrap();
        assert!(fit.weights.iter().all(|w| w.abs() < 1e-5), "{:?}", fit.weights);
    }

    #[test]
    fn rejects_bad_input() {
        let xs = rows(&[&[1.0], &[2.0]]);
        assert!(matches!(
            fit(&xs, &[true, true], &TrainOptions::default()),
            Err(Error::SingleClass)
        ));
        assert!(matches!(
            fit(&xs[..1], &[true], &TrainOptions::default()),
            Err(Error::SingleClass)
        ));
        let bad = rows(&[&[1.0], &[f64::NAN]]);
        assert!(matches!(
            fit(&bad, &[true, false], &TrainOptions::default()),
            Err(Error::NonFiniteFeature { example: 1, column: 0 })
        ));
        let ragged = rows(&[&[1.0], &[1.0, 2.0]]);
        assert!(matches!(
            fit(&ragged, &[true, false], &TrainOptions::default()),
            Err(Error::DimensionMismatch { .. })
        ));
        assert!(fit(&xs, &[true, false], &TrainOptions::with_lambda(0.0)).is_err());
    }

    #[test]
    fn objective_change_matches_direct_difference() {
        let xs = rows(&[&[1.0, -2.0], &[0.5, 1.0], &[-1.5, 0.25]]);
        let p = Problem::new(&xs, &[true, false, true], 0.3).unwrap();
        let theta = [0.4, -0.2, 0.1];
        let d = [1.0, 0.5, -0.25];
        for step in [1.0, 0.1, 1e-3] {
            let moved: Vec<f64> = theta.iter().zip(&d).map(|(t, d)| t + step * d).collect();
            let direct = p.objective(&moved) - p.objective(&theta);
            let change = p.objective_change(&theta, &d, step);
            assert!((direct - change).abs() < 1e-12, "{step}: {direct} vs {change}");
        }
        // Far below the resolution of J, the change still has the slope's sign.
        let g = p.gradient(&theta);
        let slope: f64 = g.iter().zip(&d).map(|(a, b)| a * b).sum();
        let tiny = p.objective_change(&theta, &d, 1e-14);
        assert!((tiny / 1e-14 - slope).abs() < 1e-6 * slope.abs().max(1.0));
    }

    #[test]
    fn objective_never_increases() {
        let xs = rows(&[&[1.0, 0.0, 2.0], &[0.5, 1.0, 0.0], &[-1.0, 2.0, 1.0], &[0.0, -1.0, 1.0]]);
        let fit = fit(&xs, &[true, false, true, false], &TrainOptions::with_lambda(0.01)).unwrap();
        assert!(fit.objective_trace.windows(2).all(|w| w[1] <= w[0]));
        assert!(fit.gradient_inf_norm <= 1e-6);
        let p = Problem::new(&xs, &[true, false, true, false], 0.01).unwrap();
        let mut theta = fit.weights.clone();
        theta.push(fit.bias);
        let last = *fit.objective_trace.last().unwrap();
        assert!((p.objective(&theta) - last).abs() < 1e-9 * last.abs().max(1.0));
    }
}
