//! Maximum-likelihood tail fits for execution-time samples.
//!
//! Pareto: ŝ is the sample minimum and α̂ = (n-1)/Σ ln(x_i/ŝ).
//! Truncated Pareto: ŝ and û are the sample extremes and α̂ is the root of
//! the conditional score equation
//!
//! n/α + n r^α ln r / (1 - r^α) - Σ ln(x_i/ŝ) = 0,  r = ŝ/û,
//!
//! found by bisection on (0.01, 50].

use distributions::TaskDist;
use serde::{Deserialize, Serialize};

pub use distributions::MathError;

pub type Result<T> = std::result::Result<T, MathError>;

const ALPHA_LO: f64 = 0.01;
const ALPHA_HI: f64 = 50.0;
const ALPHA_TOL: f64 = 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FitResult {
    pub dist: TaskDist,
    pub log_likelihood: f64,
    pub n_samples: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailPoint {
    pub t: f64,
    /// Fraction of samples at or above `t`.
    pub empirical: f64,
    /// Fitted Pr{X > t}.
    pub fitted: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct GoodnessReport {
    pub ks_statistic: f64,
    pub tail_points: Vec<TailPoint>,
}

struct Summary {
    n: usize,
    min: f64,
    max: f64,
    sum_log: f64,
}

fn summarize(samples: &[f64], need: usize) -> Result<Summary> {
    if samples.len() < need {
        return Err(MathError::Domain(format!("need at least {need} samples, got {}", samples.len())));
    }
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(MathError::Domain(format!("samples must be positive and finite, found {bad}")));
    }
    let min = samples.iter().copied().fold(f64::INFINITY, f64::min);
    let max = samples.iter().copied().fold(0.0, f64::max);
    if min == max {
        return Err(MathError::Degenerate(format!("all {} samples equal {min}", samples.len())));
    }
    let sum_log = samples.iter().map(|x| x.ln()).sum();
    Ok(Summary { n: samples.len(), min, max, sum_log })
}

pub fn fit_pareto(samples: &[f64]) -> Result<FitResult> {
    let Summary { n, min: s, sum_log, .. } = summarize(samples, 2)?;
    let nf = n as f64;
    let excess = sum_log - nf * s.ln();
    let alpha = (nf - 1.0) / excess;
    let dist = TaskDist::pareto(s, alpha)?;
    let log_likelihood = nf * alpha.ln() + nf * alpha * s.ln() - (alpha + 1.0) * sum_log;
    Ok(FitResult { dist, log_likelihood, n_samples: n })
}

pub fn fit_truncated_pareto(samples: &[f64]) -> Result<FitResult> {
    let Summary { n, min: s, max: u, sum_log } = summarize(samples, 3)?;
    let nf = n as f64;
    let ln_r = (s / u).ln();
    let mean_excess = sum_log / nf - s.ln();
    // score / n; r^α/(1-r^α) written as 1/expm1(-α ln r)
    let score = |a: f64| 1.0 / a + ln_r / (-a * ln_r).exp_m1() - mean_excess;
    let (mut lo, mut hi) = (ALPHA_LO, ALPHA_HI);
    let (f_lo, f_hi) = (score(lo), score(hi));
    if !(f_lo > 0.0 && f_hi < 0.0) {
        return Err(MathError::Convergence(format!(
            "truncated Pareto score has no sign change on [{ALPHA_LO}, {ALPHA_HI}] (score {f_lo:.3e} .. {f_hi:.3e})"
        )));
    }
    while hi - lo > ALPHA_TOL {
        let mid = 0.5 * (lo + hi);
        if score(mid) > 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    let alpha = 0.5 * (lo + hi);
    let dist = TaskDist::truncated_pareto(s, u, alpha)?;
    // ln(1 - r^α) = ln(-expm1(α ln r))
    let log_likelihood =
        nf * alpha.ln() + nf * alpha * s.ln() - (alpha + 1.0) * sum_log - nf * (-(alpha * ln_r).exp_m1()).ln();
    Ok(FitResult { dist, log_likelihood, n_samples: n })
}

/// KS distance between the fitted and empirical CDFs, plus tail points on a
/// log grid from ŝ to the largest sample.
pub fn goodness_report(fit: &FitResult, samples: &[f64]) -> Result<GoodnessReport> {
    fit.dist.validate()?;
    if samples.is_empty() {
        return Err(MathError::Domain("no samples".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let nf = xs.len() as f64;
    let mut ks: f64 = 0.0;
    for (i, &x) in xs.iter().enumerate() {
        let f = fit.dist.cdf(x);
        ks = ks.max((f - i as f64 / nf).abs()).max(((i + 1) as f64 / nf - f).abs());
    }
    let start = match fit.dist {
        TaskDist::Pareto { s, .. } | TaskDist::TruncatedPareto { s, .. } => s,
        _ => xs[0],
    };
    let end = xs[xs.len() - 1].max(start);
    let steps = 40;
    let tail_points = (0..=steps)
        .map(|i| {
            let t = if end > start { start * (end / start).powf(i as f64 / steps as f64) } else { start };
            let at_or_above = xs.len() - xs.partition_point(|&x| x < t);
            TailPoint { t, empirical: at_or_above as f64 / nf, fitted: fit.dist.tail(t) }
        })
        .collect();
    Ok(GoodnessReport { ks_statistic: ks, tail_points })
}
