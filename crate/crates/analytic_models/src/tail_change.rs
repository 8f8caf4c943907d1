//! Does raising the expansion rate r_i -> r_j still cut latency when the
//! extra load makes the Pareto tail heavier (α_i -> α_j)?

use crate::{check_k, MathError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedundancyKind {
    Coded,
    Replicated,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    GuaranteedReduce,
    GuaranteedIncrease,
    Inconclusive,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TailChange {
    pub verdict: Verdict,
    /// Latency drops (approximately, for coding) iff α_j/α_i exceeds this.
    pub approx_threshold: f64,
}

/// ⌊k r⌋, tolerant of r = n/k not being exact in binary.
fn expanded(k: u64, r: f64) -> u64 {
    (k as f64 * r * (1.0 + 1e-12)).floor() as u64
}

// Bounds on ln(E[T_n]/s) from Gautschi's inequality:
// (n/(n-k+1))^{1/α} < E[T_n]/s < ((n+1)/(n-k))^{1/α}.
fn log_latency_bounds(k: u64, n: u64, alpha: f64) -> (f64, f64) {
    let (nf, kf) = (n as f64, k as f64);
    let lo = (nf / (nf - kf + 1.0)).ln() / alpha;
    let hi = if n == k { f64::INFINITY } else { ((nf + 1.0) / (nf - kf)).ln() / alpha };
    (lo, hi)
}

/// Verdict for moving from expansion rate `r_i` to `r_j > r_i`.
///
/// Coded jobs use n = ⌊kr⌋ and the bound-based sufficient conditions, plus
/// the monotone case (more tasks with a tail no heavier always helps).
/// Replicated jobs with rate r behave as Pareto(s, rα), which makes the
/// condition α_i/α_j < r_j/r_i exact; equality leaves latency unchanged and
/// is reported as inconclusive.
pub fn tail_change_verdict(
    k: u64,
    r_i: f64,
    r_j: f64,
    alpha_i: f64,
    alpha_j: f64,
    kind: RedundancyKind,
) -> Result<TailChange> {
    check_k(k)?;
    if !(r_i >= 1.0 && r_j > r_i && r_j.is_finite()) {
        return Err(MathError::Domain(format!("need 1 <= r_i < r_j, got r_i={r_i}, r_j={r_j}")));
    }
    for a in [alpha_i, alpha_j] {
        if !(a > 1.0 && a.is_finite()) {
            return Err(MathError::Domain(format!("tail indices must be > 1, got {a}")));
        }
    }
    match kind {
        RedundancyKind::Replicated => {
            let (a, b) = (r_i * alpha_i, r_j * alpha_j);
            // products that differ only by rounding count as equal
            let verdict = if (b - a).abs() <= 1e-12 * a {
                Verdict::Inconclusive
            } else if b > a {
                Verdict::GuaranteedReduce
            } else {
                Verdict::GuaranteedIncrease
            };
            Ok(TailChange { verdict, approx_threshold: r_i / r_j })
        }
        RedundancyKind::Coded => {
            let (n_i, n_j) = (expanded(k, r_i), expanded(k, r_j));
            let (lo_i, hi_i) = log_latency_bounds(k, n_i, alpha_i);
            let (lo_j, hi_j) = log_latency_bounds(k, n_j, alpha_j);
            let reduce = hi_j <= lo_i || (alpha_j >= alpha_i && n_j >= n_i && (alpha_j, n_j) != (alpha_i, n_i));
            let increase = lo_j >= hi_i || (alpha_j <= alpha_i && n_j == n_i && alpha_j != alpha_i);
            let verdict = match (reduce, increase) {
                (true, false) => Verdict::GuaranteedReduce,
                (false, true) => Verdict::GuaranteedIncrease,
                _ => Verdict::Inconclusive,
            };
            let g = |n: u64| (k as f64 / (n as f64 - k as f64 + 1.0)).ln_1p();
            Ok(TailChange { verdict, approx_threshold: g(n_j) / g(n_i) })
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn replicated_boundary_is_not_a_reduction() {
        let v = tail_change_verdict(10, 2.0, 3.0, 3.0, 2.0, RedundancyKind::Replicated).unwrap();
        assert_eq!(v.verdict, Verdict::Inconclusive);
        assert!((v.approx_threshold - 2.0 / 3.0).abs() < 1e-15);
    }

    #[test]
    fn same_tail_more_code_reduces() {
        let v = tail_change_verdict(10, 1.2, 1.3, 2.0, 2.0, RedundancyKind::Coded).unwrap();
        assert_eq!(v.verdict, Verdict::GuaranteedReduce);
    }

    #[test]
    fn stepwise_threshold_matches_the_one_step_ratio() {
        // n: 12 -> 13 with k = 10
        let v = tail_change_verdict(10, 1.2, 1.3, 2.0, 2.0, RedundancyKind::Coded).unwrap();
        let want = (1.0f64 + 10.0 / 4.0).ln() / (1.0f64 + 10.0 / 3.0).ln();
        assert!((v.approx_threshold - want).abs() < 1e-15);
    }
}
