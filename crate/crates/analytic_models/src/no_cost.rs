//! Latency reduction that costs nothing: how much zero-delay redundancy a
//! Pareto(s, α) job can take before its expected cost exceeds the baseline.

use crate::zero_delay::{pareto_coded_latency, pareto_latency};
use crate::{check_k, check_positive, MathError, Result};
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ReplicationNoCost {
    pub feasible: bool,
    pub c_max: u64,
    pub t_min: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CodingNoCost {
    pub n_max: u64,
    pub t_min: f64,
    pub sufficient_ok: bool,
    pub necessary_ok: bool,
    pub t_min_bound: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(())
    } else {
        Err(MathError::Domain(format!("alpha must be > 1, got {alpha}")))
    }
}

/// Replication: E[C_c] <= E[C_0] holds exactly when (c+1)(α-1) <= 1, so the
/// largest replica count is ⌊1/(α-1)⌋ - 1; at an integer 1/(α-1) that count
/// ties the baseline cost. A reduction with c >= 1 needs α < 1.5.
pub fn latency_no_cost_replication(k: u64, s: f64, alpha: f64) -> Result<ReplicationNoCost> {
    check_k(k)?;
    check_positive("s", s)?;
    check_alpha(alpha)?;
    let feasible = alpha < 1.5;
    let c_max = if feasible {
        // tolerate round-off in 1/(α-1) at exact integers
        ((1.0 / (alpha - 1.0)) * (1.0 + 1e-12)).floor() as u64 - 1
    } else {
        0
    };
    let t_min = pareto_latency(k, s, (c_max as f64 + 1.0) * alpha)?;
    Ok(ReplicationNoCost { feasible, c_max, t_min })
}

/// (sufficient, necessary) conditions for n coded tasks to cut latency at no
/// extra cost: α^α <= n/(n-k+1) and α^α <= (n+1)/(n-k).
pub fn coding_no_cost_conditions(k: u64, n: u64, alpha: f64) -> Result<(bool, bool)> {
    check_k(k)?;
    check_alpha(alpha)?;
    if n <= k {
        return Err(MathError::Domain(format!("coding needs n > k, got n={n}, k={k}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    let aa = alpha.powf(alpha);
    Ok((aa <= nf / (nf - kf + 1.0), aa <= (nf + 1.0) / (nf - kf)))
}

/// Coding: E[C_n] <= E[C_k] is equivalent to E[T_n] >= sα, and E[T_n]
/// decreases in n, so n_max is the last n whose latency stays above sα.
pub fn latency_no_cost_coding(k: u64, s: f64, alpha: f64) -> Result<CodingNoCost> {
    check_k(k)?;
    check_positive("s", s)?;
    check_alpha(alpha)?;
    let target = s * alpha * (1.0 - 1e-12);
    let ok = |n: u64| -> Result<bool> { Ok(pareto_coded_latency(k, n, s, alpha)? >= target) };
    let mut n_max = k;
    if ok(k + 1)? {
        let (mut lo, mut step) = (k + 1, 1u64);
        let mut hi = loop {
            step = step.saturating_mul(2);
            let cand = k.saturating_add(step);
            if cand == u64::MAX {
                return Err(MathError::Convergence("no-cost coding search overflowed".into()));
            }
            if !ok(cand)? {
                break cand;
            }
            lo = cand;
        };
        while hi - lo > 1 {
            let mid = lo + (hi - lo) / 2;
            if ok(mid)? {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        n_max = lo;
    }
    let baseline = pareto_latency(k, s, alpha)?;
    let t_min = pareto_coded_latency(k, n_max, s, alpha)?;
    // both conditions are loosest at n = k + 1
    let (sufficient_ok, necessary_ok) = coding_no_cost_conditions(k, k + 1, alpha)?;
    Ok(CodingNoCost { n_max, t_min, sufficient_ok, necessary_ok, t_min_bound: s * alpha + baseline })
}
