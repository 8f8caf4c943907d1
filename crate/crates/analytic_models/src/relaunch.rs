//! Straggler relaunch for Pareto(s, α) task times: at time Δ every task
//! still running is cancelled and restarted, optionally together with
//! redundancy.

use crate::zero_delay::{pareto_coded_latency, pareto_latency, zero_delay};
use crate::{check_delta, check_k, check_positive, Field, MathError, Metrics, Redundancy, Result};
use distributions::TaskDist;
use serde::{Deserialize, Serialize};
use special_functions::{binom_expect, inc_beta, ln_gamma, reg_inc_beta};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaunchOptimum {
    pub delta_star: f64,
    pub p_star: f64,
    /// Baseline latency exceeds 4s.
    pub sufficient_t: bool,
    /// α < ln k / ln 4.
    pub sufficient_alpha: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RelaunchSufficiency {
    pub sufficient_t: bool,
    pub sufficient_alpha: bool,
    pub delta_star: f64,
}

fn check_alpha(alpha: f64) -> Result<()> {
    if alpha.is_finite() && alpha > 1.0 {
        Ok(())
    } else {
        Err(MathError::Domain(format!("alpha must be > 1, got {alpha}")))
    }
}

fn check_redundancy(k: u64, red: Redundancy) -> Result<()> {
    match red {
        Redundancy::Replication { c } if c < 1 => Err(MathError::Domain("replication needs c >= 1".into())),
        Redundancy::Coding { n } if n <= k => {
            Err(MathError::Domain(format!("coding needs n > k, got n={n}, k={k}")))
        }
        _ => Ok(()),
    }
}

fn check_common(k: u64, delta: f64, s: f64, alpha: f64) -> Result<()> {
    check_k(k)?;
    check_delta(delta)?;
    check_positive("s", s)?;
    check_alpha(alpha)
}

fn baseline(k: u64, s: f64, alpha: f64) -> Result<Metrics> {
    zero_delay(k, Redundancy::None, &TaskDist::Pareto { s, alpha })
}

/// E[min(X, Δ)] for X ~ Pareto(s, α), Δ > s.
fn mean_capped(delta: f64, s: f64, alpha: f64) -> f64 {
    let p = (s / delta).powf(alpha);
    (s * alpha - delta * p) / (alpha - 1.0)
}

/// Relaunch every unfinished task at Δ, no redundancy. Exact.
///
/// With no redundancy there is nothing to cancel besides the relaunched
/// copies, so both cost fields coincide.
pub fn relaunch(k: u64, delta: f64, s: f64, alpha: f64) -> Result<Metrics> {
    check_common(k, delta, s, alpha)?;
    if delta.is_infinite() {
        return baseline(k, s, alpha);
    }
    let kf = k as f64;
    let l = pareto_latency(k, s, alpha)?;
    let mean = s * alpha / (alpha - 1.0);
    if delta <= s {
        let c = kf * (delta + mean);
        return Ok(Metrics::exact(delta + l, c, c));
    }
    let p = (s / delta).powf(alpha);
    let q = 1.0 - p;
    let t = delta * (1.0 - q.powi(k as i32))
        + l * ((s / delta - 1.0) * reg_inc_beta(p, 1.0 - 1.0 / alpha, kf)? + 1.0);
    let c = kf * (mean_capped(delta, s, alpha) + p * mean);
    Ok(Metrics::exact(t, c, c))
}

/// Pr{T > t} under [`relaunch`]: each task finishes by t with probability
/// F(t) if t <= Δ, and q + (1-q)F(t-Δ) otherwise.
pub fn relaunch_tail(k: u64, delta: f64, s: f64, alpha: f64, t: f64) -> Result<f64> {
    check_common(k, delta, s, alpha)?;
    let d = TaskDist::Pareto { s, alpha };
    let done = if t <= delta {
        d.cdf(t)
    } else {
        let p = d.tail(delta);
        1.0 - p * d.tail(t - delta)
    };
    Ok(1.0 - done.powi(k as i32))
}

/// Approximate cost- and latency-minimising relaunch time and the
/// corresponding fraction of relaunched tasks.
pub fn relaunch_optimum(k: u64, s: f64, alpha: f64) -> Result<RelaunchOptimum> {
    check_k(k)?;
    check_positive("s", s)?;
    check_alpha(alpha)?;
    let l = pareto_latency(k, s, alpha)?;
    let g = special_functions::gamma_fn(1.0 - 1.0 / alpha)?;
    Ok(RelaunchOptimum {
        delta_star: (s * l).sqrt(),
        p_star: g.powf(-alpha / 2.0) / (k as f64 + 1.0).sqrt(),
        sufficient_t: l > 4.0 * s,
        sufficient_alpha: alpha < (k as f64).ln() / 4f64.ln(),
    })
}

/// Latency with redundancy at time zero and relaunch of every unfinished
/// copy at Δ. Exact.
pub fn zero_delay_red_relaunch(k: u64, redundancy: Redundancy, delta: f64, s: f64, alpha: f64) -> Result<f64> {
    check_common(k, delta, s, alpha)?;
    check_redundancy(k, redundancy)?;
    match redundancy {
        Redundancy::None => Ok(relaunch(k, delta, s, alpha)?.latency_mean),
        // a task with c+1 copies behaves as one Pareto(s, (c+1)α) task
        Redundancy::Replication { c } => Ok(relaunch(k, delta, s, (c as f64 + 1.0) * alpha)?.latency_mean),
        Redundancy::Coding { n } => {
            let norel = pareto_coded_latency(k, n, s, alpha)?;
            if delta.is_infinite() {
                return Ok(norel);
            }
            if delta <= s {
                return Ok(delta + norel);
            }
            let (nf, kf) = (n as f64, k as f64);
            let p = (s / delta).powf(alpha);
            let b = 1.0 / alpha;
            Ok(delta * reg_inc_beta(p, nf - kf + 1.0, kf)?
                + norel * (1.0 + (s / delta - 1.0) * reg_inc_beta(p, nf - kf + 1.0 - b, kf)?))
        }
    }
}

/// Latency and both costs for redundancy at time zero plus relaunch at Δ.
///
/// Costs are exact. Without cancellation, copies of a task that already
/// finished keep running and only unfinished work is relaunched.
pub fn zero_delay_red_relaunch_metrics(
    k: u64,
    redundancy: Redundancy,
    delta: f64,
    s: f64,
    alpha: f64,
) -> Result<Metrics> {
    let latency = zero_delay_red_relaunch(k, redundancy, delta, s, alpha)?;
    let dist = TaskDist::Pareto { s, alpha };
    if delta.is_infinite() {
        return zero_delay(k, redundancy, &dist);
    }
    let kf = k as f64;
    let mean = s * alpha / (alpha - 1.0);
    match redundancy {
        Redundancy::None => relaunch(k, delta, s, alpha),
        Redundancy::Replication { c } => {
            let c1 = c as f64 + 1.0;
            let at = c1 * alpha;
            let cancel = c1 * relaunch(k, delta, s, at)?.cost_cancel_mean;
            let per_copy = if delta <= s {
                delta + mean
            } else {
                let pt = (s / delta).powf(at);
                mean * (1.0 + pt) - pt * delta / (alpha - 1.0)
            };
            Ok(Metrics::exact(latency, cancel, kf * c1 * per_copy))
        }
        Redundancy::Coding { n } => {
            let nf = n as f64;
            if delta <= s {
                let z = zero_delay(k, redundancy, &dist)?;
                return Ok(Metrics::exact(latency, nf * delta + z.cost_cancel_mean, nf * (delta + mean)));
            }
            let p = (s / delta).powf(alpha);
            let q = 1.0 - p;
            // tasks alive while fewer than k are done, integrated over [0, Δ]
            let alive = |t: f64| {
                let f = dist.cdf(t);
                binom_expect(|r| if r < k { (n - r) as f64 } else { 0.0 }, n, f).unwrap_or(f64::NAN)
            };
            let first = nf * s
                + special_functions::quad::integrate(
                    |u: f64| {
                        let t = s * u.exp();
                        alive(t) * t
                    },
                    0.0,
                    (delta / s).ln(),
                    1e-10,
                )?;
            let second = binom_expect(
                |r| {
                    if r >= k {
                        return 0.0;
                    }
                    zero_delay(k - r, Redundancy::Coding { n: n - r }, &dist)
                        .map(|m| m.cost_cancel_mean)
                        .unwrap_or(f64::NAN)
                },
                n,
                q,
            )?;
            let tail_b = delta * p * alpha / (alpha - 1.0);
            let head_a = mean - tail_b;
            let at_least = |j: u64| binom_expect(|r| if r >= j { 1.0 } else { 0.0 }, n - 1, q);
            let (ge_k1, ge_k) = (at_least(k - 1)?, at_least(k)?);
            let done = nf * (head_a * ge_k1 + tail_b * ge_k);
            let running = nf * (head_a * (1.0 - ge_k1) + delta * p * (1.0 - ge_k));
            let fresh = mean * binom_expect(|r| if r < k { (n - r) as f64 } else { 0.0 }, n, q)?;
            Ok(Metrics::exact(latency, first + second, done + running + fresh))
        }
    }
}

/// Sufficient conditions for relaunch to help on top of zero-delay
/// redundancy, and the approximate optimal relaunch time.
pub fn red_relaunch_sufficiency(k: u64, redundancy: Redundancy, s: f64, alpha: f64) -> Result<RelaunchSufficiency> {
    check_k(k)?;
    check_positive("s", s)?;
    check_alpha(alpha)?;
    check_redundancy(k, redundancy)?;
    let norel = zero_delay(k, redundancy, &TaskDist::Pareto { s, alpha })?.latency_mean;
    let ln4 = 4f64.ln();
    let kf = k as f64;
    let threshold = match redundancy {
        Redundancy::None => kf.ln() / ln4,
        Redundancy::Replication { c } => kf.ln() / ((c as f64 + 1.0) * ln4),
        Redundancy::Coding { n } => (n as f64 / (n as f64 - kf + 1.0)).ln() / ln4,
    };
    Ok(RelaunchSufficiency {
        sufficient_t: norel > 4.0 * s,
        sufficient_alpha: alpha < threshold,
        delta_star: (s * norel).sqrt(),
    })
}

/// B(x, -1/a) Γ(1-1/a)/Γ(-1/a) s = -(s/a) B(x, -1/a).
fn f_shift(x: f64, s: f64, a: f64) -> Result<f64> {
    Ok(-s / a * special_functions::beta(x, -1.0 / a)?)
}

/// Relaunch at Δ together with redundancy added at Δ for the relaunched
/// tasks: c fresh replicas each, or n - k coded tasks.
///
/// Latency for Δ > s uses the approximation E[g(R)] ≈ g(kq) and is flagged.
/// Costs are exact; the coded cost with cancellation sums the binomial
/// expectation term by term.
pub fn delayed_red_relaunch(k: u64, redundancy: Redundancy, delta: f64, s: f64, alpha: f64) -> Result<Metrics> {
    check_common(k, delta, s, alpha)?;
    check_redundancy(k, redundancy)?;
    if delta.is_infinite() || redundancy == Redundancy::None {
        return relaunch(k, delta, s, alpha);
    }
    let kf = k as f64;
    let mean = s * alpha / (alpha - 1.0);
    match redundancy {
        Redundancy::None => unreachable!(),
        Redundancy::Replication { c } => {
            let c1 = c as f64 + 1.0;
            let at = c1 * alpha;
            let task_cancel = c1 * s * at / (at - 1.0);
            let task_all = c1 * mean;
            if delta <= s {
                return Ok(Metrics::exact(
                    delta + pareto_latency(k, s, at)?,
                    kf * (delta + task_cancel),
                    kf * (delta + task_all),
                ));
            }
            let p = (s / delta).powf(alpha);
            let x = 1.0 + kf * p;
            let t = relaunch(k, delta, s, alpha)?.latency_mean + f_shift(x, s, at)? - f_shift(x, s, alpha)?;
            let capped = kf * mean_capped(delta, s, alpha);
            Ok(Metrics::exact(t, capped + kf * p * task_cancel, capped + kf * p * task_all)
                .flag(Field::Latency, true))
        }
        Redundancy::Coding { n } => {
            let nf = n as f64;
            let dist = TaskDist::Pareto { s, alpha };
            if delta <= s {
                let z = zero_delay(k, redundancy, &dist)?;
                return Ok(Metrics::exact(
                    delta + z.latency_mean,
                    kf * delta + z.cost_cancel_mean,
                    kf * delta + nf * mean,
                ));
            }
            let p = (s / delta).powf(alpha);
            let q = 1.0 - p;
            let qk = q.powi(k as i32);
            let b = 1.0 / alpha;
            let ratio = ln_gamma(nf - kf * q + 1.0)? - ln_gamma(nf - kf * q + 1.0 - b)?
                - (ln_gamma(nf - kf + 1.0)? - ln_gamma(nf - kf + 1.0 - b)?);
            let t = delta * (1.0 - qk) + s * (ratio.exp() + kf * inc_beta(q, kf, 1.0 - b)? - qk);
            let capped = kf * mean_capped(delta, s, alpha);
            // R originals done by Δ; the other k - R restart with n - k parity
            let restart = binom_expect(
                |r| {
                    if r == k {
                        return 0.0;
                    }
                    let m = zero_delay(k - r, Redundancy::Coding { n: n - r }, &dist);
                    m.map(|m| m.cost_cancel_mean).unwrap_or(f64::NAN)
                },
                k,
                q,
            )?;
            let launched = nf - kf * q - (nf - kf) * qk;
            Ok(Metrics::exact(t, capped + restart, capped + launched * mean).flag(Field::Latency, true))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn early_relaunch_just_delays() {
        let l = pareto_latency(10, 1.0, 1.5).unwrap();
        let m = relaunch(10, 0.5, 1.0, 1.5).unwrap();
        assert!((m.latency_mean - 0.5 - l).abs() < 1e-12);
    }

    #[test]
    fn p_star_examples() {
        let o = relaunch_optimum(10, 1.0, 2.0).unwrap();
        assert!((o.p_star - 0.17).abs() < 0.005);
        let o = relaunch_optimum(100, 1.0, 2.0).unwrap();
        assert!((o.p_star - 0.06).abs() < 0.005);
    }

    #[test]
    fn coded_relaunch_early_branch() {
        let m = delayed_red_relaunch(10, Redundancy::Coding { n: 12 }, 0.5, 1.0, 2.0).unwrap();
        assert!((m.cost_nocancel_mean - (5.0 + 12.0 * 2.0)).abs() < 1e-12);
    }
}
