//! Redundancy launched together with the job (Δ = 0).

use crate::{check_k, check_positive, MathError, Metrics, Redundancy, Result};
use distributions::TaskDist;
use special_functions::{gen_harmonic2, harmonic, ln_gamma};

/// E[X_{n:k}] for Pareto(s, α): s n!/(n-k)! Γ(n-k+1-1/α)/Γ(n+1-1/α).
pub fn pareto_coded_latency(k: u64, n: u64, s: f64, alpha: f64) -> Result<f64> {
    check_k(k)?;
    check_positive("s", s)?;
    check_positive("alpha", alpha)?;
    if n < k {
        return Err(MathError::Domain(format!("need n >= k, got n={n}, k={k}")));
    }
    let (nf, kf) = (n as f64, k as f64);
    if alpha * (nf - kf + 1.0) <= 1.0 {
        return Err(MathError::InfiniteMoment(format!(
            "latency diverges for alpha={alpha}, n={n}, k={k}"
        )));
    }
    let b = 1.0 / alpha;
    let l = ln_gamma(nf + 1.0)? - ln_gamma(nf - kf + 1.0)? + ln_gamma(nf - kf + 1.0 - b)?
        - ln_gamma(nf + 1.0 - b)?;
    Ok(s * l.exp())
}

/// E[max of k Pareto(s, α)] = s k! Γ(1-1/α)/Γ(k+1-1/α).
pub fn pareto_latency(k: u64, s: f64, alpha: f64) -> Result<f64> {
    pareto_coded_latency(k, k, s, alpha)
}

fn pareto_mean(s: f64, alpha: f64) -> f64 {
    if alpha > 1.0 {
        s * alpha / (alpha - 1.0)
    } else {
        f64::INFINITY
    }
}

// (s, mu) for the exponential family; Exp is SExp with s = 0
fn exp_params(dist: &TaskDist) -> Option<(f64, f64)> {
    match *dist {
        TaskDist::Exp { mu } => Some((0.0, mu)),
        TaskDist::SExp { s, mu } => Some((s, mu)),
        _ => None,
    }
}

fn unsupported(dist: &TaskDist) -> MathError {
    MathError::Domain(format!("zero-delay formulas cover Exp, SExp and Pareto, not {dist:?}"))
}

fn check_redundancy(k: u64, red: Redundancy) -> Result<()> {
    check_k(k)?;
    match red {
        Redundancy::Replication { c } if c < 1 => Err(MathError::Domain("replication needs c >= 1".into())),
        Redundancy::Coding { n } if n <= k => {
            Err(MathError::Domain(format!("coding needs n > k, got n={n}, k={k}")))
        }
        _ => Ok(()),
    }
}

/// Expected latency and cost with redundancy launched at time zero.
///
/// `Redundancy::None` is the baseline (replication with c = 0).
pub fn zero_delay(k: u64, redundancy: Redundancy, dist: &TaskDist) -> Result<Metrics> {
    check_redundancy(k, redundancy)?;
    dist.validate()?;
    let kf = k as f64;
    if let Some((s, mu)) = exp_params(dist) {
        return Ok(match redundancy {
            Redundancy::None | Redundancy::Replication { .. } => {
                let c1 = copies(redundancy);
                Metrics::exact(
                    s + harmonic(kf)? / (c1 * mu),
                    kf * (c1 * s + 1.0 / mu),
                    kf * c1 * (s + 1.0 / mu),
                )
            }
            Redundancy::Coding { n } => {
                let nf = n as f64;
                Metrics::exact(
                    s + (harmonic(nf)? - harmonic(nf - kf)?) / mu,
                    nf * s + kf / mu,
                    nf * (s + 1.0 / mu),
                )
            }
        });
    }
    let TaskDist::Pareto { s, alpha } = *dist else {
        return Err(unsupported(dist));
    };
    match redundancy {
        Redundancy::None | Redundancy::Replication { .. } => {
            let c1 = copies(redundancy);
            let at = c1 * alpha;
            if at <= 1.0 {
                return Err(MathError::InfiniteMoment(format!(
                    "replication needs (c+1)alpha > 1, got {at}"
                )));
            }
            Ok(Metrics::exact(
                pareto_latency(k, s, at)?,
                kf * c1 * s * at / (at - 1.0),
                kf * c1 * pareto_mean(s, alpha),
            ))
        }
        Redundancy::Coding { n } => {
            let nf = n as f64;
            let t = pareto_coded_latency(k, n, s, alpha)?;
            let cost = if (alpha - 1.0).abs() > 1e-6 {
                s * nf / (alpha - 1.0) * (alpha - (nf - kf) / nf * t / s)
            } else {
                // removable singularity of the closed form at α = 1
                let mut sum = (nf - kf) * t;
                for i in 1..=k {
                    sum += pareto_coded_latency(i, n, s, alpha)?;
                }
                sum
            };
            Ok(Metrics::exact(t, cost, nf * pareto_mean(s, alpha)))
        }
    }
}

fn copies(red: Redundancy) -> f64 {
    match red {
        Redundancy::Replication { c } => c as f64 + 1.0,
        _ => 1.0,
    }
}

/// Var(Σ_{i<=k} w_i X_{n:i}) from the covariance of order statistics,
/// w_i = 1 except w_k = 1 + (n - k): the coded cost with cancellation.
fn coded_cost_variance(k: u64, n: u64, cov: impl Fn(usize, usize) -> f64) -> f64 {
    let extra = (n - k) as f64;
    let k = k as usize;
    let w = |i: usize| if i == k { 1.0 + extra } else { 1.0 };
    let mut v = 0.0;
    for j in 1..=k {
        let wj = w(j);
        v += wj * wj * cov(j, j);
        let mut row = 0.0;
        for i in 1..j {
            row += cov(i, j);
        }
        v += 2.0 * wj * row;
    }
    v
}

/// Zero-delay metrics with `latency_sd` and `cost_sd` (of the cost with
/// cancellation) filled in from the exact second moments.
pub fn zero_delay_second_moments(k: u64, redundancy: Redundancy, dist: &TaskDist) -> Result<Metrics> {
    let mut m = zero_delay(k, redundancy, dist)?;
    let kf = k as f64;
    let (var_t, var_c) = if let Some((_, mu)) = exp_params(dist) {
        match redundancy {
            Redundancy::None | Redundancy::Replication { .. } => {
                let rate = copies(redundancy) * mu;
                (gen_harmonic2(k)? / (rate * rate), kf / (mu * mu))
            }
            Redundancy::Coding { n } => {
                let h2n = gen_harmonic2(n)?;
                let h2 = |i: u64| if i == n { Ok(0.0) } else { gen_harmonic2(n - i) };
                let mut v = Vec::with_capacity(k as usize + 1);
                v.push(0.0);
                for i in 1..=k {
                    v.push((h2n - h2(i)?) / (mu * mu));
                }
                (v[k as usize], coded_cost_variance(k, n, |i, _| v[i]))
            }
        }
    } else if let TaskDist::Pareto { s, alpha } = *dist {
        match redundancy {
            Redundancy::None | Redundancy::Replication { .. } => {
                let c1 = copies(redundancy);
                let at = c1 * alpha;
                if at <= 2.0 {
                    return Err(MathError::InfiniteMoment(format!(
                        "second moments need (c+1)alpha > 2, got {at}"
                    )));
                }
                let t2 = distributions::pareto_joint_moment(k, k, k, s, at)?;
                let var_y = s * s * at / ((at - 1.0) * (at - 1.0) * (at - 2.0));
                (t2 - m.latency_mean * m.latency_mean, c1 * c1 * kf * var_y)
            }
            Redundancy::Coding { n } => {
                let nf = n as f64;
                if alpha * (nf - kf + 1.0) <= 2.0 {
                    return Err(MathError::InfiniteMoment(format!(
                        "second moments need alpha(n-k+1) > 2, got {}",
                        alpha * (nf - kf + 1.0)
                    )));
                }
                let b = 1.0 / alpha;
                let c0 = 2.0 * s.ln() + ln_gamma(nf + 1.0)? - ln_gamma(nf + 1.0 - 2.0 * b)?;
                let c1 = s.ln() + ln_gamma(nf + 1.0)? - ln_gamma(nf + 1.0 - b)?;
                let (mut la, mut lb, mut mean) = (vec![0.0], vec![0.0], vec![0.0]);
                for i in 1..=k {
                    let r = nf - i as f64 + 1.0;
                    la.push(ln_gamma(r - 2.0 * b)? - ln_gamma(r - b)?);
                    lb.push(ln_gamma(r - b)? - ln_gamma(r)?);
                    mean.push((c1 + lb[i as usize]).exp());
                }
                // E[X_{n:i} X_{n:j}] = e^{c0 + la_i + lb_j} for i <= j
                let cov = |i: usize, j: usize| (c0 + la[i] + lb[j]).exp() - mean[i] * mean[j];
                (cov(k as usize, k as usize), coded_cost_variance(k, n, cov))
            }
        }
    } else {
        return Err(unsupported(dist));
    };
    m.latency_sd = Some(var_t.max(0.0).sqrt());
    m.cost_sd = Some(var_c.max(0.0).sqrt());
    Ok(m)
}
