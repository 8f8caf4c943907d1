use crate::{Result, TaskDist};
use serde::{Deserialize, Serialize};
use special_functions::{gen_harmonic2, harmonic, ln_gamma, MathError};

/// The i-th smallest of n i.i.d. draws, X_{n:i}.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct OrderStatSpec {
    pub n: u64,
    pub i: u64,
}

impl OrderStatSpec {
    pub fn new(n: u64, i: u64) -> Result<Self> {
        if n < 1 || i < 1 || i > n {
            return Err(MathError::Domain(format!("need 1 <= i <= n, got n={n}, i={i}")));
        }
        Ok(OrderStatSpec { n, i })
    }
}

// s · n!/(n-i)! · Γ(n-i+1-1/α) / Γ(n+1-1/α)
fn pareto_order_mean(n: f64, i: f64, s: f64, alpha: f64) -> Result<f64> {
    if alpha * (n - i + 1.0) <= 1.0 {
        return Err(MathError::InfiniteMoment(format!(
            "E[X_(n:i)] for Pareto needs alpha(n-i+1) > 1, got alpha={alpha}, n={n}, i={i}"
        )));
    }
    let b = 1.0 / alpha;
    let l = ln_gamma(n + 1.0)? - ln_gamma(n - i + 1.0)? + ln_gamma(n - i + 1.0 - b)?
        - ln_gamma(n + 1.0 - b)?;
    Ok(s * l.exp())
}

/// E[X_{n:i}] for exponential and Pareto task times (shifted exponential is
/// accepted too, as s plus the exponential value).
pub fn order_stat_mean(dist: &TaskDist, spec: OrderStatSpec) -> Result<f64> {
    let spec = OrderStatSpec::new(spec.n, spec.i)?;
    let (n, i) = (spec.n as f64, spec.i as f64);
    match dist {
        TaskDist::Exp { mu } => Ok((harmonic(n)? - harmonic(n - i)?) / mu),
        TaskDist::SExp { s, mu } => Ok(s + (harmonic(n)? - harmonic(n - i)?) / mu),
        TaskDist::Pareto { s, alpha } => pareto_order_mean(n, i, *s, *alpha),
        other => Err(MathError::Domain(format!(
            "order statistic moments are closed-form only for Exp/Pareto, not {other:?}"
        ))),
    }
}

fn check_pair(n: u64, i: u64, j: u64) -> Result<()> {
    if !(1 <= i && i <= j && j <= n) {
        return Err(MathError::Domain(format!("need 1 <= i <= j <= n, got n={n}, i={i}, j={j}")));
    }
    Ok(())
}

fn harmonic2(m: u64) -> Result<f64> {
    if m == 0 {
        Ok(0.0)
    } else {
        gen_harmonic2(m)
    }
}

/// E[X_{n:i} X_{n:j}], i <= j, for Exp(mu).
pub fn exp_joint_moment(n: u64, i: u64, j: u64, mu: f64) -> Result<f64> {
    check_pair(n, i, j)?;
    if !(mu > 0.0 && mu.is_finite()) {
        return Err(MathError::Domain(format!("mu must be positive, got {mu}")));
    }
    let (nf, fi, fj) = (n as f64, i as f64, j as f64);
    let hn = harmonic(nf)?;
    // variance part uses second-order harmonic numbers
    let a = harmonic2(n)? - harmonic2(n - i)?;
    let b = (hn - harmonic(nf - fi)?) * (hn - harmonic(nf - fj)?);
    Ok((a + b) / (mu * mu))
}

/// E[X_{n:i} X_{n:j}], i <= j, for Pareto(s, alpha). Exists when
/// alpha(n-i+1) > 2 and alpha(n-j+1) > 1.
pub fn pareto_joint_moment(n: u64, i: u64, j: u64, s: f64, alpha: f64) -> Result<f64> {
    check_pair(n, i, j)?;
    if !(s > 0.0 && alpha > 0.0) {
        return Err(MathError::Domain(format!("need s, alpha > 0, got s={s}, alpha={alpha}")));
    }
    let (nf, fi, fj) = (n as f64, i as f64, j as f64);
    if alpha * (nf - fi + 1.0) <= 2.0 || alpha * (nf - fj + 1.0) <= 1.0 {
        return Err(MathError::InfiniteMoment(format!(
            "E[X_(n:i)X_(n:j)] diverges for alpha={alpha}, n={n}, i={i}, j={j}"
        )));
    }
    let b = 1.0 / alpha;
    let l = ln_gamma(nf + 1.0)? - ln_gamma(nf + 1.0 - 2.0 * b)?
        + ln_gamma(nf - fi + 1.0 - 2.0 * b)?
        - ln_gamma(nf - fi + 1.0 - b)?
        + ln_gamma(nf - fj + 1.0 - b)?
        - ln_gamma(nf - fj + 1.0)?;
    Ok(s * s * l.exp())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_cases() {
        let e = TaskDist::exp(1.0).unwrap();
        assert!((order_stat_mean(&e, OrderStatSpec { n: 2, i: 2 }).unwrap() - 1.5).abs() < 1e-15);
        let p = TaskDist::pareto(1.0, 2.0).unwrap();
        assert!((order_stat_mean(&p, OrderStatSpec { n: 1, i: 1 }).unwrap() - 2.0).abs() < 1e-13);
        assert!((exp_joint_moment(1, 1, 1, 1.0).unwrap() - 2.0).abs() < 1e-14);
        assert!((exp_joint_moment(2, 2, 2, 1.0).unwrap() - 3.5).abs() < 1e-14);
        assert!((pareto_joint_moment(1, 1, 1, 1.0, 3.0).unwrap() - 3.0).abs() < 1e-12);
    }

    #[test]
    fn existence_boundary() {
        assert!(matches!(
            pareto_joint_moment(2, 1, 1, 1.0, 1.0),
            Err(MathError::InfiniteMoment(_))
        ));
        let p = TaskDist::pareto(1.0, 0.5).unwrap();
        assert!(order_stat_mean(&p, OrderStatSpec { n: 1, i: 1 }).is_err());
        assert!(OrderStatSpec::new(3, 4).is_err());
    }
}
