use crate::{check_finite, MathError, Result};
use std::f64::consts::PI;

// Lanczos approximation, g = 7, nine terms.
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
const LN_SQRT_2PI: f64 = 0.918_938_533_204_672_8;

fn is_pole(x: f64) -> bool {
    x <= 0.0 && x == x.floor()
}

/// sin(pi x) with argument reduction, exact zero at integers.
fn sin_pi(x: f64) -> f64 {
    let r = x - 2.0 * (x / 2.0).floor();
    if r == r.floor() {
        return 0.0;
    }
    if r <= 0.5 {
        (PI * r).sin()
    } else if r <= 1.5 {
        (PI * (1.0 - r)).sin()
    } else {
        (PI * (r - 2.0)).sin()
    }
}

// ln Gamma for x >= 0.5
fn ln_gamma_pos(x: f64) -> f64 {
    let z = x - 1.0;
    let mut a = LANCZOS[0];
    for (i, c) in LANCZOS.iter().enumerate().skip(1) {
        a += c / (z + i as f64);
    }
    let t = z + LANCZOS_G + 0.5;
    LN_SQRT_2PI + (z + 0.5) * t.ln() - t + a.ln()
}

/// ln|Γ(x)| together with the sign of Γ(x).
pub fn ln_gamma_signed(x: f64) -> Result<(f64, f64)> {
    check_finite("x", x)?;
    if is_pole(x) {
        return Err(MathError::Pole(x));
    }
    if x >= 0.5 {
        return Ok((ln_gamma_pos(x), 1.0));
    }
    // Reflection: Γ(x)Γ(1-x) = π / sin(πx)
    let s = sin_pi(x);
    let lg = PI.ln() - s.abs().ln() - ln_gamma_pos(1.0 - x);
    Ok((lg, s.signum()))
}

/// ln Γ(x) for x > 0.
pub fn ln_gamma(x: f64) -> Result<f64> {
    check_finite("x", x)?;
    if x <= 0.0 {
        return Err(MathError::Domain(format!("ln_gamma needs x > 0, got {x}")));
    }
    Ok(ln_gamma_signed(x)?.0)
}

/// Γ(x) for every real x except the poles 0, -1, -2, ...
pub fn gamma_fn(x: f64) -> Result<f64> {
    check_finite("x", x)?;
    if is_pole(x) {
        return Err(MathError::Pole(x));
    }
    if x == x.floor() && x <= 171.0 {
        let mut p = 1.0;
        let mut i = 2.0;
        while i < x {
            p *= i;
            i += 1.0;
        }
        return Ok(p);
    }
    let (lg, sign) = ln_gamma_signed(x)?;
    Ok(sign * lg.exp())
}

/// 1/Γ(x), which is entire: returns 0 at the poles.
pub fn rgamma(x: f64) -> Result<f64> {
    check_finite("x", x)?;
    if is_pole(x) {
        return Ok(0.0);
    }
    let (lg, sign) = ln_gamma_signed(x)?;
    Ok(sign * (-lg).exp())
}

/// Γ(a)/Γ(b) evaluated in log space. A pole in `b` gives 0.
pub fn gamma_ratio(a: f64, b: f64) -> Result<f64> {
    if is_pole(b) {
        check_finite("a", a)?;
        if is_pole(a) {
            return Err(MathError::Pole(a));
        }
        return Ok(0.0);
    }
    let (la, sa) = ln_gamma_signed(a)?;
    let (lb, sb) = ln_gamma_signed(b)?;
    Ok(sa * sb * (la - lb).exp())
}

/// Closed form of Σ_{m=0}^{n} Γ(m-β)/Γ(m), the m = 0 term being zero:
/// Γ(n+1-β) / ((1-β) Γ(n)).
pub fn gamma_ratio_sum(n: u64, beta_param: f64) -> Result<f64> {
    check_finite("beta", beta_param)?;
    if n < 1 {
        return Err(MathError::Domain("gamma_ratio_sum needs n >= 1".into()));
    }
    if !(beta_param > 0.0 && beta_param < 1.0) {
        return Err(MathError::Domain(format!(
            "gamma_ratio_sum needs 0 < beta < 1, got {beta_param}"
        )));
    }
    let n = n as f64;
    Ok((ln_gamma(n + 1.0 - beta_param)? - ln_gamma(n)?).exp() / (1.0 - beta_param))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn small_values() {
        assert_eq!(gamma_fn(5.0).unwrap(), 24.0);
        assert_eq!(gamma_fn(1.0).unwrap(), 1.0);
        assert!((gamma_fn(0.5).unwrap() - PI.sqrt()).abs() < 1e-14);
        assert!((gamma_fn(-0.5).unwrap() + 2.0 * PI.sqrt()).abs() < 1e-13);
        assert!((gamma_fn(-1.5).unwrap() - 4.0 * PI.sqrt() / 3.0).abs() < 1e-13);
    }

    #[test]
    fn poles() {
        assert_eq!(gamma_fn(0.0), Err(MathError::Pole(0.0)));
        assert_eq!(gamma_fn(-3.0), Err(MathError::Pole(-3.0)));
        assert_eq!(rgamma(-2.0).unwrap(), 0.0);
        assert_eq!(gamma_ratio(2.5, 0.0).unwrap(), 0.0);
        assert!(gamma_fn(f64::NAN).is_err());
    }

    #[test]
    fn large_argument_ratio() {
        // Γ(1001)/Γ(1000) = 1000
        let r = gamma_ratio(1001.0, 1000.0).unwrap();
        assert!((r - 1000.0).abs() < 1e-9);
    }
}
