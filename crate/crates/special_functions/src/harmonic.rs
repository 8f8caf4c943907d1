use crate::{check_finite, MathError, Result};

pub const EULER_GAMMA: f64 = 0.577_215_664_901_532_9;

/// Digamma ψ(x) for x > 0: upward recurrence, then the asymptotic series.
pub fn digamma(x: f64) -> Result<f64> {
    check_finite("x", x)?;
    if x <= 0.0 {
        return Err(MathError::Domain(format!("digamma needs x > 0, got {x}")));
    }
    let mut shift = 0.0;
    let mut y = x;
    while y < 10.0 {
        shift += 1.0 / y;
        y += 1.0;
    }
    let r = 1.0 / (y * y);
    let series = r
        * (1.0 / 12.0
            - r * (1.0 / 120.0
                - r * (1.0 / 252.0
                    - r * (1.0 / 240.0 - r * (1.0 / 132.0 - r * (691.0 / 32760.0))))));
    Ok(y.ln() - 0.5 / y - series - shift)
}

/// Harmonic number H_x for real x >= 0.
///
/// Small integers are summed directly; everything else goes through
/// H_x = ψ(x+1) + γ.
pub fn harmonic(x: f64) -> Result<f64> {
    check_finite("x", x)?;
    if x < 0.0 {
        return Err(MathError::Domain(format!("harmonic needs x >= 0, got {x}")));
    }
    if x == x.floor() && x <= 64.0 {
        let n = x as u32;
        // summing from the small end keeps the last bits
        return Ok((1..=n).rev().map(|i| 1.0 / i as f64).sum());
    }
    Ok(digamma(x + 1.0)? + EULER_GAMMA)
}

/// Σ_{i=1}^{n} 1/i².
pub fn gen_harmonic2(n: u64) -> Result<f64> {
    if n < 1 {
        return Err(MathError::Domain("gen_harmonic2 needs n >= 1".into()));
    }
    Ok((1..=n).rev().map(|i| 1.0 / (i as f64 * i as f64)).sum())
}
