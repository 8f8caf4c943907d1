use crate::gamma::ln_gamma;
use crate::{check_finite, check_prob, harmonic, reg_inc_beta, MathError, Result};

/// ln C(k, r).
pub fn ln_binom(k: u64, r: u64) -> Result<f64> {
    if r > k {
        return Err(MathError::Domain(format!("C({k}, {r}) with r > k")));
    }
    let k = k as f64;
    let r = r as f64;
    Ok(ln_gamma(k + 1.0)? - ln_gamma(r + 1.0)? - ln_gamma(k - r + 1.0)?)
}

/// Binomial(k, q) probabilities via the ratio recursion, started at the mode.
fn binom_pmf(k: u64, q: f64) -> Result<Vec<f64>> {
    let len = k as usize + 1;
    let mut p = vec![0.0; len];
    if q == 0.0 {
        p[0] = 1.0;
        return Ok(p);
    }
    if q == 1.0 {
        p[len - 1] = 1.0;
        return Ok(p);
    }
    let mode = (((k + 1) as f64 * q).floor() as u64).min(k);
    let odds = q / (1.0 - q);
    let m = mode as usize;
    p[m] = (ln_binom(k, mode)? + mode as f64 * q.ln() + (k - mode) as f64 * (-q).ln_1p()).exp();
    for r in m..len - 1 {
        p[r + 1] = p[r] * (k as f64 - r as f64) / (r as f64 + 1.0) * odds;
    }
    for r in (1..=m).rev() {
        p[r - 1] = p[r] * r as f64 / ((k as f64 - r as f64 + 1.0) * odds);
    }
    let total: f64 = p.iter().sum();
    p.iter_mut().for_each(|x| *x /= total);
    Ok(p)
}

/// E[f(R)] for R ~ Binomial(k, q), summed exactly over the support.
///
/// Terms whose probability underflows to zero are not evaluated.
pub fn binom_expect<F: FnMut(u64) -> f64>(mut f: F, k: u64, q: f64) -> Result<f64> {
    check_prob("q", check_finite("q", q)?)?;
    let pmf = binom_pmf(k, q)?;
    let mut acc = 0.0;
    for (r, &w) in pmf.iter().enumerate() {
        if w == 0.0 {
            continue;
        }
        let v = f(r as u64);
        if !v.is_finite() {
            return Err(MathError::Evaluation(format!("f({r}) = {v}")));
        }
        acc += w * v;
    }
    Ok(acc)
}

/// E[H_{n-R}] ≈ H_{n-kq}, R ~ Binomial(k, q).
pub fn approx_binom_harmonic(n: f64, k: u64, q: f64) -> Result<f64> {
    check_prob("q", check_finite("q", q)?)?;
    let arg = n - k as f64 * q;
    if !(arg >= 0.0) {
        return Err(MathError::Domain(format!("n - kq must be >= 0, got {arg}")));
    }
    harmonic(arg)
}

/// E[I(z; x-R, y)] ≈ I(z; x-kq, y), R ~ Binomial(k, q).
pub fn approx_binom_reg_inc_beta(z: f64, x: f64, y: f64, k: u64, q: f64) -> Result<f64> {
    check_prob("q", check_finite("q", q)?)?;
    let m = x - k as f64 * q;
    if !(m > 0.0) {
        return Err(MathError::Domain(format!("x - kq must be > 0, got {m}")));
    }
    reg_inc_beta(z, m, y)
}
