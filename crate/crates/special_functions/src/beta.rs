use crate::gamma::{gamma_fn, ln_gamma_signed};
use crate::quad::integrate;
use crate::{check_finite, check_prob, MathError, Result};

const QUAD_TOL: f64 = 1e-13;

/// ln|B(m, n)| and the sign of B(m, n).
fn ln_beta_signed(m: f64, n: f64) -> Result<(f64, f64)> {
    let (la, sa) = ln_gamma_signed(m)?;
    let (lb, sb) = ln_gamma_signed(n)?;
    let (lc, sc) = ln_gamma_signed(m + n)?;
    Ok((la + lb - lc, sa * sb * sc))
}

/// ln B(m, n) for m, n > 0.
pub fn ln_beta(m: f64, n: f64) -> Result<f64> {
    if !(m > 0.0 && n > 0.0) {
        return Err(MathError::Domain(format!("ln_beta needs m, n > 0, got ({m}, {n})")));
    }
    Ok(ln_beta_signed(m, n)?.0)
}

/// B(m, n) = Γ(m)Γ(n)/Γ(m+n), continued analytically to negative
/// non-integer parameters.
pub fn beta(m: f64, n: f64) -> Result<f64> {
    check_finite("m", m)?;
    check_finite("n", n)?;
    if m.abs() < 170.0 && n.abs() < 170.0 && (m + n).abs() < 170.0 {
        return Ok(gamma_fn(m)? * gamma_fn(n)? / gamma_fn(m + n)?);
    }
    let (l, s) = ln_beta_signed(m, n)?;
    Ok(s * l.exp())
}

// Continued fraction for the regularized incomplete beta (modified Lentz).
fn beta_cf(x: f64, a: f64, b: f64) -> Result<f64> {
    const TINY: f64 = 1e-300;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..100_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < 1e-15 {
            return Ok(h);
        }
    }
    Err(MathError::Convergence("incomplete beta continued fraction".into()))
}

// I(q; m, n) for m, n > 0.
fn reg_inc_beta_pos(q: f64, m: f64, n: f64) -> Result<f64> {
    if q == 0.0 {
        return Ok(0.0);
    }
    if q == 1.0 {
        return Ok(1.0);
    }
    let ln_front = m * q.ln() + n * (1.0 - q).ln() - ln_beta(m, n)?;
    if q < (m + 1.0) / (m + n + 2.0) {
        Ok(ln_front.exp() * beta_cf(q, m, n)? / m)
    } else {
        Ok(1.0 - ln_front.exp() * beta_cf(1.0 - q, n, m)? / n)
    }
}

// ∫_0^q u^{m-1}(1-u)^{n-1} du by quadrature, for any m > 0 and q < 1 (or
// q = 1 with n > 0). Endpoint singularities are removed by substitution:
// w = u^m near 0, v = -ln(1-u) near 1.
fn inc_beta_quad(q: f64, m: f64, n: f64) -> Result<f64> {
    let split = q.min(0.5);
    let left = if m < 1.0 {
        let top = split.powf(m);
        integrate(|w: f64| (1.0 - w.powf(1.0 / m)).powf(n - 1.0), 0.0, top, QUAD_TOL)? / m
    } else {
        integrate(|u: f64| u.powf(m - 1.0) * (1.0 - u).powf(n - 1.0), 0.0, split, QUAD_TOL)?
    };
    if q <= 0.5 {
        return Ok(left);
    }
    let vmax = -(-q).ln_1p();
    let right = integrate(
        |v: f64| (-(-v).exp_m1()).powf(m - 1.0) * (-n * v).exp(),
        std::f64::consts::LN_2,
        vmax,
        QUAD_TOL,
    )?;
    Ok(left + right)
}

/// Incomplete beta B(q; m, n) = ∫_0^q u^{m-1}(1-u)^{n-1} du.
///
/// `n` may be zero or negative as long as `q < 1`.
pub fn inc_beta(q: f64, m: f64, n: f64) -> Result<f64> {
    check_prob("q", check_finite("q", q)?)?;
    check_finite("m", m)?;
    check_finite("n", n)?;
    if m <= 0.0 {
        return Err(MathError::Domain(format!("inc_beta needs m > 0, got {m}")));
    }
    if q == 0.0 {
        return Ok(0.0);
    }
    if n <= 0.0 {
        if q == 1.0 {
            return Err(MathError::Divergent(format!(
                "B(1; {m}, {n}) diverges for n <= 0"
            )));
        }
        return inc_beta_quad(q, m, n);
    }
    let (l, _) = ln_beta_signed(m, n)?;
    Ok(reg_inc_beta_pos(q, m, n)? * l.exp())
}

/// Regularized incomplete beta I(q; m, n) = B(q; m, n) / B(m, n).
pub fn reg_inc_beta(q: f64, m: f64, n: f64) -> Result<f64> {
    check_prob("q", check_finite("q", q)?)?;
    check_finite("m", m)?;
    check_finite("n", n)?;
    if m <= 0.0 {
        return Err(MathError::Domain(format!("reg_inc_beta needs m > 0, got {m}")));
    }
    if n > 0.0 {
        return reg_inc_beta_pos(q, m, n);
    }
    let full = beta(m, n).map_err(|e| match e {
        MathError::Pole(_) => MathError::Degenerate(format!("B({m}, {n}) has a pole")),
        other => other,
    })?;
    if full == 0.0 || !full.is_finite() {
        return Err(MathError::Degenerate(format!("B({m}, {n}) = {full}")));
    }
    Ok(inc_beta(q, m, n)? / full)
}
