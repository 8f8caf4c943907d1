//! Redundancy added after a delay Δ, exponential and shifted-exponential
//! task times.

use crate::{check_delta, check_k, check_positive, Field, MathError, Metrics, Result};
use special_functions::{
    approx_binom_harmonic, binom_expect, harmonic, inc_beta, reg_inc_beta,
};

fn check_c(c: u64) -> Result<()> {
    if c >= 1 {
        Ok(())
    } else {
        Err(MathError::Domain("replication needs c >= 1".into()))
    }
}

fn check_n(k: u64, n: u64) -> Result<()> {
    if n > k {
        Ok(())
    } else {
        Err(MathError::Domain(format!("coding needs n > k, got n={n}, k={k}")))
    }
}

// 1 - e^{-x}, exact at x = +inf
fn one_minus_exp(x: f64) -> f64 {
    if x.is_infinite() {
        1.0
    } else {
        -(-x).exp_m1()
    }
}

/// Σ_{j=1}^{k} q^j / j.
///
/// Equals ∫_0^Δ 1 - (1 - e^{-μt})^k dt · μ for q = 1 - e^{-μΔ}; it replaces
/// μΔ - B(q; k+1, 0), which cancels badly once q rounds to 1.
fn partial_log_series(q: f64, k: u64) -> f64 {
    let mut p = 1.0;
    let mut s = 0.0;
    for j in 1..=k {
        p *= q;
        s += p / j as f64;
    }
    s
}

/// Replication after Δ, Exp(μ) task times.
///
/// Latency uses the approximation E[H_{k-R}] ≈ H_{k-kq}; costs are exact.
pub fn rep_delayed_exp(k: u64, c: u64, delta: f64, mu: f64) -> Result<Metrics> {
    check_k(k)?;
    check_c(c)?;
    check_delta(delta)?;
    check_positive("mu", mu)?;
    let (kf, cf) = (k as f64, c as f64);
    let q = one_minus_exp(mu * delta);
    let latency = (harmonic(kf)? - cf / (cf + 1.0) * approx_binom_harmonic(kf, k, q)?) / mu;
    let approx = delta > 0.0 && delta.is_finite();
    Ok(Metrics::exact(latency, kf / mu, (cf * (1.0 - q) + 1.0) * kf / mu).flag(Field::Latency, approx))
}

/// Pr{T > t} for [`rep_delayed_exp`] (exact).
pub fn rep_delayed_exp_tail(k: u64, c: u64, delta: f64, mu: f64, t: f64) -> Result<f64> {
    check_k(k)?;
    check_c(c)?;
    check_delta(delta)?;
    check_positive("mu", mu)?;
    if t <= 0.0 {
        return Ok(1.0);
    }
    // a task is still running at t
    let alive = if t <= delta {
        (-mu * t).exp()
    } else {
        (-mu * delta - mu * (c as f64 + 1.0) * (t - delta)).exp()
    };
    Ok(1.0 - (1.0 - alive).powi(k as i32))
}

/// Replication after Δ, SExp(s, μ) task times.
pub fn rep_delayed_sexp(k: u64, c: u64, delta: f64, s: f64, mu: f64) -> Result<Metrics> {
    check_positive("s", s)?;
    let e = rep_delayed_exp(k, c, delta, mu)?;
    let (kf, cf) = (k as f64, c as f64);
    let q = if delta > s { one_minus_exp(mu * (delta - s)) } else { 0.0 };
    let cost_cancel = if delta <= s {
        let inner = 1.0 - cf / (cf + 1.0) * ((-mu * delta).exp() + mu * delta);
        kf * (cf + 1.0) * (s + inner / mu)
    } else {
        // (1 - q) e^{-μs} = e^{-μΔ}, which is 0 at Δ = ∞
        kf * (s + (1.0 + cf * (1.0 - q - (-mu * delta).exp())) / mu)
    };
    let cost_nocancel = kf * (cf * (1.0 - q) + 1.0) * (s + 1.0 / mu);
    let mut m = Metrics::exact(s + e.latency_mean, cost_cancel, cost_nocancel);
    m.approx_flags = e.approx_flags;
    Ok(m)
}

/// Coding after Δ (n - k parity tasks), Exp(μ) task times.
///
/// Latency uses E[H_{n-R}] ≈ H_{n-kq}; costs are exact.
pub fn code_delayed_exp(k: u64, n: u64, delta: f64, mu: f64) -> Result<Metrics> {
    check_k(k)?;
    check_n(k, n)?;
    check_delta(delta)?;
    check_positive("mu", mu)?;
    let (kf, nf) = (k as f64, n as f64);
    let q = one_minus_exp(mu * delta);
    let latency = (partial_log_series(q, k) + approx_binom_harmonic(nf, k, q)? - harmonic(nf - kf)?) / mu;
    let qk = q.powi(k as i32);
    let approx = delta > 0.0 && delta.is_finite();
    Ok(Metrics::exact(latency, kf / mu, kf / mu * qk + nf / mu * (1.0 - qk)).flag(Field::Latency, approx))
}

/// Exact E[T] for [`code_delayed_exp`]: the binomial expectation evaluated
/// term by term instead of approximated.
pub fn code_delayed_exp_latency_exact(k: u64, n: u64, delta: f64, mu: f64) -> Result<f64> {
    check_k(k)?;
    check_n(k, n)?;
    check_delta(delta)?;
    check_positive("mu", mu)?;
    let q = one_minus_exp(mu * delta);
    let eh = binom_expect(|r| harmonic((n - r) as f64).unwrap_or(f64::NAN), k, q)?;
    Ok((partial_log_series(q, k) + eh - harmonic((n - k) as f64)?) / mu)
}

/// Pr{T > t} for [`code_delayed_exp`], exact.
pub fn code_delayed_exp_tail(k: u64, n: u64, delta: f64, mu: f64, t: f64) -> Result<f64> {
    check_k(k)?;
    check_n(k, n)?;
    check_delta(delta)?;
    check_positive("mu", mu)?;
    if t <= 0.0 {
        return Ok(1.0);
    }
    if t <= delta {
        return Ok(1.0 - (-(-mu * t).exp_m1()).powi(k as i32));
    }
    let q = one_minus_exp(mu * delta);
    let p = -(-mu * (t - delta)).exp_m1();
    // R of the k originals finished by Δ; after Δ there are n - R fresh
    // exponentials and k - R more completions are needed.
    binom_expect(
        |r| {
            if r == k {
                0.0
            } else {
                let need = (k - r) as f64;
                let pool = (n - r) as f64;
                1.0 - reg_inc_beta(p, need, pool - need + 1.0).unwrap_or(f64::NAN)
            }
        },
        k,
        q,
    )
}

/// B(ζ; m+1, 0) / μ for integer m, with ζ = 1 - e^{-μs}: s - Σ_{j≤m} ζ^j/(jμ).
fn b_int_over_mu(m: u64, s: f64, mu: f64) -> f64 {
    let zeta = one_minus_exp(mu * s);
    s - partial_log_series(zeta, m) / mu
}

/// Coding after Δ, SExp(s, μ) task times.
///
/// Latency is s plus the exponential-case latency. The cost with
/// cancellation is exact for Δ ≤ s and uses the binomial-expectation
/// approximation for Δ > s.
pub fn code_delayed_sexp(k: u64, n: u64, delta: f64, s: f64, mu: f64) -> Result<Metrics> {
    check_positive("s", s)?;
    let e = code_delayed_exp(k, n, delta, mu)?;
    let (kf, nf) = (k as f64, n as f64);
    let unit = s + 1.0 / mu;
    let (cost_cancel, cost_nocancel, approx_cost) = if delta <= s {
        let cc = nf * s + kf / mu - (nf - kf) * b_int_over_mu(k, delta, mu);
        (cc, nf * unit, false)
    } else if delta.is_infinite() {
        (kf * unit, kf * unit, false)
    } else {
        let q = one_minus_exp(mu * (delta - s));
        let qt = one_minus_exp(mu * delta);
        let zeta = one_minus_exp(mu * s);
        let qk = q.powi(k as i32);
        let cost = (kf + (1.0 - qk) * (nf - kf)) * unit;
        let m = kf - kf * q;
        let b = inc_beta(zeta, m + 1.0, 0.0)?;
        let saved = (nf - kf) / mu * (1.0 - qk + zeta.powf(-m) * b * (qt.powi(k as i32) - qk));
        (cost - saved, cost, true)
    };
    let mut out = Metrics::exact(s + e.latency_mean, cost_cancel, cost_nocancel)
        .flag(Field::CostCancel, approx_cost);
    out.approx_flags.extend(e.approx_flags);
    Ok(out)
}

/// Exact E[C^c] for [`code_delayed_sexp`], summing over the number R of
/// original tasks finished by Δ.
pub fn code_delayed_sexp_cost_cancel_exact(k: u64, n: u64, delta: f64, s: f64, mu: f64) -> Result<f64> {
    check_k(k)?;
    check_n(k, n)?;
    check_delta(delta)?;
    check_positive("s", s)?;
    check_positive("mu", mu)?;
    let (kf, nf) = (k as f64, n as f64);
    let unit = s + 1.0 / mu;
    if delta <= s {
        return Ok(nf * s + kf / mu - (nf - kf) * b_int_over_mu(k, delta, mu));
    }
    if delta.is_infinite() {
        return Ok(kf * unit);
    }
    let q = one_minus_exp(mu * (delta - s));
    let qk = q.powi(k as i32);
    let cost = (kf + (1.0 - qk) * (nf - kf)) * unit;
    // parity tasks cancelled while still in their deterministic phase save
    // E[(s - max of k-R residual exponentials)^+] each
    let early = binom_expect(|r| if r == k { 0.0 } else { b_int_over_mu(k - r, s, mu) }, k, q)?;
    Ok(cost - (nf - kf) * ((1.0 - qk) / mu + early))
}
