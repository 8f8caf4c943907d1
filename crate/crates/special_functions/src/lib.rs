//! Special functions used by the cost and latency models.
//!
//! Everything here is a pure function of its arguments. Arguments are checked
//! at the boundary: NaN and out-of-domain inputs come back as [`MathError`]
//! instead of silently propagating.

mod beta;
mod binomial;
mod error;
mod gamma;
mod harmonic;
pub mod quad;

pub use beta::{beta, inc_beta, ln_beta, reg_inc_beta};
pub use binomial::{approx_binom_harmonic, approx_binom_reg_inc_beta, binom_expect, ln_binom};
pub use error::MathError;
pub use gamma::{gamma_fn, gamma_ratio, gamma_ratio_sum, ln_gamma, ln_gamma_signed, rgamma};
pub use harmonic::{digamma, gen_harmonic2, harmonic, EULER_GAMMA};

pub type Result<T> = std::result::Result<T, MathError>;

pub(crate) fn check_finite(name: &str, x: f64) -> Result<f64> {
    if x.is_finite() {
        Ok(x)
    } else {
        Err(MathError::Domain(format!("{name} must be finite, got {x}")))
    }
}

pub(crate) fn check_prob(name: &str, q: f64) -> Result<f64> {
    if (0.0..=1.0).contains(&q) {
        Ok(q)
    } else {
        Err(MathError::Domain(format!("{name} must lie in [0, 1], got {q}")))
    }
}
