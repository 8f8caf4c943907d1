//! Task execution-time distributions.
//!
//! Five variants: exponential, shifted exponential, Pareto, truncated Pareto
//! and an empirical distribution backed by raw samples. Sampling is by
//! inverse CDF so a seeded stream gives reproducible draws.

mod order_stats;
mod samples_io;

pub use order_stats::{exp_joint_moment, order_stat_mean, pareto_joint_moment, OrderStatSpec};
pub use samples_io::{read_samples, write_samples};

use rand::Rng;
use serde::{Deserialize, Serialize};
pub use special_functions::MathError;

pub type Result<T> = std::result::Result<T, MathError>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum TaskDist {
    /// Exp(mu), mean 1/mu.
    Exp { mu: f64 },
    /// s + Exp(mu).
    SExp { s: f64, mu: f64 },
    /// Pr{X > t} = (s/t)^alpha for t >= s.
    Pareto { s: f64, alpha: f64 },
    /// Pareto(s, alpha) conditioned on X <= u.
    TruncatedPareto { s: f64, u: f64, alpha: f64 },
    /// Sorted positive samples; draws are uniform over them.
    Empirical { samples: Vec<f64> },
}

fn positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(MathError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

impl TaskDist {
    pub fn exp(mu: f64) -> Result<Self> {
        let d = TaskDist::Exp { mu };
        d.validate()?;
        Ok(d)
    }

    pub fn sexp(s: f64, mu: f64) -> Result<Self> {
        let d = TaskDist::SExp { s, mu };
        d.validate()?;
        Ok(d)
    }

    pub fn pareto(s: f64, alpha: f64) -> Result<Self> {
        let d = TaskDist::Pareto { s, alpha };
        d.validate()?;
        Ok(d)
    }

    pub fn truncated_pareto(s: f64, u: f64, alpha: f64) -> Result<Self> {
        let d = TaskDist::TruncatedPareto { s, u, alpha };
        d.validate()?;
        Ok(d)
    }

    /// Checks the parameter invariants of the variant.
    pub fn validate(&self) -> Result<()> {
        match self {
            TaskDist::Exp { mu } => positive("mu", *mu),
            TaskDist::SExp { s, mu } => {
                positive("s", *s)?;
                positive("mu", *mu)
            }
            TaskDist::Pareto { s, alpha } => {
                positive("s", *s)?;
                positive("alpha", *alpha)
            }
            TaskDist::TruncatedPareto { s, u, alpha } => {
                positive("s", *s)?;
                positive("alpha", *alpha)?;
                positive("u", *u)?;
                if u <= s {
                    return Err(MathError::Domain(format!("need u > s, got s={s}, u={u}")));
                }
                Ok(())
            }
            TaskDist::Empirical { samples } => {
                if samples.is_empty() {
                    return Err(MathError::Domain("empirical distribution needs samples".into()));
                }
                for w in samples.windows(2) {
                    if w[1] < w[0] {
                        return Err(MathError::Domain("empirical samples must be sorted".into()));
                    }
                }
                samples.iter().try_for_each(|&x| positive("sample", x))
            }
        }
    }

    /// Smallest value in the support.
    pub fn minimum(&self) -> f64 {
        match self {
            TaskDist::Exp { .. } => 0.0,
            TaskDist::SExp { s, .. }
            | TaskDist::Pareto { s, .. }
            | TaskDist::TruncatedPareto { s, .. } => *s,
            TaskDist::Empirical { samples } => samples[0],
        }
    }

    /// Inverse CDF at `u` in [0, 1).
    pub fn quantile(&self, u: f64) -> f64 {
        match self {
            TaskDist::Exp { mu } => -(-u).ln_1p() / mu,
            TaskDist::SExp { s, mu } => s - (-u).ln_1p() / mu,
            TaskDist::Pareto { s, alpha } => s * (1.0 - u).powf(-1.0 / alpha),
            TaskDist::TruncatedPareto { s, u: hi, alpha } => {
                let mass = 1.0 - (s / hi).powf(*alpha);
                s * (1.0 - u * mass).powf(-1.0 / alpha)
            }
            TaskDist::Empirical { samples } => {
                let i = (u * samples.len() as f64) as usize;
                samples[i.min(samples.len() - 1)]
            }
        }
    }

    /// One draw.
    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> f64 {
        self.quantile(rng.random::<f64>())
    }

    /// Pr{X > t}.
    pub fn tail(&self, t: f64) -> f64 {
        match self {
            TaskDist::Exp { mu } => {
                if t <= 0.0 {
                    1.0
                } else {
                    (-mu * t).exp()
                }
            }
            TaskDist::SExp { s, mu } => {
                if t <= *s {
                    1.0
                } else {
                    (-mu * (t - s)).exp()
                }
            }
            TaskDist::Pareto { s, alpha } => {
                if t <= *s {
                    1.0
                } else {
                    (s / t).powf(*alpha)
                }
            }
            TaskDist::TruncatedPareto { s, u, alpha } => {
                if t <= *s {
                    1.0
                } else if t >= *u {
                    0.0
                } else {
                    let lo = (s / u).powf(*alpha);
                    ((s / t).powf(*alpha) - lo) / (1.0 - lo)
                }
            }
            TaskDist::Empirical { samples } => {
                let above = samples.len() - samples.partition_point(|&x| x <= t);
                above as f64 / samples.len() as f64
            }
        }
    }

    /// Pr{X <= t}.
    pub fn cdf(&self, t: f64) -> f64 {
        1.0 - self.tail(t)
    }

    /// Expected value; Pareto with alpha <= 1 has none.
    pub fn mean(&self) -> Result<f64> {
        match self {
            TaskDist::Exp { mu } => Ok(1.0 / mu),
            TaskDist::SExp { s, mu } => Ok(s + 1.0 / mu),
            TaskDist::Pareto { s, alpha } => {
                if *alpha <= 1.0 {
                    Err(MathError::InfiniteMoment(format!("Pareto mean needs alpha > 1, got {alpha}")))
                } else {
                    Ok(s * alpha / (alpha - 1.0))
                }
            }
            TaskDist::TruncatedPareto { s, u, alpha } => {
                let lo = (s / u).powf(*alpha);
                if (alpha - 1.0).abs() < 1e-12 {
                    Ok(s * (u / s).ln() / (1.0 - lo))
                } else {
                    // α s^α (s^{1-α} - u^{1-α}) / ((α-1)(1-(s/u)^α))
                    let r = 1.0 - (s / u).powf(alpha - 1.0);
                    Ok(alpha * s * r / ((alpha - 1.0) * (1.0 - lo)))
                }
            }
            TaskDist::Empirical { samples } => {
                Ok(samples.iter().sum::<f64>() / samples.len() as f64)
            }
        }
    }
}

/// Builds the sorted empirical variant from raw positive samples.
pub fn empirical_from_samples(mut samples: Vec<f64>) -> Result<TaskDist> {
    if samples.is_empty() {
        return Err(MathError::Domain("no samples".into()));
    }
    if let Some(bad) = samples.iter().find(|x| !(x.is_finite() && **x > 0.0)) {
        return Err(MathError::Domain(format!("samples must be positive, found {bad}")));
    }
    samples.sort_by(f64::total_cmp);
    Ok(TaskDist::Empirical { samples })
}
