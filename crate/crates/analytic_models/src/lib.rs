//! Closed-form expected latency and cost of a k-task job under straggler
//! mitigation: replicated or MDS-coded redundancy, launched at time zero or
//! after a delay Δ, optionally combined with relaunching stragglers at Δ.
//!
//! Time is in the same unit as the task distribution parameters. Cost is the
//! summed lifetime of every task copy (resource · time). Two cost flavours
//! are reported: `cost_cancel_mean` cancels redundant copies as soon as they
//! become useless, `cost_nocancel_mean` lets every copy run to completion.
//! A relaunch always cancels the copies it replaces, in both flavours.
//!
//! `delta = f64::INFINITY` means "never": the evaluation substitutes the
//! no-redundancy / no-relaunch limit.

mod delayed;
mod no_cost;
mod relaunch;
mod sweep;
mod tail_change;
mod zero_delay;

pub use delayed::{
    code_delayed_exp, code_delayed_exp_latency_exact, code_delayed_exp_tail, code_delayed_sexp,
    code_delayed_sexp_cost_cancel_exact, rep_delayed_exp, rep_delayed_exp_tail, rep_delayed_sexp,
};
pub use no_cost::{
    coding_no_cost_conditions, latency_no_cost_coding, latency_no_cost_replication, CodingNoCost,
    ReplicationNoCost,
};
pub use relaunch::{
    delayed_red_relaunch, red_relaunch_sufficiency, relaunch, relaunch_optimum, relaunch_tail,
    zero_delay_red_relaunch, zero_delay_red_relaunch_metrics, RelaunchOptimum, RelaunchSufficiency,
};
pub use sweep::{evaluate, sweep, Knob, TradeoffCurve, TradeoffPoint};
pub use tail_change::{tail_change_verdict, RedundancyKind, TailChange, Verdict};
pub use zero_delay::{pareto_coded_latency, pareto_latency, zero_delay, zero_delay_second_moments};

use serde::{Deserialize, Serialize};
pub use special_functions::MathError;
use std::collections::BTreeSet;

pub type Result<T> = std::result::Result<T, MathError>;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Redundancy {
    None,
    /// c extra copies of every task.
    Replication { c: u64 },
    /// n tasks in total, any k of which complete the job.
    Coding { n: u64 },
}

/// When redundant copies are launched.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RedLaunch {
    AtZero,
    AtDelta,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PolicyConfig {
    pub k: u64,
    pub redundancy: Redundancy,
    pub delta: f64,
    pub red_launch: RedLaunch,
    pub relaunch_at_delta: bool,
}

impl PolicyConfig {
    /// No redundancy, no relaunch.
    pub fn baseline(k: u64) -> Self {
        PolicyConfig {
            k,
            redundancy: Redundancy::None,
            delta: f64::INFINITY,
            red_launch: RedLaunch::AtZero,
            relaunch_at_delta: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.k < 1 {
            return Err(MathError::Domain("k must be at least 1".into()));
        }
        if !(self.delta >= 0.0) {
            return Err(MathError::Domain(format!("delta must be >= 0, got {}", self.delta)));
        }
        match self.redundancy {
            Redundancy::Replication { c } if c < 1 => {
                Err(MathError::Domain("replication needs c >= 1".into()))
            }
            Redundancy::Coding { n } if n <= self.k => {
                Err(MathError::Domain(format!("coding needs n > k, got n={n}, k={}", self.k)))
            }
            _ => Ok(()),
        }
    }
}

/// Which metric a flag refers to.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Field {
    Latency,
    CostCancel,
    CostNocancel,
}

impl Field {
    pub fn label(self) -> &'static str {
        match self {
            Field::Latency => "latency",
            Field::CostCancel => "cost_cancel",
            Field::CostNocancel => "cost_nocancel",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metrics {
    pub latency_mean: f64,
    pub cost_cancel_mean: f64,
    pub cost_nocancel_mean: f64,
    pub latency_sd: Option<f64>,
    pub cost_sd: Option<f64>,
    /// Fields computed from an approximate formula.
    pub approx_flags: BTreeSet<Field>,
}

impl Metrics {
    pub fn exact(latency: f64, cost_cancel: f64, cost_nocancel: f64) -> Self {
        Metrics {
            latency_mean: latency,
            cost_cancel_mean: cost_cancel,
            cost_nocancel_mean: cost_nocancel,
            latency_sd: None,
            cost_sd: None,
            approx_flags: BTreeSet::new(),
        }
    }

    pub fn flag(mut self, field: Field, approx: bool) -> Self {
        if approx {
            self.approx_flags.insert(field);
        }
        self
    }

    pub fn is_approx(&self, field: Field) -> bool {
        self.approx_flags.contains(&field)
    }

    pub fn get(&self, field: Field) -> f64 {
        match field {
            Field::Latency => self.latency_mean,
            Field::CostCancel => self.cost_cancel_mean,
            Field::CostNocancel => self.cost_nocancel_mean,
        }
    }
}

/// Tail index of a metric: Pr{metric > t} decays like t^-index. `None` for
/// task-time laws without a power-law tail, where every moment is finite.
///
/// Under Pareto(s, α) the job waits on a task only through its fastest copy
/// (α(c+1)) or on the (n-k+1) slowest coded tasks (α(n-k+1)); relaunched
/// copies are redundant the same way. Without cancellation every copy runs
/// out, so that cost keeps index α.
pub fn field_tail_index(cfg: &PolicyConfig, dist: &distributions::TaskDist, field: Field) -> Option<f64> {
    let distributions::TaskDist::Pareto { alpha, .. } = *dist else {
        return None;
    };
    let copies = match cfg.redundancy {
        Redundancy::None => 1,
        Redundancy::Replication { c } => c + 1,
        Redundancy::Coding { n } => n - cfg.k + 1,
    };
    Some(match field {
        Field::CostNocancel => alpha,
        Field::Latency | Field::CostCancel => alpha * copies as f64,
    })
}

pub(crate) fn check_positive(name: &str, v: f64) -> Result<()> {
    if v.is_finite() && v > 0.0 {
        Ok(())
    } else {
        Err(MathError::Domain(format!("{name} must be positive and finite, got {v}")))
    }
}

pub(crate) fn check_delta(delta: f64) -> Result<()> {
    if delta >= 0.0 {
        Ok(())
    } else {
        Err(MathError::Domain(format!("delta must be >= 0, got {delta}")))
    }
}

pub(crate) fn check_k(k: u64) -> Result<()> {
    if k >= 1 {
        Ok(())
    } else {
        Err(MathError::Domain("k must be at least 1".into()))
    }
}
