//! Policy evaluation dispatch and one-knob sweeps.

use crate::delayed::{code_delayed_exp, code_delayed_sexp, rep_delayed_exp, rep_delayed_sexp};
use crate::relaunch::{delayed_red_relaunch, relaunch, zero_delay_red_relaunch_metrics};
use crate::zero_delay::{zero_delay, zero_delay_second_moments};
use crate::{MathError, Metrics, PolicyConfig, RedLaunch, Redundancy, Result};
use distributions::TaskDist;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::fmt::Write as _;

/// Evaluate one policy with the matching closed form.
///
/// Delayed redundancy without relaunch is covered for Exp and SExp task
/// times only; everything involving relaunch needs Pareto task times.
pub fn evaluate(cfg: &PolicyConfig, dist: &TaskDist) -> Result<Metrics> {
    cfg.validate()?;
    dist.validate()?;
    let PolicyConfig { k, redundancy, delta, red_launch, relaunch_at_delta } = *cfg;
    if relaunch_at_delta {
        let TaskDist::Pareto { s, alpha } = *dist else {
            return Err(MathError::Domain(format!("relaunch formulas need Pareto task times, not {dist:?}")));
        };
        return match (redundancy, red_launch) {
            (Redundancy::None, _) => relaunch(k, delta, s, alpha),
            (_, RedLaunch::AtZero) => zero_delay_red_relaunch_metrics(k, redundancy, delta, s, alpha),
            (_, RedLaunch::AtDelta) => delayed_red_relaunch(k, redundancy, delta, s, alpha),
        };
    }
    if redundancy == Redundancy::None || red_launch == RedLaunch::AtZero {
        // sd fields where the second moments exist
        return zero_delay_second_moments(k, redundancy, dist).or_else(|_| zero_delay(k, redundancy, dist));
    }
    match (dist, redundancy) {
        (&TaskDist::Exp { mu }, Redundancy::Replication { c }) => rep_delayed_exp(k, c, delta, mu),
        (&TaskDist::Exp { mu }, Redundancy::Coding { n }) => code_delayed_exp(k, n, delta, mu),
        (&TaskDist::SExp { s, mu }, Redundancy::Replication { c }) => rep_delayed_sexp(k, c, delta, s, mu),
        (&TaskDist::SExp { s, mu }, Redundancy::Coding { n }) => code_delayed_sexp(k, n, delta, s, mu),
        _ => Err(MathError::Domain(format!(
            "delayed redundancy without relaunch has closed forms for Exp/SExp only, not {dist:?}; use simulation"
        ))),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Knob {
    Delta,
    C,
    N,
    /// Expansion rate: n = ⌊kr⌋ coded tasks, or r - 1 replicas when the base
    /// policy replicates.
    R,
}

impl Knob {
    pub fn name(self) -> &'static str {
        match self {
            Knob::Delta => "delta",
            Knob::C => "c",
            Knob::N => "n",
            Knob::R => "r",
        }
    }

    /// `base` with the knob set to `v`.
    pub fn apply(self, base: &PolicyConfig, v: f64) -> Result<PolicyConfig> {
        let mut cfg = *base;
        let as_int = |v: f64| -> Result<u64> {
            if v >= 0.0 && (v - v.round()).abs() < 1e-9 {
                Ok(v.round() as u64)
            } else {
                Err(MathError::Domain(format!("{} must be a non-negative integer, got {v}", self.name())))
            }
        };
        match self {
            Knob::Delta => cfg.delta = v,
            Knob::C => {
                let c = as_int(v)?;
                cfg.redundancy = if c == 0 { Redundancy::None } else { Redundancy::Replication { c } };
            }
            Knob::N => {
                let n = as_int(v)?;
                cfg.redundancy = if n == cfg.k { Redundancy::None } else { Redundancy::Coding { n } };
            }
            Knob::R => {
                if !(v >= 1.0) {
                    return Err(MathError::Domain(format!("r must be >= 1, got {v}")));
                }
                cfg.redundancy = match base.redundancy {
                    Redundancy::Replication { .. } => match as_int(v)? - 1 {
                        0 => Redundancy::None,
                        c => Redundancy::Replication { c },
                    },
                    _ => {
                        let n = (cfg.k as f64 * v * (1.0 + 1e-12)).floor() as u64;
                        if n == cfg.k { Redundancy::None } else { Redundancy::Coding { n } }
                    }
                };
            }
        }
        Ok(cfg)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffPoint {
    pub knob: f64,
    /// `None` marks a gap: the point could not be evaluated.
    pub metrics: Option<Metrics>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TradeoffCurve {
    pub knob_name: String,
    pub points: Vec<TradeoffPoint>,
}

fn opt(v: Option<f64>) -> String {
    v.map(|x| x.to_string()).unwrap_or_default()
}

impl TradeoffCurve {
    /// CSV with one row per knob value; gaps leave the metric columns empty
    /// and carry the reason in the trailing `error` column.
    pub fn to_csv(&self) -> String {
        let mut out = String::from(
            "knob,latency_mean,cost_cancel_mean,cost_nocancel_mean,latency_sd,cost_sd,approx_flags,error\n",
        );
        for p in &self.points {
            match &p.metrics {
                Some(m) => {
                    let flags: Vec<&str> = m.approx_flags.iter().map(|f| f.label()).collect();
                    let _ = writeln!(
                        out,
                        "{},{},{},{},{},{},{},",
                        p.knob,
                        m.latency_mean,
                        m.cost_cancel_mean,
                        m.cost_nocancel_mean,
                        opt(m.latency_sd),
                        opt(m.cost_sd),
                        flags.join(";")
                    );
                }
                None => {
                    let err = p.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
                    let _ = writeln!(out, "{},,,,,,,{}", p.knob, err);
                }
            }
        }
        out
    }

    pub fn to_json(&self) -> String {
        // non-finite knob values (Δ = ∞) serialize as null
        serde_json::to_string_pretty(self).expect("curve serializes")
    }
}

/// Evaluate `base` at every grid value of `knob`. Grid points run in
/// parallel; the output keeps grid order. A failing point becomes a gap.
pub fn sweep(base: &PolicyConfig, knob: Knob, grid: &[f64], dist: &TaskDist) -> Result<TradeoffCurve> {
    if grid.is_empty() {
        return Err(MathError::Domain("empty grid".into()));
    }
    let up = grid.windows(2).all(|w| w[0] < w[1]);
    let down = grid.windows(2).all(|w| w[0] > w[1]);
    if !(up || down) || grid.iter().any(|v| v.is_nan()) {
        return Err(MathError::Domain("grid must be strictly monotone".into()));
    }
    let points = grid
        .par_iter()
        .map(|&v| match knob.apply(base, v).and_then(|cfg| evaluate(&cfg, dist)) {
            Ok(m) => TradeoffPoint { knob: v, metrics: Some(m), error: None },
            Err(e) => TradeoffPoint { knob: v, metrics: None, error: Some(format!("{}: {e}", e.kind())) },
        })
        .collect();
    Ok(TradeoffCurve { knob_name: knob.name().to_string(), points })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn single_point_curve() {
        let base = PolicyConfig::baseline(10);
        let c = sweep(&base, Knob::N, &[12.0], &TaskDist::pareto(1.0, 2.0).unwrap()).unwrap();
        assert_eq!(c.points.len(), 1);
        assert!(c.points[0].metrics.is_some());
    }

    #[test]
    fn bad_points_are_gaps() {
        let base = PolicyConfig::baseline(10);
        let c = sweep(&base, Knob::N, &[5.0, 12.0, 12.5], &TaskDist::pareto(1.0, 2.0).unwrap()).unwrap();
        assert!(c.points[0].metrics.is_none());
        assert!(c.points[1].metrics.is_some());
        assert!(c.points[2].metrics.is_none());
        assert_eq!(c.to_csv().lines().count(), 4);
        assert!(sweep(&base, Knob::N, &[12.0, 11.0, 13.0], &TaskDist::pareto(1.0, 2.0).unwrap()).is_err());
    }
}
