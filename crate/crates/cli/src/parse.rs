//! Mini-grammars for distribution, redundancy and grid flags.

use crate::error::{CliError, Result};
use analytic_models::{Knob, Redundancy};
use distributions::{empirical_from_samples, read_samples, TaskDist};
use std::path::Path;

pub const DIST_GRAMMAR: &str = "\
Distribution grammar, NAME:PARAMS with comma-separated parameters:
  exp:MU                  exponential with rate MU
  sexp:S,MU               shifted exponential, minimum S, rate MU
  pareto:S,ALPHA          Pareto with minimum S and tail index ALPHA
  tpareto:S,U,ALPHA       Pareto truncated to [S, U]
  empirical:PATH          resample a file of positive values, one per line

Redundancy grammar: none | rep:C (C extra copies per task) | coding:N (N tasks, any K finish the job);
  bare rep means C = 1 and bare coding means N = 2K (a sweep over c, n or r sets the value)
Grid grammar: A:B (integers A..=B), A:B:STEP, or a comma list such as 0,0.5,2,inf";

fn numbers(name: &str, params: &str, want: usize) -> Result<Vec<f64>> {
    let xs: Vec<f64> = params
        .split(',')
        .map(|p| p.trim().parse::<f64>().map_err(|_| CliError::Usage(format!("{name}: bad number {p:?}"))))
        .collect::<Result<_>>()?;
    if xs.len() != want {
        return Err(CliError::Usage(format!("{name} takes {want} parameter(s), got {}", xs.len())));
    }
    Ok(xs)
}

pub fn dist(spec: &str) -> Result<TaskDist> {
    let (name, params) = spec.split_once(':').ok_or_else(|| CliError::Usage(format!("distribution {spec:?} is not NAME:PARAMS")))?;
    let name = name.trim().to_ascii_lowercase();
    let d = match name.as_str() {
        "exp" => TaskDist::exp(numbers(&name, params, 1)?[0]),
        "sexp" => {
            let p = numbers(&name, params, 2)?;
            TaskDist::sexp(p[0], p[1])
        }
        "pareto" => {
            let p = numbers(&name, params, 2)?;
            TaskDist::pareto(p[0], p[1])
        }
        "tpareto" | "truncated-pareto" => {
            let p = numbers(&name, params, 3)?;
            TaskDist::truncated_pareto(p[0], p[1], p[2])
        }
        "empirical" => {
            let samples = read_samples(Path::new(params)).map_err(|e| CliError::Io(format!("{params}: {e}")))?;
            empirical_from_samples(samples)
        }
        _ => return Err(CliError::Usage(format!("unknown distribution {name:?}"))),
    };
    Ok(d?)
}

/// Bare `rep` means one extra copy and bare `coding` means 2k tasks; a
/// sweep over c, n or r overrides the value anyway.
pub fn redundancy(spec: &str, k: u64) -> Result<Redundancy> {
    let bad = || CliError::Usage(format!("redundancy {spec:?} is not none, rep[:C] or coding[:N]"));
    let (name, v) = match spec.split_once(':') {
        Some((name, v)) => (name, Some(v.trim().parse::<u64>().map_err(|_| bad())?)),
        None => (spec, None),
    };
    match name.trim().to_ascii_lowercase().as_str() {
        "none" if v.is_none() => Ok(Redundancy::None),
        "rep" | "replication" => Ok(Redundancy::Replication { c: v.unwrap_or(1) }),
        "coding" | "code" => Ok(Redundancy::Coding { n: v.unwrap_or(2 * k) }),
        _ => Err(bad()),
    }
}

pub fn real(s: &str) -> Result<f64> {
    match s.trim().to_ascii_lowercase().as_str() {
        "inf" | "infinity" | "never" => Ok(f64::INFINITY),
        t => t.parse().map_err(|_| CliError::Usage(format!("bad number {s:?}"))),
    }
}

pub fn grid(spec: &str) -> Result<Vec<f64>> {
    let parts: Vec<&str> = spec.split(':').collect();
    let out = match parts.as_slice() {
        [one] => one.split(',').map(real).collect::<Result<Vec<_>>>()?,
        [a, b] => {
            let (a, b): (i64, i64) = (
                a.trim().parse().map_err(|_| CliError::Usage(format!("range start {a:?} is not an integer")))?,
                b.trim().parse().map_err(|_| CliError::Usage(format!("range end {b:?} is not an integer")))?,
            );
            (a..=b).map(|v| v as f64).collect()
        }
        [a, b, step] => {
            let (a, b, step) = (real(a)?, real(b)?, real(step)?);
            if !(step > 0.0 && a.is_finite() && b.is_finite()) {
                return Err(CliError::Usage(format!("grid {spec:?} needs finite ends and a positive step")));
            }
            let n = ((b - a) / step + 1e-9).floor();
            if n < 0.0 {
                return Err(CliError::Usage(format!("grid {spec:?} is empty")));
            }
            // snap away the rounding noise of a + i·step
            (0..=n as u64).map(|i| ((a + i as f64 * step) * 1e9).round() / 1e9).collect()
        }
        _ => return Err(CliError::Usage(format!("bad grid {spec:?}"))),
    };
    if out.is_empty() {
        return Err(CliError::Usage(format!("grid {spec:?} is empty")));
    }
    Ok(out)
}

pub fn knob(s: &str) -> Result<Knob> {
    match s.to_ascii_lowercase().as_str() {
        "delta" => Ok(Knob::Delta),
        "c" => Ok(Knob::C),
        "n" => Ok(Knob::N),
        "r" => Ok(Knob::R),
        _ => Err(CliError::Usage(format!("knob {s:?} is not one of delta, c, n, r"))),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grammar() {
        assert_eq!(dist("pareto:1,2").unwrap(), TaskDist::pareto(1.0, 2.0).unwrap());
        assert_eq!(dist("TPareto:1,1e10,1.1").unwrap(), TaskDist::truncated_pareto(1.0, 1e10, 1.1).unwrap());
        assert!(matches!(dist("pareto:1"), Err(CliError::Usage(_))));
        assert!(matches!(dist("pareto:1,-2"), Err(CliError::Domain(_))));
        assert!(matches!(dist("gamma:1,2"), Err(CliError::Usage(_))));
        assert_eq!(redundancy("rep:2", 10).unwrap(), Redundancy::Replication { c: 2 });
        assert_eq!(redundancy("coding:14", 10).unwrap(), Redundancy::Coding { n: 14 });
        assert_eq!(redundancy("coding", 10).unwrap(), Redundancy::Coding { n: 20 });
        assert!(redundancy("none:3", 10).is_err());
        assert!(redundancy("coding:x", 10).is_err());
        assert_eq!(grid("11:30").unwrap().len(), 20);
        assert_eq!(grid("0,0.5,inf").unwrap(), vec![0.0, 0.5, f64::INFINITY]);
        assert_eq!(grid("1:2:0.1").unwrap().len(), 11);
        assert!(grid("3:1").is_err());
    }
}
