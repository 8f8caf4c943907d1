//! Trial-by-trial simulation of one job under a mitigation policy.
//!
//! Trials run in fixed-size blocks. Block `b` draws from a ChaCha8 stream
//! keyed by `(seed, b)`, and block statistics are merged in block order, so
//! the output depends only on the seed and the trial count.

use analytic_models::{Field, Metrics, PolicyConfig, RedLaunch, Redundancy};
use distributions::TaskDist;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::io::{self, Write};
use std::path::Path;

pub use analytic_models::MathError;

pub type Result<T> = std::result::Result<T, MathError>;

const BLOCK: usize = 4096;

/// Quantile levels reported for the latency.
pub const QUANTILES: [f64; 3] = [0.5, 0.9, 0.99];

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Quantile {
    pub p: f64,
    pub value: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EmpiricalMetrics {
    pub trials: u64,
    pub latency_mean: f64,
    pub latency_se: f64,
    pub latency_sd: f64,
    pub cost_cancel_mean: f64,
    pub cost_cancel_se: f64,
    pub cost_cancel_sd: f64,
    pub cost_nocancel_mean: f64,
    pub cost_nocancel_se: f64,
    pub latency_quantiles: Vec<Quantile>,
}

impl EmpiricalMetrics {
    /// (mean, standard error) of a field.
    pub fn get(&self, field: Field) -> (f64, f64) {
        match field {
            Field::Latency => (self.latency_mean, self.latency_se),
            Field::CostCancel => (self.cost_cancel_mean, self.cost_cancel_se),
            Field::CostNocancel => (self.cost_nocancel_mean, self.cost_nocancel_se),
        }
    }
}

/// Latency, cost with cancellation and cost without, for one trial.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Trial {
    pub latency: f64,
    pub cost_cancel: f64,
    pub cost_nocancel: f64,
}

// running mean / sum of squared deviations, merged with Chan's formula
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, o: Moments) -> Moments {
        if self.n == 0.0 {
            return o;
        }
        if o.n == 0.0 {
            return self;
        }
        let n = self.n + o.n;
        let d = o.mean - self.mean;
        Moments { n, mean: self.mean + d * o.n / n, m2: self.m2 + o.m2 + d * d * self.n * o.n / n }
    }

    fn sd(&self) -> f64 {
        if self.n < 2.0 {
            0.0
        } else {
            (self.m2 / (self.n - 1.0)).sqrt()
        }
    }
}

struct Scratch {
    a: Vec<f64>,
    b: Vec<f64>,
}

fn kth_smallest(v: &mut [f64], k: usize) -> f64 {
    *v.select_nth_unstable_by(k - 1, f64::total_cmp).1
}

fn min_sum<R: Rng>(dist: &TaskDist, m: usize, rng: &mut R) -> (f64, f64) {
    let mut lo = f64::INFINITY;
    let mut sum = 0.0;
    for _ in 0..m {
        let x = dist.sample(rng);
        lo = lo.min(x);
        sum += x;
    }
    (lo, sum)
}

/// One realisation of the policy. Completions at exactly Δ count as
/// finished before Δ.
fn run_trial<R: Rng>(cfg: &PolicyConfig, dist: &TaskDist, rng: &mut R, sc: &mut Scratch) -> Trial {
    let k = cfg.k as usize;
    let delta = cfg.delta;
    let relaunch = cfg.relaunch_at_delta && delta.is_finite();
    let (mut t, mut cc, mut cn) = (0.0f64, 0.0, 0.0);
    match cfg.redundancy {
        Redundancy::None => {
            for _ in 0..k {
                let x = dist.sample(rng);
                let (done, cost) = if relaunch && x > delta {
                    let y = dist.sample(rng);
                    (delta + y, delta + y)
                } else {
                    (x, x)
                };
                t = t.max(done);
                cc += cost;
            }
            cn = cc;
        }
        Redundancy::Replication { c } => {
            let c1 = c as usize + 1;
            let cf = c1 as f64;
            for _ in 0..k {
                let done = match cfg.red_launch {
                    RedLaunch::AtZero => {
                        let (m, full) = min_sum(dist, c1, rng);
                        if relaunch && m > delta {
                            let (m2, full2) = min_sum(dist, c1, rng);
                            cc += cf * (delta + m2);
                            cn += cf * delta + full2;
                            delta + m2
                        } else {
                            cc += cf * m;
                            cn += full;
                            m
                        }
                    }
                    RedLaunch::AtDelta => {
                        let x = dist.sample(rng);
                        if x <= delta {
                            cc += x;
                            cn += x;
                            x
                        } else if relaunch {
                            let (m2, full2) = min_sum(dist, c1, rng);
                            cc += delta + cf * m2;
                            cn += delta + full2;
                            delta + m2
                        } else {
                            let (m2, full2) = min_sum(dist, c1 - 1, rng);
                            let done = x.min(delta + m2);
                            cc += done + (cf - 1.0) * (done - delta);
                            cn += x + full2;
                            done
                        }
                    }
                };
                t = t.max(done);
            }
        }
        Redundancy::Coding { n } => {
            let n = n as usize;
            let first = if cfg.red_launch == RedLaunch::AtZero { n } else { k };
            sc.a.clear();
            sc.a.extend((0..first).map(|_| dist.sample(rng)));
            let sum_a: f64 = sc.a.iter().sum();
            let mut tmp = std::mem::take(&mut sc.b);
            tmp.clear();
            tmp.extend_from_slice(&sc.a);
            let kth = kth_smallest(&mut tmp, k);
            let no_event = cfg.red_launch == RedLaunch::AtZero && !relaunch;
            if kth <= delta || no_event {
                t = kth;
                cc = sc.a.iter().map(|&x| x.min(kth)).sum();
                cn = sum_a;
            } else if relaunch {
                let mut done = 0usize;
                let mut done_sum = 0.0;
                for &x in &sc.a {
                    if x <= delta {
                        done += 1;
                        done_sum += x;
                    }
                }
                let fresh = n - done;
                tmp.clear();
                tmp.extend((0..fresh).map(|_| dist.sample(rng)));
                let sum_y: f64 = tmp.iter().sum();
                let t2 = kth_smallest(&mut tmp, k - done);
                let killed = (first - done) as f64 * delta;
                t = delta + t2;
                cc = done_sum + killed + tmp.iter().map(|&y| y.min(t2)).sum::<f64>();
                cn = done_sum + killed + sum_y;
            } else {
                // parity tasks join at Δ
                let base = sc.a.len();
                for _ in 0..n - k {
                    let y = dist.sample(rng);
                    sc.a.push(delta + y);
                }
                tmp.clear();
                tmp.extend_from_slice(&sc.a);
                t = kth_smallest(&mut tmp, k);
                cc = sc.a[..base].iter().map(|&x| x.min(t)).sum::<f64>()
                    + sc.a[base..].iter().map(|&f| f.min(t) - delta).sum::<f64>();
                cn = sum_a + sc.a[base..].iter().map(|&f| f - delta).sum::<f64>();
            }
            sc.b = tmp;
        }
    }
    Trial { latency: t, cost_cancel: cc, cost_nocancel: cn }
}

fn check(cfg: &PolicyConfig, dist: &TaskDist, trials: u64) -> Result<()> {
    if trials == 0 {
        return Err(MathError::Domain("trials must be at least 1".into()));
    }
    cfg.validate()?;
    dist.validate()
}

fn block_rng(seed: u64, block: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(block);
    rng
}

fn run_block(cfg: &PolicyConfig, dist: &TaskDist, seed: u64, block: u64, len: usize) -> Vec<Trial> {
    let mut rng = block_rng(seed, block);
    let mut sc = Scratch { a: Vec::new(), b: Vec::new() };
    (0..len).map(|_| run_trial(cfg, dist, &mut rng, &mut sc)).collect()
}

/// Every trial, in trial order.
pub fn simulate_trials(cfg: &PolicyConfig, dist: &TaskDist, trials: u64, seed: u64) -> Result<Vec<Trial>> {
    check(cfg, dist, trials)?;
    let trials = trials as usize;
    let blocks = trials.div_ceil(BLOCK);
    let parts: Vec<Vec<Trial>> = (0..blocks)
        .into_par_iter()
        .map(|b| run_block(cfg, dist, seed, b as u64, BLOCK.min(trials - b * BLOCK)))
        .collect();
    Ok(parts.concat())
}

/// Empirical latency and cost for `trials` independent runs.
pub fn simulate_job(cfg: &PolicyConfig, dist: &TaskDist, trials: u64, seed: u64) -> Result<EmpiricalMetrics> {
    check(cfg, dist, trials)?;
    let n = trials as usize;
    let blocks = n.div_ceil(BLOCK);
    let parts: Vec<([Moments; 3], Vec<f64>)> = (0..blocks)
        .into_par_iter()
        .map(|b| {
            let trials = run_block(cfg, dist, seed, b as u64, BLOCK.min(n - b * BLOCK));
            let mut m = [Moments::default(); 3];
            for tr in &trials {
                m[0].push(tr.latency);
                m[1].push(tr.cost_cancel);
                m[2].push(tr.cost_nocancel);
            }
            (m, trials.iter().map(|tr| tr.latency).collect())
        })
        .collect();
    let mut acc = [Moments::default(); 3];
    let mut lat = Vec::with_capacity(n);
    for (m, l) in parts {
        for i in 0..3 {
            acc[i] = acc[i].merge(m[i]);
        }
        lat.extend(l);
    }
    Ok(finish(acc, lat))
}

/// Summary statistics of trials produced elsewhere, such as probe jobs of a
/// cluster run.
pub fn summarize(trials: &[Trial]) -> Result<EmpiricalMetrics> {
    if trials.is_empty() {
        return Err(MathError::Domain("no trials to summarize".into()));
    }
    let mut acc = [Moments::default(); 3];
    for tr in trials {
        acc[0].push(tr.latency);
        acc[1].push(tr.cost_cancel);
        acc[2].push(tr.cost_nocancel);
    }
    Ok(finish(acc, trials.iter().map(|t| t.latency).collect()))
}

fn finish(acc: [Moments; 3], mut lat: Vec<f64>) -> EmpiricalMetrics {
    let n = lat.len();
    lat.sort_by(f64::total_cmp);
    let latency_quantiles = QUANTILES
        .iter()
        .map(|&p| Quantile { p, value: lat[((p * n as f64).ceil() as usize).clamp(1, n) - 1] })
        .collect();
    let root = (n as f64).sqrt();
    EmpiricalMetrics {
        trials: n as u64,
        latency_mean: acc[0].mean,
        latency_se: acc[0].sd() / root,
        latency_sd: acc[0].sd(),
        cost_cancel_mean: acc[1].mean,
        cost_cancel_se: acc[1].sd() / root,
        cost_cancel_sd: acc[1].sd(),
        cost_nocancel_mean: acc[2].mean,
        cost_nocancel_se: acc[2].sd() / root,
        latency_quantiles,
    }
}

/// Per-trial (latency, cost_cancel, cost_nocancel) as CSV.
pub fn write_trials_csv(path: &Path, trials: &[Trial]) -> io::Result<()> {
    let mut w = io::BufWriter::new(std::fs::File::create(path)?);
    writeln!(w, "latency,cost_cancel,cost_nocancel")?;
    for t in trials {
        writeln!(w, "{},{},{}", t.latency, t.cost_cancel, t.cost_nocancel)?;
    }
    w.flush()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldCheck {
    pub field: Field,
    pub analytic: f64,
    pub empirical: f64,
    pub se: f64,
    pub z: f64,
    pub rel_err: f64,
    pub approx: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompareReport {
    pub fields: Vec<FieldCheck>,
    pub pass: bool,
}

/// Tolerances for [`compare_with`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Tolerance {
    /// Largest |z| accepted for exact fields.
    pub z: f64,
    /// Largest relative error accepted for approximate fields.
    pub rel: f64,
}

impl Default for Tolerance {
    fn default() -> Self {
        Tolerance { z: 3.0, rel: 0.05 }
    }
}

/// z-scores and pass/fail per field with the default tolerances.
pub fn compare(analytic: &Metrics, empirical: &EmpiricalMetrics) -> CompareReport {
    compare_with(analytic, empirical, Tolerance::default())
}

pub fn compare_with(analytic: &Metrics, empirical: &EmpiricalMetrics, tol: Tolerance) -> CompareReport {
    let fields: Vec<FieldCheck> = [Field::Latency, Field::CostCancel, Field::CostNocancel]
        .into_iter()
        .map(|field| {
            let a = analytic.get(field);
            let (e, se) = empirical.get(field);
            let diff = a - e;
            let z = if se > 0.0 {
                diff / se
            } else if diff.abs() <= 1e-9 * a.abs().max(1.0) {
                0.0
            } else {
                diff.signum() * f64::INFINITY
            };
            let rel_err = if e != 0.0 { (diff / e).abs() } else { diff.abs() };
            let approx = analytic.is_approx(field);
            let pass = if approx { rel_err <= tol.rel } else { z.abs() <= tol.z };
            FieldCheck { field, analytic: a, empirical: e, se, z, rel_err, approx, pass }
        })
        .collect();
    let pass = fields.iter().all(|f| f.pass);
    CompareReport { fields, pass }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn moments_merge_matches_single_pass() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.3).collect();
        let mut all = Moments::default();
        xs.iter().for_each(|&x| all.push(x));
        let (mut a, mut b) = (Moments::default(), Moments::default());
        xs[..313].iter().for_each(|&x| a.push(x));
        xs[313..].iter().for_each(|&x| b.push(x));
        let m = a.merge(b);
        assert!((m.mean - all.mean).abs() < 1e-12);
        assert!((m.m2 - all.m2).abs() < 1e-8 * all.m2);
    }

    #[test]
    fn zero_trials_is_an_error() {
        let r = simulate_job(&PolicyConfig::baseline(3), &TaskDist::exp(1.0).unwrap(), 0, 1);
        assert!(matches!(r, Err(MathError::Domain(_))));
    }
}
