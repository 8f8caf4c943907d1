//! Event-driven simulation of a cluster of limited processor-sharing servers.
//!
//! Jobs arrive as a Poisson stream. A job draws its task count k from a
//! truncated Zipf law and one task size z for all of its tasks, is expanded
//! to n = ⌊rk⌋ tasks and sends them to the n servers holding the fewest
//! tasks. A server runs up to `ps_limit` tasks at rate 1/m each (m residents)
//! and queues the rest FCFS. The job leaves at its k-th task completion and
//! its other tasks are removed at once.
//!
//! Every `probe_every`-th arrival is a probe job of fixed shape whose
//! latency, cost and task execution times are recorded.

use distributions::TaskDist;
use monte_carlo::{summarize, EmpiricalMetrics, Trial};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::cmp::{Ordering, Reverse};
use std::collections::{BTreeSet, BinaryHeap, VecDeque};
use std::io::Write;
use std::path::Path;

#[derive(Debug, thiserror::Error)]
pub enum ClusterError {
    #[error("invalid configuration: {0}")]
    Config(String),
    #[error("unstable system: {0}")]
    Unstable(String),
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("parse error: {0}")]
    Parse(String),
}

pub type Result<T> = std::result::Result<T, ClusterError>;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Zipf {
    pub max_k: u64,
    pub exponent: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProbeJob {
    pub k: u64,
    pub size: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum Horizon {
    /// Stop admitting jobs after this many arrivals.
    Jobs(u64),
    /// Stop admitting jobs after this simulated time.
    Time(f64),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ClusterConfig {
    pub num_servers: usize,
    pub ps_limit: usize,
    /// Jobs per unit time; `None` picks the rate that puts the offered load
    /// at r = 1 at `target_load` of capacity.
    pub arrival_rate: Option<f64>,
    pub target_load: f64,
    pub task_size_dist: TaskDist,
    pub task_count_dist: Zipf,
    pub expansion_rate: f64,
    pub probe_job: ProbeJob,
    pub probe_every: u64,
    /// Probes among the first `warmup_jobs` arrivals are not recorded.
    pub warmup_jobs: u64,
    pub horizon: Horizon,
    /// Abort once this many tasks are in the system at an arrival.
    pub saturation_threshold: usize,
    /// Charge queueing time at a server to the probe's cost as well.
    pub cost_includes_queueing: bool,
}

impl Default for ClusterConfig {
    fn default() -> Self {
        ClusterConfig {
            num_servers: 200,
            ps_limit: 8,
            arrival_rate: None,
            target_load: 0.6,
            task_size_dist: TaskDist::TruncatedPareto { s: 1.0, u: 1e10, alpha: 1.1 },
            task_count_dist: Zipf { max_k: 100, exponent: 1.5 },
            expansion_rate: 1.0,
            probe_job: ProbeJob { k: 20, size: 1.0 },
            probe_every: 50,
            warmup_jobs: 1000,
            horizon: Horizon::Jobs(100_000),
            saturation_threshold: 1_000_000,
            cost_includes_queueing: false,
        }
    }
}

fn expand(k: u64, r: f64) -> u64 {
    (k as f64 * r * (1.0 + 1e-12)).floor() as u64
}

impl ClusterConfig {
    pub fn validate(&self) -> Result<()> {
        let bad = |m: String| Err(ClusterError::Config(m));
        if self.ps_limit < 1 {
            return bad("ps_limit must be at least 1".into());
        }
        if !(self.expansion_rate >= 1.0 && self.expansion_rate.is_finite()) {
            return bad(format!("expansion_rate must be >= 1, got {}", self.expansion_rate));
        }
        if let Some(l) = self.arrival_rate {
            if !(l > 0.0 && l.is_finite()) {
                return bad(format!("arrival_rate must be positive, got {l}"));
            }
        } else if !(self.target_load > 0.0 && self.target_load.is_finite()) {
            return bad(format!("target_load must be positive, got {}", self.target_load));
        }
        self.task_size_dist.validate().map_err(|e| ClusterError::Config(format!("task_size_dist: {e}")))?;
        let Zipf { max_k, exponent } = self.task_count_dist;
        if max_k < 1 || !exponent.is_finite() {
            return bad(format!("bad Zipf parameters max_k={max_k}, exponent={exponent}"));
        }
        if self.probe_job.k < 1 || !(self.probe_job.size > 0.0 && self.probe_job.size.is_finite()) {
            return bad(format!("bad probe job {:?}", self.probe_job));
        }
        if self.probe_every < 1 {
            return bad("probe_every must be at least 1".into());
        }
        let widest = expand(max_k.max(self.probe_job.k), self.expansion_rate);
        if widest as usize > self.num_servers {
            return bad(format!("{} servers cannot host the widest job of {widest} tasks", self.num_servers));
        }
        match self.horizon {
            Horizon::Jobs(0) => bad("horizon must admit at least one job".into()),
            Horizon::Time(t) if !(t > 0.0 && t.is_finite()) => bad(format!("bad time horizon {t}")),
            _ => Ok(()),
        }
    }

    /// Mean work per arrival at r = 1, probes included.
    pub fn mean_work_per_job(&self) -> Result<f64> {
        let z = self.task_size_dist.mean().map_err(|e| ClusterError::Config(e.to_string()))?;
        let Zipf { max_k, exponent } = self.task_count_dist;
        let (num, den) = (1..=max_k).fold((0.0, 0.0), |(a, b), k| {
            let w = (k as f64).powf(-exponent);
            (a + k as f64 * w, b + w)
        });
        let p = 1.0 / self.probe_every as f64;
        Ok((1.0 - p) * num / den * z + p * self.probe_job.k as f64 * self.probe_job.size)
    }

    pub fn effective_arrival_rate(&self) -> Result<f64> {
        match self.arrival_rate {
            Some(l) => Ok(l),
            None => Ok(self.target_load * self.num_servers as f64 / self.mean_work_per_job()?),
        }
    }

    pub fn from_json(text: &str) -> Result<Self> {
        serde_json::from_str(text).map_err(|e| ClusterError::Parse(e.to_string()))
    }

    pub fn from_toml(text: &str) -> Result<Self> {
        toml::from_str(text).map_err(|e| ClusterError::Parse(e.to_string()))
    }

    /// Reads a `.toml` file as TOML and anything else as JSON.
    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)?;
        match path.extension().and_then(|e| e.to_str()) {
            Some("toml") => Self::from_toml(&text),
            _ => Self::from_json(&text),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterResult {
    /// Latency and cost of recorded probe jobs. Outstanding tasks are always
    /// removed, so the no-cancellation cost equals the cancellation cost.
    pub probe_metrics: EmpiricalMetrics,
    /// Dispatch-to-finish time of every completed probe task.
    pub task_exec_samples: Vec<f64>,
    /// Time-average fraction of servers with at least one resident task.
    pub utilization: f64,
    pub jobs_completed: u64,
    pub jobs_arrived: u64,
    pub end_time: f64,
}

/// Summary without the raw samples, for JSON reports.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ClusterSummary {
    pub probe_metrics: EmpiricalMetrics,
    pub task_exec_sample_count: usize,
    pub utilization: f64,
    pub jobs_completed: u64,
    pub jobs_arrived: u64,
    pub end_time: f64,
}

impl ClusterResult {
    pub fn summary(&self) -> ClusterSummary {
        ClusterSummary {
            probe_metrics: self.probe_metrics.clone(),
            task_exec_sample_count: self.task_exec_samples.len(),
            utilization: self.utilization,
            jobs_completed: self.jobs_completed,
            jobs_arrived: self.jobs_arrived,
            end_time: self.end_time,
        }
    }
}

/// Writes the samples one per line.
pub fn export_exec_samples(result: &ClusterResult, path: &Path) -> Result<()> {
    if result.task_exec_samples.is_empty() {
        return Err(ClusterError::Config("no execution-time samples to export".into()));
    }
    let mut w = std::io::BufWriter::new(std::fs::File::create(path)?);
    for x in &result.task_exec_samples {
        writeln!(w, "{x}")?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum TaskState {
    Waiting,
    Running,
    Done,
    Removed,
}

#[derive(Debug, Clone)]
struct Task {
    job: usize,
    server: usize,
    dispatched: f64,
    started: f64,
    ended: f64,
    state: TaskState,
}

#[derive(Debug, Clone)]
struct Job {
    arrival: f64,
    k: u64,
    size: f64,
    first_task: usize,
    n: usize,
    done: u64,
    finished: bool,
    recorded: bool,
}

#[derive(Debug, Clone, Default)]
struct Server {
    /// (task, attained-service level at which it finishes)
    resident: Vec<(usize, f64)>,
    waiting: VecDeque<usize>,
    /// Service attained by each resident task since the server was created.
    level: f64,
    last: f64,
    live: usize,
    version: u64,
    busy: f64,
}

impl Server {
    fn advance(&mut self, now: f64) {
        let m = self.resident.len();
        if m > 0 {
            self.level += (now - self.last) / m as f64;
            self.busy += now - self.last;
        }
        self.last = now;
    }

    fn next_finish(&self) -> Option<(usize, f64)> {
        let m = self.resident.len() as f64;
        self.resident
            .iter()
            .enumerate()
            .min_by(|a, b| a.1 .1.total_cmp(&b.1 .1))
            .map(|(i, &(_, f))| (i, self.last + (f - self.level).max(0.0) * m))
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
struct Event {
    time: f64,
    seq: u64,
    kind: EventKind,
}

#[derive(Debug, Clone, Copy, PartialEq)]
enum EventKind {
    Arrival,
    Completion { server: usize, version: u64 },
}

impl Eq for Event {}
impl PartialOrd for Event {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}
impl Ord for Event {
    fn cmp(&self, other: &Self) -> Ordering {
        self.time.total_cmp(&other.time).then(self.seq.cmp(&other.seq))
    }
}

struct Sim<'a> {
    cfg: &'a ClusterConfig,
    now: f64,
    seq: u64,
    events: BinaryHeap<Reverse<Event>>,
    servers: Vec<Server>,
    /// (live tasks, server index) for least-loaded dispatch
    by_load: BTreeSet<(usize, usize)>,
    tasks: Vec<Task>,
    jobs: Vec<Job>,
    live_tasks: usize,
    jobs_completed: u64,
    pending_probes: u64,
    probes: Vec<Trial>,
    exec: Vec<f64>,
}

impl Sim<'_> {
    fn push(&mut self, time: f64, kind: EventKind) {
        self.seq += 1;
        self.events.push(Reverse(Event { time, seq: self.seq, kind }));
    }

    fn set_live(&mut self, s: usize, live: usize) {
        let old = self.servers[s].live;
        self.by_load.remove(&(old, s));
        self.servers[s].live = live;
        self.by_load.insert((live, s));
    }

    // fill free slots from the queue and schedule the next completion
    fn refresh(&mut self, s: usize) {
        let now = self.now;
        let srv = &mut self.servers[s];
        srv.advance(now);
        while srv.resident.len() < self.cfg.ps_limit {
            let Some(t) = srv.waiting.pop_front() else { break };
            let task = &mut self.tasks[t];
            if task.state != TaskState::Waiting {
                continue;
            }
            task.state = TaskState::Running;
            task.started = now;
            srv.resident.push((t, srv.level + self.jobs[task.job].size));
        }
        srv.version += 1;
        let version = srv.version;
        if let Some((_, at)) = srv.next_finish() {
            self.push(at, EventKind::Completion { server: s, version });
        }
    }

    fn arrive(&mut self, rng: &mut ChaCha8Rng, zipf_cdf: &[f64], index: u64) {
        let cfg = self.cfg;
        let probe = index % cfg.probe_every == cfg.probe_every - 1;
        let (k, size) = if probe {
            (cfg.probe_job.k, cfg.probe_job.size)
        } else {
            let u: f64 = rng.random();
            let k = zipf_cdf.partition_point(|&c| c < u).min(zipf_cdf.len() - 1) as u64 + 1;
            (k, cfg.task_size_dist.sample(rng))
        };
        let n = expand(k, cfg.expansion_rate) as usize;
        let job = self.jobs.len();
        let recorded = probe && index >= cfg.warmup_jobs;
        if recorded {
            self.pending_probes += 1;
        }
        self.jobs.push(Job {
            arrival: self.now,
            k,
            size,
            first_task: self.tasks.len(),
            n,
            done: 0,
            finished: false,
            recorded,
        });
        let targets: Vec<usize> = self.by_load.iter().take(n).map(|&(_, s)| s).collect();
        for s in targets {
            let t = self.tasks.len();
            self.tasks.push(Task { job, server: s, dispatched: self.now, started: f64::NAN, ended: f64::NAN, state: TaskState::Waiting });
            self.servers[s].advance(self.now);
            self.servers[s].waiting.push_back(t);
            let live = self.servers[s].live + 1;
            self.set_live(s, live);
            if self.servers[s].resident.len() < cfg.ps_limit {
                self.refresh(s);
            }
        }
        self.live_tasks += n;
    }

    fn complete(&mut self, s: usize) {
        let now = self.now;
        self.servers[s].advance(now);
        let Some((i, _)) = self.servers[s].next_finish() else { return };
        let (t, _) = self.servers[s].resident.swap_remove(i);
        self.tasks[t].state = TaskState::Done;
        self.tasks[t].ended = now;
        let live = self.servers[s].live - 1;
        self.set_live(s, live);
        self.live_tasks -= 1;
        let j = self.tasks[t].job;
        if self.jobs[j].recorded {
            self.exec.push(now - self.tasks[t].dispatched);
        }
        self.jobs[j].done += 1;
        if self.jobs[j].done == self.jobs[j].k && !self.jobs[j].finished {
            self.finish_job(j);
        }
        self.refresh(s);
    }

    fn finish_job(&mut self, j: usize) {
        let now = self.now;
        self.jobs[j].finished = true;
        self.jobs_completed += 1;
        let (first, n) = (self.jobs[j].first_task, self.jobs[j].n);
        for t in first..first + n {
            let s = self.tasks[t].server;
            match self.tasks[t].state {
                TaskState::Running => {
                    self.servers[s].advance(now);
                    self.servers[s].resident.retain(|&(x, _)| x != t);
                }
                TaskState::Waiting => {}
                TaskState::Done | TaskState::Removed => continue,
            }
            self.tasks[t].state = TaskState::Removed;
            self.tasks[t].ended = now;
            let live = self.servers[s].live - 1;
            self.set_live(s, live);
            self.live_tasks -= 1;
            self.refresh(s);
        }
        if self.jobs[j].recorded {
            let mut cost = 0.0;
            for task in &self.tasks[first..first + n] {
                let from = if self.cfg.cost_includes_queueing { task.dispatched } else { task.started };
                if !from.is_nan() {
                    cost += task.ended - from;
                }
            }
            let latency = now - self.jobs[j].arrival;
            self.probes.push(Trial { latency, cost_cancel: cost, cost_nocancel: cost });
            self.pending_probes -= 1;
        }
    }
}

/// Runs the cluster until the horizon has been reached and every recorded
/// probe job has left.
pub fn run_cluster(cfg: &ClusterConfig, seed: u64) -> Result<ClusterResult> {
    cfg.validate()?;
    let rate = cfg.effective_arrival_rate()?;
    let Zipf { max_k, exponent } = cfg.task_count_dist;
    let mut zipf_cdf: Vec<f64> = (1..=max_k)
        .scan(0.0, |acc, k| {
            *acc += (k as f64).powf(-exponent);
            Some(*acc)
        })
        .collect();
    let total = *zipf_cdf.last().unwrap();
    zipf_cdf.iter_mut().for_each(|c| *c /= total);

    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sim = Sim {
        cfg,
        now: 0.0,
        seq: 0,
        events: BinaryHeap::new(),
        servers: vec![Server::default(); cfg.num_servers],
        by_load: (0..cfg.num_servers).map(|s| (0, s)).collect(),
        tasks: Vec::new(),
        jobs: Vec::new(),
        live_tasks: 0,
        jobs_completed: 0,
        pending_probes: 0,
        probes: Vec::new(),
        exec: Vec::new(),
    };
    let interarrival = |rng: &mut ChaCha8Rng| -(1.0 - rng.random::<f64>()).ln() / rate;
    let first = interarrival(&mut rng);
    sim.push(first, EventKind::Arrival);
    let mut arrived = 0u64;
    let mut admitting = true;
    while let Some(Reverse(ev)) = sim.events.pop() {
        if !admitting && sim.pending_probes == 0 {
            break;
        }
        sim.now = ev.time;
        match ev.kind {
            EventKind::Arrival => {
                if !admitting {
                    continue;
                }
                sim.arrive(&mut rng, &zipf_cdf, arrived);
                arrived += 1;
                if sim.live_tasks > cfg.saturation_threshold {
                    return Err(ClusterError::Unstable(format!(
                        "{} tasks in the system at t={:.3} after {arrived} arrivals (threshold {})",
                        sim.live_tasks, sim.now, cfg.saturation_threshold
                    )));
                }
                let next = sim.now + interarrival(&mut rng);
                admitting = match cfg.horizon {
                    Horizon::Jobs(j) => arrived < j,
                    Horizon::Time(t) => next <= t,
                };
                if admitting {
                    sim.push(next, EventKind::Arrival);
                }
            }
            EventKind::Completion { server, version } => {
                if sim.servers[server].version == version {
                    sim.complete(server);
                }
            }
        }
    }
    let end = sim.now;
    for srv in &mut sim.servers {
        srv.advance(end);
    }
    if sim.probes.is_empty() {
        return Err(ClusterError::Config("no probe job was recorded; extend the horizon or lower warmup_jobs".into()));
    }
    let busy: f64 = sim.servers.iter().map(|s| s.busy).sum();
    let utilization = if end > 0.0 { (busy / (end * cfg.num_servers as f64)).clamp(0.0, 1.0) } else { 0.0 };
    Ok(ClusterResult {
        probe_metrics: summarize(&sim.probes).map_err(|e| ClusterError::Config(e.to_string()))?,
        task_exec_samples: sim.exec,
        utilization,
        jobs_completed: sim.jobs_completed,
        jobs_arrived: arrived,
        end_time: end,
    })
}
