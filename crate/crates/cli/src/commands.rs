use crate::error::{CliError, Result};
use crate::{parse, Cli, Command, PolicyArgs, OUT_DIR_ENV};
use analytic_models::{evaluate, sweep, Knob, PolicyConfig, RedLaunch};
use cluster_sim::{run_cluster, ClusterConfig, Horizon};
use distributions::{read_samples, write_samples, TaskDist};
use monte_carlo::{compare, simulate_job, simulate_trials, summarize, write_trials_csv, EmpiricalMetrics};
use rayon::prelude::*;
use serde::Serialize;
use serde_json::json;
use std::fmt::Write as _;
use std::path::{Path, PathBuf};

pub fn run(cli: Cli) -> Result<()> {
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Usage("--threads must be at least 1".into()));
        }
        rayon::ThreadPoolBuilder::new()
            .num_threads(n)
            .build_global()
            .map_err(|e| CliError::Usage(format!("cannot start {n} threads: {e}")))?;
    }
    let seed = cli.seed;
    let out = Output::new(cli.out);
    match cli.command {
        Command::Analytic { policy } => analytic(&policy, &out),
        Command::Simulate { policy, trials, dump_trials } => simulate(&policy, trials, dump_trials, seed, &out),
        Command::Frontier { policy, knob, grid, engine, trials } => frontier(&policy, &knob, &grid, &engine, trials, seed, &out),
        Command::Cluster { config, r, r_grid, seeds, servers, jobs, load, samples_out } => {
            let cfg = cluster_config(config, servers, jobs, load)?;
            match r_grid {
                Some(g) => cluster_sweep(cfg, &parse::grid(&g)?, seed, seeds, &out),
                None => cluster_single(cfg, r, seed, samples_out, &out),
            }
        }
        Command::Fit { samples, model } => fit(&samples, &model, &out),
        Command::TraceTail { events, google, synthetic, jobs, tasks, filter_k, grid, samples_out, events_out } => {
            let src = match (events, google, synthetic) {
                (Some(p), None, None) => Source::Events(p),
                (None, Some(p), None) => Source::Google(p),
                (None, None, Some(d)) => Source::Synthetic(parse::dist(&d)?, jobs, tasks),
                _ => return Err(CliError::Usage("give exactly one of --events, --google, --synthetic".into())),
            };
            trace_tail(src, filter_k, grid.as_deref(), samples_out, events_out, seed, &out)
        }
    }
}

/// Where results go: --out, else $STRAGGLER_OUT_DIR/<name>, else stdout.
struct Output {
    out: Option<PathBuf>,
    dir: Option<PathBuf>,
}

impl Output {
    fn new(out: Option<PathBuf>) -> Self {
        let dir = std::env::var_os(OUT_DIR_ENV).filter(|d| !d.is_empty()).map(PathBuf::from);
        Output { out, dir }
    }

    fn place(&self, p: &Path) -> PathBuf {
        match &self.dir {
            Some(d) if p.is_relative() => d.join(p),
            _ => p.to_path_buf(),
        }
    }

    fn target(&self, default_name: &str) -> Option<PathBuf> {
        match (&self.out, &self.dir) {
            (Some(p), _) => Some(self.place(p)),
            (None, Some(d)) => Some(d.join(default_name)),
            (None, None) => None,
        }
    }

    /// Writes the primary output, returning the path used (if any).
    fn emit(&self, default_name: &str, content: &str) -> Result<Option<PathBuf>> {
        match self.target(default_name) {
            Some(p) => {
                write_file(&p, content)?;
                Ok(Some(p))
            }
            None => {
                print!("{content}");
                Ok(None)
            }
        }
    }
}

fn write_file(p: &Path, content: &str) -> Result<()> {
    if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
        std::fs::create_dir_all(parent).map_err(|e| CliError::Io(format!("{}: {e}", parent.display())))?;
    }
    std::fs::write(p, content).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

fn pretty<T: Serialize>(v: &T) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report serializes");
    s.push('\n');
    s
}

fn red_launch(s: Option<&str>, delta: f64, sweeping_delta: bool) -> Result<RedLaunch> {
    match s.map(str::to_ascii_lowercase).as_deref() {
        Some("zero") => Ok(RedLaunch::AtZero),
        Some("delta") => Ok(RedLaunch::AtDelta),
        Some(o) => Err(CliError::Usage(format!("--launch {o:?} is not zero or delta"))),
        None if delta == 0.0 && !sweeping_delta => Ok(RedLaunch::AtZero),
        None => Ok(RedLaunch::AtDelta),
    }
}

fn policy(p: &PolicyArgs, sweeping_delta: bool) -> Result<(PolicyConfig, TaskDist)> {
    let delta = parse::real(&p.delta)?;
    let cfg = PolicyConfig {
        k: p.k,
        redundancy: parse::redundancy(&p.redundancy, p.k)?,
        delta,
        red_launch: red_launch(p.launch.as_deref(), delta, sweeping_delta)?,
        relaunch_at_delta: p.relaunch,
    };
    cfg.validate()?;
    Ok((cfg, parse::dist(&p.dist)?))
}

fn analytic(p: &PolicyArgs, out: &Output) -> Result<()> {
    let (cfg, dist) = policy(p, false)?;
    let metrics = evaluate(&cfg, &dist)?;
    out.emit("analytic.json", &pretty(&json!({ "config": cfg, "dist": dist, "metrics": metrics })))?;
    Ok(())
}

fn simulate(p: &PolicyArgs, trials: u64, dump: Option<PathBuf>, seed: u64, out: &Output) -> Result<()> {
    let (cfg, dist) = policy(p, false)?;
    let empirical = match &dump {
        Some(path) => {
            let all = simulate_trials(&cfg, &dist, trials, seed)?;
            let path = out.place(path);
            if let Some(parent) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(parent)?;
            }
            write_trials_csv(&path, &all).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
            summarize(&all)?
        }
        None => simulate_job(&cfg, &dist, trials, seed)?,
    };
    let (analytic, analytic_error) = match evaluate(&cfg, &dist) {
        Ok(m) => (Some(m), None),
        Err(e) => (None, Some(e.to_string())),
    };
    let report = analytic.as_ref().map(|a| compare(a, &empirical));
    let body = json!({
        "config": cfg,
        "dist": dist,
        "seed": seed,
        "empirical": empirical,
        "analytic": analytic,
        "analytic_error": analytic_error,
        "compare": report,
    });
    out.emit("simulate.json", &pretty(&body))?;
    Ok(())
}

#[derive(Serialize)]
struct SimPoint {
    knob: f64,
    empirical: Option<EmpiricalMetrics>,
    error: Option<String>,
}

fn frontier(p: &PolicyArgs, knob: &str, grid: &str, engine: &str, trials: u64, seed: u64, out: &Output) -> Result<()> {
    let knob = parse::knob(knob)?;
    let (base, dist) = policy(p, knob == Knob::Delta)?;
    let grid = parse::grid(grid)?;
    let (csv, json) = match engine {
        "analytic" => {
            let curve = sweep(&base, knob, &grid, &dist)?;
            (curve.to_csv(), curve.to_json() + "\n")
        }
        "simulate" => {
            if trials == 0 {
                return Err(CliError::Usage("--trials must be at least 1".into()));
            }
            let points: Vec<SimPoint> = grid
                .iter()
                .map(|&v| match knob.apply(&base, v).and_then(|c| simulate_job(&c, &dist, trials, seed)) {
                    Ok(e) => SimPoint { knob: v, empirical: Some(e), error: None },
                    Err(e) => SimPoint { knob: v, empirical: None, error: Some(format!("{}: {e}", e.kind())) },
                })
                .collect();
            let mut csv = String::from(
                "knob,latency_mean,latency_se,cost_cancel_mean,cost_cancel_se,cost_nocancel_mean,cost_nocancel_se,error\n",
            );
            for pt in &points {
                match &pt.empirical {
                    Some(e) => {
                        let _ = writeln!(
                            csv,
                            "{},{},{},{},{},{},{},",
                            pt.knob,
                            e.latency_mean,
                            e.latency_se,
                            e.cost_cancel_mean,
                            e.cost_cancel_se,
                            e.cost_nocancel_mean,
                            e.cost_nocancel_se
                        );
                    }
                    None => {
                        let err = pt.error.as_deref().unwrap_or("").replace([',', '\n'], ";");
                        let _ = writeln!(csv, "{},,,,,,,{err}", pt.knob);
                    }
                }
            }
            let body = json!({ "knob_name": knob.name(), "engine": "simulate", "trials": trials, "seed": seed, "points": points });
            (csv, pretty(&body))
        }
        other => return Err(CliError::Usage(format!("--engine {other:?} is not analytic or simulate"))),
    };
    if let Some(path) = out.emit("frontier.csv", &csv)? {
        write_file(&path.with_extension("json"), &json)?;
    }
    Ok(())
}

fn cluster_config(path: Option<PathBuf>, servers: Option<usize>, jobs: Option<u64>, load: Option<f64>) -> Result<ClusterConfig> {
    let mut cfg = match path {
        Some(p) => ClusterConfig::load(&p)?,
        None => ClusterConfig::default(),
    };
    if let Some(s) = servers {
        cfg.num_servers = s;
    }
    if let Some(j) = jobs {
        cfg.horizon = Horizon::Jobs(j);
    }
    if let Some(l) = load {
        cfg.target_load = l;
    }
    Ok(cfg)
}

fn alpha_hat(samples: &[f64]) -> Option<f64> {
    match fitting::fit_pareto(samples).ok()?.dist {
        TaskDist::Pareto { alpha, .. } => Some(alpha),
        _ => None,
    }
}

fn cluster_single(mut cfg: ClusterConfig, r: Option<f64>, seed: u64, samples_out: Option<PathBuf>, out: &Output) -> Result<()> {
    if let Some(r) = r {
        cfg.expansion_rate = r;
    }
    let res = run_cluster(&cfg, seed)?;
    if let Some(p) = samples_out {
        let p = out.place(&p);
        if let Some(parent) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
            std::fs::create_dir_all(parent)?;
        }
        cluster_sim::export_exec_samples(&res, &p)?;
    }
    let body = json!({ "config": cfg, "seed": seed, "summary": res.summary(), "alpha_hat": alpha_hat(&res.task_exec_samples) });
    out.emit("cluster.json", &pretty(&body))?;
    Ok(())
}

fn cluster_sweep(cfg: ClusterConfig, rs: &[f64], seed: u64, seeds: u64, out: &Output) -> Result<()> {
    if seeds == 0 {
        return Err(CliError::Usage("--seeds must be at least 1".into()));
    }
    let jobs: Vec<(u64, f64)> = (seed..seed + seeds).flat_map(|s| rs.iter().map(move |&r| (s, r))).collect();
    let rows = jobs
        .par_iter()
        .map(|&(s, r)| {
            let c = ClusterConfig { expansion_rate: r, ..cfg.clone() };
            run_cluster(&c, s).map(|res| (s, r, res))
        })
        .collect::<std::result::Result<Vec<_>, _>>()?;
    let mut csv = String::from("seed,r,latency_mean,latency_se,cost_mean,cost_se,alpha_hat,utilization,probes\n");
    for (s, r, res) in rows {
        let m = &res.probe_metrics;
        let a = alpha_hat(&res.task_exec_samples).map(|a| a.to_string()).unwrap_or_default();
        let _ = writeln!(
            csv,
            "{s},{r},{},{},{},{},{a},{},{}",
            m.latency_mean, m.latency_se, m.cost_cancel_mean, m.cost_cancel_se, res.utilization, m.trials
        );
    }
    out.emit("cluster.csv", &csv)?;
    Ok(())
}

fn fit(samples: &Path, model: &str, out: &Output) -> Result<()> {
    let xs = read_samples(samples).map_err(|e| CliError::Io(format!("{}: {e}", samples.display())))?;
    let f = match model {
        "pareto" => fitting::fit_pareto(&xs)?,
        "tpareto" | "truncated-pareto" => fitting::fit_truncated_pareto(&xs)?,
        other => return Err(CliError::Usage(format!("--model {other:?} is not pareto or tpareto"))),
    };
    let g = fitting::goodness_report(&f, &xs)?;
    out.emit("fit.json", &pretty(&json!({ "fit": f, "goodness": g })))?;
    Ok(())
}

enum Source {
    Events(PathBuf),
    Google(PathBuf),
    Synthetic(TaskDist, usize, usize),
}

fn open(p: &Path) -> Result<std::fs::File> {
    std::fs::File::open(p).map_err(|e| CliError::Io(format!("{}: {e}", p.display())))
}

fn trace_tail(
    src: Source,
    filter_k: Option<usize>,
    grid: Option<&str>,
    samples_out: Option<PathBuf>,
    events_out: Option<PathBuf>,
    seed: u64,
    out: &Output,
) -> Result<()> {
    let report = match src {
        Source::Events(p) => trace::parse_events(open(&p)?)?,
        Source::Google(p) => trace::convert_google_task_events(open(&p)?)?,
        Source::Synthetic(d, jobs, tasks) => trace::ParseReport { events: trace::synthesize(&d, jobs, tasks, seed)?, errors: vec![] },
    };
    if let Some(p) = events_out {
        let p = out.place(&p);
        write_file(&p, "")?;
        trace::write_events(std::fs::File::create(&p)?, &report.events)?;
    }
    let exec = trace::exec_times(&report.events, filter_k);
    if exec.times.is_empty() {
        return Err(CliError::Domain("no complete SCHEDULE/FINISH pairs in the trace".into()));
    }
    if let Some(p) = samples_out {
        let p = out.place(&p);
        write_file(&p, "")?;
        write_samples(&p, &exec.times)?;
    }
    let grid = match grid {
        Some(g) => parse::grid(g)?,
        None => {
            let lo = exec.times.iter().copied().filter(|&x| x > 0.0).fold(f64::INFINITY, f64::min);
            let hi = exec.times.iter().copied().fold(0.0, f64::max);
            if !lo.is_finite() || hi <= lo {
                vec![hi]
            } else {
                (0..40).map(|i| lo * (hi / lo).powf(i as f64 / 39.0)).collect()
            }
        }
    };
    let curve = trace::tail_curve(&exec.times, &grid)?;
    let mut buf = Vec::new();
    trace::write_tail_csv(&mut buf, &curve)?;
    let csv = String::from_utf8(buf).expect("csv is utf-8");
    if let Some(path) = out.emit("trace_tail.csv", &csv)? {
        let dropped = |r: trace::DropReason| exec.dropped.iter().filter(|d| d.reason == r).count();
        let summary = json!({
            "events": report.events.len(),
            "row_errors": report.errors,
            "samples": exec.times.len(),
            "dropped": {
                "missing_schedule": dropped(trace::DropReason::MissingSchedule),
                "missing_finish": dropped(trace::DropReason::MissingFinish),
                "finish_before_schedule": dropped(trace::DropReason::FinishBeforeSchedule),
            },
        });
        write_file(&path.with_extension("json"), &pretty(&summary))?;
    }
    Ok(())
}
