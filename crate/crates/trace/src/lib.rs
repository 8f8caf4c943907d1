//! Task-event logs and the execution times they imply.
//!
//! The neutral format is CSV with the header `job_id,task_id,event,timestamp`,
//! timestamps in decimal seconds. `convert_google_task_events` turns the
//! headerless `task_events` tables of the 2011 Google cluster trace into this
//! format; the dataset itself is not shipped.

use distributions::TaskDist;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use std::collections::BTreeMap;
use std::fmt;
use std::io::{Read, Write};

#[derive(Debug, thiserror::Error)]
pub enum TraceError {
    #[error("io error: {0}")]
    Io(#[from] std::io::Error),
    #[error("csv error: {0}")]
    Csv(#[from] csv::Error),
    #[error("domain error: {0}")]
    Domain(String),
}

pub type Result<T> = std::result::Result<T, TraceError>;

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub enum EventKind {
    Schedule,
    Finish,
    Other(String),
}

impl EventKind {
    pub fn parse(label: &str) -> Self {
        match label {
            "SCHEDULE" => EventKind::Schedule,
            "FINISH" => EventKind::Finish,
            other => EventKind::Other(other.to_string()),
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EventKind::Schedule => f.write_str("SCHEDULE"),
            EventKind::Finish => f.write_str("FINISH"),
            EventKind::Other(s) => f.write_str(s),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TaskEvent {
    pub job_id: String,
    pub task_id: String,
    pub event: EventKind,
    pub timestamp: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RowError {
    /// 1-based line number in the input, header included.
    pub line: u64,
    pub message: String,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ParseReport {
    pub events: Vec<TaskEvent>,
    pub errors: Vec<RowError>,
}

const HEADER: [&str; 4] = ["job_id", "task_id", "event", "timestamp"];

/// Parses the neutral CSV. Bad rows are skipped and listed in `errors`; a
/// missing or wrong header is fatal.
pub fn parse_events<R: Read>(input: R) -> Result<ParseReport> {
    let mut rdr = csv::ReaderBuilder::new().flexible(true).trim(csv::Trim::All).from_reader(input);
    let header = rdr.headers()?.clone();
    if header.iter().collect::<Vec<_>>() != HEADER {
        return Err(TraceError::Domain(format!("expected header {}, got {:?}", HEADER.join(","), header)));
    }
    let mut report = ParseReport::default();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 2;
        let rec = match rec {
            Ok(r) => r,
            Err(e) => {
                report.errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        if rec.len() != 4 {
            report.errors.push(RowError { line, message: format!("expected 4 fields, got {}", rec.len()) });
            continue;
        }
        let timestamp = match rec[3].parse::<f64>() {
            Ok(t) if t.is_finite() && t >= 0.0 => t,
            _ => {
                report.errors.push(RowError { line, message: format!("bad timestamp {:?}", &rec[3]) });
                continue;
            }
        };
        report.events.push(TaskEvent {
            job_id: rec[0].to_string(),
            task_id: rec[1].to_string(),
            event: EventKind::parse(&rec[2]),
            timestamp,
        });
    }
    Ok(report)
}

pub fn write_events<W: Write>(out: W, events: &[TaskEvent]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(HEADER)?;
    for e in events {
        w.write_record([e.job_id.as_str(), e.task_id.as_str(), &e.event.to_string(), &e.timestamp.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum DropReason {
    MissingSchedule,
    MissingFinish,
    FinishBeforeSchedule,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DroppedTask {
    pub job_id: String,
    pub task_id: String,
    pub reason: DropReason,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct ExecTimes {
    /// Ordered by (job_id, task_id).
    pub times: Vec<f64>,
    pub dropped: Vec<DroppedTask>,
}

/// FINISH − SCHEDULE for every task, using the earliest SCHEDULE and the
/// latest FINISH. With `filter_k`, only jobs with exactly that many distinct
/// tasks are kept. Tasks of filtered-out jobs are neither emitted nor dropped.
pub fn exec_times(events: &[TaskEvent], filter_k: Option<usize>) -> ExecTimes {
    // job -> task -> (earliest SCHEDULE, latest FINISH)
    type Span = (Option<f64>, Option<f64>);
    let mut jobs: BTreeMap<&str, BTreeMap<&str, Span>> = BTreeMap::new();
    for e in events {
        let slot = jobs.entry(&e.job_id).or_default().entry(&e.task_id).or_default();
        match e.event {
            EventKind::Schedule => slot.0 = Some(slot.0.map_or(e.timestamp, |t| t.min(e.timestamp))),
            EventKind::Finish => slot.1 = Some(slot.1.map_or(e.timestamp, |t| t.max(e.timestamp))),
            EventKind::Other(_) => {}
        }
    }
    let mut out = ExecTimes::default();
    for (job, tasks) in jobs {
        if filter_k.is_some_and(|k| k != tasks.len()) {
            continue;
        }
        for (task, (sched, fin)) in tasks {
            let reason = match (sched, fin) {
                (Some(s), Some(f)) if f >= s => {
                    out.times.push(f - s);
                    continue;
                }
                (Some(_), Some(_)) => DropReason::FinishBeforeSchedule,
                (None, _) => DropReason::MissingSchedule,
                (Some(_), None) => DropReason::MissingFinish,
            };
            out.dropped.push(DroppedTask { job_id: job.to_string(), task_id: task.to_string(), reason });
        }
    }
    out
}

/// Empirical Pr{X > t} at each grid point.
pub fn tail_curve(samples: &[f64], grid: &[f64]) -> Result<Vec<(f64, f64)>> {
    if samples.is_empty() {
        return Err(TraceError::Domain("no samples".into()));
    }
    if grid.iter().any(|t| t.is_nan()) || !grid.windows(2).all(|w| w[0] <= w[1]) {
        return Err(TraceError::Domain("grid must be non-decreasing".into()));
    }
    let mut xs = samples.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    Ok(grid.iter().map(|&t| (t, (xs.len() - xs.partition_point(|&x| x <= t)) as f64 / n)).collect())
}

pub fn write_tail_csv<W: Write>(out: W, curve: &[(f64, f64)]) -> Result<()> {
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["t", "survival"])?;
    for (t, p) in curve {
        w.write_record([t.to_string(), p.to_string()])?;
    }
    w.flush()?;
    Ok(())
}

/// A synthetic trace: `jobs` jobs of `tasks_per_job` tasks each, submitted
/// one time unit apart, every task scheduled on submission and running for
/// an independent draw from `dist`. Each job also carries one SUBMIT event.
pub fn synthesize(dist: &TaskDist, jobs: usize, tasks_per_job: usize, seed: u64) -> Result<Vec<TaskEvent>> {
    dist.validate().map_err(|e| TraceError::Domain(e.to_string()))?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut events = Vec::with_capacity(jobs * (2 * tasks_per_job + 1));
    for j in 0..jobs {
        let job_id = format!("j{j}");
        let start = j as f64;
        events.push(TaskEvent {
            job_id: job_id.clone(),
            task_id: "0".into(),
            event: EventKind::Other("SUBMIT".into()),
            timestamp: start,
        });
        for t in 0..tasks_per_job {
            let task_id = t.to_string();
            let x = dist.sample(&mut rng);
            events.push(TaskEvent { job_id: job_id.clone(), task_id: task_id.clone(), event: EventKind::Schedule, timestamp: start });
            events.push(TaskEvent { job_id: job_id.clone(), task_id, event: EventKind::Finish, timestamp: start + x });
        }
    }
    Ok(events)
}

/// Google 2011 `task_events` event-type codes.
fn google_event(code: &str) -> EventKind {
    match code {
        "1" => EventKind::Schedule,
        "4" => EventKind::Finish,
        "0" => EventKind::Other("SUBMIT".into()),
        "2" => EventKind::Other("EVICT".into()),
        "3" => EventKind::Other("FAIL".into()),
        "5" => EventKind::Other("KILL".into()),
        "6" => EventKind::Other("LOST".into()),
        "7" => EventKind::Other("UPDATE_PENDING".into()),
        "8" => EventKind::Other("UPDATE_RUNNING".into()),
        other => EventKind::Other(format!("CODE_{other}")),
    }
}

/// Converts a headerless Google `task_events` table (columns: time in
/// microseconds, missing-info flag, job ID, task index, machine ID, event
/// type, ...) into the neutral format. Timestamps become seconds. Rows that
/// cannot be read land in the report's `errors`.
pub fn convert_google_task_events<R: Read>(input: R) -> Result<ParseReport> {
    let mut rdr = csv::ReaderBuilder::new().has_headers(false).flexible(true).from_reader(input);
    let mut report = ParseReport::default();
    for (i, rec) in rdr.records().enumerate() {
        let line = i as u64 + 1;
        let rec = match rec {
            Ok(r) if r.len() >= 6 => r,
            Ok(r) => {
                report.errors.push(RowError { line, message: format!("expected at least 6 fields, got {}", r.len()) });
                continue;
            }
            Err(e) => {
                report.errors.push(RowError { line, message: e.to_string() });
                continue;
            }
        };
        let Ok(us) = rec[0].parse::<u64>() else {
            report.errors.push(RowError { line, message: format!("bad time {:?}", &rec[0]) });
            continue;
        };
        report.events.push(TaskEvent {
            job_id: rec[2].to_string(),
            task_id: rec[3].to_string(),
            event: google_event(&rec[5]),
            timestamp: us as f64 / 1e6,
        });
    }
    Ok(report)
}
