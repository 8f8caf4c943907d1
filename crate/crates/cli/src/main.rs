//! `straggler`: latency/cost models, simulators and trace tools for
//! straggler mitigation, from the command line.

mod commands;
mod error;
mod parse;

use clap::{Args, Parser, Subcommand};
use error::CliError;
use std::path::PathBuf;

/// Environment variable naming the default output directory.
pub const OUT_DIR_ENV: &str = "STRAGGLER_OUT_DIR";

#[derive(Parser, Debug)]
#[command(name = "straggler", version, about = "Latency and cost of replicated, coded and relaunched jobs", after_help = parse::DIST_GRAMMAR)]
pub struct Cli {
    /// Seed for every random stream.
    #[arg(long, global = true, default_value_t = 42)]
    pub seed: u64,
    /// Worker threads. Results do not depend on it.
    #[arg(long, global = true)]
    pub threads: Option<usize>,
    /// Output file. Relative paths are placed under $STRAGGLER_OUT_DIR when
    /// it is set. Without --out, output goes to $STRAGGLER_OUT_DIR/<command>.*
    /// or, if that is unset, to stdout.
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Args, Debug, Clone)]
pub struct PolicyArgs {
    /// Tasks needed to finish the job.
    #[arg(long)]
    pub k: u64,
    /// none | rep[:C] | coding[:N]
    #[arg(long, default_value = "none")]
    pub redundancy: String,
    /// Time at which delayed redundancy and relaunch act; `inf` for never.
    #[arg(long, default_value = "0")]
    pub delta: String,
    /// When redundant tasks start: `zero` or `delta`. Defaults to `zero` for
    /// delta = 0 and to `delta` otherwise.
    #[arg(long)]
    pub launch: Option<String>,
    /// Cancel and relaunch every unfinished task at delta (Pareto tasks).
    #[arg(long)]
    pub relaunch: bool,
    /// Task time distribution, e.g. pareto:1,2.
    #[arg(long)]
    pub dist: String,
}

#[derive(Subcommand, Debug)]
pub enum Command {
    /// Closed-form latency and cost of one policy (JSON).
    Analytic {
        #[command(flatten)]
        policy: PolicyArgs,
    },
    /// Monte-Carlo latency and cost of one policy, compared with the closed
    /// form where one exists (JSON).
    Simulate {
        #[command(flatten)]
        policy: PolicyArgs,
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
        /// Also write every trial's latency and costs to this CSV file.
        #[arg(long)]
        dump_trials: Option<PathBuf>,
    },
    /// Sweep one knob and write the latency/cost curve (CSV, plus JSON next
    /// to it when writing to a file).
    Frontier {
        #[command(flatten)]
        policy: PolicyArgs,
        /// delta | c | n | r
        #[arg(long)]
        knob: String,
        /// Knob values.
        #[arg(long)]
        grid: String,
        /// analytic | simulate
        #[arg(long, default_value = "analytic")]
        engine: String,
        /// Trials per point for the simulate engine.
        #[arg(long, default_value_t = 100_000)]
        trials: u64,
    },
    /// Event-driven cluster simulation with probe jobs (JSON, or CSV with
    /// --r-grid).
    Cluster {
        /// TOML or JSON configuration; missing keys take their defaults.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Expansion rate for every job.
        #[arg(long)]
        r: Option<f64>,
        /// Sweep the expansion rate instead, e.g. 1:2:0.1.
        #[arg(long)]
        r_grid: Option<String>,
        /// Repeat the sweep for this many consecutive seeds.
        #[arg(long, default_value_t = 1)]
        seeds: u64,
        #[arg(long)]
        servers: Option<usize>,
        /// Stop admitting jobs after this many arrivals.
        #[arg(long)]
        jobs: Option<u64>,
        /// Offered load at r = 1 as a fraction of capacity.
        #[arg(long)]
        load: Option<f64>,
        /// Write the probe tasks' execution times here, one per line.
        #[arg(long)]
        samples_out: Option<PathBuf>,
    },
    /// Fit a Pareto or truncated Pareto tail to a sample file (JSON).
    Fit {
        /// One positive value per line.
        #[arg(long)]
        samples: PathBuf,
        /// pareto | tpareto
        #[arg(long, default_value = "pareto")]
        model: String,
    },
    /// Empirical execution-time tail of a task-event trace (CSV).
    TraceTail {
        /// Neutral event CSV: job_id,task_id,event,timestamp.
        #[arg(long, conflicts_with_all = ["google", "synthetic"])]
        events: Option<PathBuf>,
        /// Headerless Google 2011 task_events table.
        #[arg(long, conflicts_with = "synthetic")]
        google: Option<PathBuf>,
        /// Generate a trace with this task time distribution instead.
        #[arg(long)]
        synthetic: Option<String>,
        #[arg(long, default_value_t = 1000)]
        jobs: usize,
        #[arg(long, default_value_t = 10)]
        tasks: usize,
        /// Keep only jobs with exactly this many tasks.
        #[arg(long)]
        filter_k: Option<usize>,
        /// Evaluation points; default 40 log-spaced points over the data.
        #[arg(long)]
        grid: Option<String>,
        /// Write the execution times here, one per line.
        #[arg(long)]
        samples_out: Option<PathBuf>,
        /// Write the (converted or generated) events as neutral CSV here.
        #[arg(long)]
        events_out: Option<PathBuf>,
    },
}

fn main() {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            if matches!(e.kind(), ErrorKind::DisplayHelp | ErrorKind::DisplayVersion | ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand) {
                let _ = e.print();
                std::process::exit(if e.kind() == ErrorKind::DisplayHelpOnMissingArgumentOrSubcommand { 2 } else { 0 });
            }
            let err = CliError::Usage(e.render().to_string().trim().to_string());
            eprintln!("{}", err.to_json());
            std::process::exit(err.exit_code());
        }
    };
    if let Err(e) = commands::run(cli) {
        eprintln!("{}", e.to_json());
        std::process::exit(e.exit_code());
    }
}
