//! `steerqaa` command-line front end.
//!
//! Exit codes: 0 success, 2 configuration error, 3 integration failure,
//! 1 failure to write output.

use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::time::{SystemTime, UNIX_EPOCH};

use clap::{Args, Parser, Subcommand};
use steerqaa::ensemble::write_audit;
use steerqaa::evolution::Method;
use steerqaa::experiments::{self, Command, ExperimentError, OutputFormat, Overrides};
use steerqaa::schedule::Schedule;
use steerqaa::steering::SteeringMode;

#[derive(Parser)]
#[command(name = "steerqaa", version, about = "Steered quantum annealing of the random-field Ising chain")]
struct Cli {
    #[command(subcommand)]
    command: Sub,
}

#[derive(Subcommand)]
enum Sub {
    /// Ground-state probability against t_a for L = 1 and L = 3
    Fig1(Opts),
    /// Steered vs unsteered vs naive over t_a and J
    Fig2(Opts),
    /// Level-resolved probabilities P_n and cumulative S_N
    Fig3(Opts),
    /// Infidelity over a (J, t_a) grid
    Grid(Opts),
    /// None, single-spin and cluster steering over J
    Cluster(Opts),
    /// A single sweep described entirely by the config
    Run(Opts),
}

#[derive(Args, Clone)]
struct Opts {
    /// JSON config, a resolved plan, or a previous output file to replay
    #[arg(long)]
    config: Option<PathBuf>,
    /// Output file (default: output.path from the config, else stdout)
    #[arg(long)]
    out: Option<PathBuf>,
    /// Master seed for the disorder draws
    #[arg(long)]
    seed: Option<u64>,
    /// Realizations per sweep point
    #[arg(long)]
    realizations: Option<usize>,
    /// Comma-separated steering modes: none, single, cluster, exact
    #[arg(long, value_delimiter = ',', value_parser = parse_mode)]
    steering: Option<Vec<SteeringMode>>,
    /// Worker threads (default: all cores)
    #[arg(long)]
    jobs: Option<usize>,
    /// 200 realizations and L ≤ 8
    #[arg(long)]
    quick: bool,
    #[arg(long)]
    rtol: Option<f64>,
    #[arg(long)]
    atol: Option<f64>,
    #[arg(long)]
    max_step: Option<f64>,
    /// magnus (default) or dp5
    #[arg(long, value_parser = parse_method)]
    integrator: Option<Method>,
    #[arg(long, value_parser = parse_schedule)]
    schedule: Option<Schedule>,
    /// Clamp single-spin steering coefficients to ±CAP
    #[arg(long)]
    cap_steering: Option<f64>,
    /// Comma-separated panel names to run
    #[arg(long, value_delimiter = ',')]
    panel: Option<Vec<String>>,
    /// csv or ndjson
    #[arg(long, value_parser = parse_format)]
    format: Option<OutputFormat>,
    /// Per-realization NDJSON records
    #[arg(long)]
    audit: Option<PathBuf>,
    /// No progress lines on stderr
    #[arg(long, short)]
    quiet: bool,
}

fn parse_mode(s: &str) -> Result<SteeringMode, String> {
    s.parse().map_err(|e: steerqaa::Error| e.to_string())
}

fn parse_method(s: &str) -> Result<Method, String> {
    s.parse().map_err(|e: steerqaa::Error| e.to_string())
}

fn parse_schedule(s: &str) -> Result<Schedule, String> {
    s.parse().map(Schedule::new).map_err(|e: steerqaa::Error| e.to_string())
}

fn parse_format(s: &str) -> Result<OutputFormat, String> {
    s.parse().map_err(|e: ExperimentError| e.to_string())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (command, opts) = match cli.command {
        Sub::Fig1(o) => (Command::Fig1, o),
        Sub::Fig2(o) => (Command::Fig2, o),
        Sub::Fig3(o) => (Command::Fig3, o),
        Sub::Grid(o) => (Command::Grid, o),
        Sub::Cluster(o) => (Command::Cluster, o),
        Sub::Run(o) => (Command::Run, o),
    };
    match run(command, &opts) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("steerqaa: {e}");
            ExitCode::from(match e {
                ExperimentError::Config(_) => 2,
                ExperimentError::Integration { .. } => 3,
                ExperimentError::Io(_) => 1,
            })
        }
    }
}

fn run(command: Command, opts: &Opts) -> Result<(), ExperimentError> {
    let user = match &opts.config {
        Some(path) => {
            let text = std::fs::read_to_string(path)
                .map_err(|e| ExperimentError::Config(format!("cannot read {}: {e}", path.display())))?;
            Some(experiments::parse_config_text(&text)?)
        }
        None => None,
    };
    let overrides = Overrides {
        seed: opts.seed,
        realizations: opts.realizations,
        steering: opts.steering.clone(),
        rtol: opts.rtol,
        atol: opts.atol,
        max_step: opts.max_step,
        method: opts.integrator,
        schedule: opts.schedule,
        cap_steering: opts.cap_steering,
        format: opts.format,
        quick: opts.quick,
        panels: opts.panel.clone(),
    };
    let plan = experiments::plan(command, user.as_ref(), &overrides)?;

    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(j) = opts.jobs {
        if j == 0 {
            return Err(ExperimentError::Config("--jobs must be at least 1".into()));
        }
        pool = pool.num_threads(j);
    }
    let pool = pool
        .build()
        .map_err(|e| ExperimentError::Config(format!("cannot start worker pool: {e}")))?;
    let quiet = opts.quiet;
    let report = pool.install(|| {
        experiments::execute(&plan, &mut |line| {
            if !quiet {
                eprintln!("{line}");
            }
        })
    })?;

    let created = SystemTime::now()
        .duration_since(UNIX_EPOCH)
        .map(|d| d.as_secs())
        .unwrap_or(0);
    match opts.out.as_ref().or(report.output_path()) {
        Some(path) => {
            let mut w = BufWriter::new(File::create(path)?);
            report.write(&mut w, created)?;
            w.flush()?;
        }
        None => {
            let stdout = std::io::stdout();
            let mut w = stdout.lock();
            report.write(&mut w, created)?;
            w.flush()?;
        }
    }
    if let Some(path) = &opts.audit {
        let mut w = BufWriter::new(File::create(path)?);
        write_audit(&report.audit, &mut w)?;
        w.flush()?;
    }
    Ok(())
}
