//! Command-line front end: `analyze`, `sweep` and `dump-lp`.

mod config;
mod output;

use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use rayon::prelude::*;

pub use config::{parse_config, BudgetConfig, Distances, FixedProtocol, RunConfig};
pub use output::{csv_header, PointRecord, Sidecar, CSV_HEADER};

use crate::channel::{expected_observations, sample_observations, DetectorPlacement};
use crate::constraints::build_lp;
use crate::keyrate::{analyze, AnalysisMode};
use crate::lp::write_dump;
use crate::optimize::{optimize_point, sweep, OptimizeTask};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_INTERNAL: i32 = 3;

#[derive(Debug, Parser)]
#[command(
    name = "tfkey",
    version,
    about = "Finite-key rates for twin-field QKD with discrete phase randomization"
)]
pub struct Cli {
    /// Worker threads for grid evaluation (default: all cores).
    #[arg(long, global = true, env = "TFKEY_THREADS")]
    pub threads: Option<usize>,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Analyze a single distance.
    Analyze(RunArgs),
    /// Analyze every configured distance.
    Sweep(RunArgs),
    /// Write the phase-error linear program for one distance.
    DumpLp(DumpArgs),
}

#[derive(Debug, Args)]
pub struct RunArgs {
    #[arg(long)]
    pub config: PathBuf,
    /// CSV output; a JSON sidecar is written next to it.
    #[arg(long)]
    pub out: PathBuf,
    /// Sample observations with this seed instead of the configured mode.
    #[arg(long)]
    pub seed: Option<u64>,
    /// Distance in km; overrides the configured list for `analyze`.
    #[arg(long)]
    pub distance: Option<f64>,
}

#[derive(Debug, Args)]
pub struct DumpArgs {
    #[arg(long)]
    pub config: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long)]
    pub distance: Option<f64>,
    #[arg(long)]
    pub seed: Option<u64>,
}

/// A failed run, carrying its exit code.
#[derive(Debug)]
pub enum CliError {
    Config(String),
    Internal(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Config(_) => EXIT_CONFIG,
            CliError::Internal(_) => EXIT_INTERNAL,
        }
    }

    pub fn message(&self) -> &str {
        match self {
            CliError::Config(m) | CliError::Internal(m) => m,
        }
    }
}

fn internal(e: impl std::fmt::Display) -> CliError {
    CliError::Internal(e.to_string())
}

/// Parses arguments, runs the command and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let code = if e.use_stderr() { EXIT_CONFIG } else { EXIT_OK };
            let _ = e.print();
            return code;
        }
    };
    match run(&cli) {
        Ok(()) => EXIT_OK,
        Err(e) => {
            eprintln!("tfkey: {}", e.message());
            e.exit_code()
        }
    }
}

pub fn run(cli: &Cli) -> Result<(), CliError> {
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(n) = cli.threads {
        if n == 0 {
            return Err(CliError::Config("--threads must be at least 1".into()));
        }
        pool = pool.num_threads(n);
    }
    let pool = pool.build().map_err(internal)?;
    pool.install(|| match &cli.command {
        Command::Analyze(a) => run_analyze(a, true),
        Command::Sweep(a) => run_analyze(a, false),
        Command::DumpLp(a) => run_dump_lp(a),
    })
}

fn load_config(path: &Path, seed: Option<u64>) -> Result<RunConfig, CliError> {
    let text = fs::read_to_string(path)
        .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
    let mut cfg = parse_config(&text).map_err(CliError::Config)?;
    if let Some(s) = seed {
        cfg.mode = AnalysisMode::Sampled(s);
    }
    Ok(cfg)
}

/// Output files created up front and removed again unless the run
/// completes.
struct Outputs {
    paths: Vec<PathBuf>,
    done: bool,
}

impl Outputs {
    fn create(paths: Vec<PathBuf>) -> Result<Self, CliError> {
        let mut out = Outputs {
            paths: Vec::new(),
            done: false,
        };
        for p in paths {
            if p.is_dir() {
                return Err(CliError::Config(format!("{} is a directory", p.display())));
            }
            fs::File::create(&p)
                .map_err(|e| CliError::Config(format!("cannot write {}: {e}", p.display())))?;
            out.paths.push(p);
        }
        Ok(out)
    }

    fn write(&self, idx: usize, bytes: &[u8]) -> Result<(), CliError> {
        fs::write(&self.paths[idx], bytes).map_err(internal)
    }
}

impl Drop for Outputs {
    fn drop(&mut self) {
        if !self.done {
            for p in &self.paths {
                let _ = fs::remove_file(p);
            }
        }
    }
}

/// Sidecar path: the CSV path with its extension replaced by `.json`.
pub fn sidecar_path(csv: &Path) -> PathBuf {
    csv.with_extension("json")
}

fn run_analyze(args: &RunArgs, single: bool) -> Result<(), CliError> {
    let cfg = load_config(&args.config, args.seed)?;
    let mut distances = cfg.distances.expand().map_err(CliError::Config)?;
    if let Some(d) = args.distance {
        if !(d.is_finite() && d >= 0.0) {
            return Err(CliError::Config(format!(
                "--distance {d} is not a distance"
            )));
        }
        distances = vec![d];
    } else if single && distances.len() != 1 {
        return Err(CliError::Config(
            "analyze needs exactly one distance; pass --distance or use sweep".into(),
        ));
    }
    let budget = cfg.budget().map_err(CliError::Config)?;
    if sidecar_path(&args.out) == args.out {
        return Err(CliError::Config("--out must not end in .json".into()));
    }
    let outputs = Outputs::create(vec![args.out.clone(), sidecar_path(&args.out)])?;

    let options = cfg.analysis_options();
    let records: Vec<PointRecord> = if cfg.optimize {
        let task = OptimizeTask {
            channel: &cfg.channel,
            slices: cfg.phase_slices,
            n_tot: cfg.n_tot,
            budget: &budget,
            space: &cfg.search,
            options: &options,
        };
        let found = if distances.len() == 1 {
            vec![optimize_point(&task, distances[0]).map_err(internal)?]
        } else {
            sweep(&task, &distances, cfg.warm_start).map_err(internal)?
        };
        found
            .into_iter()
            .map(|o| PointRecord::new(o.report, Some(o.evaluations)))
            .collect()
    } else {
        let fixed = cfg.protocol.expect("validated");
        let protocol = cfg
            .protocol_params(fixed)
            .map_err(|e| CliError::Config(format!("protocol: {e}")))?;
        distances
            .par_iter()
            .map(|&d| analyze(&protocol, &cfg.channel, d, &budget, &options))
            .collect::<Result<Vec<_>, _>>()
            .map_err(internal)?
            .into_iter()
            .map(|r| PointRecord::new(r, None))
            .collect()
    };

    let csv = output::write_csv(&records).map_err(internal)?;
    let sidecar = Sidecar::new(
        if single { "analyze" } else { "sweep" },
        cfg.clone(),
        budget,
        records,
    );
    let json = serde_json::to_vec_pretty(&sidecar).map_err(internal)?;
    outputs.write(0, &csv)?;
    outputs.write(1, &json)?;
    let mut outputs = outputs;
    outputs.done = true;
    Ok(())
}

fn run_dump_lp(args: &DumpArgs) -> Result<(), CliError> {
    let cfg = load_config(&args.config, args.seed)?;
    let distances = cfg.distances.expand().map_err(CliError::Config)?;
    let distance = match args.distance {
        Some(d) if d.is_finite() && d >= 0.0 => d,
        Some(d) => {
            return Err(CliError::Config(format!(
                "--distance {d} is not a distance"
            )))
        }
        None if distances.len() == 1 => distances[0],
        None => {
            return Err(CliError::Config(
                "dump-lp needs one distance; pass --distance".into(),
            ))
        }
    };
    let fixed = cfg
        .protocol
        .ok_or_else(|| CliError::Config("protocol: required for dump-lp".into()))?;
    let protocol = cfg
        .protocol_params(fixed)
        .map_err(|e| CliError::Config(format!("protocol: {e}")))?;
    let budget = cfg.budget().map_err(CliError::Config)?;
    let mut outputs = Outputs::create(vec![args.out.clone()])?;

    let placement = if cfg.detector_in_transmittance {
        DetectorPlacement::InTransmittance
    } else {
        DetectorPlacement::Excluded
    };
    let counts = match cfg.mode {
        AnalysisMode::Expected => {
            expected_observations(&protocol, &cfg.channel, distance, placement)
        }
        AnalysisMode::Sampled(seed) => {
            sample_observations(&protocol, &cfg.channel, distance, placement, seed)
        }
    }
    .map_err(internal)?;
    let build = build_lp(&protocol, &counts, &budget).map_err(internal)?;
    let header = format!(
        "# L_km={distance:.16e} mu={:.16e} nu={:.16e} p_mu={:.16e} p_nu={:.16e} M={} n_tot={}\n# variables: n_j|2mu (j=0..M-1) then n_j|2nu, in units of scale\n",
        protocol.mu.value(),
        protocol.nu.value(),
        protocol.p_mu,
        protocol.p_nu,
        protocol.slices,
        protocol.n_tot
    );
    let text = header + &write_dump(&build.lp);
    outputs.write(0, text.as_bytes())?;
    outputs.done = true;
    Ok(())
}
