//! Command-line front end: single runs, seeded batches, parameter sweeps.

use std::fs::{self, File};
use std::io::{self, BufWriter, Write};
use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Parser, Subcommand};

use swarm_escort::engine::{self, ConfigError, ScenarioConfig};
use swarm_escort::harness::{self, SweepSpec};

#[derive(Parser)]
#[command(name = "swarm-escort", version, about = "UAV swarm escort simulator")]
struct Cli {
    /// Overrides the tick budget from the config.
    #[arg(long, global = true, value_name = "N")]
    max_ticks: Option<u64>,
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulates one scenario and prints the outcome.
    Run {
        /// Config file path, or `default` for the built-in scenario.
        #[arg(long)]
        config: String,
        /// Overrides the seed from the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Writes a per-tick state trace CSV here.
        #[arg(long, value_name = "FILE")]
        trace: Option<PathBuf>,
    },
    /// Runs N seeded simulations and writes one CSV row per run.
    Batch {
        #[arg(long)]
        config: String,
        #[arg(long)]
        runs: u32,
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
    },
    /// Varies one config field over a value list or start:stop:step range.
    Sweep {
        #[arg(long)]
        config: String,
        /// Field to vary, e.g. `eps_d` or `comm_range`.
        #[arg(long)]
        param: String,
        /// `40,50,60` or `40:70:10`.
        #[arg(long)]
        values: String,
        #[arg(long, default_value_t = 100)]
        runs: u32,
        /// Per-run records land here.
        #[arg(long, value_name = "CSV")]
        out: PathBuf,
        /// Optional per-value aggregate CSV.
        #[arg(long, value_name = "CSV")]
        summary: Option<PathBuf>,
    },
}

enum AppError {
    Usage(String),
    Io(String),
}

impl From<ConfigError> for AppError {
    fn from(e: ConfigError) -> Self {
        AppError::Usage(e.to_string())
    }
}

fn io_ctx(path: &Path) -> impl Fn(io::Error) -> AppError + '_ {
    move |e| AppError::Io(format!("{}: {e}", path.display()))
}

fn load_config(arg: &str, max_ticks: Option<u64>) -> Result<ScenarioConfig, AppError> {
    let mut cfg = if arg == "default" {
        ScenarioConfig::default()
    } else {
        let text = fs::read_to_string(arg).map_err(io_ctx(Path::new(arg)))?;
        ScenarioConfig::from_key_values(&text)?
    };
    if let Some(budget) = max_ticks {
        cfg.max_ticks = budget;
    }
    cfg.validate()?;
    Ok(cfg)
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => 0,
                _ => 1,
            };
            let _ = e.print();
            return ExitCode::from(code);
        }
    };
    match dispatch(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(AppError::Usage(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(1)
        }
        Err(AppError::Io(msg)) => {
            eprintln!("error: {msg}");
            ExitCode::from(2)
        }
    }
}

fn dispatch(cli: Cli) -> Result<(), AppError> {
    match cli.command {
        Command::Run { config, seed, trace } => {
            let mut cfg = load_config(&config, cli.max_ticks)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            let record = match trace {
                Some(path) => {
                    let mut out = BufWriter::new(File::create(&path).map_err(io_ctx(&path))?);
                    let record = engine::run_traced(&cfg, &mut out).map_err(io_ctx(&path))?;
                    out.flush().map_err(io_ctx(&path))?;
                    record
                }
                None => engine::run(&cfg),
            };
            println!("{record}");
            Ok(())
        }
        Command::Batch { config, runs, out } => {
            if runs == 0 {
                return Err(AppError::Usage("--runs must be at least 1".to_string()));
            }
            let cfg = load_config(&config, cli.max_ticks)?;
            let records = harness::batch(&cfg, runs);
            write_with(&out, |w| harness::write_run_csv(w, &records))?;
            println!("{}", harness::summarize(0.0, &records));
            Ok(())
        }
        Command::Sweep { config, param, values, runs, out, summary } => {
            let cfg = load_config(&config, cli.max_ticks)?;
            let spec = SweepSpec::new(param, SweepSpec::parse_values(&values)?, runs)?;
            let cells = harness::sweep(&cfg, &spec)?;
            let records: Vec<_> = cells.iter().flat_map(|c| c.records.iter().cloned()).collect();
            write_with(&out, |w| harness::write_run_csv(w, &records))?;
            let rows: Vec<_> = cells.iter().map(|c| c.summary.clone()).collect();
            if let Some(path) = summary {
                write_with(&path, |w| harness::write_summary_csv(w, &rows))?;
            }
            for row in &rows {
                println!("{}={} {row}", spec.param, row.value);
            }
            Ok(())
        }
    }
}

fn write_with<F>(path: &Path, emit: F) -> Result<(), AppError>
where
    F: FnOnce(&mut BufWriter<File>) -> io::Result<()>,
{
    let wrap = io_ctx(path);
    let mut out = BufWriter::new(File::create(path).map_err(&wrap)?);
    emit(&mut out).map_err(&wrap)?;
    out.flush().map_err(&wrap)
}
