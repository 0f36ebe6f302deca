use std::fs::File;
use std::io::{self, BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use clap::error::ErrorKind;
use clap::{Args, Parser, Subcommand};

use photonloop::fock::{Truncation, DEFAULT_TAIL_LIMIT};
use photonloop::sweep::{self, Evaluator, Experiment, Metric, SweepRecord};
use photonloop::{Error, Result, StateSpec};

#[derive(Parser)]
#[command(
    name = "photonloop",
    version,
    about = "Adaptive loop-based photon subtraction simulator"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Adaptive subtraction on a single-mode state; prints one CSV row.
    Subtract(PointArgs),
    /// Subtraction on both arms of a two-mode state; prints one CSV row.
    Distill(PointArgs),
    /// Runs the sweep described by a configuration file.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Args)]
struct PointArgs {
    #[arg(long)]
    state: StateSpec,
    #[arg(long)]
    t: f64,
    #[arg(long, default_value_t = 1.0)]
    eta: f64,
    #[arg(long, default_value_t = 1)]
    steps: usize,
    /// Fock levels per mode [default: 40 for subtract, 32 for distill]
    #[arg(long)]
    cutoff: Option<usize>,
    #[arg(long)]
    fidelity_target: Option<StateSpec>,
    /// Largest population tolerated in the top two Fock levels
    #[arg(long, default_value_t = DEFAULT_TAIL_LIMIT)]
    tail_limit: f64,
}

fn run_point(experiment: Experiment, args: &PointArgs) -> Result<SweepRecord> {
    let cutoff = args.cutoff.unwrap_or(experiment.default_cutoff());
    let mut metrics = vec![Metric::PSuccess];
    match experiment {
        Experiment::Subtract => metrics.push(Metric::WignerOrigin),
        Experiment::Distill => metrics.push(Metric::LogNegativity),
    }
    if args.fidelity_target.is_some() {
        metrics.push(Metric::Fidelity);
    }
    metrics.push(Metric::Purity);
    if !(args.tail_limit > 0.0 && args.tail_limit < 1.0) {
        return Err(Error::Validation {
            field: "tail_limit".into(),
            message: "must lie in (0, 1)".into(),
        });
    }
    let trunc = Truncation::new(cutoff).with_tail_limit(args.tail_limit);
    let evaluator = Evaluator::new(
        experiment,
        &args.state,
        args.eta,
        trunc,
        &metrics,
        args.fidelity_target.as_ref(),
    )?;
    evaluator.evaluate(args.steps, args.t)
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Subtract(args) => {
            let record = run_point(Experiment::Subtract, &args)?;
            sweep::write_csv(&[record], io::stdout().lock())
        }
        Command::Distill(args) => {
            let record = run_point(Experiment::Distill, &args)?;
            sweep::write_csv(&[record], io::stdout().lock())
        }
        Command::Sweep { config } => {
            let text = std::fs::read_to_string(&config)
                .map_err(|e| Error::Io(format!("{}: {e}", config.display())))?;
            let config = sweep::parse_config(&text)?;
            let records = sweep::run_sweep(&config)?;
            match &config.output {
                Some(path) => {
                    let file = File::create(path)
                        .map_err(|e| Error::Io(format!("{}: {e}", path.display())))?;
                    let mut out = BufWriter::new(file);
                    sweep::write_csv(&records, &mut out)?;
                    out.flush()?;
                    log::info!("wrote {} records to {}", records.len(), path.display());
                    Ok(())
                }
                None => sweep::write_csv(&records, io::stdout().lock()),
            }
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => ExitCode::SUCCESS,
                _ => ExitCode::from(1),
            };
        }
    };
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
