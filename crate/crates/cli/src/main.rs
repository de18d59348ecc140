//! `gqg`: run experiments, certify moduli of continuity, inspect snapshots.

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use gqg_core::harness::{
    field_info, output_root_from_env, read_snapshot, run_experiment, verify_moc_files, ExitStatus, ExperimentConfig,
    HarnessError,
};

#[derive(Parser)]
#[command(
    name = "gqg",
    version,
    about = "Generalized QG simulator and modulus-of-continuity certifier"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a config file.
    Run {
        config: PathBuf,
        /// Root for relative output directories (default: $GQG_OUTPUT_ROOT, then the working directory).
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Certify the modulus of continuity configured in a config file.
    Certify {
        config: PathBuf,
        #[arg(long)]
        output_root: Option<PathBuf>,
    },
    /// Check a field snapshot against a modulus of continuity in JSON form.
    VerifyMoc { field: PathBuf, moc: PathBuf },
    /// Print header and norms of a field snapshot.
    Info { field: PathBuf },
}

fn root(explicit: Option<PathBuf>) -> Option<PathBuf> {
    explicit.or_else(output_root_from_env)
}

fn run_config(cfg: &ExperimentConfig, root: Option<&Path>) -> Result<ExitStatus, HarnessError> {
    let (outcome, dir) = run_experiment(cfg, root)?;
    eprintln!(
        "{}: {:?} (exit {}), artifacts in {}",
        cfg.experiment.name(),
        outcome.status,
        outcome.status.code(),
        dir.display()
    );
    println!(
        "{}",
        serde_json::to_string_pretty(&outcome.summary).expect("summary serializes")
    );
    Ok(outcome.status)
}

fn dispatch(cli: Cli) -> Result<ExitStatus, HarnessError> {
    match cli.command {
        Command::Run { config, output_root } => {
            let cfg = ExperimentConfig::from_path(&config)?;
            run_config(&cfg, root(output_root).as_deref())
        }
        Command::Certify { config, output_root } => {
            let cfg = ExperimentConfig::from_path(&config)?.as_certify()?;
            run_config(&cfg, root(output_root).as_deref())
        }
        Command::VerifyMoc { field, moc } => {
            let check = verify_moc_files(&field, &moc)?;
            println!("{}", serde_json::to_string_pretty(&check).expect("check serializes"));
            Ok(if check.holds {
                ExitStatus::Success
            } else {
                ExitStatus::CertificationFailed
            })
        }
        Command::Info { field } => {
            let info = field_info(&read_snapshot(&field)?)?;
            println!("{}", serde_json::to_string_pretty(&info).expect("info serializes"));
            Ok(ExitStatus::Success)
        }
    }
}

fn main() -> ExitCode {
    let status = match dispatch(Cli::parse()) {
        Ok(s) => s,
        Err(e) => {
            eprintln!("error: {e}");
            e.exit_status()
        }
    };
    ExitCode::from(status.code() as u8)
}
