use std::io::Write;
use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use steinbound_harness::{execute, report, verify, ExperimentConfig, HarnessError, Overrides, ReportFormat};

#[derive(Parser)]
#[command(name = "steinbound", version, about = "Run and summarize normal-approximation experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one experiment and write its record.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        seed: Option<u64>,
        #[arg(long)]
        jobs: Option<usize>,
        /// Record path; stdout when neither this nor the config sets one.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Summarize records.
    Report {
        paths: Vec<PathBuf>,
        #[arg(long, value_enum, default_value = "table")]
        format: ReportFormat,
    },
    /// Recompute stored bounds from their components.
    Verify { record: PathBuf },
}

fn write_output(path: Option<&PathBuf>, text: &str) -> Result<(), HarnessError> {
    match path {
        Some(p) => {
            if let Some(dir) = p.parent().filter(|d| !d.as_os_str().is_empty()) {
                std::fs::create_dir_all(dir)
                    .map_err(|e| HarnessError::Runtime(format!("creating {}: {e}", dir.display())))?;
            }
            std::fs::write(p, text).map_err(|e| HarnessError::Runtime(format!("writing {}: {e}", p.display())))
        }
        None => std::io::stdout()
            .write_all(text.as_bytes())
            .map_err(|e| HarnessError::Runtime(e.to_string())),
    }
}

fn dispatch(cli: Cli) -> Result<(), HarnessError> {
    match cli.command {
        Command::Run {
            config,
            seed,
            jobs,
            out,
        } => {
            let cfg = ExperimentConfig::load(&config)?.resolve(&Overrides { seed, jobs, out })?;
            let (record, error) = execute(&cfg);
            write_output(cfg.out.as_ref(), &record.to_jsonl())?;
            match error {
                Some(e) => Err(e),
                None => Ok(()),
            }
        }
        Command::Report { paths, format } => {
            let text = report(&paths, format)?;
            write_output(None, &text)
        }
        Command::Verify { record } => {
            let text = verify(&record)?;
            write_output(None, &text)
        }
    }
}

fn main() -> ExitCode {
    match dispatch(Cli::parse()) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
