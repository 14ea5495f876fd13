use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use synthaudit::cli;

#[derive(Parser)]
#[command(name = "synthaudit", version, about = "Empirical privacy audits of synthetic data generators")]
struct Args {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one audit and write report.json, scores.csv and manifest.json.
    Audit {
        config: PathBuf,
        #[arg(long, default_value = "audit-out")]
        out: PathBuf,
        /// Worker threads (all cores by default).
        #[arg(long)]
        workers: Option<usize>,
    },
    /// Run an audit once per ε of the config's `eps` list.
    Sweep {
        config: PathBuf,
        #[arg(long, default_value = "sweep-out")]
        out: PathBuf,
        #[arg(long)]
        workers: Option<usize>,
    },
}

fn main() -> ExitCode {
    let args = Args::parse();
    let result = match &args.command {
        Command::Audit { config, out, workers } => cli::cmd_audit(config, out, *workers).map(|m| {
            println!("{}: ε_emp {:.4} (folds {:.4} ± {:.4}, ε = {})", m.verdict, m.eps_emp, m.fold_mean, m.fold_stddev, m.theoretical_eps);
        }),
        Command::Sweep { config, out, workers } => cli::cmd_sweep(config, out, *workers).map(|ms| {
            for m in ms {
                println!("ε = {}: {} (folds {:.4} ± {:.4})", m.theoretical_eps, m.verdict, m.fold_mean, m.fold_stddev);
            }
        }),
    };
    match result {
        Ok(()) => ExitCode::from(cli::EXIT_OK as u8),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(cli::exit_code(&e) as u8)
        }
    }
}
