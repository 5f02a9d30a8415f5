use std::process::ExitCode;

use clap::Parser;
use medgate_cli::{default_threads, execute, load_config, Cli, RunError};

const EXIT_CONFIG: u8 = 1;
const EXIT_NUMERICAL: u8 = 2;

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { ExitCode::from(EXIT_CONFIG) } else { ExitCode::SUCCESS };
        }
    };
    let cfg = match load_config(&cli, |var| std::env::var(var).ok()) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("simulate: {e}");
            return ExitCode::from(EXIT_CONFIG);
        }
    };
    let threads = match cli.threads {
        Some(0) => {
            eprintln!("simulate: config error: --threads must be at least 1");
            return ExitCode::from(EXIT_CONFIG);
        }
        Some(n) => n,
        None => default_threads(),
    };
    std::panic::set_hook(Box::new(|info| eprintln!("simulate: grid point panicked: {info}")));
    match execute(&cfg, &cli.out, threads) {
        Ok(summary) => {
            for file in &summary.files {
                println!("{}", file.display());
            }
            if summary.failed > 0 {
                eprintln!("simulate: {} of {} grid points failed (valid=false)", summary.failed, summary.points);
            }
            if summary.total_failure() {
                ExitCode::from(EXIT_NUMERICAL)
            } else {
                ExitCode::SUCCESS
            }
        }
        Err(e @ RunError::Config(_)) | Err(e @ RunError::Io { .. }) => {
            eprintln!("simulate: {e}");
            ExitCode::from(EXIT_CONFIG)
        }
    }
}
