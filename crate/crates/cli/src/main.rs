//! `gibbs run <config>`: runs one experiment and writes its CSV files and
//! report into the output directory.

mod config;
mod error;
mod output;
mod tasks;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use crate::error::CliError;
use crate::tasks::RunOptions;

#[derive(Parser)]
#[command(name = "gibbs", version, about = "Gibbs measures, Haar bases and Dirac spectra on subshifts")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the experiment described by a TOML config.
    Run {
        config: PathBuf,
        /// Overrides the config seed.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory; otherwise the config `output`, then $GIBBS_OUT_DIR.
        #[arg(long)]
        out_dir: Option<PathBuf>,
        /// Node budget for tree searches.
        #[arg(long)]
        budget_nodes: Option<usize>,
        /// Comma-separated checkpoints N for partial sums.
        #[arg(long, value_delimiter = ',')]
        checkpoints: Option<Vec<usize>>,
        /// Do not echo the report.
        #[arg(long, short)]
        quiet: bool,
    },
}

fn main() -> ExitCode {
    let cli = match Cli::try_parse() {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 2 } else { 0 });
        }
    };
    let Command::Run {
        config,
        seed,
        out_dir,
        budget_nodes,
        checkpoints,
        quiet,
    } = cli.command;
    let opts = RunOptions {
        seed,
        out_dir,
        budget_nodes,
        checkpoints,
    };
    let result = config::load(&config).and_then(|cfg| tasks::run(&cfg, &opts));
    match result {
        Ok(summary) => {
            if !quiet {
                print!("{}", summary.report);
            }
            for f in &summary.files {
                eprintln!("wrote {}", f.display());
            }
            ExitCode::SUCCESS
        }
        Err(e) => report_error(&e),
    }
}

fn report_error(e: &CliError) -> ExitCode {
    let kind = if e.exit_code() == 2 { "config error" } else { "compute error" };
    eprintln!("gibbs: {kind}: {e}");
    ExitCode::from(e.exit_code())
}
