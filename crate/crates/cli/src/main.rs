use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use deliberate_cli::{cmd_batch, cmd_run, cmd_validate, parse_seed_range, CliError};

#[derive(Parser)]
#[command(name = "deliberate", version, about = "Run liquid deliberation scenarios")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run one scenario and write trace.jsonl, summary.json and final_proposal.json.
    Run {
        config: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Re-run a template scenario under a range of seeds.
    Batch {
        template: PathBuf,
        /// `A..B` (inclusive), `A..=B`, or one seed.
        #[arg(long)]
        seeds: String,
        #[arg(long)]
        out: PathBuf,
        /// Worker threads; 0 uses every core.
        #[arg(long, default_value_t = 0)]
        jobs: usize,
    },
    /// Check a scenario file and list every problem found.
    Validate { config: PathBuf },
}

fn execute(command: Command) -> Result<(), CliError> {
    match command {
        Command::Run { config, out } => {
            let report = cmd_run(&config, &out)?;
            println!("T={} stop_reason={}", report.terminal_iteration, report.stop_reason);
            Ok(())
        }
        Command::Batch {
            template,
            seeds,
            out,
            jobs,
        } => {
            let seeds = parse_seed_range(&seeds)?;
            let report = cmd_batch(&template, seeds, &out, jobs)?;
            let agg = &report.aggregate;
            println!("runs={} failed={}", agg.runs, agg.failed);
            if let (Some(mean), Some(median)) = (agg.mean_t, agg.median_t) {
                println!("mean_T={mean} median_T={median}");
            }
            for (reason, count) in &agg.stop_reasons {
                println!("{reason:>26} {count}");
            }
            report.status()
        }
        Command::Validate { config } => {
            let cfg = cmd_validate(&config)?;
            println!("ok: n={} k={} s={} seed={}", cfg.n, cfg.k, cfg.s, cfg.seed);
            Ok(())
        }
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli.command) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code())
        }
    }
}
