//! `attrep`: simulate, classify and probe attraction-repulsion chemotaxis
//! models from a line-oriented configuration file.

use std::io::{self, Write};
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};

use attrep::commands::{cmd_classify, cmd_constants, cmd_estimate_creg, cmd_mms, cmd_run, cmd_sweep};
use attrep::config::RunConfig;
use attrep::oracles::MmsCase;

#[derive(Parser)]
#[command(name = "attrep", version, about)]
struct Cli {
    /// Configuration file.
    #[arg(long, global = true, value_name = "PATH")]
    config: Option<PathBuf>,

    /// Output directory, overriding `output.dir`.
    #[arg(long, global = true, value_name = "DIR")]
    out: Option<PathBuf>,

    /// Random seed, overriding `seed`.
    #[arg(long, global = true, value_name = "N")]
    seed: Option<u64>,

    /// Sweep worker threads, overriding `sweep.workers`.
    #[arg(long, global = true, value_name = "N")]
    workers: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Simulate and write norms, verdict, regime report and snapshots.
    Run,
    /// Print the regime classification of the configured coefficients.
    Classify,
    /// Print the analytic constants and the bracket value.
    Constants,
    /// Run the configured parameter sweep and write phase.csv.
    Sweep,
    /// Estimate a lower bound for the maximal-regularity constant.
    EstimateCreg,
    /// Run a manufactured-solution convergence study.
    Mms {
        /// cosine-1d, cosine-2d or constant.
        #[arg(default_value = "cosine-2d")]
        case: String,
    },
}

impl Cli {
    fn load_config(&self) -> Result<RunConfig> {
        let path = self
            .config
            .as_ref()
            .context("this command needs --config PATH")?;
        let mut cfg = RunConfig::load(path)?;
        if let Some(dir) = &self.out {
            cfg.output_dir = dir.clone();
        }
        if let Some(seed) = self.seed {
            cfg.seed = seed;
            cfg.estimate.seed = seed;
        }
        if let Some(workers) = self.workers {
            anyhow::ensure!(workers >= 1, "--workers must be at least 1");
            cfg.workers = workers;
        }
        Ok(cfg)
    }

    fn execute(&self, out: &mut dyn Write) -> Result<i32> {
        let status = match &self.command {
            Command::Run => cmd_run(&self.load_config()?, out)?,
            Command::Classify => cmd_classify(&self.load_config()?, out)?,
            Command::Constants => cmd_constants(&self.load_config()?, out)?,
            Command::Sweep => cmd_sweep(&self.load_config()?, out)?,
            Command::EstimateCreg => cmd_estimate_creg(&self.load_config()?, out)?,
            Command::Mms { case } => cmd_mms(case.parse::<MmsCase>()?, out)?,
        };
        Ok(status)
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    // Usage errors map to status 1; status 2 is reserved for run outcomes.
    let cli = match Cli::try_parse() {
        Ok(cli) => cli,
        Err(e) => {
            let _ = e.print();
            return ExitCode::from(if e.use_stderr() { 1 } else { 0 });
        }
    };
    let stdout = io::stdout();
    let mut out = stdout.lock();
    match cli.execute(&mut out) {
        Ok(code) => ExitCode::from(code as u8),
        Err(e) => {
            let _ = out.flush();
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
