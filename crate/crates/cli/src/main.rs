use std::fmt::Write as _;
use std::io::Write as _;
use std::path::PathBuf;
use std::process::ExitCode;

use anyhow::{Context, Result};
use clap::{Parser, Subcommand};
use hankel_core::runner::{self, ExitStatus};
use hankel_core::scenario::parse_scenario;

/// Matrix NLS, mKdV and KdV solutions by linearisation through a Fredholm
/// equation. Tolerances can be overridden with HANKEL_* environment
/// variables (see the README).
#[derive(Parser, Debug)]
#[command(name = "hankel", version, about)]
struct Cli {
    /// Worker threads (default: all cores).
    #[arg(long, global = true)]
    threads: Option<usize>,

    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Solve a scenario and write tables plus a manifest.
    Solve {
        scenario: PathBuf,
        #[arg(long, default_value = "out")]
        out: PathBuf,
    },
    /// Convergence study with every spacing halved per level.
    Study {
        scenario: PathBuf,
        #[arg(long)]
        levels: usize,
        /// Also write study.json into this directory.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run the identity and residual checks only.
    Verify { scenario: PathBuf },
}

/// Runs the command, appending the human-readable report to `text`.
fn execute(cmd: Command, text: &mut String) -> Result<ExitStatus> {
    match cmd {
        Command::Solve { scenario, out } => {
            let scn = parse_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let summary = runner::run(&scn, &out)?;
            for r in &summary.output.residuals {
                writeln!(text, "residual {:<32} max {:.3e} rms {:.3e}", r.label, r.max, r.rms)?;
            }
            let skipped = summary.output.field.skipped();
            if skipped > 0 {
                writeln!(text, "{skipped} sample(s) skipped by the patch monitor")?;
            }
            writeln!(text, "wrote {} files to {}", summary.files.len(), out.display())?;
            Ok(summary.status)
        }
        Command::Study { scenario, levels, out } => {
            let scn = parse_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let report = runner::convergence_study(&scn, levels)?;
            text.push_str(&report.table());
            if let Some(dir) = out {
                std::fs::create_dir_all(&dir)?;
                let mut doc = runner::describe(&scn);
                doc["command"] = "study".into();
                doc["study"] = serde_json::to_value(&report)?;
                std::fs::write(dir.join("study.json"), serde_json::to_string_pretty(&doc)?)?;
            }
            Ok(report.status())
        }
        Command::Verify { scenario } => {
            let scn = parse_scenario(&scenario).with_context(|| format!("loading {}", scenario.display()))?;
            let report = runner::verify(&scn)?;
            text.push_str(&report.table());
            Ok(report.status)
        }
    }
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::default().default_filter_or("warn")).init();
    let cli = Cli::parse();
    let mut pool = rayon::ThreadPoolBuilder::new();
    if let Some(k) = cli.threads {
        pool = pool.num_threads(k);
    }
    let mut text = String::new();
    let result = pool
        .build()
        .context("building the thread pool")
        .and_then(|pool| pool.install(|| execute(cli.command, &mut text)));
    // A closed pipe on stdout is not a failure of the run.
    let _ = std::io::stdout().lock().write_all(text.as_bytes());
    match result {
        Ok(status) => ExitCode::from(status.code() as u8),
        Err(e) => {
            eprintln!("error: {e:#}");
            ExitCode::from(1)
        }
    }
}
