//! `musielak`: condition checks, regularization, minimization and
//! regularity diagnostics driven by a TOML run file.
//!
//! Exit codes: 0 success, 2 invalid input, 3 numeric failure (partial
//! artifacts are still written).

mod commands;
mod config;

use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use musielak::analysis::Mode;

use commands::{Artifacts, Failure};
use config::RunConfig;

#[derive(Parser)]
#[command(name = "musielak", version, about = "Regularity diagnostics for generalized Orlicz functionals")]
struct Cli {
    #[command(subcommand)]
    command: Command,
    /// Output directory; overrides `output_dir` of the run file.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Print nothing on success.
    #[arg(long, short, global = true, conflicts_with = "verbose")]
    quiet: bool,
    /// Echo the report to stdout.
    #[arg(long, short, global = true)]
    verbose: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Structural conditions of φ and the predicted regularity class.
    Check {
        #[arg(long)]
        config: PathBuf,
        /// ε of the weak vanishing condition.
        #[arg(long)]
        eps: Option<f64>,
    },
    /// The regularized function on B_r around the configured center.
    Regularize {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        r: f64,
    },
    /// Minimize the energy with the configured boundary data.
    Solve {
        #[arg(long)]
        config: PathBuf,
    },
    /// Comparison solution on B_r and its distance to the minimizer.
    Compare {
        #[arg(long)]
        config: PathBuf,
        #[arg(long)]
        r: f64,
    },
    /// Campanato decay of the minimizer around a point.
    Holder {
        #[arg(long)]
        config: PathBuf,
        /// Comma separated coordinates.
        #[arg(long, value_delimiter = ',', allow_hyphen_values = true)]
        center: Vec<f64>,
        #[arg(long, default_value = "gradient")]
        mode: Mode,
    },
    /// Double-phase sweep across the regularity threshold.
    Sweep {
        #[arg(long)]
        config: PathBuf,
    },
}

impl Command {
    fn config(&self) -> &Path {
        match self {
            Command::Check { config, .. }
            | Command::Regularize { config, .. }
            | Command::Solve { config }
            | Command::Compare { config, .. }
            | Command::Holder { config, .. }
            | Command::Sweep { config } => config,
        }
    }
}

fn run(cli: &Cli) -> Result<(PathBuf, Artifacts), Failure> {
    let cfg = RunConfig::load(cli.command.config())?;
    let out = match &cli.command {
        Command::Check { eps, .. } => commands::check(&cfg, *eps),
        Command::Regularize { r, .. } => commands::regularize(&cfg, *r),
        Command::Solve { .. } => commands::solve(&cfg),
        Command::Compare { r, .. } => commands::compare(&cfg, *r),
        Command::Holder { center, mode, .. } => commands::holder(&cfg, center, *mode),
        Command::Sweep { .. } => commands::sweep(&cfg),
    }?;
    let dir = cli.out.clone().unwrap_or(cfg.output_dir);
    Ok((dir, out))
}

fn write_artifacts(dir: &Path, a: &Artifacts) -> std::io::Result<()> {
    std::fs::create_dir_all(dir)?;
    for (name, table) in &a.tables {
        table.write_to(std::io::BufWriter::new(std::fs::File::create(dir.join(name))?))?;
    }
    let mut report = a.report.join("\n");
    if let Some(f) = &a.failure {
        report.push_str(&format!("\nstatus: failed ({f})"));
    } else {
        report.push_str("\nstatus: ok");
    }
    report.push('\n');
    std::fs::write(dir.join("report.txt"), report)
}

fn init_threads() {
    if let Some(n) = std::env::var("MUSIELAK_THREADS").ok().and_then(|v| v.parse::<usize>().ok()) {
        // a second initialization only fails if something built the pool first
        let _ = rayon::ThreadPoolBuilder::new().num_threads(n.max(1)).build_global();
    }
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    init_threads();
    match run(&cli) {
        Ok((dir, artifacts)) => {
            if let Err(e) = write_artifacts(&dir, &artifacts) {
                eprintln!("error: writing {}: {e}", dir.display());
                return ExitCode::from(3);
            }
            if cli.verbose {
                for l in &artifacts.report {
                    println!("{l}");
                }
            }
            if let Some(f) = &artifacts.failure {
                eprintln!("error: {f}");
                return ExitCode::from(3);
            }
            if !cli.quiet {
                println!("wrote {} file(s) to {}", artifacts.tables.len() + 1, dir.display());
            }
            ExitCode::SUCCESS
        }
        Err(Failure::Validation(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(2)
        }
        Err(Failure::Numeric(m)) => {
            eprintln!("error: {m}");
            ExitCode::from(3)
        }
    }
}
