use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};
use contact_hj_lab::{exit_code, run_convergence, run_critical, run_properties, ExperimentConfig};

#[derive(Parser)]
#[command(name = "contact-hj-lab", version, about = "Contact Hamilton-Jacobi experiments on the circle")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(clap::Args)]
struct Common {
    /// Experiment config (TOML).
    #[arg(long)]
    config: PathBuf,
    /// Output directory; overrides `output_dir` from the config.
    #[arg(long)]
    out: Option<PathBuf>,
    /// Seed for randomized scenarios; overrides `seed` from the config.
    #[arg(long)]
    seed: Option<u64>,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve, find u_-, measure and fit the decay rates.
    Convergence(Common),
    /// Run the property suites on seeded random data.
    Properties(Common),
    /// Critical value ladder and admissible shift.
    Critical(Common),
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let (Command::Convergence(c) | Command::Properties(c) | Command::Critical(c)) = &cli.command;
    let mut cfg = match ExperimentConfig::load(&c.config) {
        Ok(cfg) => cfg,
        Err(e) => {
            eprintln!("error: {e}");
            return ExitCode::from(2);
        }
    };
    if let Some(seed) = c.seed {
        cfg.seed = seed;
    }
    let out = c.out.clone().unwrap_or_else(|| cfg.output_dir.clone());
    let result = match &cli.command {
        Command::Convergence(_) => run_convergence(&cfg, &out).map(|_| 0),
        Command::Properties(_) => run_properties(&cfg, &out).map(|s| {
            for r in s.rows.iter().filter(|r| r.verdict == contact_hj_lab::experiments::Verdict::Fail) {
                eprintln!("property failed: {} (margin {:e})", r.name, r.margin);
            }
            u8::from(!s.passed())
        }),
        Command::Critical(_) => run_critical(&cfg, &out).map(|_| 0),
    };
    match result {
        Ok(code) => {
            println!("wrote {}", out.join("report.txt").display());
            ExitCode::from(code)
        }
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(exit_code(&e) as u8)
        }
    }
}
