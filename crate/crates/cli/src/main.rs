use std::path::PathBuf;
use std::process::ExitCode;

use billiards_core::experiment::{run_experiment, validate, ExperimentConfig, ExperimentError, RunReport};
use billiards_core::{Domain, BUILTIN_DOMAINS};
use clap::{Parser, Subcommand};

#[derive(Parser)]
#[command(name = "billiards", version, about = "Seeded stochastic billiard experiments")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run an experiment and write report.json plus its CSVs.
    Run {
        #[arg(long)]
        config: PathBuf,
        /// Overrides the seed in the config.
        #[arg(long)]
        seed: Option<u64>,
        /// Output directory, relative to the working directory.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        replicas: Option<usize>,
    },
    /// Check a config without running it.
    Validate {
        #[arg(long)]
        config: PathBuf,
    },
    /// List the built-in domains.
    Domains,
}

fn main() -> ExitCode {
    match execute(Cli::parse().command) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}

fn execute(command: Command) -> Result<ExitCode, ExperimentError> {
    match command {
        Command::Run { config, seed, out, replicas } => {
            let mut cfg = ExperimentConfig::load(&config)?;
            if let Some(seed) = seed {
                cfg.seed = seed;
            }
            if let Some(out) = out {
                cfg.output = std::env::current_dir().map(|d| d.join(&out)).unwrap_or(out);
            }
            if replicas.is_some() {
                cfg.replicas = replicas;
            }
            let report = run_experiment(&cfg)?;
            print_report(&report, &cfg);
            Ok(if report.passed { ExitCode::SUCCESS } else { ExitCode::from(1) })
        }
        Command::Validate { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let prepared = validate(&cfg)?;
            println!(
                "{}: ok ({} in {}D, law {})",
                config.display(),
                cfg.experiment,
                prepared.domain.dim(),
                prepared.law.name()
            );
            Ok(ExitCode::SUCCESS)
        }
        Command::Domains => {
            for name in BUILTIN_DOMAINS {
                let d = Domain::builtin(name)?;
                println!("{name:<12} dim={} volume={:.6} boundary={:.6}", d.dim(), d.volume(), d.boundary_measure());
            }
            Ok(ExitCode::SUCCESS)
        }
    }
}

fn print_report(report: &RunReport, cfg: &ExperimentConfig) {
    for t in &report.tests {
        let verdict = if t.pass { "pass" } else { "FAIL" };
        println!("{verdict} {:<32} stat={:.6} p={:.4e} n={}", t.test, t.statistic, t.p_value, t.n);
    }
    for c in &report.checks {
        let verdict = if c.pass { "pass" } else { "FAIL" };
        println!("{verdict} {:<32} value={:.6e} ({})", c.name, c.value, c.requirement);
    }
    for e in &report.estimates {
        match e.target {
            Some(t) => println!("     {:<32} {:.6} ± {:.2e} (target {t:.6})", e.name, e.estimate, e.stderr),
            None => println!("     {:<32} {:.6} ± {:.2e}", e.name, e.estimate, e.stderr),
        }
    }
    println!(
        "{} in {:.2}s, outputs in {}",
        if report.passed { "passed" } else { "FAILED" },
        report.wall_clock_seconds,
        cfg.output_dir().display()
    );
}
