use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Parser, Subcommand};

use nonlocal_pme::config::ExperimentConfig;
use nonlocal_pme::error::{Error, Result};
use nonlocal_pme::experiments::{
    parse_pairs, run_continuous_dependence, run_converge_h, run_converge_s, run_resolvent, run_solve, run_verify,
    Table,
};

/// Monotone explicit schemes for nonlocal porous-medium-type equations.
#[derive(Parser)]
#[command(name = "nlpme", version)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Evolve the configured problem; writes diagnostics.csv and snap_t*.csv.
    Solve { config: PathBuf },
    /// Solve εv − L_h v = g with g the configured initial datum; writes resolvent.csv.
    Resolvent { config: PathBuf },
    /// L¹ error at the final time over grid levels; writes table.csv.
    ConvergeH {
        config: PathBuf,
        /// Comma-separated spacings, e.g. 0.1,0.05,0.025.
        #[arg(long, value_delimiter = ',', required = true)]
        levels: Vec<f64>,
    },
    /// Distance to the local (σ = I) run as the fractional order grows; writes table.csv.
    ConvergeS {
        config: PathBuf,
        /// Comma-separated orders increasing toward 2.
        #[arg(long, value_delimiter = ',', required = true)]
        orders: Vec<f64>,
    },
    /// Distance to the target (m, s) run along a sequence of pairs; writes table.csv.
    ContDep {
        config: PathBuf,
        /// Comma-separated m:s pairs.
        #[arg(long)]
        pairs: String,
        /// Target pair m:s; defaults to the configured power and fractional order.
        #[arg(long)]
        target: Option<String>,
    },
    /// Run every property suite; writes verdicts.txt.
    Verify {
        config: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
}

fn print_table(table: &Table) {
    println!("{}", table.columns.join(","));
    for row in &table.rows {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:.6e}")).collect();
        println!("{}", cells.join(","));
    }
    println!("{}", table.verdict);
}

fn default_target(cfg: &ExperimentConfig) -> Result<(f64, f64)> {
    let m = cfg
        .nonlinearity
        .m
        .ok_or_else(|| Error::Config("pass --target: [nonlinearity] has no exponent m".into()))?;
    let s = cfg
        .measure
        .as_ref()
        .and_then(|m| m.order)
        .ok_or_else(|| Error::Config("pass --target: [measure] has no order".into()))?;
    Ok((m, s))
}

fn run(cli: Cli) -> Result<bool> {
    match cli.command {
        Command::Solve { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_solve(&cfg)?;
            let last = out.report.records[out.report.records.len() - 1];
            println!(
                "{} steps of dt = {:e}; final mass {:.12e}, max {:.6e}, support radius {:.6}",
                out.report.meta.steps, out.report.meta.dt, last.mass, last.linf, out.support_radius
            );
            for v in &out.report.verdicts {
                println!("{v}");
            }
            for p in &out.written {
                println!("wrote {}", p.display());
            }
            Ok(out.report.passed())
        }
        Command::Resolvent { config } => {
            let cfg = ExperimentConfig::load(&config)?;
            let out = run_resolvent(&cfg)?;
            println!(
                "{} iterations, q = {:.6}, residual {:e}",
                out.solution.iterations, out.solution.q, out.solution.residual
            );
            println!("wrote {}", out.written.display());
            Ok(true)
        }
        Command::ConvergeH { config, levels } => {
            let table = run_converge_h(&ExperimentConfig::load(&config)?, &levels)?;
            print_table(&table);
            Ok(table.verdict.passed())
        }
        Command::ConvergeS { config, orders } => {
            let table = run_converge_s(&ExperimentConfig::load(&config)?, &orders)?;
            print_table(&table);
            Ok(table.verdict.passed())
        }
        Command::ContDep { config, pairs, target } => {
            let cfg = ExperimentConfig::load(&config)?;
            let target = match target {
                Some(t) => *parse_pairs(&t)?
                    .first()
                    .ok_or_else(|| Error::Config("empty --target".into()))?,
                None => default_target(&cfg)?,
            };
            let table = run_continuous_dependence(&cfg, &parse_pairs(&pairs)?, target)?;
            print_table(&table);
            Ok(table.verdict.passed())
        }
        Command::Verify { config, seed } => {
            let report = run_verify(&ExperimentConfig::load(&config)?, seed)?;
            print!("{}", report.render());
            println!("wrote {}", report.written.display());
            Ok(report.passed())
        }
    }
}

fn main() -> ExitCode {
    match run(Cli::parse()) {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => ExitCode::from(1),
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(2)
        }
    }
}
