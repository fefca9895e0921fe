use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use sevalue_cli::{
    cmd_fig1, cmd_fig2, cmd_sevalue, cmd_witness, CliError, Document, Format, PartitionChoice, RunConfig,
};
use sevalue_core::solver::Partition;
use sevalue_core::witness::BoundSource;
use sevalue_core::Statistics;

/// Separability eigenvalues and entanglement witnesses for distinguishable
/// particles, bosons and fermions.
///
/// Exit codes: 0 success, 2 input error, 3 numerical failure (no solver start
/// converged). SEVALUE_THREADS caps the worker threads; output does not depend on it.
#[derive(Parser)]
#[command(name = "sevalue", version)]
struct Cli {
    #[command(flatten)]
    run: RunArgs,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args)]
struct RunArgs {
    /// Seed for every random start and sample.
    #[arg(long, global = true, default_value_t = 0)]
    seed: u64,
    /// Random starts per solver run.
    #[arg(long, global = true, default_value_t = 64)]
    starts: usize,
    /// Residual tolerance for solver convergence.
    #[arg(long, global = true, default_value_t = 1e-9)]
    tol: f64,
    #[arg(long, global = true, value_enum, default_value_t = Format::Json)]
    format: Format,
    /// Write to this file instead of stdout.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Cross-check closed forms numerically.
    #[arg(long, global = true)]
    verify: bool,
}

#[derive(Subcommand)]
enum Command {
    /// Noise thresholds p* of the balanced two-particle states.
    ///
    /// CSV columns: d, panel, p_star, g, dim, detectable, bound_source, g_numeric, verify_ok.
    /// Panels: SR>1 and SR>2 (distinguishable Schmidt number), boson, fermion.
    Fig1 {
        #[arg(long, default_value_t = 2)]
        d_min: usize,
        #[arg(long, default_value_t = 8)]
        d_max: usize,
    },
    /// Interference expectation of dephased GHZ-type states against (1/2)^(K-1).
    ///
    /// CSV columns: delta, expectation, k2..k<K_MAX>, delta_star, bound_source,
    /// numeric_expectation, tail_bound.
    Fig2 {
        #[arg(long = "n", default_value_t = 5)]
        n: usize,
        #[arg(long, default_value_t = 0.5773502691896258)]
        r: f64,
        #[arg(long, default_value_t = 5)]
        k_max: usize,
        #[arg(long, default_value_t = 32)]
        delta_steps: usize,
    },
    /// Numeric sup{g} of an observable file.
    ///
    /// CSV columns: partition, g, bound_source, starts, converged, hit_fraction,
    /// best_residual, oracle_bound, unconverged.
    Sevalue {
        /// JSON matrix file {d, N, statistics?, entries: [[row, col, re, im], ...]}.
        observable: PathBuf,
        #[arg(long, value_parser = parse_stats)]
        stats: Option<Statistics>,
        /// Partition such as "(1,2)".
        #[arg(long, value_parser = parse_partition)]
        partition: Option<Partition>,
        /// Number of parties; every partition of that size is solved.
        #[arg(long)]
        k: Option<usize>,
        /// Samples for the brute-force oracle (0 disables it).
        #[arg(long, default_value_t = 100_000)]
        oracle_samples: usize,
    },
    /// Entanglement verdict for a state file against an observable file.
    ///
    /// CSV columns: expectation, bound, verdict, margin, witness_value,
    /// bound_source, k, partition, statistics.
    Witness {
        /// JSON vector {d, N, amplitudes: [[re, im], ...]} or matrix file.
        state: PathBuf,
        observable: PathBuf,
        #[arg(long, value_parser = parse_stats)]
        stats: Option<Statistics>,
        #[arg(long, value_parser = parse_partition)]
        partition: Option<Partition>,
        #[arg(long)]
        k: Option<usize>,
        /// analytic, numeric or oracle; defaults to analytic where available.
        #[arg(long, value_parser = parse_source)]
        source: Option<BoundSource>,
    },
}

fn parse_stats(s: &str) -> Result<Statistics, String> {
    s.parse().map_err(|e: sevalue_core::Error| e.to_string())
}

fn parse_partition(s: &str) -> Result<Partition, String> {
    s.parse().map_err(|e: sevalue_core::Error| e.to_string())
}

fn parse_source(s: &str) -> Result<BoundSource, String> {
    s.parse().map_err(|e: sevalue_core::Error| e.to_string())
}

fn run(cli: Cli) -> Result<(Document, Format, Option<PathBuf>), CliError> {
    let cfg = RunConfig { seed: cli.run.seed, starts: cli.run.starts, tol: cli.run.tol, verify: cli.run.verify };
    if cfg.starts == 0 {
        return Err(CliError::Input("--starts must be at least 1".into()));
    }
    if !(cfg.tol > 0.0) {
        return Err(CliError::Input(format!("--tol must be positive, got {}", cfg.tol)));
    }
    let doc = match cli.command {
        Command::Fig1 { d_min, d_max } => cmd_fig1(d_min, d_max, &cfg)?,
        Command::Fig2 { n, r, k_max, delta_steps } => cmd_fig2(n, r, k_max, delta_steps, &cfg)?,
        Command::Sevalue { observable, stats, partition, k, oracle_samples } => {
            let choice = PartitionChoice::from_flags(partition, k)?;
            cmd_sevalue(&observable, stats, &choice, oracle_samples, &cfg)?
        }
        Command::Witness { state, observable, stats, partition, k, source } => {
            let choice = PartitionChoice::from_flags(partition, k)?;
            cmd_witness(&state, &observable, stats, &choice, source, &cfg)?
        }
    };
    Ok((doc, cli.run.format, cli.run.out))
}

fn configure_threads() -> Result<(), CliError> {
    let Ok(value) = std::env::var("SEVALUE_THREADS") else { return Ok(()) };
    let threads: usize = value
        .parse()
        .ok()
        .filter(|&t| t > 0)
        .ok_or_else(|| CliError::Input(format!("SEVALUE_THREADS must be a positive integer, got '{value}'")))?;
    rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build_global()
        .map_err(|e| CliError::Input(e.to_string()))
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = configure_threads().and_then(|_| run(cli)).and_then(|(doc, format, out)| {
        let text = doc.render(format);
        match out {
            Some(path) => std::fs::write(&path, text)
                .map_err(|e| CliError::Input(format!("cannot write {}: {e}", path.display()))),
            None => {
                print!("{text}");
                Ok(())
            }
        }
    });
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
