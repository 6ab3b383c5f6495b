//! `qbus`: variational preparation of spin-chain ground states through a shared bosonic bus.

mod commands;
mod config;
mod error;

use std::path::PathBuf;
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};

use crate::config::{parse_axis, Axis, ExperimentConfig};
use crate::error::CliError;

#[derive(Parser)]
#[command(name = "qbus", version, about = "Bus-mediated variational state preparation")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Optimize one configuration and write its record as JSON.
    Run(ExperimentArgs),
    /// Optimize a grid along one axis, then sweep warm starts; writes `.jsonl` and `.csv`.
    Scan(ExperimentArgs),
    /// Symmetry, controllability, bond-dimension and bound audits at small sizes.
    Audit {
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Inject a charge-violating generator into the audited set (must fail).
        #[arg(long)]
        corrupt_generator: bool,
        #[arg(long)]
        output: Option<PathBuf>,
    },
    /// Compute or load the cached reference data of a chain.
    Oracle {
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = qbus::hamiltonians::DEFAULT_DIMERIZATION)]
        t: f64,
        #[arg(long, default_value_t = qbus::hamiltonians::DEFAULT_EDGE_FIELD)]
        b_tilde: f64,
    },
}

#[derive(Args)]
struct ExperimentArgs {
    /// JSON configuration; flags override its fields.
    #[arg(long)]
    config: Option<PathBuf>,
    /// qdb-mps, csd-mps, csa or qdb-mps-modular.
    #[arg(long)]
    ansatz: Option<String>,
    /// Chain length, or a comma-separated grid.
    #[arg(long, value_parser = parse_axis::<usize>)]
    n: Option<Axis<usize>>,
    /// Parameter count, or a comma-separated grid.
    #[arg(long, value_parser = parse_axis::<usize>)]
    np: Option<Axis<usize>>,
    /// Mean thermal occupation of the bus, or a comma-separated grid.
    #[arg(long, value_parser = parse_axis::<f64>)]
    n0: Option<Axis<f64>>,
    #[arg(long)]
    l: Option<usize>,
    #[arg(long)]
    n_traps: Option<usize>,
    #[arg(long)]
    t: Option<f64>,
    #[arg(long)]
    b_tilde: Option<f64>,
    #[arg(long)]
    seed: Option<u64>,
    #[arg(long)]
    restarts: Option<usize>,
    #[arg(long)]
    hops: Option<usize>,
    #[arg(long)]
    max_iter: Option<usize>,
    #[arg(long)]
    output: Option<PathBuf>,
    /// Evaluate at zero angles instead of optimizing.
    #[arg(long)]
    dry_run: bool,
    #[arg(long)]
    record_wall_time: bool,
}

impl ExperimentArgs {
    fn resolve(self) -> Result<ExperimentConfig, CliError> {
        let mut c = match &self.config {
            Some(p) => ExperimentConfig::load(p)?,
            None => ExperimentConfig::default(),
        };
        macro_rules! set {
            ($($flag:ident => $($field:ident).+),* $(,)?) => {
                $(if let Some(v) = self.$flag { c.$($field).+ = v; })*
            };
        }
        set!(ansatz => ansatz, n => n, np => np, n0 => n0, l => l, n_traps => n_traps, t => t,
             b_tilde => b_tilde, seed => seed, restarts => optimizer.restarts, hops => optimizer.n_hops,
             max_iter => optimizer.max_iter);
        if self.output.is_some() {
            c.output = self.output;
        }
        c.dry_run |= self.dry_run;
        c.record_wall_time |= self.record_wall_time;
        Ok(c)
    }
}

fn execute(cli: Cli) -> Result<(), CliError> {
    match cli.command {
        Command::Run(args) => {
            commands::cmd_run(&args.resolve()?)?;
        }
        Command::Scan(args) => {
            let out = commands::cmd_scan(&args.resolve()?)?;
            eprintln!(
                "scan: {} points, {} sweep passes, records in {}, table in {}",
                out.records.len(),
                out.sweep_passes,
                out.jsonl.display(),
                out.csv.display()
            );
        }
        Command::Audit { seed, corrupt_generator, output } => {
            let report = commands::cmd_audit(seed, corrupt_generator, output.as_deref())?;
            eprintln!("audit: {} checks passed", report.checks.len());
        }
        Command::Oracle { n, t, b_tilde } => {
            let s = commands::cmd_oracle(n, t, b_tilde)?;
            println!("{}", serde_json::to_string(&s)?);
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    match execute(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("{}", e.to_json());
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
