//! Benchmark CLI for the all-at-once optimal control solver.
//!
//! Subcommands:
//! - `heat-bench`: one heat-control run (Crank--Nicolson or backward Euler).
//! - `cd-bench`: one convection--diffusion control run.
//! - `table`: a sweep of runs described by a JSON config, emitted as CSV and
//!   JSON reports.
//! - `eig-verify`: dense verification of the Schur-complement eigenvalue
//!   bounds, with a CSV eigenvalue scatter.
//!
//! Exit code is zero only when every run converged and every requested bound
//! check passed.

use clap::{Args, Parser, Subcommand, ValueEnum};
use pdeopt::bench::{run_benchmark, run_table, BenchReport, RunConfig};
use pdeopt::fem::{Grid2D, SpaceOperators, WindField};
use pdeopt::precond::PrecondConfig;
use pdeopt::timesys::{Scheme, TimeGrid};
use pdeopt::verify::{check_schur_bounds, emit_eig_scatter};
use serde::Deserialize;
use std::fs::File;
use std::io::{BufWriter, Write};
use std::path::PathBuf;
use std::process::ExitCode;
use std::sync::Arc;

#[derive(Parser)]
#[command(
    name = "pdeopt",
    about = "All-at-once PDE-constrained optimal control benchmarks"
)]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Clone, Copy, ValueEnum)]
enum SchemeArg {
    Cn,
    Be,
}

impl From<SchemeArg> for Scheme {
    fn from(s: SchemeArg) -> Self {
        match s {
            SchemeArg::Cn => Scheme::CrankNicolson,
            SchemeArg::Be => Scheme::BackwardEuler,
        }
    }
}

#[derive(Clone, Copy, ValueEnum)]
enum WindArg {
    Zero,
    Recirculating,
}

#[derive(Args, Clone, Copy)]
struct SolverOpts {
    /// Relative preconditioned residual tolerance
    #[arg(long, default_value_t = 1e-6)]
    rtol: f64,
    /// Maximum MINRES iterations
    #[arg(long, default_value_t = 200)]
    maxit: usize,
    /// Chebyshev semi-iteration steps for mass blocks
    #[arg(long, default_value_t = 20)]
    cheb_steps: usize,
    /// Multigrid V-cycles per Schur block solve
    #[arg(long, default_value_t = 3)]
    mg_cycles: usize,
    /// Jacobi smoothing sweeps (each of pre and post)
    #[arg(long, default_value_t = 3)]
    mg_smoother_sweeps: usize,
    /// Jacobi smoother damping
    #[arg(long, default_value_t = 0.7)]
    mg_damping: f64,
    /// Perturbation of the backward Euler (1,1)-block
    #[arg(long, default_value_t = 1e-3)]
    xi: f64,
    /// Memory cap in GiB for the run-size guard
    #[arg(long, default_value_t = 4.0)]
    memory_cap_gib: f64,
}

impl SolverOpts {
    fn apply(&self, cfg: &mut RunConfig) {
        cfg.rtol = self.rtol;
        cfg.maxit = self.maxit;
        cfg.precond = PrecondConfig {
            cheb_steps: self.cheb_steps,
            mg_cycles: self.mg_cycles,
            mg_smoother_sweeps: self.mg_smoother_sweeps,
            mg_damping: self.mg_damping,
            xi: self.xi,
        };
        cfg.memory_cap_bytes = (self.memory_cap_gib * (1u64 << 30) as f64) as u64;
    }
}

#[derive(Subcommand)]
enum Command {
    /// Heat control benchmark at one level
    HeatBench {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long, value_enum, default_value = "cn")]
        scheme: SchemeArg,
        #[command(flatten)]
        solver: SolverOpts,
        /// Write the JSON report here (CSV always goes to stdout)
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Convection--diffusion control benchmark at one level
    CdBench {
        #[arg(long)]
        level: u32,
        #[arg(long)]
        beta: f64,
        #[arg(long)]
        epsilon: f64,
        #[command(flatten)]
        solver: SolverOpts,
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Run a sweep described by a JSON config file
    Table {
        #[arg(long)]
        config: PathBuf,
        /// JSON report path (stdout when omitted and no CSV path is given)
        #[arg(long)]
        out_json: Option<PathBuf>,
        /// CSV report path (stdout when omitted)
        #[arg(long)]
        out_csv: Option<PathBuf>,
    },
    /// Dense verification of the Schur-complement eigenvalue bounds
    EigVerify {
        #[arg(long)]
        level: u32,
        /// Comma-separated regularization parameters
        #[arg(long, value_delimiter = ',')]
        beta_list: Vec<f64>,
        #[arg(long)]
        epsilon: f64,
        #[arg(long, value_enum, default_value = "recirculating")]
        wind: WindArg,
        /// Eigenvalue scatter CSV path
        #[arg(long)]
        out: PathBuf,
    },
}

/// JSON sweep description for `table`.
#[derive(Deserialize)]
struct SweepFile {
    runs: Vec<SweepRun>,
}

#[derive(Deserialize)]
struct SweepRun {
    kind: String,
    level: u32,
    beta: f64,
    #[serde(default)]
    epsilon: Option<f64>,
    #[serde(default)]
    scheme: Option<String>,
    #[serde(default)]
    rtol: Option<f64>,
}

impl SweepRun {
    fn to_config(&self) -> Result<RunConfig, String> {
        let mut cfg = match self.kind.as_str() {
            "heat" => {
                let scheme = match self.scheme.as_deref().unwrap_or("cn") {
                    "cn" => Scheme::CrankNicolson,
                    "be" => Scheme::BackwardEuler,
                    other => return Err(format!("unknown scheme '{other}'")),
                };
                RunConfig::heat(self.level, scheme, self.beta)
            }
            "cd" => {
                let eps = self
                    .epsilon
                    .ok_or_else(|| "cd runs need an epsilon".to_string())?;
                RunConfig::convection_diffusion(self.level, self.beta, eps)
            }
            other => return Err(format!("unknown problem kind '{other}'")),
        };
        if let Some(rtol) = self.rtol {
            cfg.rtol = rtol;
        }
        Ok(cfg)
    }
}

fn write_report(report: &BenchReport, out: Option<&PathBuf>) -> Result<(), String> {
    let mut stdout = std::io::stdout();
    report
        .to_csv(&mut stdout)
        .map_err(|e| format!("csv: {e}"))?;
    if let Some(path) = out {
        let mut w = BufWriter::new(File::create(path).map_err(|e| e.to_string())?);
        report.to_json(&mut w).map_err(|e| format!("json: {e}"))?;
        eprintln!("wrote JSON report to {}", path.display());
    }
    Ok(())
}

fn single_run(
    mut cfg: RunConfig,
    solver: &SolverOpts,
    out: Option<&PathBuf>,
) -> Result<bool, String> {
    solver.apply(&mut cfg);
    let record = run_benchmark(&cfg).map_err(|e| e.to_string())?;
    let converged = record.converged;
    let report = BenchReport {
        records: vec![record],
    };
    write_report(&report, out)?;
    Ok(converged)
}

fn run() -> Result<bool, String> {
    let cli = Cli::parse();
    match cli.command {
        Command::HeatBench {
            level,
            beta,
            scheme,
            solver,
            out,
        } => single_run(
            RunConfig::heat(level, scheme.into(), beta),
            &solver,
            out.as_ref(),
        ),
        Command::CdBench {
            level,
            beta,
            epsilon,
            solver,
            out,
        } => single_run(
            RunConfig::convection_diffusion(level, beta, epsilon),
            &solver,
            out.as_ref(),
        ),
        Command::Table {
            config,
            out_json,
            out_csv,
        } => {
            let text = std::fs::read_to_string(&config).map_err(|e| e.to_string())?;
            let sweep: SweepFile = serde_json::from_str(&text).map_err(|e| e.to_string())?;
            let configs: Vec<RunConfig> = sweep
                .runs
                .iter()
                .map(|r| r.to_config())
                .collect::<Result<_, _>>()?;
            let report = run_table(&configs).map_err(|e| e.to_string())?;
            match (&out_csv, &out_json) {
                (Some(path), _) => {
                    let mut w = BufWriter::new(File::create(path).map_err(|e| e.to_string())?);
                    report.to_csv(&mut w).map_err(|e| format!("csv: {e}"))?;
                    eprintln!("wrote CSV report to {}", path.display());
                }
                (None, _) => {
                    report
                        .to_csv(&mut std::io::stdout())
                        .map_err(|e| format!("csv: {e}"))?;
                }
            }
            if let Some(path) = &out_json {
                let mut w = BufWriter::new(File::create(path).map_err(|e| e.to_string())?);
                report.to_json(&mut w).map_err(|e| format!("json: {e}"))?;
                eprintln!("wrote JSON report to {}", path.display());
            }
            Ok(report.all_converged())
        }
        Command::EigVerify {
            level,
            beta_list,
            epsilon,
            wind,
            out,
        } => {
            if beta_list.is_empty() {
                return Err("--beta-list needs at least one value".into());
            }
            let wind = match wind {
                WindArg::Zero => WindField::zero(),
                WindArg::Recirculating => WindField::recirculating(),
            };
            let grid = Arc::new(Grid2D::new(level).map_err(|e| e.to_string())?);
            let h = grid.h();
            let ops = SpaceOperators::assemble(grid, epsilon, &wind).map_err(|e| e.to_string())?;
            let n_t = (2.0 / h).round() as usize;
            let tg = TimeGrid::new(2.0, n_t).map_err(|e| e.to_string())?;
            let mut all_pass = true;
            let mut results = Vec::new();
            for &beta in &beta_list {
                let check = check_schur_bounds(&ops, &tg, beta).map_err(|e| e.to_string())?;
                println!(
                    "beta={beta:e}: eigenvalues in [{:.12}, {:.12}] -> {}",
                    check.lambda_min,
                    check.lambda_max,
                    if check.pass {
                        "within [1/2, 1]"
                    } else {
                        "OUT OF BOUNDS"
                    }
                );
                all_pass &= check.pass;
                results.push((beta, check.eigenvalues));
            }
            let mut w = BufWriter::new(File::create(&out).map_err(|e| e.to_string())?);
            emit_eig_scatter(&results, &mut w).map_err(|e| e.to_string())?;
            w.flush().map_err(|e| e.to_string())?;
            eprintln!("wrote eigenvalue scatter to {}", out.display());
            Ok(all_pass)
        }
    }
}

fn main() -> ExitCode {
    match run() {
        Ok(true) => ExitCode::SUCCESS,
        Ok(false) => {
            eprintln!("one or more runs failed to converge or a bound check failed");
            ExitCode::FAILURE
        }
        Err(msg) => {
            eprintln!("error: {msg}");
            ExitCode::FAILURE
        }
    }
}
