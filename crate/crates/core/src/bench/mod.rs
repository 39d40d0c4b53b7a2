//! Experiment driver: builds a benchmark instance, solves it with
//! preconditioned MINRES, measures errors against the analytic solution when
//! one exists, and emits CSV/JSON reports.

pub mod problems;

pub use problems::{cd_problem, heat_problem, AnalyticSolution, ProblemKind, ProblemSpec};

use crate::fem::SpaceHierarchy;
use crate::minres::minres_solve;
use crate::precond::{build_preconditioner, PrecondConfig};
use crate::timesys::{build_be_system, build_cn_system, SaddleSystem, Scheme, TimeGrid};
use crate::{Error, Result};
use serde::Serialize;
use std::io::Write;
use std::time::Instant;

pub const DEFAULT_RTOL: f64 = 1e-6;
pub const DEFAULT_MAXIT: usize = 200;
pub const DEFAULT_MEMORY_CAP: u64 = 4 << 30;

/// One benchmark run: problem, discretization level, scheme, solver knobs.
#[derive(Clone)]
pub struct RunConfig {
    pub kind: ProblemKind,
    pub scheme: Scheme,
    pub level: u32,
    pub beta: f64,
    pub epsilon: f64,
    pub rtol: f64,
    pub maxit: usize,
    pub precond: PrecondConfig,
    pub memory_cap_bytes: u64,
}

impl RunConfig {
    pub fn heat(level: u32, scheme: Scheme, beta: f64) -> Self {
        Self {
            kind: ProblemKind::Heat,
            scheme,
            level,
            beta,
            epsilon: 1.0,
            rtol: DEFAULT_RTOL,
            maxit: DEFAULT_MAXIT,
            precond: PrecondConfig::default(),
            memory_cap_bytes: DEFAULT_MEMORY_CAP,
        }
    }

    pub fn convection_diffusion(level: u32, beta: f64, epsilon: f64) -> Self {
        Self {
            kind: ProblemKind::ConvectionDiffusion,
            scheme: Scheme::CrankNicolson,
            level,
            beta,
            epsilon,
            rtol: DEFAULT_RTOL,
            maxit: DEFAULT_MAXIT,
            precond: PrecondConfig::default(),
            memory_cap_bytes: DEFAULT_MEMORY_CAP,
        }
    }

    pub fn problem(&self) -> ProblemSpec {
        match self.kind {
            ProblemKind::Heat => heat_problem(self.beta),
            ProblemKind::ConvectionDiffusion => cd_problem(self.beta, self.epsilon),
        }
    }

    fn h(&self) -> f64 {
        2.0 / (1u64 << self.level) as f64
    }

    /// tau = h for Crank--Nicolson, tau = h^2 for backward Euler; the number
    /// of time steps must come out integral.
    pub fn time_grid(&self, t_f: f64) -> Result<TimeGrid> {
        let h = self.h();
        let tau = match self.scheme {
            Scheme::CrankNicolson => h,
            Scheme::BackwardEuler => h * h,
        };
        let steps = t_f / tau;
        if (steps - steps.round()).abs() > 1e-9 || steps.round() < 1.0 {
            return Err(Error::InvalidParameter(format!(
                "t_f / tau = {steps} is not a positive integer"
            )));
        }
        TimeGrid::new(t_f, steps.round() as usize)
    }

    /// Interior unknowns per space slice and time blocks per variable.
    pub fn dims(&self) -> Result<(usize, usize)> {
        let m = (1usize << self.level) - 1;
        let n_x = m * m;
        let tg = self.time_grid(2.0)?;
        let blocks = match self.scheme {
            Scheme::CrankNicolson => tg.n_t(),
            Scheme::BackwardEuler => tg.n_t() + 1,
        };
        Ok((n_x, blocks))
    }

    /// Coarse memory estimate: solver and preconditioner work vectors
    /// dominate at scale.
    pub fn estimated_bytes(&self) -> Result<u64> {
        let (n_x, blocks) = self.dims()?;
        let dim = 2 * n_x as u64 * blocks as u64;
        let vectors = 16 * dim; // Lanczos + sweep workspaces
        let matrices = 12 * 9 * n_x as u64; // per-level sparse operators
        Ok(8 * (vectors + matrices))
    }
}

/// One row of the benchmark report.
#[derive(Debug, Clone, Serialize)]
pub struct BenchRecord {
    pub scheme: String,
    pub level: u32,
    pub beta: f64,
    pub epsilon: f64,
    pub n_x: usize,
    pub n_t: usize,
    pub system_dim: usize,
    pub iterations: usize,
    pub wall_seconds: f64,
    pub y_error: Option<f64>,
    pub p_error: Option<f64>,
    pub converged: bool,
}

/// Relative error in the scaled vector max-norm: the largest nodal deviation
/// over all computed time levels, divided by the largest exact value over
/// the same set.
fn scaled_inf_error(
    sys: &SaddleSystem,
    values: &[f64],
    block_range: std::ops::Range<usize>,
    time_of_block: impl Fn(usize) -> f64,
    exact: &dyn Fn(f64, f64, f64) -> f64,
) -> f64 {
    let grid = &sys.grid;
    let n_x = sys.n_x;
    let mut num = 0.0f64;
    let mut den = 0.0f64;
    for blk in block_range {
        let t = time_of_block(blk);
        let slice = &values[blk * n_x..(blk + 1) * n_x];
        for (dof, &(ix, iy)) in grid.interior_coords().iter().enumerate() {
            let (x, y) = grid.node_coord(ix, iy);
            let want = exact(x, y, t);
            num = num.max((slice[dof] - want).abs());
            den = den.max(want.abs());
        }
    }
    num / den
}

/// Assembles, solves, and reports one benchmark run.
pub fn run_benchmark(cfg: &RunConfig) -> Result<BenchRecord> {
    let estimate = cfg.estimated_bytes()?;
    if estimate > cfg.memory_cap_bytes {
        return Err(Error::MemoryCap {
            estimate_bytes: estimate,
            cap_bytes: cfg.memory_cap_bytes,
        });
    }
    let problem = cfg.problem();
    let tg = cfg.time_grid(problem.t_f)?;
    let hierarchy = SpaceHierarchy::assemble(cfg.level, problem.epsilon, &problem.wind)?;
    let ops = hierarchy.finest();
    let sys = match cfg.scheme {
        Scheme::CrankNicolson => build_cn_system(ops, &tg, cfg.beta, &problem)?,
        Scheme::BackwardEuler => build_be_system(ops, &tg, cfg.beta, &problem)?,
    };

    // wall time covers preconditioner setup plus the MINRES loop, not
    // assembly
    let start = Instant::now();
    let pre = build_preconditioner(&sys, &hierarchy, &cfg.precond)?;
    let (solution, log) = minres_solve(&sys, pre.as_ref(), &sys.rhs, cfg.rtol, cfg.maxit)?;
    let wall_seconds = start.elapsed().as_secs_f64();

    let (y_error, p_error) = match &problem.analytic {
        None => (None, None),
        Some(sol) => {
            let half = sys.n_blocks * sys.n_x;
            let (ys, ps) = solution.split_at(half);
            let (y_err, p_err) = match sys.scheme {
                Scheme::CrankNicolson => {
                    // computed y levels are t_1..t_{n_t}; p levels t_0..t_{n_t-1}
                    let y = scaled_inf_error(&sys, ys, 0..tg.n_t(), |b| tg.node(b + 1), &*sol.y);
                    let p = scaled_inf_error(&sys, ps, 0..tg.n_t(), |b| tg.node(b), &*sol.p);
                    (y, p)
                }
                Scheme::BackwardEuler => {
                    let y = scaled_inf_error(&sys, ys, 0..tg.n_t() + 1, |b| tg.node(b), &*sol.y);
                    let p = scaled_inf_error(&sys, ps, 0..tg.n_t() + 1, |b| tg.node(b), &*sol.p);
                    (y, p)
                }
            };
            (Some(y_err), Some(p_err))
        }
    };

    Ok(BenchRecord {
        scheme: sys.scheme.tag().to_string(),
        level: cfg.level,
        beta: cfg.beta,
        epsilon: cfg.epsilon,
        n_x: sys.n_x,
        n_t: tg.n_t(),
        system_dim: sys.dim(),
        iterations: log.iterations(),
        wall_seconds,
        y_error,
        p_error,
        converged: log.converged,
    })
}

/// Aggregated report over a sweep, ordered by (scheme, level, beta, epsilon).
#[derive(Debug, Default, Serialize)]
pub struct BenchReport {
    pub records: Vec<BenchRecord>,
}

pub fn run_table(sweep: &[RunConfig]) -> Result<BenchReport> {
    let mut records = Vec::with_capacity(sweep.len());
    for cfg in sweep {
        records.push(run_benchmark(cfg)?);
    }
    let mut report = BenchReport { records };
    report.sort();
    Ok(report)
}

impl BenchReport {
    pub fn sort(&mut self) {
        self.records.sort_by(|a, b| {
            (a.scheme.as_str(), a.level)
                .cmp(&(b.scheme.as_str(), b.level))
                .then(a.beta.partial_cmp(&b.beta).unwrap())
                .then(a.epsilon.partial_cmp(&b.epsilon).unwrap())
        });
    }

    pub fn all_converged(&self) -> bool {
        self.records.iter().all(|r| r.converged)
    }

    pub const CSV_HEADER: &'static str =
        "scheme,level,beta,epsilon,n_x,n_t,dim,iters,seconds,y_error,p_error,converged";

    pub fn to_csv<W: Write>(&self, w: &mut W) -> Result<()> {
        writeln!(w, "{}", Self::CSV_HEADER)?;
        for r in &self.records {
            let fmt_opt = |v: Option<f64>| v.map(|x| format!("{x:e}")).unwrap_or_default();
            writeln!(
                w,
                "{},{},{:e},{:e},{},{},{},{},{:.3},{},{},{}",
                r.scheme,
                r.level,
                r.beta,
                r.epsilon,
                r.n_x,
                r.n_t,
                r.system_dim,
                r.iterations,
                r.wall_seconds,
                fmt_opt(r.y_error),
                fmt_opt(r.p_error),
                r.converged
            )?;
        }
        Ok(())
    }

    pub fn to_json<W: Write>(&self, w: &mut W) -> Result<()> {
        serde_json::to_writer_pretty(&mut *w, &self.records)
            .map_err(|e| Error::InvalidParameter(format!("json: {e}")))?;
        writeln!(w)?;
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn dimension_bookkeeping_matches_reported_sizes() {
        // h = 2^-5 (level 6): per-variable dimensions 2049 * 3969 for
        // backward Euler and 64 * 3969 for Crank--Nicolson
        let be = RunConfig::heat(6, Scheme::BackwardEuler, 1e-2);
        let (n_x, blocks) = be.dims().unwrap();
        assert_eq!(n_x, 3969);
        assert_eq!(blocks, 2049);
        assert_eq!(n_x * blocks, 8_132_481);
        let cn = RunConfig::heat(6, Scheme::CrankNicolson, 1e-2);
        let (n_x, blocks) = cn.dims().unwrap();
        assert_eq!(blocks, 64);
        assert_eq!(n_x * blocks, 254_016);
    }

    #[test]
    fn cn_tau_equals_h_and_be_tau_equals_h_squared() {
        let cn = RunConfig::heat(3, Scheme::CrankNicolson, 1e-2);
        let tg = cn.time_grid(2.0).unwrap();
        assert_eq!(tg.n_t(), 8);
        assert!((tg.tau() - 0.25).abs() < 1e-15);
        let be = RunConfig::heat(3, Scheme::BackwardEuler, 1e-2);
        let tg = be.time_grid(2.0).unwrap();
        assert_eq!(tg.n_t(), 32);
        assert!((tg.tau() - 0.0625).abs() < 1e-15);
    }

    #[test]
    fn memory_cap_trips_on_huge_backward_euler_runs() {
        let mut cfg = RunConfig::heat(7, Scheme::BackwardEuler, 1e-2);
        cfg.memory_cap_bytes = DEFAULT_MEMORY_CAP;
        assert!(matches!(run_benchmark(&cfg), Err(Error::MemoryCap { .. })));
    }

    #[test]
    fn empty_sweep_yields_header_only_csv() {
        let report = run_table(&[]).unwrap();
        let mut buf = Vec::new();
        report.to_csv(&mut buf).unwrap();
        assert_eq!(
            String::from_utf8(buf).unwrap(),
            format!("{}\n", BenchReport::CSV_HEADER)
        );
    }

    #[test]
    fn smoke_run_small_heat_instance() {
        let cfg = RunConfig::heat(2, Scheme::CrankNicolson, 1e-2);
        let rec = run_benchmark(&cfg).unwrap();
        assert!(rec.converged);
        assert_eq!(rec.n_x, 9);
        assert_eq!(rec.n_t, 4);
        assert_eq!(rec.system_dim, 72);
        assert!(rec.y_error.unwrap().is_finite());
        assert!(rec.p_error.unwrap().is_finite());
    }

    #[test]
    fn identical_configs_reproduce_bitwise_errors() {
        let cfg = RunConfig::heat(3, Scheme::CrankNicolson, 1e-2);
        let a = run_benchmark(&cfg).unwrap();
        let b = run_benchmark(&cfg).unwrap();
        assert_eq!(a.iterations, b.iterations);
        assert_eq!(a.y_error.unwrap().to_bits(), b.y_error.unwrap().to_bits());
        assert_eq!(a.p_error.unwrap().to_bits(), b.p_error.unwrap().to_bits());
    }

    #[test]
    fn report_ordering_and_json_shape() {
        let mut report = BenchReport {
            records: vec![
                BenchRecord {
                    scheme: "cn".into(),
                    level: 4,
                    beta: 1e-2,
                    epsilon: 1.0,
                    n_x: 225,
                    n_t: 16,
                    system_dim: 7200,
                    iterations: 20,
                    wall_seconds: 0.1,
                    y_error: None,
                    p_error: None,
                    converged: true,
                },
                BenchRecord {
                    scheme: "cn".into(),
                    level: 3,
                    beta: 1e-3,
                    epsilon: 1.0,
                    n_x: 49,
                    n_t: 8,
                    system_dim: 784,
                    iterations: 18,
                    wall_seconds: 0.05,
                    y_error: Some(1e-3),
                    p_error: Some(2e-3),
                    converged: true,
                },
            ],
        };
        report.sort();
        assert_eq!(report.records[0].level, 3);
        let mut buf = Vec::new();
        report.to_json(&mut buf).unwrap();
        let parsed: serde_json::Value = serde_json::from_slice(&buf).unwrap();
        assert_eq!(parsed.as_array().unwrap().len(), 2);
        assert_eq!(parsed[0]["system_dim"], 784);
        assert!(parsed[1]["y_error"].is_null());
    }
}
