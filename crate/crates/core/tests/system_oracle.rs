//! Independent full-assembly oracles for the all-at-once systems.
//!
//! The production path eliminates the initial state and final adjoint and
//! applies the symmetrizing transform before solving. These tests rebuild the
//! same discrete optimality conditions directly from the per-time-step
//! equations, without elimination or transformation, pin the initial/final
//! conditions as identity rows, solve densely, and require agreement with the
//! production solution. A backward Euler variant and a cross-scheme
//! refinement-consistency check complete the suite.

use pdeopt::bench::heat_problem;
use pdeopt::fem::{Grid2D, SpaceOperators, WindField};
use pdeopt::sparse::DenseMatrix;
use pdeopt::timesys::{build_be_system, build_cn_system, ProblemData, TimeGrid};
use std::sync::Arc;

struct Ctx {
    grid: Arc<Grid2D>,
    ops: SpaceOperators,
    tg: TimeGrid,
    beta: f64,
}

impl Ctx {
    fn heat(level: u32, n_t: usize, beta: f64) -> Self {
        let grid = Arc::new(Grid2D::new(level).unwrap());
        let ops = SpaceOperators::assemble(grid.clone(), 1.0, &WindField::zero()).unwrap();
        let tg = TimeGrid::new(2.0, n_t).unwrap();
        Self {
            grid,
            ops,
            tg,
            beta,
        }
    }

    fn n_x(&self) -> usize {
        self.grid.n_interior()
    }

    /// Mass-weighted nodal sample of the desired state (the production data
    /// route), recomputed independently here.
    fn yhat_vec(&self, prob: &dyn ProblemData, t: f64) -> Vec<f64> {
        let yi = self
            .grid
            .interior_values(|x, y| prob.desired_state(x, y, t));
        let yb = self
            .grid
            .boundary_values(|x, y| prob.desired_state(x, y, t));
        let mut v = self.ops.mass.spmv(&yi).unwrap();
        let vb = self.ops.mass_ib.spmv(&yb).unwrap();
        for (a, b) in v.iter_mut().zip(&vb) {
            *a += b;
        }
        v
    }

    fn lifts(&self, prob: &dyn ProblemData, t: f64) -> (Vec<f64>, Vec<f64>) {
        let g = self
            .grid
            .boundary_values(|x, y| prob.boundary_value(x, y, t));
        (
            self.ops.mass_ib.spmv(&g).unwrap(),
            self.ops.l_ib.spmv(&g).unwrap(),
        )
    }
}

fn set_block(a: &mut DenseMatrix, n_x: usize, bi: usize, bj: usize, blk: &DenseMatrix, s: f64) {
    for r in 0..n_x {
        for c in 0..n_x {
            a[(bi * n_x + r, bj * n_x + c)] += s * blk[(r, c)];
        }
    }
}

/// Uneliminated Crank--Nicolson system over (y^0..y^{n_t}, p^0..p^{n_t}),
/// interior DOFs, with pinned condition rows. Returns the dense solution.
fn cn_oracle_solution(ctx: &Ctx, prob: &dyn ProblemData) -> Vec<f64> {
    let n_x = ctx.n_x();
    let n_t = ctx.tg.n_t();
    let tau = ctx.tg.tau();
    let nb = n_t + 1;
    let dim = 2 * nb * n_x;
    let mut a = DenseMatrix::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];
    let md = ctx.ops.mass.to_dense();
    let ld = ctx.ops.l_op.to_dense();
    let mut lp = ld.clone();
    lp.scale(0.5 * tau);
    lp.add_scaled(1.0, &md);
    let mut lm = ld.clone();
    lm.scale(0.5 * tau);
    lm.add_scaled(-1.0, &md);
    let (lpt, lmt) = (lp.transpose(), lm.transpose());

    // block rows: 0 = initial condition, 1..=n_t = adjoint steps,
    // n_t + 1 = final adjoint condition, n_t + 2 .. 2 n_t + 1 = state steps.
    // block cols: 0..=n_t are y, n_t + 1 ..= 2 n_t + 1 are p.
    for i in 0..n_x {
        a[(i, i)] = 1.0;
    }
    let y0 = ctx.grid.interior_values(|x, y| prob.initial_state(x, y));
    rhs[..n_x].copy_from_slice(&y0);
    for n in 0..n_t {
        let row = 1 + n;
        set_block(&mut a, n_x, row, n, &md, 0.5 * tau);
        set_block(&mut a, n_x, row, n + 1, &md, 0.5 * tau);
        set_block(&mut a, n_x, row, nb + n, &lpt, 1.0);
        set_block(&mut a, n_x, row, nb + n + 1, &lmt, 1.0);
        let (t0, t1) = (ctx.tg.node(n), ctx.tg.node(n + 1));
        let (yh0, yh1) = (ctx.yhat_vec(prob, t0), ctx.yhat_vec(prob, t1));
        let (mg0, _) = ctx.lifts(prob, t0);
        let (mg1, _) = ctx.lifts(prob, t1);
        for k in 0..n_x {
            rhs[row * n_x + k] = 0.5 * tau * (yh0[k] + yh1[k] - mg0[k] - mg1[k]);
        }
    }
    for i in 0..n_x {
        a[((nb) * n_x + i, (nb + n_t) * n_x + i)] = 1.0;
    }
    for n in 0..n_t {
        let row = nb + 1 + n;
        set_block(&mut a, n_x, row, n, &lm, 1.0);
        set_block(&mut a, n_x, row, n + 1, &lp, 1.0);
        set_block(&mut a, n_x, row, nb + n, &md, -0.5 * tau / ctx.beta);
        set_block(&mut a, n_x, row, nb + n + 1, &md, -0.5 * tau / ctx.beta);
        let (t0, t1) = (ctx.tg.node(n), ctx.tg.node(n + 1));
        let (mg0, lg0) = ctx.lifts(prob, t0);
        let (mg1, lg1) = ctx.lifts(prob, t1);
        for k in 0..n_x {
            // forcing is zero in the heat benchmark; only lifts remain
            rhs[row * n_x + k] = -(0.5 * tau * (lg0[k] + lg1[k]) + mg1[k] - mg0[k]);
        }
    }
    a.lu().unwrap().solve(&rhs)
}

#[test]
fn cn_production_matches_uneliminated_oracle() {
    let ctx = Ctx::heat(2, 2, 1e-2);
    let prob = heat_problem(ctx.beta);
    let oracle = cn_oracle_solution(&ctx, &prob);

    let sys = build_cn_system(&ctx.ops, &ctx.tg, ctx.beta, &prob).unwrap();
    let full = DenseMatrix::from_operator(sys.dim(), |x| sys.apply(x).unwrap());
    let sol = full.lu().unwrap().solve(&sys.rhs);

    let n_x = ctx.n_x();
    let n_t = ctx.tg.n_t();
    let nb = n_t + 1;
    let half = n_t * n_x;
    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for n in 1..=n_t {
        for k in 0..n_x {
            worst = worst.max((sol[(n - 1) * n_x + k] - oracle[n * n_x + k]).abs());
        }
    }
    for n in 0..n_t {
        for k in 0..n_x {
            worst = worst.max((sol[half + n * n_x + k] - oracle[(nb + n) * n_x + k]).abs());
        }
    }
    assert!(
        worst <= 1e-10 * scale,
        "max deviation {worst:e} vs scale {scale:e}"
    );
    // the eliminated variables are reproduced exactly by the oracle
    for k in 0..n_x {
        let y0 = prob.initial_state(
            ctx.grid
                .node_coord(
                    ctx.grid.interior_coords()[k].0,
                    ctx.grid.interior_coords()[k].1,
                )
                .0,
            ctx.grid
                .node_coord(
                    ctx.grid.interior_coords()[k].0,
                    ctx.grid.interior_coords()[k].1,
                )
                .1,
        );
        assert!((oracle[k] - y0).abs() <= 1e-12 * (1.0 + y0.abs()));
        assert!(oracle[(nb + n_t) * n_x + k].abs() <= 1e-12 * scale);
    }
}

/// Uneliminated backward Euler oracle with pinned y^0 and p^{n_t} rows.
#[test]
fn be_production_matches_uneliminated_oracle() {
    let ctx = Ctx::heat(2, 4, 1e-2);
    let prob = heat_problem(ctx.beta);
    let n_x = ctx.n_x();
    let n_t = ctx.tg.n_t();
    let tau = ctx.tg.tau();
    let nb = n_t + 1;
    let dim = 2 * nb * n_x;
    let mut a = DenseMatrix::zeros(dim, dim);
    let mut rhs = vec![0.0; dim];
    let md = ctx.ops.mass.to_dense();
    let ld = ctx.ops.l_op.to_dense();
    let mut le = ld.clone();
    le.scale(tau);
    le.add_scaled(1.0, &md);
    let let_ = le.transpose();

    // rows: 0 = y^0 condition, 1..=n_t = adjoint steps (n = 0..n_t-1),
    // nb = p^{n_t} condition, nb+1..=nb+n_t = state steps (n = 0..n_t-1)
    for i in 0..n_x {
        a[(i, i)] = 1.0;
    }
    let y0 = ctx.grid.interior_values(|x, y| prob.initial_state(x, y));
    rhs[..n_x].copy_from_slice(&y0);
    for n in 0..n_t {
        let row = 1 + n;
        // tau M y^n + (L^E)^T p^n - M p^{n+1} = tau M yhat^n - tau M_ib g^n
        set_block(&mut a, n_x, row, n, &md, tau);
        set_block(&mut a, n_x, row, nb + n, &let_, 1.0);
        set_block(&mut a, n_x, row, nb + n + 1, &md, -1.0);
        let t = ctx.tg.node(n);
        let yh = ctx.yhat_vec(&prob, t);
        let (mg, _) = ctx.lifts(&prob, t);
        for k in 0..n_x {
            rhs[row * n_x + k] = tau * (yh[k] - mg[k]);
        }
    }
    for i in 0..n_x {
        a[(nb * n_x + i, (nb + n_t) * n_x + i)] = 1.0;
    }
    for n in 0..n_t {
        let row = nb + 1 + n;
        // -M y^n + L^E y^{n+1} - (tau/beta) M p^{n+1}
        //   = tau f^{n+1} + M_ib g^n - (tau L_ib + M_ib) g^{n+1}
        set_block(&mut a, n_x, row, n, &md, -1.0);
        set_block(&mut a, n_x, row, n + 1, &le, 1.0);
        set_block(&mut a, n_x, row, nb + n + 1, &md, -tau / ctx.beta);
        let (mg0, _) = ctx.lifts(&prob, ctx.tg.node(n));
        let (mg1, lg1) = ctx.lifts(&prob, ctx.tg.node(n + 1));
        for k in 0..n_x {
            rhs[row * n_x + k] = mg0[k] - (tau * lg1[k] + mg1[k]);
        }
    }
    let oracle = a.lu().unwrap().solve(&rhs);

    let sys = build_be_system(&ctx.ops, &ctx.tg, ctx.beta, &prob).unwrap();
    let full = DenseMatrix::from_operator(sys.dim(), |x| sys.apply(x).unwrap());
    let sol = full.lu().unwrap().solve(&sys.rhs);

    let scale = oracle.iter().fold(0.0f64, |m, v| m.max(v.abs()));
    let mut worst = 0.0f64;
    for i in 0..dim {
        worst = worst.max((sol[i] - oracle[i]).abs());
    }
    assert!(
        worst <= 1e-9 * scale,
        "max deviation {worst:e} vs scale {scale:e}"
    );
}

#[test]
fn both_schemes_converge_to_the_analytic_solution() {
    use pdeopt::bench::{run_benchmark, RunConfig};
    use pdeopt::timesys::Scheme;
    let mut last_cn = f64::INFINITY;
    let mut last_be = f64::INFINITY;
    for l in [3u32, 4] {
        let cn = run_benchmark(&RunConfig::heat(l, Scheme::CrankNicolson, 1e-2)).unwrap();
        let be = run_benchmark(&RunConfig::heat(l, Scheme::BackwardEuler, 1e-2)).unwrap();
        let (cy, by) = (cn.y_error.unwrap(), be.y_error.unwrap());
        assert!(cy < last_cn, "CN errors must shrink: {cy} vs {last_cn}");
        assert!(by < last_be, "BE errors must shrink: {by} vs {last_be}");
        last_cn = cy;
        last_be = by;
    }
}

#[test]
fn minres_iteration_bound_across_beta_at_l3() {
    // SPD-preconditioned CN systems at l = 3: no more than 30 iterations for
    // any beta in {1e-1 .. 1e-6}
    use pdeopt::bench::{run_benchmark, RunConfig};
    use pdeopt::timesys::Scheme;
    for e in 1..=6 {
        let beta = 10f64.powi(-e);
        let rec = run_benchmark(&RunConfig::heat(3, Scheme::CrankNicolson, beta)).unwrap();
        assert!(rec.converged);
        assert!(rec.iterations <= 30, "beta=1e-{e}: {}", rec.iterations);
    }
}

#[test]
fn vcycle_count_independence() {
    // iteration counts move by at most 3 when the Schur block solves use 5
    // V-cycles instead of 3
    use pdeopt::bench::{run_benchmark, RunConfig};
    use pdeopt::precond::PrecondConfig;
    for (level, beta, eps) in [(4u32, 1e-1, 1.0 / 500.0), (3, 1e-3, 1.0 / 20.0)] {
        let mut counts = Vec::new();
        for cycles in [3usize, 5] {
            let mut cfg = RunConfig::convection_diffusion(level, beta, eps);
            cfg.precond = PrecondConfig {
                mg_cycles: cycles,
                ..Default::default()
            };
            counts.push(run_benchmark(&cfg).unwrap().iterations);
        }
        let diff = counts[0].abs_diff(counts[1]);
        assert!(diff <= 3, "l={level}: {counts:?}");
    }
}
