//! Benchmark problem definitions.
//!
//! Heat control with a manufactured analytic optimal pair on
//! (-1,1)^2 x (0,2), and convection--diffusion control with the
//! recirculating wind, discontinuous inflow data, and an exponential
//! boundary-layer target.

use crate::fem::WindField;
use crate::timesys::ProblemData;
use std::f64::consts::PI;
use std::sync::Arc;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProblemKind {
    Heat,
    ConvectionDiffusion,
}

impl ProblemKind {
    pub fn tag(&self) -> &'static str {
        match self {
            ProblemKind::Heat => "heat",
            ProblemKind::ConvectionDiffusion => "cd",
        }
    }
}

type Field3 = Arc<dyn Fn(f64, f64, f64) -> f64 + Send + Sync>;
type Field2 = Arc<dyn Fn(f64, f64) -> f64 + Send + Sync>;

/// Known optimal state/adjoint pair, when the problem has one.
#[derive(Clone)]
pub struct AnalyticSolution {
    pub y: Field3,
    pub p: Field3,
}

/// One control problem instance: coefficients plus all data fields.
#[derive(Clone)]
pub struct ProblemSpec {
    pub kind: ProblemKind,
    pub epsilon: f64,
    pub beta: f64,
    pub t_f: f64,
    pub wind: WindField,
    pub y_hat: Field3,
    pub f: Field3,
    pub y0: Field2,
    pub g_d: Field3,
    pub analytic: Option<AnalyticSolution>,
}

impl ProblemData for ProblemSpec {
    fn desired_state(&self, x1: f64, x2: f64, t: f64) -> f64 {
        (self.y_hat)(x1, x2, t)
    }
    fn forcing(&self, x1: f64, x2: f64, t: f64) -> f64 {
        (self.f)(x1, x2, t)
    }
    fn initial_state(&self, x1: f64, x2: f64) -> f64 {
        (self.y0)(x1, x2)
    }
    fn boundary_value(&self, x1: f64, x2: f64, t: f64) -> f64 {
        (self.g_d)(x1, x2, t)
    }
}

fn cosine_bump(x1: f64, x2: f64) -> f64 {
    (0.5 * PI * x1).cos() * (0.5 * PI * x2).cos()
}

/// Heat control benchmark: epsilon = 1, zero wind, t_f = 2, f = 0, with
/// analytic optimal state and adjoint built from the separable cosine bump.
pub fn heat_problem(beta: f64) -> ProblemSpec {
    let t_f: f64 = 2.0;
    let e_tf = t_f.exp();
    let pi2 = PI * PI;
    let c_state = 2.0 / (pi2 * beta);
    let c_decay = 2.0 / ((2.0 + pi2) * beta);

    let y_star = move |x1: f64, x2: f64, t: f64| {
        1.0 + (c_state * e_tf - c_decay * t.exp()) * cosine_bump(x1, x2)
    };
    let p_star = move |x1: f64, x2: f64, t: f64| (e_tf - t.exp()) * cosine_bump(x1, x2);
    let y_hat = move |x1: f64, x2: f64, t: f64| {
        let factor = (c_state + 0.5 * pi2) * e_tf + (1.0 - c_decay - 0.5 * pi2) * t.exp();
        1.0 + factor * cosine_bump(x1, x2)
    };

    ProblemSpec {
        kind: ProblemKind::Heat,
        epsilon: 1.0,
        beta,
        t_f,
        wind: WindField::zero(),
        y_hat: Arc::new(y_hat),
        f: Arc::new(|_, _, _| 0.0),
        y0: Arc::new(move |x1, x2| y_star(x1, x2, 0.0)),
        g_d: Arc::new(y_star),
        analytic: Some(AnalyticSolution {
            y: Arc::new(y_star),
            p: Arc::new(p_star),
        }),
    }
}

/// Convection--diffusion control benchmark: recirculating wind, t_f = 2,
/// f = 0, target y_hat = exp(-10 (1 - x1)); the state data is 1 on the
/// closed edge {1} x [-1,1] (corners included) and 0 elsewhere. No analytic
/// solution is known.
pub fn cd_problem(beta: f64, epsilon: f64) -> ProblemSpec {
    let on_inflow = |x1: f64| x1 >= 1.0 - 1e-12;
    ProblemSpec {
        kind: ProblemKind::ConvectionDiffusion,
        epsilon,
        beta,
        t_f: 2.0,
        wind: WindField::recirculating(),
        y_hat: Arc::new(|x1, _, _| (-10.0 * (1.0 - x1)).exp()),
        f: Arc::new(|_, _, _| 0.0),
        y0: Arc::new(move |x1, _| if on_inflow(x1) { 1.0 } else { 0.0 }),
        g_d: Arc::new(move |x1, _, _| if on_inflow(x1) { 1.0 } else { 0.0 }),
        analytic: None,
    }
}
