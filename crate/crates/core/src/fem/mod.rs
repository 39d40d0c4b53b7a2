//! Q1 finite-element discretization on uniform grids of (-1,1)^2.
//!
//! Assembles mass, stiffness, (skew-symmetrized) convection, and local
//! projection stabilization matrices restricted to interior degrees of
//! freedom, plus the interior-by-boundary coupling blocks used to eliminate
//! Dirichlet data into right-hand sides.

use crate::sparse::SparseMatrix;
use crate::{Error, Result};
use std::sync::Arc;

/// 3-point Gauss rule on [-1,1]: exact through degree 5.
const GAUSS3: [(f64, f64); 3] = [
    (-0.7745966692414834, 0.5555555555555556),
    (0.0, 0.8888888888888888),
    (0.7745966692414834, 0.5555555555555556),
];

/// Reference-element corner signs, counterclockwise from (-1,-1).
const CORNERS: [(f64, f64); 4] = [(-1.0, -1.0), (1.0, -1.0), (1.0, 1.0), (-1.0, 1.0)];

fn shape(a: usize, xi: f64, eta: f64) -> f64 {
    let (sx, sy) = CORNERS[a];
    0.25 * (1.0 + sx * xi) * (1.0 + sy * eta)
}

/// Gradient in reference coordinates.
fn shape_grad(a: usize, xi: f64, eta: f64) -> (f64, f64) {
    let (sx, sy) = CORNERS[a];
    (0.25 * sx * (1.0 + sy * eta), 0.25 * sy * (1.0 + sx * xi))
}

/// Uniform Q1 quadrilateral mesh on (-1,1)^2 at refinement level `l`:
/// mesh size h = 2^(1-l), (2^l - 1)^2 interior nodes, and 2x2-element
/// patches for the stabilization projection.
#[derive(Debug)]
pub struct Grid2D {
    level: u32,
    n_side: usize, // elements per side
    h: f64,
    interior_index: Vec<Option<usize>>,
    boundary_index: Vec<Option<usize>>,
    interior_coords: Vec<(usize, usize)>,
    boundary_coords: Vec<(usize, usize)>,
}

impl Grid2D {
    pub fn new(level: u32) -> Result<Self> {
        if level < 2 {
            return Err(Error::InvalidParameter(format!(
                "grid level must be >= 2, got {level}"
            )));
        }
        let n_side = 1usize << level;
        let h = 2.0 / n_side as f64;
        let nodes = n_side + 1;
        let mut interior_index = vec![None; nodes * nodes];
        let mut boundary_index = vec![None; nodes * nodes];
        let mut interior_coords = Vec::new();
        let mut boundary_coords = Vec::new();
        for iy in 0..nodes {
            for ix in 0..nodes {
                let lat = iy * nodes + ix;
                if ix == 0 || iy == 0 || ix == n_side || iy == n_side {
                    boundary_index[lat] = Some(boundary_coords.len());
                    boundary_coords.push((ix, iy));
                } else {
                    interior_index[lat] = Some(interior_coords.len());
                    interior_coords.push((ix, iy));
                }
            }
        }
        Ok(Self {
            level,
            n_side,
            h,
            interior_index,
            boundary_index,
            interior_coords,
            boundary_coords,
        })
    }

    pub fn level(&self) -> u32 {
        self.level
    }

    pub fn h(&self) -> f64 {
        self.h
    }

    pub fn elements_per_side(&self) -> usize {
        self.n_side
    }

    pub fn nodes_per_side(&self) -> usize {
        self.n_side + 1
    }

    pub fn patches_per_side(&self) -> usize {
        self.n_side / 2
    }

    /// Interior DOF count, (2^l - 1)^2.
    pub fn n_interior(&self) -> usize {
        self.interior_coords.len()
    }

    pub fn n_boundary(&self) -> usize {
        self.boundary_coords.len()
    }

    pub fn node_coord(&self, ix: usize, iy: usize) -> (f64, f64) {
        (-1.0 + ix as f64 * self.h, -1.0 + iy as f64 * self.h)
    }

    pub fn interior_dof(&self, ix: usize, iy: usize) -> Option<usize> {
        self.interior_index[iy * self.nodes_per_side() + ix]
    }

    pub fn boundary_dof(&self, ix: usize, iy: usize) -> Option<usize> {
        self.boundary_index[iy * self.nodes_per_side() + ix]
    }

    pub fn interior_coords(&self) -> &[(usize, usize)] {
        &self.interior_coords
    }

    pub fn boundary_coords(&self) -> &[(usize, usize)] {
        &self.boundary_coords
    }

    /// Samples a scalar field at the interior nodes in DOF order.
    pub fn interior_values<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.interior_coords
            .iter()
            .map(|&(ix, iy)| {
                let (x, y) = self.node_coord(ix, iy);
                f(x, y)
            })
            .collect()
    }

    /// Samples a scalar field at the boundary nodes in boundary-DOF order.
    pub fn boundary_values<F: Fn(f64, f64) -> f64>(&self, f: F) -> Vec<f64> {
        self.boundary_coords
            .iter()
            .map(|&(ix, iy)| {
                let (x, y) = self.node_coord(ix, iy);
                f(x, y)
            })
            .collect()
    }
}

/// Analytically supplied wind vector field.
#[derive(Clone)]
pub struct WindField {
    eval: Arc<dyn Fn(f64, f64) -> (f64, f64) + Send + Sync>,
    divergence_free: bool,
}

impl WindField {
    pub fn new<F>(eval: F, divergence_free: bool) -> Self
    where
        F: Fn(f64, f64) -> (f64, f64) + Send + Sync + 'static,
    {
        Self {
            eval: Arc::new(eval),
            divergence_free,
        }
    }

    pub fn zero() -> Self {
        Self::new(|_, _| (0.0, 0.0), true)
    }

    pub fn constant(w1: f64, w2: f64) -> Self {
        Self::new(move |_, _| (w1, w2), true)
    }

    /// The recirculating benchmark wind w = (2 x2 (1 - x1^2), -2 x1 (1 - x2^2)).
    pub fn recirculating() -> Self {
        Self::new(
            |x1, x2| (2.0 * x2 * (1.0 - x1 * x1), -2.0 * x1 * (1.0 - x2 * x2)),
            true,
        )
    }

    pub fn eval(&self, x: f64, y: f64) -> (f64, f64) {
        (self.eval)(x, y)
    }

    pub fn is_divergence_free(&self) -> bool {
        self.divergence_free
    }
}

/// Interior-by-interior and interior-by-boundary blocks of one assembled
/// bilinear form.
pub struct AssembledPair {
    pub ii: SparseMatrix,
    pub ib: SparseMatrix,
}

struct Scatter {
    ii: Vec<(usize, usize, f64)>,
    ib: Vec<(usize, usize, f64)>,
}

impl Scatter {
    fn new() -> Self {
        Self {
            ii: Vec::new(),
            ib: Vec::new(),
        }
    }

    fn add(&mut self, grid: &Grid2D, gi: (usize, usize), gj: (usize, usize), v: f64) {
        if v == 0.0 {
            return;
        }
        let Some(row) = grid.interior_dof(gi.0, gi.1) else {
            return;
        };
        if let Some(col) = grid.interior_dof(gj.0, gj.1) {
            self.ii.push((row, col, v));
        } else {
            let col = grid.boundary_dof(gj.0, gj.1).unwrap();
            self.ib.push((row, col, v));
        }
    }

    fn build(self, grid: &Grid2D) -> Result<AssembledPair> {
        Ok(AssembledPair {
            ii: SparseMatrix::from_triplets(grid.n_interior(), grid.n_interior(), &self.ii)?,
            ib: SparseMatrix::from_triplets(grid.n_interior(), grid.n_boundary(), &self.ib)?,
        })
    }
}

fn element_nodes(cx: usize, cy: usize) -> [(usize, usize); 4] {
    [(cx, cy), (cx + 1, cy), (cx + 1, cy + 1), (cx, cy + 1)]
}

/// Local mass matrix for a square element of side h (exact integral).
pub(crate) fn local_mass(h: f64) -> [[f64; 4]; 4] {
    let s = h * h / 36.0;
    let p = [
        [4.0, 2.0, 1.0, 2.0],
        [2.0, 4.0, 2.0, 1.0],
        [1.0, 2.0, 4.0, 2.0],
        [2.0, 1.0, 2.0, 4.0],
    ];
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a][b] = s * p[a][b];
        }
    }
    out
}

/// Local stiffness matrix for Q1 on a square element (h-independent, exact).
pub(crate) fn local_stiffness() -> [[f64; 4]; 4] {
    let s = 1.0 / 6.0;
    let p = [
        [4.0, -1.0, -2.0, -1.0],
        [-1.0, 4.0, -1.0, -2.0],
        [-2.0, -1.0, 4.0, -1.0],
        [-1.0, -2.0, -1.0, 4.0],
    ];
    let mut out = [[0.0; 4]; 4];
    for a in 0..4 {
        for b in 0..4 {
            out[a][b] = s * p[a][b];
        }
    }
    out
}

/// Mass matrix m_ij = integral of phi_i phi_j, interior rows.
pub fn assemble_mass(grid: &Grid2D) -> Result<AssembledPair> {
    let local = local_mass(grid.h());
    assemble_local(grid, &local)
}

/// Stiffness matrix k_ij = integral of grad phi_i . grad phi_j, interior rows.
pub fn assemble_stiffness(grid: &Grid2D) -> Result<AssembledPair> {
    let local = local_stiffness();
    assemble_local(grid, &local)
}

fn assemble_local(grid: &Grid2D, local: &[[f64; 4]; 4]) -> Result<AssembledPair> {
    let mut sc = Scatter::new();
    for cy in 0..grid.elements_per_side() {
        for cx in 0..grid.elements_per_side() {
            let nodes = element_nodes(cx, cy);
            for a in 0..4 {
                for b in 0..4 {
                    sc.add(grid, nodes[a], nodes[b], local[a][b]);
                }
            }
        }
    }
    sc.build(grid)
}

/// Raw convection matrix n_ij = integral of (w . grad phi_j) phi_i by 3x3
/// Gauss quadrature, before skew-symmetrization.
pub fn assemble_convection_raw(grid: &Grid2D, wind: &WindField) -> Result<AssembledPair> {
    let h = grid.h();
    let jac = 0.25 * h * h;
    let gscale = 2.0 / h;
    let mut sc = Scatter::new();
    for cy in 0..grid.elements_per_side() {
        for cx in 0..grid.elements_per_side() {
            let nodes = element_nodes(cx, cy);
            let (x0, y0) = grid.node_coord(cx, cy);
            let mut local = [[0.0f64; 4]; 4];
            for &(xi, wx) in &GAUSS3 {
                for &(eta, wy) in &GAUSS3 {
                    let x = x0 + 0.5 * h * (xi + 1.0);
                    let y = y0 + 0.5 * h * (eta + 1.0);
                    let (w1, w2) = wind.eval(x, y);
                    let wt = wx * wy * jac;
                    for b in 0..4 {
                        let (gx, gy) = shape_grad(b, xi, eta);
                        let stream = (w1 * gx + w2 * gy) * gscale;
                        for a in 0..4 {
                            local[a][b] += wt * stream * shape(a, xi, eta);
                        }
                    }
                }
            }
            for a in 0..4 {
                for b in 0..4 {
                    sc.add(grid, nodes[a], nodes[b], local[a][b]);
                }
            }
        }
    }
    sc.build(grid)
}

/// Convection matrix with the interior block replaced by its skew part
/// (N - N^T)/2, so N + N^T = 0 holds exactly.
pub fn assemble_convection(grid: &Grid2D, wind: &WindField) -> Result<AssembledPair> {
    let raw = assemble_convection_raw(grid, wind)?;
    Ok(AssembledPair {
        ii: raw.ii.skew_part()?,
        ib: raw.ib,
    })
}

/// Stabilization parameter for one patch. `w` is the wind at the patch
/// centroid, `h` the element size (patch side 2h).
fn patch_delta(w: (f64, f64), h: f64, epsilon: f64) -> f64 {
    let norm = (w.0 * w.0 + w.1 * w.1).sqrt();
    if norm == 0.0 {
        return 0.0;
    }
    // chord length of the square patch along the wind direction
    let h_k = 2.0 * h * norm / w.0.abs().max(w.1.abs());
    let peclet = norm * h_k / (2.0 * epsilon);
    if peclet > 1.0 {
        h_k / (2.0 * norm) * (1.0 - 1.0 / peclet)
    } else {
        0.0
    }
}

/// Local projection stabilization matrix over 2x2-element patches:
/// w_ij = delta_k * integral over the patch of the fluctuations of the
/// streamline derivatives about their patch-wise means.
pub fn assemble_lps(grid: &Grid2D, wind: &WindField, epsilon: f64) -> Result<AssembledPair> {
    if epsilon <= 0.0 {
        return Err(Error::InvalidParameter("epsilon must be positive".into()));
    }
    let h = grid.h();
    let jac = 0.25 * h * h;
    let gscale = 2.0 / h;
    let patch_area = 4.0 * h * h;
    let mut sc = Scatter::new();
    let pps = grid.patches_per_side();
    // quadrature points per patch: 4 elements x 9 points
    let mut deriv = [[0.0f64; 36]; 9];
    let mut weights = [0.0f64; 36];
    for py in 0..pps {
        for px in 0..pps {
            let (cx0, cy0) = (2 * px, 2 * py);
            let (xc, yc) = {
                let (x0, y0) = grid.node_coord(cx0, cy0);
                (x0 + h, y0 + h)
            };
            let delta = patch_delta(wind.eval(xc, yc), h, epsilon);
            if delta == 0.0 {
                continue;
            }
            for row in deriv.iter_mut() {
                row.fill(0.0);
            }
            let mut q = 0;
            for ey in 0..2usize {
                for ex in 0..2usize {
                    let (x0, y0) = grid.node_coord(cx0 + ex, cy0 + ey);
                    for &(xi, wx) in &GAUSS3 {
                        for &(eta, wy) in &GAUSS3 {
                            let x = x0 + 0.5 * h * (xi + 1.0);
                            let y = y0 + 0.5 * h * (eta + 1.0);
                            let (w1, w2) = wind.eval(x, y);
                            weights[q] = wx * wy * jac;
                            for a in 0..4 {
                                let (gx, gy) = shape_grad(a, xi, eta);
                                let stream = (w1 * gx + w2 * gy) * gscale;
                                // local corner a of element (ex, ey) mapped to
                                // its 3x3 patch node
                                let (dx, dy) = match a {
                                    0 => (ex, ey),
                                    1 => (ex + 1, ey),
                                    2 => (ex + 1, ey + 1),
                                    _ => (ex, ey + 1),
                                };
                                deriv[dy * 3 + dx][q] += stream;
                            }
                            q += 1;
                        }
                    }
                }
            }
            debug_assert_eq!(q, 36);
            // patch-wise means (the projection pi_h)
            let mut mean = [0.0f64; 9];
            for p in 0..9 {
                let mut acc = 0.0;
                for q in 0..36 {
                    acc += weights[q] * deriv[p][q];
                }
                mean[p] = acc / patch_area;
            }
            for pa in 0..9 {
                let ga = (cx0 + pa % 3, cy0 + pa / 3);
                if grid.interior_dof(ga.0, ga.1).is_none() {
                    continue;
                }
                for pb in 0..9 {
                    let gb = (cx0 + pb % 3, cy0 + pb / 3);
                    let mut acc = 0.0;
                    for q in 0..36 {
                        acc += weights[q] * (deriv[pa][q] - mean[pa]) * (deriv[pb][q] - mean[pb]);
                    }
                    sc.add(grid, ga, gb, delta * acc);
                }
            }
        }
    }
    sc.build(grid)
}

/// Load vector f_i = integral of g phi_i over the domain (interior rows),
/// 3x3 Gauss quadrature.
pub fn assemble_load<F: Fn(f64, f64) -> f64>(grid: &Grid2D, g: F) -> Vec<f64> {
    let h = grid.h();
    let jac = 0.25 * h * h;
    let mut out = vec![0.0; grid.n_interior()];
    for cy in 0..grid.elements_per_side() {
        for cx in 0..grid.elements_per_side() {
            let nodes = element_nodes(cx, cy);
            let (x0, y0) = grid.node_coord(cx, cy);
            for &(xi, wx) in &GAUSS3 {
                for &(eta, wy) in &GAUSS3 {
                    let x = x0 + 0.5 * h * (xi + 1.0);
                    let y = y0 + 0.5 * h * (eta + 1.0);
                    let gv = g(x, y) * wx * wy * jac;
                    if gv == 0.0 {
                        continue;
                    }
                    for a in 0..4 {
                        if let Some(dof) = grid.interior_dof(nodes[a].0, nodes[a].1) {
                            out[dof] += gv * shape(a, xi, eta);
                        }
                    }
                }
            }
        }
    }
    out
}

/// Dirichlet elimination correction: c_i = sum over boundary nodes j of
/// A_ib[i][j] g_D(x_j), to be subtracted from interior right-hand sides.
pub fn dirichlet_lift<F: Fn(f64, f64) -> f64>(
    grid: &Grid2D,
    a_ib: &SparseMatrix,
    g_d: F,
) -> Result<Vec<f64>> {
    let g = grid.boundary_values(g_d);
    a_ib.spmv(&g)
}

/// All space matrices for one grid level, restricted to interior DOFs, with
/// the interior-by-boundary blocks kept for Dirichlet lifts.
pub struct SpaceOperators {
    pub grid: Arc<Grid2D>,
    pub epsilon: f64,
    pub mass: Arc<SparseMatrix>,
    pub stiffness: Arc<SparseMatrix>,
    pub convection: Arc<SparseMatrix>,
    pub stabilization: Arc<SparseMatrix>,
    /// L = epsilon K + N + W
    pub l_op: Arc<SparseMatrix>,
    pub mass_ib: Arc<SparseMatrix>,
    pub l_ib: Arc<SparseMatrix>,
}

impl SpaceOperators {
    pub fn assemble(grid: Arc<Grid2D>, epsilon: f64, wind: &WindField) -> Result<Self> {
        if epsilon <= 0.0 {
            return Err(Error::InvalidParameter("epsilon must be positive".into()));
        }
        let mass = assemble_mass(&grid)?;
        let stiffness = assemble_stiffness(&grid)?;
        let convection = assemble_convection(&grid, wind)?;
        let stabilization = assemble_lps(&grid, wind, epsilon)?;
        let l_op = SparseMatrix::linear_comb(&[
            (epsilon, &stiffness.ii),
            (1.0, &convection.ii),
            (1.0, &stabilization.ii),
        ])?;
        let l_ib = SparseMatrix::linear_comb(&[
            (epsilon, &stiffness.ib),
            (1.0, &convection.ib),
            (1.0, &stabilization.ib),
        ])?;
        Ok(Self {
            grid,
            epsilon,
            mass: Arc::new(mass.ii),
            stiffness: Arc::new(stiffness.ii),
            convection: Arc::new(convection.ii),
            stabilization: Arc::new(stabilization.ii),
            l_op: Arc::new(l_op),
            mass_ib: Arc::new(mass.ib),
            l_ib: Arc::new(l_ib),
        })
    }

    pub fn n_interior(&self) -> usize {
        self.grid.n_interior()
    }
}

/// Space operators assembled on every level from 2 up to the finest; the
/// coarse levels feed the geometric multigrid hierarchy. Stabilization is
/// re-evaluated per level, so coarse patch Peclet numbers stay meaningful.
pub struct SpaceHierarchy {
    levels: Vec<SpaceOperators>,
}

impl SpaceHierarchy {
    pub const COARSEST_LEVEL: u32 = 2;

    pub fn assemble(finest: u32, epsilon: f64, wind: &WindField) -> Result<Self> {
        if finest < Self::COARSEST_LEVEL {
            return Err(Error::InvalidParameter(format!(
                "finest level must be >= {}, got {finest}",
                Self::COARSEST_LEVEL
            )));
        }
        let mut levels = Vec::new();
        for l in Self::COARSEST_LEVEL..=finest {
            let grid = Arc::new(Grid2D::new(l)?);
            levels.push(SpaceOperators::assemble(grid, epsilon, wind)?);
        }
        Ok(Self { levels })
    }

    pub fn finest(&self) -> &SpaceOperators {
        self.levels.last().unwrap()
    }

    pub fn finest_level(&self) -> u32 {
        self.finest().grid.level()
    }

    pub fn by_level(&self, level: u32) -> &SpaceOperators {
        &self.levels[(level - Self::COARSEST_LEVEL) as usize]
    }

    pub fn levels(&self) -> &[SpaceOperators] {
        &self.levels
    }
}
