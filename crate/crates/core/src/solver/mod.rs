//! Dirichlet solvers for graphical translators and reference solutions.
//!
//! Two discretizations are provided and are deliberately different, so that
//! each can validate the other:
//! - `solve_codim1`: the conservative flux form div(Du/W) = 1/W with
//!   W = √(1 + |Du|²), fluxes evaluated on half-grid faces (m = 1, V = εₙ₊₁).
//! - `solve_system`: the non-divergence form g^{ij}u^α_{ij} = V_α − Σᵢ u^α_i Vᵢ
//!   for any codimension and direction.

mod codim1;
mod newton;
mod problem;
mod reference;
mod system;

pub use codim1::codim1_residual;
pub use newton::NewtonLog;
pub use problem::{
    AffineSpec, convergence_study, BoundarySpec, ConvergenceStudy, DomainSpec, ExactKind, Formulation, Problem,
};
pub use reference::{
    bowl_profile, bowl_reference, grim_reaper_derivatives, grim_reaper_reference, BowlPoint,
};
pub use system::system_residual;

use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::Grid;
use crate::immersion::{check_direction, GraphPatch};

/// Newton and linear-solver settings.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SolverConfig {
    /// Target max-norm of the discrete residual.
    pub newton_tol: f64,
    pub max_iter: usize,
    /// Backtracking factor for the line search.
    pub damping: f64,
    /// Armijo sufficient-decrease constant.
    pub armijo: f64,
    /// Relative residual accepted from the linear solver.
    pub linear_solver_tol: f64,
}

impl Default for SolverConfig {
    fn default() -> Self {
        SolverConfig { newton_tol: 1e-10, max_iter: 50, damping: 0.5, armijo: 1e-4, linear_solver_tol: 1e-12 }
    }
}

impl SolverConfig {
    pub fn validate(&self) -> Result<()> {
        let positive = [self.newton_tol, self.armijo, self.linear_solver_tol];
        if positive.iter().any(|t| !(*t > 0.0 && t.is_finite())) {
            return Err(LabError::InvalidInput("solver tolerances must be positive".into()));
        }
        if !(self.damping > 0.0 && self.damping < 1.0) {
            return Err(LabError::InvalidInput("damping must lie in (0, 1)".into()));
        }
        if self.max_iter == 0 {
            return Err(LabError::InvalidInput("max_iter must be positive".into()));
        }
        Ok(())
    }
}

/// Dirichlet values: m numbers per boundary node, in increasing node order.
#[derive(Clone, Debug, PartialEq)]
pub struct BoundaryData {
    m: usize,
    values: Vec<f64>,
}

impl BoundaryData {
    pub fn new(grid: &Grid, m: usize, values: Vec<f64>) -> Result<Self> {
        let count = grid.boundary_nodes().len();
        if m == 0 || values.len() != count * m {
            return Err(LabError::DimensionMismatch(format!(
                "{} boundary values for {count} boundary nodes of codimension {m}",
                values.len()
            )));
        }
        if values.iter().any(|v| !v.is_finite()) {
            return Err(LabError::InvalidInput("boundary values must be finite".into()));
        }
        Ok(BoundaryData { m, values })
    }

    pub fn from_fn(grid: &Grid, m: usize, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut values = Vec::new();
        for k in grid.boundary_nodes() {
            let v = f(&grid.point(k));
            if v.len() != m {
                return Err(LabError::DimensionMismatch(format!("boundary sampler returned {} values", v.len())));
            }
            values.extend(v);
        }
        BoundaryData::new(grid, m, values)
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Interleaved nodal array with boundary values set and zeros inside.
    pub fn nodal(&self, grid: &Grid) -> Vec<f64> {
        let mut u = vec![0.0; grid.len() * self.m];
        for (b, k) in grid.boundary_nodes().into_iter().enumerate() {
            u[k * self.m..(k + 1) * self.m].copy_from_slice(&self.values[b * self.m..(b + 1) * self.m]);
        }
        u
    }
}

/// A solved patch with its Newton history.
#[derive(Clone, Debug)]
pub struct Solution {
    pub patch: GraphPatch,
    pub log: NewtonLog,
}

/// Interior nodes are the unknowns; boundary nodes carry Dirichlet data.
pub(crate) struct Layout {
    pub interior: Vec<usize>,
    pub index_of: Vec<Option<usize>>,
}

impl Layout {
    pub fn new(grid: &Grid) -> Self {
        let mut index_of = vec![None; grid.len()];
        let mut interior = Vec::new();
        for k in 0..grid.len() {
            if !grid.is_boundary(k) {
                index_of[k] = Some(interior.len());
                interior.push(k);
            }
        }
        Layout { interior, index_of }
    }

    pub fn scatter(&self, base: &[f64], x: &[f64], m: usize) -> Vec<f64> {
        let mut u = base.to_vec();
        for (i, &k) in self.interior.iter().enumerate() {
            u[k * m..(k + 1) * m].copy_from_slice(&x[i * m..(i + 1) * m]);
        }
        u
    }

    pub fn gather(&self, u: &[f64], m: usize) -> Vec<f64> {
        self.interior.iter().flat_map(|&k| u[k * m..(k + 1) * m].iter().copied()).collect()
    }
}

/// Maps an unknown index in an error back to its grid node.
fn locate(err: LabError, layout: &Layout, m: usize) -> LabError {
    match err {
        LabError::SingularJacobian { node } => LabError::SingularJacobian { node: layout.interior[node / m] },
        other => other,
    }
}

/// Discrete harmonic extension of the boundary data (each component).
pub fn harmonic_extension(grid: &Grid, boundary: &BoundaryData) -> Result<Vec<f64>> {
    let m = boundary.m();
    let layout = Layout::new(grid);
    let base = boundary.nodal(grid);
    let unknowns = layout.interior.len();
    let mut entries = Vec::new();
    for (row, &k) in layout.interior.iter().enumerate() {
        for a in 0..grid.dim() {
            let h2 = grid.spacing(a).powi(2);
            entries.push((row, row, -2.0 / h2));
            for dir in [-1isize, 1] {
                let nb = grid.offset(k, a, dir);
                if let Some(col) = layout.index_of[nb] {
                    entries.push((row, col, 1.0 / h2));
                }
            }
        }
    }
    let mut u = base.clone();
    for alpha in 0..m {
        let rhs: Vec<f64> = layout
            .interior
            .iter()
            .map(|&k| {
                let mut acc = 0.0;
                for a in 0..grid.dim() {
                    let h2 = grid.spacing(a).powi(2);
                    for dir in [-1isize, 1] {
                        let nb = grid.offset(k, a, dir);
                        if layout.index_of[nb].is_none() {
                            acc -= base[nb * m + alpha] / h2;
                        }
                    }
                }
                acc
            })
            .collect();
        if unknowns == 0 {
            continue;
        }
        let x = newton::sparse_solve(unknowns, entries.clone(), &rhs, 1e-12).map_err(|e| locate(e, &layout, 1))?;
        for (i, &k) in layout.interior.iter().enumerate() {
            u[k * m + alpha] = x[i];
        }
    }
    Ok(u)
}

/// Solves div(Du/W) = 1/W (codimension one, V = εₙ₊₁) in flux form.
pub fn solve_codim1(grid: &Grid, boundary: &BoundaryData, direction: &[f64], config: &SolverConfig) -> Result<Solution> {
    let n = grid.dim();
    check_direction(direction, n + 1)?;
    if boundary.m() != 1 {
        return Err(LabError::Precondition("the flux form is a scalar equation (m = 1)".into()));
    }
    if direction[..n].iter().any(|&v| v != 0.0) || direction[n] != 1.0 {
        return Err(LabError::Precondition("the flux form requires V = εₙ₊₁; use solve_system otherwise".into()));
    }
    let layout = Layout::new(grid);
    let base = boundary.nodal(grid);
    let guess = harmonic_extension(grid, boundary)?;
    let sys = codim1::FluxForm { grid, layout: &layout, base: &base };
    let (x, log) = newton::newton(&sys, layout.gather(&guess, 1), config).map_err(|e| locate(e, &layout, 1))?;
    let patch = GraphPatch::new(grid.clone(), 1, layout.scatter(&base, &x, 1), direction.to_vec())?;
    Ok(Solution { patch, log })
}

/// Solves g^{ij}u^α_{ij} = V_α − Σᵢ u^α_i Vᵢ in non-divergence form.
pub fn solve_system(grid: &Grid, boundary: &BoundaryData, direction: &[f64], config: &SolverConfig) -> Result<Solution> {
    let m = boundary.m();
    check_direction(direction, grid.dim() + m)?;
    let layout = Layout::new(grid);
    let base = boundary.nodal(grid);
    let guess = harmonic_extension(grid, boundary)?;
    let sys = system::NonDivergence { grid, layout: &layout, base: &base, m, direction };
    let (x, log) = newton::newton(&sys, layout.gather(&guess, m), config).map_err(|e| locate(e, &layout, m))?;
    let patch = GraphPatch::new(grid.clone(), m, layout.scatter(&base, &x, m), direction.to_vec())?;
    Ok(Solution { patch, log })
}
