//! Discrete differential geometry of graphs X(x) = (x, u(x)) sampled on a
//! rectangular grid, and of the conformally flat ambient metric
//! e^{(2/n)⟨V,X⟩}·δ in which translators are minimal.

mod conformal;
mod geometry;
mod io;
mod operators;
mod volume;

pub use conformal::{
    conformal_curvature_closed_form, conformal_distance, conformal_segment_length,
    conformal_sectional_curvature, ConformalAmbient, DistanceField,
};
pub use geometry::{
    gauss_map, induced_metric, second_fundamental_form, translator_residual, InducedMetric, Jet,
    NodeGeometry, ResidualField, ShapeData,
};
pub use io::{read_patch, write_patch, PatchHeader};
pub use operators::{
    drift_laplacian, gauss_map_energy_density, gauss_map_tension, laplace_beltrami, tension_formula,
    tangent_projection, DriftOperator,
};
pub use volume::{
    extrinsic_radius, parametric_weighted_volume, weighted_volume, weighted_volume_density,
};

use crate::error::{LabError, Result};
use crate::grid::Grid;

/// |V| must equal one to this accuracy.
pub const DIRECTION_TOLERANCE: f64 = 1e-14;

/// A graph u: Ω → ℝᵐ sampled on a grid, with translation direction V ∈ ℝⁿ⁺ᵐ.
#[derive(Clone, Debug, PartialEq)]
pub struct GraphPatch {
    grid: Grid,
    m: usize,
    /// Interleaved values: u[node·m + α].
    u: Vec<f64>,
    direction: Vec<f64>,
}

impl GraphPatch {
    pub fn new(grid: Grid, m: usize, u: Vec<f64>, direction: Vec<f64>) -> Result<Self> {
        let n = grid.dim();
        if m == 0 {
            return Err(LabError::InvalidInput("codimension must be at least 1".into()));
        }
        if u.len() != grid.len() * m {
            return Err(LabError::DimensionMismatch(format!(
                "{} values for {} nodes of codimension {m}",
                u.len(),
                grid.len()
            )));
        }
        if u.iter().any(|x| !x.is_finite()) {
            return Err(LabError::InvalidInput("graph values must be finite".into()));
        }
        check_direction(&direction, n + m)?;
        Ok(GraphPatch { grid, m, u, direction })
    }

    /// Samples `f(x)` (returning m values) at every node.
    pub fn from_fn(grid: Grid, m: usize, direction: Vec<f64>, f: impl Fn(&[f64]) -> Vec<f64>) -> Result<Self> {
        let mut u = Vec::with_capacity(grid.len() * m);
        for node in 0..grid.len() {
            let vals = f(&grid.point(node));
            if vals.len() != m {
                return Err(LabError::DimensionMismatch(format!("sampler returned {} values, expected {m}", vals.len())));
            }
            u.extend(vals);
        }
        GraphPatch::new(grid, m, u, direction)
    }

    pub fn n(&self) -> usize {
        self.grid.dim()
    }

    pub fn m(&self) -> usize {
        self.m
    }

    pub fn ambient_dim(&self) -> usize {
        self.n() + self.m
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    pub fn values(&self) -> &[f64] {
        &self.u
    }

    pub fn value(&self, node: usize, alpha: usize) -> f64 {
        self.u[node * self.m + alpha]
    }

    /// The α-th component of u at every node.
    pub fn component(&self, alpha: usize) -> Vec<f64> {
        (0..self.grid.len()).map(|k| self.value(k, alpha)).collect()
    }

    pub fn direction(&self) -> &[f64] {
        &self.direction
    }

    /// X = (x, u(x)) at a node.
    pub fn position(&self, node: usize) -> Vec<f64> {
        let mut p = self.grid.point(node);
        p.extend_from_slice(&self.u[node * self.m..(node + 1) * self.m]);
        p
    }

    /// ⟨V, X⟩ at a node.
    pub fn height(&self, node: usize) -> f64 {
        self.position(node).iter().zip(&self.direction).map(|(x, v)| x * v).sum()
    }

    /// The same graph with new values (same grid, codimension and direction).
    pub fn with_values(&self, u: Vec<f64>) -> Result<Self> {
        GraphPatch::new(self.grid.clone(), self.m, u, self.direction.clone())
    }
}

pub(crate) fn check_direction(direction: &[f64], dim: usize) -> Result<()> {
    if direction.len() != dim {
        return Err(LabError::DimensionMismatch(format!(
            "direction has {} components, ambient dimension is {dim}",
            direction.len()
        )));
    }
    let norm = direction.iter().map(|x| x * x).sum::<f64>().sqrt();
    if !((norm - 1.0).abs() <= DIRECTION_TOLERANCE) {
        return Err(LabError::InvalidInput(format!("direction must be a unit vector (|V| = {norm})")));
    }
    Ok(())
}

/// The unit vector εₖ in ℝ^dim.
pub fn unit_vector(dim: usize, k: usize) -> Vec<f64> {
    let mut v = vec![0.0; dim];
    v[k] = 1.0;
    v
}
