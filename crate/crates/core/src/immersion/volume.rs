//! Weighted volume ∫ e^{⟨V,X⟩} dμ and the extrinsic distance.

use nalgebra::DMatrix;

use super::geometry::induced_metric;
use super::GraphPatch;
use crate::error::{LabError, Result};
use crate::grid::Grid;

/// e^{⟨V,X⟩}√det g at every node.
pub fn weighted_volume_density(patch: &GraphPatch) -> Vec<f64> {
    induced_metric(patch)
        .iter()
        .enumerate()
        .map(|(k, g)| patch.height(k).exp() * g.sqrt_det)
        .collect()
}

/// F(M) = ∫_M e^{⟨V,X⟩} dμ by the product trapezoid rule.
pub fn weighted_volume(patch: &GraphPatch) -> f64 {
    patch.grid().integrate(&weighted_volume_density(patch))
}

/// Weighted volume of an immersion X: Ω → ℝᴺ given by its nodal positions
/// (`points[node]`, each of length N), measured with the metric induced
/// from finite-difference tangents.
pub fn parametric_weighted_volume(grid: &Grid, points: &[Vec<f64>], direction: &[f64]) -> Result<f64> {
    if points.len() != grid.len() {
        return Err(LabError::DimensionMismatch(format!("{} points for {} nodes", points.len(), grid.len())));
    }
    let dim = direction.len();
    if points.iter().any(|p| p.len() != dim) {
        return Err(LabError::DimensionMismatch("point and direction dimensions differ".into()));
    }
    let n = grid.dim();
    let density: Vec<f64> = (0..grid.len())
        .map(|k| {
            let t = DMatrix::from_fn(n, dim, |i, c| grid.d1(|l| points[l][c], k, i));
            let g = &t * t.transpose();
            let height: f64 = points[k].iter().zip(direction).map(|(x, v)| x * v).sum();
            height.exp() * g.determinant().max(0.0).sqrt()
        })
        .collect();
    Ok(grid.integrate(&density))
}

/// |X − X₀| at every node.
pub fn extrinsic_radius(patch: &GraphPatch, base: &[f64]) -> Result<Vec<f64>> {
    if base.len() != patch.ambient_dim() {
        return Err(LabError::DimensionMismatch(format!(
            "base point has {} coordinates, ambient dimension is {}",
            base.len(),
            patch.ambient_dim()
        )));
    }
    Ok((0..patch.grid().len())
        .map(|k| patch.position(k).iter().zip(base).map(|(x, b)| (x - b) * (x - b)).sum::<f64>().sqrt())
        .collect())
}
