//! Desk-scale illustrations without pass/fail: the maximum-principle
//! sequence, the curvature-estimate test function, and the Sobolev
//! smallness threshold.

use nalgebra::DVector;
use serde::{Deserialize, Serialize};

use super::variation::log_log_slope;
use crate::error::{LabError, Result};
use crate::grassmann::{h_function, v_function, Subspace};
use crate::immersion::{extrinsic_radius, second_fundamental_form, DriftOperator, GraphPatch};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmoriYauEntry {
    pub epsilon: f64,
    /// Grid argmax of f − εr over interior nodes.
    pub node: usize,
    pub f: f64,
    pub grad_norm: f64,
    pub drift_laplacian: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OmoriYauProbe {
    pub entries: Vec<OmoriYauEntry>,
    /// |∇f| at the argmax does not grow by more than 10% as ε decreases.
    pub gradient_nonincreasing: bool,
    /// f does not look sublinear in r: its slope against r over the outer
    /// quarter of the patch is at least 0.9 of the slope over an inner band.
    pub hypothesis_violated: bool,
}

fn band_slope(r: &[f64], f: &[f64], lo: f64, hi: f64) -> Option<f64> {
    let pts: Vec<(f64, f64)> = r.iter().zip(f).filter(|(x, _)| **x >= lo && **x <= hi).map(|(x, y)| (*x, *y)).collect();
    if pts.len() < 2 {
        return None;
    }
    let k = pts.len() as f64;
    let mx = pts.iter().map(|p| p.0).sum::<f64>() / k;
    let my = pts.iter().map(|p| p.1).sum::<f64>() / k;
    let sxx: f64 = pts.iter().map(|p| (p.0 - mx).powi(2)).sum();
    let sxy: f64 = pts.iter().map(|p| (p.0 - mx) * (p.1 - my)).sum();
    (sxx > 0.0).then(|| sxy / sxx)
}

/// For each ε, the interior argmax x_ε of f − ε r (r = |X − base|) with |∇f|
/// and 𝓛f there.
pub fn omori_yau_probe(patch: &GraphPatch, f: &[f64], epsilons: &[f64], base: &[f64]) -> Result<OmoriYauProbe> {
    let grid = patch.grid();
    if f.len() != grid.len() {
        return Err(LabError::DimensionMismatch(format!("{} values of f for {} nodes", f.len(), grid.len())));
    }
    if f.iter().any(|x| !x.is_finite()) {
        return Err(LabError::InvalidInput("f must be finite".into()));
    }
    if epsilons.is_empty() || epsilons.iter().any(|e| !(*e > 0.0)) || epsilons.windows(2).any(|w| w[1] >= w[0]) {
        return Err(LabError::InvalidInput("ε must be positive and strictly decreasing".into()));
    }
    let r = extrinsic_radius(patch, base)?;
    let shape = second_fundamental_form(patch);
    let op = DriftOperator::new(patch, &shape);
    let interior = grid.nodes_with_depth(1);
    let entries = epsilons
        .iter()
        .map(|&eps| {
            let node = interior
                .iter()
                .copied()
                .max_by(|&a, &b| (f[a] - eps * r[a]).total_cmp(&(f[b] - eps * r[b])).then(b.cmp(&a)))
                .expect("grids have interior nodes");
            let d = DVector::from_fn(grid.dim(), |i, _| grid.d1(|l| f[l], node, i));
            let grad_norm = (d.transpose() * &shape.nodes[node].metric.g_inv * &d)[(0, 0)].max(0.0).sqrt();
            OmoriYauEntry { epsilon: eps, node, f: f[node], grad_norm, drift_laplacian: op.apply_at(f, node) }
        })
        .collect::<Vec<_>>();
    let gradient_nonincreasing = entries.windows(2).all(|w| w[1].grad_norm <= 1.1 * w[0].grad_norm + 1e-12);
    let r_max = r.iter().copied().fold(0.0, f64::max);
    let inner = band_slope(&r, f, 0.25 * r_max, 0.5 * r_max);
    let outer = band_slope(&r, f, 0.75 * r_max, r_max);
    let hypothesis_violated = match (inner, outer) {
        (Some(i), Some(o)) => i > 1e-12 && o >= 0.9 * i,
        _ => false,
    };
    Ok(OmoriYauProbe { entries, gradient_nonincreasing, hypothesis_violated })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CurvatureEstimate {
    pub radii: Vec<f64>,
    /// max over D_a of (a² − r²)²|B|²/(h₂ − h)².
    pub max_f: Vec<f64>,
    /// Least-squares slope of log max f against log a.
    pub exponent: Option<f64>,
    /// max f vanished for every a (for example B ≡ 0).
    pub zero_function: bool,
    pub max_h: f64,
    /// Some D_a reaches the patch boundary.
    pub truncated: bool,
}

/// Evaluates f = (a² − r²)²|B|²/(h₂ − h)² on the extrinsic balls
/// D_a = {|X − base| < a}, with h the h-function of v relative to the
/// coordinate plane.
pub fn curvature_estimate_probe(patch: &GraphPatch, radii: &[f64], h2: f64, base: &[f64]) -> Result<CurvatureEstimate> {
    if radii.is_empty() || radii.iter().any(|a| !(*a > 0.0)) || radii.windows(2).any(|w| w[1] <= w[0]) {
        return Err(LabError::InvalidInput("radii must be positive and increasing".into()));
    }
    if !(h2 > 0.0 && h2 < 3.0) {
        return Err(LabError::InvalidInput(format!("h₂ must lie in (0, 3), got {h2}")));
    }
    let grid = patch.grid();
    let r = extrinsic_radius(patch, base)?;
    let shape = second_fundamental_form(patch);
    let reference = Subspace::coordinate_plane(patch.n(), patch.m());
    let a_max = *radii.last().expect("nonempty");
    let nodes: Vec<usize> = grid.nodes_with_depth(2).into_iter().filter(|&k| r[k] < a_max).collect();
    let mut hv = vec![0.0; grid.len()];
    let mut max_h: f64 = 0.0;
    for &k in &nodes {
        let v = v_function(&shape.nodes[k].tangent_plane(), &reference)?;
        let h = h_function(v)?;
        if h >= h2 {
            return Err(LabError::Domain(format!("h = {h} ≥ h₂ = {h2} at node {k}")));
        }
        hv[k] = h;
        max_h = max_h.max(h);
    }
    let max_f: Vec<f64> = radii
        .iter()
        .map(|&a| {
            nodes
                .iter()
                .filter(|&&k| r[k] < a)
                .map(|&k| (a * a - r[k] * r[k]).powi(2) * shape.nodes[k].b_norm_sq / (h2 - hv[k]).powi(2))
                .fold(0.0, f64::max)
        })
        .collect();
    let zero_function = max_f.iter().all(|f| *f <= 1e-20);
    let exponent = (!zero_function && max_f.iter().all(|f| *f > 0.0) && radii.len() >= 2)
        .then(|| log_log_slope(radii, &max_f));
    let boundary_r = grid.boundary_nodes().into_iter().map(|k| r[k]).fold(f64::INFINITY, f64::min);
    Ok(CurvatureEstimate { radii: radii.to_vec(), max_f, exponent, zero_function, max_h, truncated: a_max > boundary_r })
}

/// √(4(n − 1)/(k n² κ)), the smallness bound on (∫|B|ⁿ)^{1/n}.
pub fn sobolev_threshold(n: usize, k: u32, kappa: f64) -> Result<f64> {
    if n < 2 {
        return Err(LabError::Domain(format!("needs n ≥ 2, got {n}")));
    }
    if !(kappa > 0.0 && kappa.is_finite()) {
        return Err(LabError::Domain(format!("needs κ > 0, got {kappa}")));
    }
    if k != 2 && k != 3 {
        return Err(LabError::InvalidInput(format!("k must be 2 or 3, got {k}")));
    }
    let nf = n as f64;
    Ok((4.0 * (nf - 1.0) / (k as f64 * nf * nf * kappa)).sqrt())
}
