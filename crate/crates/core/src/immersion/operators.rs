//! The drift Laplacian 𝓛 = Δ + ⟨V, ∇·⟩ and Gauss-map operators.

use nalgebra::{DMatrix, DVector};

use super::geometry::ShapeData;
use super::GraphPatch;
use crate::grid::Grid;
use crate::par_map;

/// 𝓛f = (1/√g) ∂ᵢ(√g g^{ij} ∂ⱼf) + g^{ij}⟨V, Tⱼ⟩ ∂ᵢf.
///
/// Diagonal terms use compact fluxes at half points (coefficients averaged);
/// off-diagonal terms use central differences of nodal fluxes. Values on the
/// boundary layer are NaN.
#[derive(Clone, Debug)]
pub struct DriftOperator {
    grid: Grid,
    coef: Vec<DMatrix<f64>>,
    sqrt_det: Vec<f64>,
    drift: Vec<DVector<f64>>,
}

impl DriftOperator {
    pub fn new(patch: &GraphPatch, shape: &ShapeData) -> Self {
        let v = DVector::from_column_slice(patch.direction());
        let drift = shape.nodes.iter().map(|g| &g.metric.g_inv * (&g.tangents * &v)).collect();
        Self::assemble(patch, shape, drift)
    }

    /// The Laplace–Beltrami operator Δ (no drift).
    pub fn laplace_beltrami(patch: &GraphPatch, shape: &ShapeData) -> Self {
        let drift = vec![DVector::zeros(patch.n()); shape.len()];
        Self::assemble(patch, shape, drift)
    }

    fn assemble(patch: &GraphPatch, shape: &ShapeData, drift: Vec<DVector<f64>>) -> Self {
        let coef = shape.nodes.iter().map(|g| &g.metric.g_inv * g.metric.sqrt_det).collect();
        DriftOperator { grid: patch.grid().clone(), coef, sqrt_det: shape.sqrt_det(), drift }
    }

    pub fn grid(&self) -> &Grid {
        &self.grid
    }

    /// 𝓛f at one interior node.
    pub fn apply_at(&self, f: &[f64], node: usize) -> f64 {
        let grid = &self.grid;
        let n = grid.dim();
        let mut div = 0.0;
        for i in 0..n {
            let h = grid.spacing(i);
            let fwd = grid.offset(node, i, 1);
            let bwd = grid.offset(node, i, -1);
            let a_fwd = 0.5 * (self.coef[node][(i, i)] + self.coef[fwd][(i, i)]);
            let a_bwd = 0.5 * (self.coef[node][(i, i)] + self.coef[bwd][(i, i)]);
            div += (a_fwd * (f[fwd] - f[node]) - a_bwd * (f[node] - f[bwd])) / (h * h);
            for j in 0..n {
                if j != i {
                    let q = |k: usize| self.coef[k][(i, j)] * grid.d1(|l| f[l], k, j);
                    div += (q(fwd) - q(bwd)) / (2.0 * h);
                }
            }
        }
        let mut drift = 0.0;
        for i in 0..n {
            drift += self.drift[node][i] * grid.d1(|l| f[l], node, i);
        }
        div / self.sqrt_det[node] + drift
    }

    /// 𝓛f at every node (NaN on the boundary layer).
    pub fn apply(&self, f: &[f64]) -> Vec<f64> {
        par_map(self.grid.len(), |k| if self.grid.is_boundary(k) { f64::NAN } else { self.apply_at(f, k) })
    }

    /// Entrywise 𝓛 of a matrix-valued field.
    pub fn apply_matrix(&self, field: &[DMatrix<f64>]) -> Vec<DMatrix<f64>> {
        let (r, c) = field[0].shape();
        let entries: Vec<Vec<f64>> = (0..r * c)
            .map(|e| {
                let f: Vec<f64> = field.iter().map(|x| x[(e % r, e / r)]).collect();
                self.apply(&f)
            })
            .collect();
        (0..self.grid.len()).map(|k| DMatrix::from_fn(r, c, |i, j| entries[i + j * r][k])).collect()
    }
}

/// 𝓛f computed from scratch.
pub fn drift_laplacian(patch: &GraphPatch, f: &[f64]) -> Vec<f64> {
    let shape = super::second_fundamental_form(patch);
    DriftOperator::new(patch, &shape).apply(f)
}

/// Δf computed from scratch.
pub fn laplace_beltrami(patch: &GraphPatch, f: &[f64]) -> Vec<f64> {
    let shape = super::second_fundamental_form(patch);
    DriftOperator::laplace_beltrami(patch, &shape).apply(f)
}

/// Projection of a symmetric matrix onto the tangent space of the
/// Grassmannian at the projector P: S ↦ PS(I − P) + (I − P)SP.
pub fn tangent_projection(p: &DMatrix<f64>, s: &DMatrix<f64>) -> DMatrix<f64> {
    let q = DMatrix::identity(p.nrows(), p.ncols()) - p;
    p * s * &q + &q * s * p
}

fn projectors(shape: &ShapeData) -> Vec<DMatrix<f64>> {
    shape.nodes.iter().map(|g| g.frame.transpose() * &g.frame).collect()
}

/// |dγ|² = ½ g^{ij} ⟨∂ᵢP, ∂ⱼP⟩ from finite differences of the tangent
/// projector P.
pub fn gauss_map_energy_density(patch: &GraphPatch, shape: &ShapeData) -> Vec<f64> {
    let grid = patch.grid();
    let n = grid.dim();
    let proj = projectors(shape);
    let (r, c) = proj[0].shape();
    par_map(grid.len(), |k| {
        let d: Vec<DMatrix<f64>> =
            (0..n).map(|i| DMatrix::from_fn(r, c, |a, b| grid.d1(|l| proj[l][(a, b)], k, i))).collect();
        let g_inv = &shape.nodes[k].metric.g_inv;
        let mut acc = 0.0;
        for i in 0..n {
            for j in 0..n {
                acc += g_inv[(i, j)] * d[i].dot(&d[j]);
            }
        }
        0.5 * acc
    })
}

/// The f-tension of the Gauss map, the tangential part of 𝓛P
/// (f = ⟨V, X⟩). NaN on the boundary layer.
pub fn gauss_map_tension(op: &DriftOperator, shape: &ShapeData) -> Vec<DMatrix<f64>> {
    let proj = projectors(shape);
    let lp = op.apply_matrix(&proj);
    lp.iter().zip(&proj).map(|(l, p)| tangent_projection(p, l)).collect()
}

/// Σ_{α,k} c_{αk}(E_k e_αᵀ + e_α E_kᵀ) with c_{αk} = ⟨∇^⊥_{E_k}(H − V^N), e_α⟩,
/// the closed form of the f-tension in terms of the normal derivative of
/// H − V^N. Derivatives of H − V^N are taken as ambient vectors.
pub fn tension_formula(patch: &GraphPatch, shape: &ShapeData) -> Vec<DMatrix<f64>> {
    let grid = patch.grid();
    let n = grid.dim();
    let v = DVector::from_column_slice(patch.direction());
    let y: Vec<DVector<f64>> = shape
        .nodes
        .iter()
        .map(|g| {
            let vn = g.normals.transpose() * (&g.normals * &v);
            g.mean_curvature_vector() - vn
        })
        .collect();
    let dim = patch.ambient_dim();
    par_map(grid.len(), |k| {
        let g = &shape.nodes[k];
        let dy: Vec<DVector<f64>> =
            (0..n).map(|i| DVector::from_fn(dim, |c, _| grid.d1(|l| y[l][c], k, i))).collect();
        let mut out = DMatrix::zeros(dim, dim);
        for kk in 0..n {
            let e_k = g.frame.row(kk).transpose();
            for a in 0..g.m() {
                let nu = g.normals.row(a).transpose();
                let c: f64 = (0..n).map(|i| g.frame_change[(kk, i)] * dy[i].dot(&nu)).sum();
                out += c * (&e_k * nu.transpose() + &nu * e_k.transpose());
            }
        }
        out
    })
}
