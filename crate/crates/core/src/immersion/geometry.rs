//! Induced metric, normal frame and second fundamental form per node.

use nalgebra::{DMatrix, DVector};

use super::GraphPatch;
use crate::grassmann::{gram_schmidt_rows, Subspace};
use crate::par_map;

/// First and second derivatives of u at one node.
#[derive(Clone, Debug)]
pub struct Jet {
    /// du[(α, i)] = ∂u^α/∂x^i.
    pub du: DMatrix<f64>,
    /// d2u[α][(i, j)] = ∂²u^α/∂x^i∂x^j.
    pub d2u: Vec<DMatrix<f64>>,
}

impl Jet {
    pub fn at(patch: &GraphPatch, node: usize) -> Self {
        let (n, m) = (patch.n(), patch.m());
        let grid = patch.grid();
        let u = patch.values();
        let du = DMatrix::from_fn(m, n, |a, i| grid.d1(|k| u[k * m + a], node, i));
        let d2u = (0..m)
            .map(|a| {
                let mut h = DMatrix::zeros(n, n);
                for i in 0..n {
                    for j in i..n {
                        let v = grid.d_second(|k| u[k * m + a], node, i, j);
                        h[(i, j)] = v;
                        h[(j, i)] = v;
                    }
                }
                h
            })
            .collect();
        Jet { du, d2u }
    }

    fn first_order(patch: &GraphPatch, node: usize) -> DMatrix<f64> {
        let (n, m) = (patch.n(), patch.m());
        let u = patch.values();
        DMatrix::from_fn(m, n, |a, i| patch.grid().d1(|k| u[k * m + a], node, i))
    }
}

/// g_ij = δ_ij + Σ_α u^α_i u^α_j with its inverse and √det g.
#[derive(Clone, Debug)]
pub struct InducedMetric {
    pub g: DMatrix<f64>,
    pub g_inv: DMatrix<f64>,
    pub sqrt_det: f64,
}

impl InducedMetric {
    pub fn from_gradient(du: &DMatrix<f64>) -> Self {
        let n = du.ncols();
        let g = DMatrix::identity(n, n) + du.transpose() * du;
        let chol = g.clone().cholesky().expect("induced metric of a graph is positive definite");
        let g_inv = chol.inverse();
        let sqrt_det = chol.l().diagonal().product();
        InducedMetric { g, g_inv, sqrt_det }
    }
}

/// Geometry of the graph at one node.
#[derive(Clone, Debug)]
pub struct NodeGeometry {
    pub position: DVector<f64>,
    /// Coordinate tangents Tᵢ = (eᵢ, ∂ᵢu), one per row.
    pub tangents: DMatrix<f64>,
    pub metric: InducedMetric,
    /// Orthonormal tangent frame E = C·T (Gram–Schmidt of the rows of T).
    pub frame: DMatrix<f64>,
    pub frame_change: DMatrix<f64>,
    /// Orthonormal normals from Gram–Schmidt on (−Du^α, e_α) in α order.
    pub normals: DMatrix<f64>,
    /// Coordinate coefficients h_{α,ij} = ⟨∂ᵢ∂ⱼX, e_α⟩.
    pub h: Vec<DMatrix<f64>>,
    /// The same coefficients in the orthonormal frame E.
    pub h_ortho: Vec<DMatrix<f64>>,
    /// H^α = g^{ij} h_{α,ij}.
    pub mean_curvature: DVector<f64>,
    /// |B|² = Σ_α |h_ortho[α]|².
    pub b_norm_sq: f64,
    /// |B|² = Σ_α g^{ik} g^{jl} h_{α,ij} h_{α,kl}, an independent contraction.
    pub b_norm_sq_metric: f64,
    /// S_{αβ} = Σ_{ij} h_{α,ij} h_{β,ij} (orthonormal frame).
    pub s: DMatrix<f64>,
}

impl NodeGeometry {
    pub fn from_jet(x: &[f64], jet: &Jet) -> Self {
        let (m, n) = jet.du.shape();
        let dim = n + m;
        let mut position = DVector::zeros(dim);
        position.rows_mut(0, n).copy_from_slice(&x[..n]);
        position.rows_mut(n, m).copy_from_slice(&x[n..]);
        let tangents = DMatrix::from_fn(n, dim, |i, c| {
            if c < n {
                if c == i { 1.0 } else { 0.0 }
            } else {
                jet.du[(c - n, i)]
            }
        });
        let metric = InducedMetric::from_gradient(&jet.du);
        let frame = gram_schmidt_rows(&tangents).expect("graph tangents are independent");
        let frame_change = &frame * tangents.transpose() * &metric.g_inv;
        let candidates = DMatrix::from_fn(m, dim, |a, c| {
            if c < n {
                -jet.du[(a, c)]
            } else if c - n == a {
                1.0
            } else {
                0.0
            }
        });
        let normals = gram_schmidt_rows(&candidates).expect("graph normals are independent");
        let h: Vec<DMatrix<f64>> = (0..m)
            .map(|a| {
                let mut acc = DMatrix::zeros(n, n);
                for b in 0..m {
                    acc += &jet.d2u[b] * normals[(a, n + b)];
                }
                acc
            })
            .collect();
        let h_ortho: Vec<DMatrix<f64>> = h.iter().map(|ha| &frame_change * ha * frame_change.transpose()).collect();
        let mean_curvature = DVector::from_fn(m, |a, _| (&metric.g_inv * &h[a]).trace());
        let b_norm_sq = h_ortho.iter().map(|x| x.norm_squared()).sum();
        let b_norm_sq_metric = h
            .iter()
            .map(|ha| {
                let t = &metric.g_inv * ha;
                (&t * &t).trace()
            })
            .sum();
        let s = DMatrix::from_fn(m, m, |a, b| h_ortho[a].dot(&h_ortho[b]));
        NodeGeometry {
            position,
            tangents,
            metric,
            frame,
            frame_change,
            normals,
            h,
            h_ortho,
            mean_curvature,
            b_norm_sq,
            b_norm_sq_metric,
            s,
        }
    }

    pub fn n(&self) -> usize {
        self.tangents.nrows()
    }

    pub fn m(&self) -> usize {
        self.normals.nrows()
    }

    /// The mean curvature vector H = Σ_α H^α e_α.
    pub fn mean_curvature_vector(&self) -> DVector<f64> {
        self.normals.transpose() * &self.mean_curvature
    }

    /// Normal components ⟨w, e_α⟩.
    pub fn normal_components(&self, w: &[f64]) -> DVector<f64> {
        &self.normals * DVector::from_column_slice(w)
    }

    /// Tangential components ⟨w, Eᵢ⟩ in the orthonormal frame.
    pub fn tangent_components(&self, w: &[f64]) -> DVector<f64> {
        &self.frame * DVector::from_column_slice(w)
    }

    /// The oriented tangent plane.
    pub fn tangent_plane(&self) -> Subspace {
        Subspace::from_frame(self.frame.clone()).expect("Gram–Schmidt frame is orthonormal")
    }

    /// Σ_{α≠β} |[A^α, A^β]|², zero exactly when the normal curvature vanishes.
    pub fn normal_curvature_sq(&self) -> f64 {
        let m = self.m();
        let mut acc = 0.0;
        for a in 0..m {
            for b in 0..m {
                if a != b {
                    let c = &self.h_ortho[a] * &self.h_ortho[b] - &self.h_ortho[b] * &self.h_ortho[a];
                    acc += c.norm_squared();
                }
            }
        }
        acc
    }
}

/// Per-node geometry over a whole patch.
#[derive(Clone, Debug)]
pub struct ShapeData {
    pub nodes: Vec<NodeGeometry>,
}

impl ShapeData {
    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn b_norm_sq(&self) -> Vec<f64> {
        self.nodes.iter().map(|g| g.b_norm_sq).collect()
    }

    pub fn sqrt_det(&self) -> Vec<f64> {
        self.nodes.iter().map(|g| g.metric.sqrt_det).collect()
    }
}

/// g, g⁻¹ and √det g at every node (first derivatives only).
pub fn induced_metric(patch: &GraphPatch) -> Vec<InducedMetric> {
    par_map(patch.grid().len(), |k| InducedMetric::from_gradient(&Jet::first_order(patch, k)))
}

/// Full second-order geometry at every node.
pub fn second_fundamental_form(patch: &GraphPatch) -> ShapeData {
    let nodes = par_map(patch.grid().len(), |k| NodeGeometry::from_jet(&patch.position(k), &Jet::at(patch, k)));
    ShapeData { nodes }
}

/// The oriented tangent plane at a node.
pub fn gauss_map(patch: &GraphPatch, node: usize) -> Subspace {
    NodeGeometry::from_jet(&patch.position(node), &Jet::at(patch, node)).tangent_plane()
}

/// Normal components of H − V^N at every node.
#[derive(Clone, Debug)]
pub struct ResidualField {
    pub components: Vec<DVector<f64>>,
    pub boundary: Vec<bool>,
}

impl ResidualField {
    /// Largest |H − V^N|, over interior nodes unless `include_boundary`.
    pub fn max_norm(&self, include_boundary: bool) -> f64 {
        self.components
            .iter()
            .zip(&self.boundary)
            .filter(|(_, &b)| include_boundary || !b)
            .map(|(r, _)| r.norm())
            .fold(0.0, f64::max)
    }

    pub fn norms(&self) -> Vec<f64> {
        self.components.iter().map(|r| r.norm()).collect()
    }
}

/// H − V^N in the normal frame.
pub fn translator_residual(patch: &GraphPatch) -> ResidualField {
    let shape = second_fundamental_form(patch);
    residual_from_shape(patch, &shape)
}

pub(crate) fn residual_from_shape(patch: &GraphPatch, shape: &ShapeData) -> ResidualField {
    let v = patch.direction();
    let components = shape.nodes.iter().map(|g| &g.mean_curvature - g.normal_components(v)).collect();
    let boundary = (0..patch.grid().len()).map(|k| patch.grid().is_boundary(k)).collect();
    ResidualField { components, boundary }
}

#[cfg(test)]
mod tests {
    use super::super::unit_vector;
    use super::*;
    use crate::grassmann::{jordan_angles, v_function};
    use crate::grid::Grid;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    fn grim(nodes: usize, half: f64) -> GraphPatch {
        let grid = Grid::cube(1, -half, half, nodes).unwrap();
        GraphPatch::from_fn(grid, 1, vec![0.0, 1.0], |x| vec![-x[0].cos().ln()]).unwrap()
    }

    fn node_at(patch: &GraphPatch, x: f64) -> usize {
        let k = patch.grid().nearest_node(&[x]);
        assert!((patch.grid().coord(k, 0) - x).abs() < 1e-12);
        k
    }

    #[test]
    fn flat_graph_has_identity_metric_and_no_curvature() {
        let grid = Grid::cube(2, 0.0, 1.0, 7).unwrap();
        let p = GraphPatch::new(grid, 2, vec![0.0; 98], unit_vector(4, 3)).unwrap();
        let s = second_fundamental_form(&p);
        for g in &s.nodes {
            assert_eq!(g.metric.g, DMatrix::identity(2, 2));
            assert_eq!(g.metric.sqrt_det, 1.0);
            assert_eq!(g.b_norm_sq, 0.0);
            assert_eq!(g.mean_curvature.norm(), 0.0);
        }
        assert_eq!(gauss_map(&p, 10), Subspace::coordinate_plane(2, 2));
    }

    #[test]
    fn affine_graph_metric() {
        let grid = Grid::cube(2, 0.0, 1.0, 6).unwrap();
        let p = GraphPatch::from_fn(grid, 1, unit_vector(3, 2), |x| vec![x[0]]).unwrap();
        for m in induced_metric(&p) {
            assert!((m.g.clone() - DMatrix::from_row_slice(2, 2, &[2.0, 0.0, 0.0, 1.0])).amax() < 1e-14);
            assert!((m.sqrt_det - 2f64.sqrt()).abs() < 1e-14);
        }
    }

    #[test]
    fn grim_reaper_metric_and_curvature() {
        let p = grim(801, 1.2);
        let s = second_fundamental_form(&p);
        let k = node_at(&p, 0.0);
        assert!((s.nodes[k].b_norm_sq - 1.0).abs() < 1e-5);
        let g = &s.nodes[node_at(&p, 0.6)];
        let x: f64 = 0.6;
        assert!((g.metric.g[(0, 0)] - 1.0 / (x.cos() * x.cos())).abs() < 1e-4);
        assert!((g.b_norm_sq - x.cos().powi(2)).abs() < 1e-4);
        assert!((g.mean_curvature[0] - x.cos()).abs() < 1e-4);
        assert!((g.b_norm_sq - g.b_norm_sq_metric).abs() < 1e-12);
    }

    #[test]
    fn grim_reaper_at_special_points() {
        let grid = Grid::new(vec![-FRAC_PI_3], vec![FRAC_PI_3], vec![801]).unwrap();
        let p = GraphPatch::from_fn(grid, 1, vec![0.0, 1.0], |x| vec![-x[0].cos().ln()]).unwrap();
        let s = second_fundamental_form(&p);
        // nodes 0 and 800 are ±π/3 (one-sided stencils there)
        assert!((s.nodes[800].b_norm_sq - 0.25).abs() < 1e-3);
        let mid = 600; // x = π/6
        let x = FRAC_PI_3 / 2.0;
        assert!((s.nodes[mid].b_norm_sq - x.cos().powi(2)).abs() < 1e-5);
    }

    #[test]
    fn grim_reaper_metric_at_quarter_pi() {
        let grid = Grid::new(vec![-FRAC_PI_4], vec![FRAC_PI_4], vec![401]).unwrap();
        let p = GraphPatch::from_fn(grid, 1, vec![0.0, 1.0], |x| vec![-x[0].cos().ln()]).unwrap();
        let m = induced_metric(&p);
        assert!((m[400].g[(0, 0)] - 2.0).abs() < 1e-4);
        let gm = gauss_map(&p, 400);
        let p0 = Subspace::coordinate_plane(1, 1);
        assert!((jordan_angles(&gm, &p0).unwrap().theta[0] - FRAC_PI_4).abs() < 1e-4);
        assert!((v_function(&gm, &p0).unwrap() - 2f64.sqrt()).abs() < 1e-4);
    }

    #[test]
    fn residual_of_planes() {
        let grid = Grid::cube(2, 0.0, 1.0, 6).unwrap();
        let normal = GraphPatch::new(grid.clone(), 1, vec![0.0; 36], unit_vector(3, 2)).unwrap();
        let r = translator_residual(&normal);
        assert!(r.norms().iter().all(|x| (x - 1.0).abs() < 1e-15));
        let tangent = GraphPatch::new(grid, 1, vec![0.0; 36], unit_vector(3, 0)).unwrap();
        assert_eq!(translator_residual(&tangent).max_norm(true), 0.0);
    }

    #[test]
    fn grim_reaper_residual_is_discretization_error() {
        let r = translator_residual(&grim(801, 1.2)).max_norm(false);
        assert!(r <= 1e-5, "{r}");
        let r2 = translator_residual(&grim(1601, 1.2)).max_norm(false);
        assert!(r / r2 > 3.5 && r / r2 < 4.5);
    }

    #[test]
    fn gauss_map_v_matches_graph_formula() {
        let grid = Grid::cube(2, -0.5, 0.5, 9).unwrap();
        let p = GraphPatch::from_fn(grid, 2, unit_vector(4, 3), |x| {
            vec![x[0] * x[1] + 0.3 * x[0], x[0] * x[0] - 0.5 * x[1]]
        })
        .unwrap();
        let p0 = Subspace::coordinate_plane(2, 2);
        for k in 0..p.grid().len() {
            let du = Jet::at(&p, k).du;
            let oracle = (DMatrix::identity(2, 2) + du.transpose() * &du).determinant().sqrt();
            let v = v_function(&gauss_map(&p, k), &p0).unwrap();
            assert!((v - oracle).abs() < 1e-10 * oracle);
        }
    }

    #[test]
    fn normal_frame_is_orthonormal_and_normal() {
        let grid = Grid::cube(2, -0.5, 0.5, 9).unwrap();
        let p = GraphPatch::from_fn(grid, 2, unit_vector(4, 3), |x| vec![x[0] * x[1], x[0].sin() + x[1]]).unwrap();
        let s = second_fundamental_form(&p);
        for g in &s.nodes {
            let all = DMatrix::from_fn(4, 4, |r, c| if r < 2 { g.frame[(r, c)] } else { g.normals[(r - 2, c)] });
            assert!((&all * all.transpose() - DMatrix::<f64>::identity(4, 4)).amax() < 1e-13);
            for a in 0..2 {
                assert!(g.normals[(a, 2 + a)] > 0.0);
                assert!((&g.h[a] - g.h[a].transpose()).amax() == 0.0);
            }
            assert!((g.b_norm_sq - g.s.trace()).abs() < 1e-12);
            assert!((g.b_norm_sq - g.b_norm_sq_metric).abs() < 1e-10 * g.b_norm_sq.max(1.0));
        }
    }
}
