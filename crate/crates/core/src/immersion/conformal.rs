//! The conformally flat metric e^{2φ}δ with φ(x) = ⟨V, x⟩/n: its sectional
//! curvature and a fast-marching distance function.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use nalgebra::{DMatrix, DVector};

use super::check_direction;
use crate::error::{LabError, Result};
use crate::grid::Grid;

/// Ambient ℝᴺ with metric e^{(2/n)⟨V,x⟩}·δ, or the Euclidean metric when
/// `flat` is set.
#[derive(Clone, Debug, PartialEq)]
pub struct ConformalAmbient {
    direction: Vec<f64>,
    n: usize,
    flat: bool,
}

impl ConformalAmbient {
    pub fn new(direction: Vec<f64>, n: usize) -> Result<Self> {
        if n == 0 {
            return Err(LabError::InvalidInput("submanifold dimension must be positive".into()));
        }
        check_direction(&direction, direction.len())?;
        Ok(ConformalAmbient { direction, n, flat: false })
    }

    /// Conformal factor forced to one.
    pub fn flat(dim: usize) -> Self {
        let mut direction = vec![0.0; dim];
        direction[dim - 1] = 1.0;
        ConformalAmbient { direction, n: 1, flat: true }
    }

    pub fn dim(&self) -> usize {
        self.direction.len()
    }

    pub fn is_flat(&self) -> bool {
        self.flat
    }

    /// ∇φ, constant in space.
    pub fn grad_log_factor(&self) -> DVector<f64> {
        if self.flat {
            DVector::zeros(self.dim())
        } else {
            DVector::from_iterator(self.dim(), self.direction.iter().map(|v| v / self.n as f64))
        }
    }

    /// φ(x) = ⟨V, x⟩/n.
    pub fn log_factor(&self, x: &[f64]) -> f64 {
        if self.flat {
            0.0
        } else {
            x.iter().zip(&self.direction).map(|(a, b)| a * b).sum::<f64>() / self.n as f64
        }
    }

    /// Local slowness e^{φ(x)} of the eikonal equation.
    pub fn slowness(&self, x: &[f64]) -> f64 {
        self.log_factor(x).exp()
    }
}

fn check_section(amb: &ConformalAmbient, x: &[f64], section: &DMatrix<f64>) -> Result<()> {
    if x.len() != amb.dim() || section.shape() != (2, amb.dim()) {
        return Err(LabError::DimensionMismatch(format!("a section of ℝ^{} is a 2×{} matrix", amb.dim(), amb.dim())));
    }
    let gram = section * section.transpose();
    if (gram - DMatrix::<f64>::identity(2, 2)).amax() > 1e-10 {
        return Err(LabError::InvalidInput("section rows must be orthonormal".into()));
    }
    Ok(())
}

/// Sectional curvature of the conformal metric on the 2-plane spanned by the
/// (Euclidean-orthonormal) rows of `section`, from the curvature tensor built
/// out of the Christoffel symbols Γᵏᵢⱼ = δᵢₖφⱼ + δⱼₖφᵢ − δᵢⱼφₖ.
pub fn conformal_sectional_curvature(amb: &ConformalAmbient, x: &[f64], section: &DMatrix<f64>) -> Result<f64> {
    check_section(amb, x, section)?;
    let p = amb.grad_log_factor();
    // Γ(A, B)ˡ = Γˡₐᵦ Aᵃ Bᵇ
    let gamma = |a: &DVector<f64>, b: &DVector<f64>| -> DVector<f64> { a * p.dot(b) + b * p.dot(a) - &p * a.dot(b) };
    let xv = section.row(0).transpose();
    let yv = section.row(1).transpose();
    // φ is linear, so ∂Γ = 0 and R(X,Y)Y = Γ(X, Γ(Y,Y)) − Γ(Y, Γ(X,Y)).
    let ryy = gamma(&xv, &gamma(&yv, &yv)) - gamma(&yv, &gamma(&xv, &yv));
    let e2 = (2.0 * amb.log_factor(x)).exp();
    // g(R(X,Y)Y, X) / (g(X,X) g(Y,Y) − g(X,Y)²) with g = e^{2φ}δ
    Ok(e2 * ryy.dot(&xv) / (e2 * e2))
}

/// −(1/n²) e^{−2φ} (1 − |proj_σ V|²): zero on sections containing V and
/// −(1/n²)e^{−2φ} on sections orthogonal to V.
pub fn conformal_curvature_closed_form(amb: &ConformalAmbient, x: &[f64], section: &DMatrix<f64>) -> Result<f64> {
    check_section(amb, x, section)?;
    if amb.flat {
        return Ok(0.0);
    }
    let v = DVector::from_column_slice(&amb.direction);
    let proj = section.row(0).transpose().dot(&v).powi(2) + section.row(1).transpose().dot(&v).powi(2);
    let n = amb.n as f64;
    Ok(-(1.0 - proj) * (-2.0 * amb.log_factor(x)).exp() / (n * n))
}

/// Conformal length of the straight segment from a to b.
pub fn conformal_segment_length(amb: &ConformalAmbient, a: &[f64], b: &[f64]) -> f64 {
    let len = a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt();
    let (pa, pb) = (amb.log_factor(a), amb.log_factor(b));
    let d = pb - pa;
    // ∫₀¹ e^{pa + t d} dt
    let mean = if d.abs() < 1e-8 { pa.exp() * (1.0 + d / 2.0 + d * d / 6.0) } else { pa.exp() * d.exp_m1() / d };
    len * mean
}

/// Conformal distance from an origin, sampled on an ambient grid.
#[derive(Clone, Debug)]
pub struct DistanceField {
    pub grid: Grid,
    pub rho: Vec<f64>,
}

impl DistanceField {
    /// Multilinear interpolation; `None` outside the grid box.
    pub fn sample(&self, x: &[f64]) -> Option<f64> {
        self.grid.interpolate(&self.rho, x)
    }
}

#[derive(PartialEq)]
struct Trial(f64, usize);

impl Eq for Trial {}

impl Ord for Trial {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then_with(|| other.1.cmp(&self.1))
    }
}

impl PartialOrd for Trial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

#[derive(Clone, Copy, PartialEq)]
enum State {
    Far,
    Trial,
    Known,
}

/// Solves |∇ρ| = e^{φ} by second-order fast marching on `grid` (dimension ≤ 3).
///
/// Nodes within three cells of the origin are seeded with the conformal
/// length of the straight segment, which matches the true distance to third
/// order there.
pub fn conformal_distance(amb: &ConformalAmbient, origin: &[f64], grid: &Grid) -> Result<DistanceField> {
    let dim = grid.dim();
    if dim != amb.dim() || origin.len() != dim {
        return Err(LabError::DimensionMismatch("grid, ambient and origin dimensions differ".into()));
    }
    if dim > 3 {
        return Err(LabError::InvalidInput("fast marching is limited to ambient dimension ≤ 3".into()));
    }
    for a in 0..dim {
        if origin[a] < grid.lower()[a] || origin[a] > grid.upper()[a] {
            return Err(LabError::Domain("origin lies outside the distance-field domain".into()));
        }
    }
    let len = grid.len();
    let mut rho = vec![f64::INFINITY; len];
    let mut state = vec![State::Far; len];
    let mut heap = BinaryHeap::new();
    let seed_radius = 3.0 * grid.max_spacing();
    for k in 0..len {
        let x = grid.point(k);
        let r = x.iter().zip(origin).map(|(a, b)| (a - b) * (a - b)).sum::<f64>().sqrt();
        if r <= seed_radius {
            rho[k] = conformal_segment_length(amb, origin, &x);
            state[k] = State::Known;
        }
    }
    let neighbours = |k: usize| -> Vec<usize> {
        let mut out = Vec::with_capacity(2 * dim);
        for a in 0..dim {
            let i = grid.index(k, a);
            if i > 0 {
                out.push(grid.offset(k, a, -1));
            }
            if i + 1 < grid.shape()[a] {
                out.push(grid.offset(k, a, 1));
            }
        }
        out
    };
    for k in 0..len {
        if state[k] == State::Known {
            for nb in neighbours(k) {
                if state[nb] == State::Far {
                    state[nb] = State::Trial;
                }
            }
        }
    }
    for k in 0..len {
        if state[k] == State::Trial {
            rho[k] = local_update(grid, amb, &rho, &state, k);
            heap.push(Trial(rho[k], k));
        }
    }
    while let Some(Trial(t, k)) = heap.pop() {
        if state[k] == State::Known || t > rho[k] {
            continue;
        }
        state[k] = State::Known;
        for nb in neighbours(k) {
            if state[nb] != State::Known {
                let cand = local_update(grid, amb, &rho, &state, nb);
                if cand < rho[nb] {
                    rho[nb] = cand;
                    state[nb] = State::Trial;
                    heap.push(Trial(cand, nb));
                }
            }
        }
    }
    Ok(DistanceField { grid: grid.clone(), rho })
}

/// Upwind update at node k from its known neighbours.
fn local_update(grid: &Grid, amb: &ConformalAmbient, rho: &[f64], state: &[State], k: usize) -> f64 {
    let dim = grid.dim();
    let s = amb.slowness(&grid.point(k));
    // per axis: (weight α, reference value t) in Σ α (T − t)² = s²
    let mut terms: Vec<(f64, f64)> = Vec::with_capacity(dim);
    for a in 0..dim {
        let h = grid.spacing(a);
        let i = grid.index(k, a);
        let mut best: Option<(f64, f64)> = None;
        for dir in [-1isize, 1] {
            let i1 = i as isize + dir;
            if i1 < 0 || i1 >= grid.shape()[a] as isize {
                continue;
            }
            let k1 = grid.offset(k, a, dir);
            if state[k1] != State::Known {
                continue;
            }
            let t1 = rho[k1];
            let i2 = i as isize + 2 * dir;
            let mut cand = (1.0 / (h * h), t1);
            if i2 >= 0 && i2 < grid.shape()[a] as isize {
                let k2 = grid.offset(k, a, 2 * dir);
                if state[k2] == State::Known && rho[k2] <= t1 {
                    cand = (9.0 / (4.0 * h * h), (4.0 * t1 - rho[k2]) / 3.0);
                }
            }
            if best.is_none_or(|b| cand.1 < b.1) {
                best = Some(cand);
            }
        }
        if let Some(b) = best {
            terms.push(b);
        }
    }
    terms.sort_by(|a, b| a.1.total_cmp(&b.1));
    let mut result = f64::INFINITY;
    for used in 1..=terms.len() {
        let (mut qa, mut qb, mut qc) = (0.0, 0.0, -s * s);
        for &(alpha, t) in &terms[..used] {
            qa += alpha;
            qb -= 2.0 * alpha * t;
            qc += alpha * t * t;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            break;
        }
        let t = (-qb + disc.sqrt()) / (2.0 * qa);
        if t < terms[used - 1].1 {
            break;
        }
        result = t;
        if used == terms.len() || t <= terms[used].1 {
            break;
        }
    }
    result
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::f64::consts::E;

    #[test]
    fn sections_containing_v_are_flat() {
        let amb = ConformalAmbient::new(vec![0.0, 0.0, 1.0], 2).unwrap();
        let sec = DMatrix::from_row_slice(2, 3, &[0.0, 0.0, 1.0, 0.6, 0.8, 0.0]);
        let k = conformal_sectional_curvature(&amb, &[0.3, -0.2, 0.7], &sec).unwrap();
        assert!(k.abs() < 1e-15);
    }

    #[test]
    fn sections_orthogonal_to_v() {
        let amb = ConformalAmbient::new(vec![0.0, 0.0, 1.0], 2).unwrap();
        let sec = DMatrix::from_row_slice(2, 3, &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        let k = conformal_sectional_curvature(&amb, &[0.5, 0.5, 0.0], &sec).unwrap();
        assert!((k + 0.25).abs() < 1e-15);
        let k1 = conformal_sectional_curvature(&amb, &[0.0, 0.0, 1.0], &sec).unwrap();
        assert!((k1 + 0.25 * (-1f64).exp()).abs() < 1e-15);
    }

    #[test]
    fn non_orthonormal_section_is_rejected() {
        let amb = ConformalAmbient::new(vec![0.0, 1.0], 1).unwrap();
        let sec = DMatrix::from_row_slice(2, 2, &[1.0, 0.0, 1.0, 0.0]);
        assert!(conformal_sectional_curvature(&amb, &[0.0, 0.0], &sec).is_err());
    }

    #[test]
    fn distance_along_direction() {
        let amb = ConformalAmbient::new(vec![0.0, 1.0], 1).unwrap();
        let grid = Grid::new(vec![-1.0, -0.5], vec![1.0, 1.5], vec![161, 161]).unwrap();
        let field = conformal_distance(&amb, &[0.0, 0.0], &grid).unwrap();
        let rho = field.sample(&[0.0, 1.0]).unwrap();
        assert!((rho - (E - 1.0)).abs() < 2e-3, "{rho}");
    }

    #[test]
    fn flat_distance_is_euclidean() {
        let amb = ConformalAmbient::flat(2);
        let grid = Grid::cube(2, -1.0, 1.0, 81).unwrap();
        let field = conformal_distance(&amb, &[0.0, 0.0], &grid).unwrap();
        let h = grid.max_spacing();
        for k in 0..grid.len() {
            let x = grid.point(k);
            let r = (x[0] * x[0] + x[1] * x[1]).sqrt();
            assert!((field.rho[k] - r).abs() <= 2.0 * h);
        }
    }

    #[test]
    fn origin_outside_domain_is_an_error() {
        let amb = ConformalAmbient::flat(2);
        let grid = Grid::cube(2, -1.0, 1.0, 11).unwrap();
        assert!(matches!(conformal_distance(&amb, &[2.0, 0.0], &grid), Err(LabError::Domain(_))));
    }

    #[test]
    fn segment_length_matches_quadrature() {
        let amb = ConformalAmbient::new(vec![0.6, 0.8], 2).unwrap();
        let (a, b) = ([0.1, -0.3], [0.9, 0.4]);
        let n = 20000;
        let mut acc = 0.0;
        for i in 0..n {
            let t = (i as f64 + 0.5) / n as f64;
            let x = [a[0] + t * (b[0] - a[0]), a[1] + t * (b[1] - a[1])];
            acc += amb.slowness(&x);
        }
        let len = ((b[0] - a[0]) * (b[0] - a[0]) + (b[1] - a[1]) * (b[1] - a[1])).sqrt();
        assert!((conformal_segment_length(&amb, &a, &b) - acc * len / n as f64).abs() < 1e-9);
    }
}
