//! Geometry of the oriented Grassmannian G(n, m) of n-planes in ℝⁿ⁺ᵐ.
//!
//! Planes are stored as orthonormal row frames. The quantities here are the
//! ones used to control the Gauss map of a translator: the pairing
//! w(P, Q) = det(⟨eᵢ, fⱼ⟩), the Jordan angles θ between two planes,
//! v = 1/w = ∏ sec θ, the auxiliary h = v^{3/2}(2 − v)^{-3/2}, and the
//! Hessian of v written in a frame adapted to the Jordan angles.

mod frame;

pub use frame::{
    dv_form, geodesic_from_direction, grassmann_geodesic, hess_lower_bound_residual,
    hess_v_quadratic_form, hessian_lower_bound_coefficient, AdaptedFrame, Rotation,
};

use nalgebra::{DMatrix, DVector};
use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};

/// Frames must be orthonormal to this accuracy.
pub const FRAME_TOLERANCE: f64 = 1e-12;

/// Slack allowed when clamping singular values into [0, 1].
pub const CLAMP_SLACK: f64 = 1e-12;

/// Angles closer than this to π/2 have an effectively infinite tangent.
pub const RIGHT_ANGLE_GUARD: f64 = 1e-8;

/// An oriented n-plane in ℝⁿ⁺ᵐ, stored as an n × (n+m) matrix with
/// orthonormal rows. The row order fixes the orientation.
#[derive(Clone, Debug, PartialEq)]
pub struct Subspace {
    frame: DMatrix<f64>,
}

impl Subspace {
    /// Wraps an orthonormal frame, checking `frame · frameᵀ = I`.
    pub fn from_frame(frame: DMatrix<f64>) -> Result<Self> {
        let n = frame.nrows();
        if n == 0 || frame.ncols() <= n {
            return Err(LabError::DimensionMismatch(format!(
                "a frame of an n-plane needs 0 < n < ambient dimension, got {}×{}",
                n,
                frame.ncols()
            )));
        }
        let gram = &frame * frame.transpose();
        let err = (gram - DMatrix::<f64>::identity(n, n)).abs().max();
        if err > FRAME_TOLERANCE * n as f64 {
            return Err(LabError::InvalidInput(format!(
                "frame rows are not orthonormal (deviation {err:e})"
            )));
        }
        Ok(Subspace { frame })
    }

    /// Orthonormalizes the rows of `rows` by Gram–Schmidt (positive-diagonal
    /// triangular factor), which keeps the orientation of the spanning set.
    pub fn orthonormalize(rows: &DMatrix<f64>) -> Result<Self> {
        let frame = gram_schmidt_rows(rows)?;
        Subspace::from_frame(frame)
    }

    /// span(ε₁, …, εₙ) inside ℝⁿ⁺ᵐ.
    pub fn coordinate_plane(n: usize, m: usize) -> Self {
        let mut frame = DMatrix::zeros(n, n + m);
        for i in 0..n {
            frame[(i, i)] = 1.0;
        }
        Subspace { frame }
    }

    /// The plane spanned by the rows of [Iₙ | Z].
    pub fn from_graph(z: &GraphCoordinates) -> Self {
        let (n, m) = z.z.shape();
        let mut rows = DMatrix::zeros(n, n + m);
        for i in 0..n {
            rows[(i, i)] = 1.0;
            for a in 0..m {
                rows[(i, n + a)] = z.z[(i, a)];
            }
        }
        Subspace::orthonormalize(&rows).expect("rows of [I | Z] are independent")
    }

    /// A random plane (orthonormalized uniform entries; not Haar distributed).
    pub fn random<R: Rng + ?Sized>(n: usize, m: usize, rng: &mut R) -> Self {
        loop {
            let rows = DMatrix::from_fn(n, n + m, |_, _| rng.random_range(-1.0..1.0));
            if let Ok(s) = Subspace::orthonormalize(&rows) {
                return s;
            }
        }
    }

    pub fn n(&self) -> usize {
        self.frame.nrows()
    }

    pub fn m(&self) -> usize {
        self.frame.ncols() - self.frame.nrows()
    }

    pub fn ambient_dim(&self) -> usize {
        self.frame.ncols()
    }

    pub fn frame(&self) -> &DMatrix<f64> {
        &self.frame
    }

    pub fn into_frame(self) -> DMatrix<f64> {
        self.frame
    }

    /// The same plane with the opposite orientation.
    pub fn flipped(&self) -> Self {
        let mut frame = self.frame.clone();
        frame.row_mut(0).neg_mut();
        Subspace { frame }
    }

    /// Orthogonal projector onto the plane, a basis-independent representation.
    pub fn projector(&self) -> DMatrix<f64> {
        self.frame.transpose() * &self.frame
    }

    fn check_compatible(&self, other: &Subspace) -> Result<()> {
        if self.n() != other.n() || self.ambient_dim() != other.ambient_dim() {
            return Err(LabError::DimensionMismatch(format!(
                "planes G({}, {}) and G({}, {})",
                self.n(),
                self.m(),
                other.n(),
                other.m()
            )));
        }
        Ok(())
    }
}

/// Row Gram–Schmidt with one reorthogonalization pass.
pub(crate) fn gram_schmidt_rows(rows: &DMatrix<f64>) -> Result<DMatrix<f64>> {
    let (n, dim) = rows.shape();
    let mut out = DMatrix::zeros(n, dim);
    for i in 0..n {
        let mut v: DVector<f64> = rows.row(i).transpose();
        let scale = v.norm();
        for _ in 0..2 {
            for j in 0..i {
                let q = out.row(j).transpose();
                let c = q.dot(&v);
                v -= c * q;
            }
        }
        let len = v.norm();
        if !(len > 1e-12 * scale.max(1e-300)) {
            return Err(LabError::InvalidInput(format!("row {i} is linearly dependent on earlier rows")));
        }
        out.row_mut(i).copy_from(&(v / len).transpose());
    }
    Ok(out)
}

/// A plane in 𝕌 written as the row space of [Iₙ | Z].
#[derive(Clone, Debug, PartialEq)]
pub struct GraphCoordinates {
    pub z: DMatrix<f64>,
}

impl GraphCoordinates {
    pub fn new(z: DMatrix<f64>) -> Self {
        GraphCoordinates { z }
    }

    pub fn from_rows(rows: &[Vec<f64>]) -> Result<Self> {
        let n = rows.len();
        let m = rows.first().map_or(0, Vec::len);
        if n == 0 || m == 0 || rows.iter().any(|r| r.len() != m) {
            return Err(LabError::InvalidInput("Z must be a non-empty rectangular matrix".into()));
        }
        if rows.iter().flatten().any(|x| !x.is_finite()) {
            return Err(LabError::InvalidInput("Z has non-finite entries".into()));
        }
        Ok(GraphCoordinates { z: DMatrix::from_fn(n, m, |i, a| rows[i][a]) })
    }

    pub fn subspace(&self) -> Subspace {
        Subspace::from_graph(self)
    }
}

/// Jordan (principal) angles between two n-planes, sorted descending.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct JordanAngles {
    pub theta: Vec<f64>,
    pub mu: Vec<f64>,
    /// tan θ; `f64::INFINITY` for angles within [`RIGHT_ANGLE_GUARD`] of π/2.
    pub lambda: Vec<f64>,
}

impl JordanAngles {
    pub fn from_theta(mut theta: Vec<f64>) -> Self {
        theta.sort_by(|a, b| b.total_cmp(a));
        let mu = theta.iter().map(|t| t.cos().clamp(0.0, 1.0)).collect();
        let lambda = theta.iter().map(|&t| tan_guarded(t)).collect();
        JordanAngles { theta, mu, lambda }
    }

    pub fn p(&self) -> usize {
        self.theta.len()
    }

    /// ∏ sec θ; infinite when an angle is (numerically) a right angle.
    pub fn v(&self) -> f64 {
        self.mu.iter().map(|&m| 1.0 / m).product()
    }

    pub(crate) fn finite_lambdas(&self) -> Result<&[f64]> {
        if self.lambda.iter().any(|l| !l.is_finite()) {
            return Err(LabError::Domain(
                "a Jordan angle equals π/2, so the plane lies outside 𝕌 and tan θ is infinite".into(),
            ));
        }
        Ok(&self.lambda)
    }
}

fn tan_guarded(theta: f64) -> f64 {
    if theta >= std::f64::consts::FRAC_PI_2 - RIGHT_ANGLE_GUARD {
        f64::INFINITY
    } else {
        theta.tan()
    }
}

/// w(P, Q) = det W with Wᵢⱼ = ⟨eᵢ, fⱼ⟩.
pub fn pairing_w(p: &Subspace, q: &Subspace) -> Result<f64> {
    p.check_compatible(q)?;
    Ok((p.frame() * q.frame().transpose()).determinant())
}

/// Jordan angles between P and Q.
///
/// Cosines are the singular values of W; sines are the singular values of the
/// part of Q orthogonal to P. Pairing the two lists and using atan2 keeps
/// small angles accurate, where arccos alone loses half the digits.
pub fn jordan_angles(p: &Subspace, q: &Subspace) -> Result<JordanAngles> {
    p.check_compatible(q)?;
    let n = p.n();
    let pc = p.m().min(n);
    let w = p.frame() * q.frame().transpose();
    let mut cosines: Vec<f64> = w.singular_values().iter().map(|s| s.clamp(0.0, 1.0 + CLAMP_SLACK).min(1.0)).collect();
    cosines.sort_by(f64::total_cmp);
    let residual = q.frame() - (q.frame() * p.frame().transpose()) * p.frame();
    let mut sines: Vec<f64> = residual.singular_values().iter().map(|s| s.clamp(0.0, 1.0)).collect();
    sines.sort_by(|a, b| b.total_cmp(a));
    let theta = (0..pc).map(|k| sines[k].atan2(cosines[k])).collect();
    Ok(JordanAngles::from_theta(theta))
}

/// v(P, P₀) = 1 / w(P, P₀), defined on 𝕌 = {w > 0}.
pub fn v_function(p: &Subspace, p0: &Subspace) -> Result<f64> {
    let w = pairing_w(p, p0)?;
    if !(w > 0.0) {
        return Err(LabError::Domain(format!("w(P, P₀) = {w:e} ≤ 0: the plane lies outside 𝕌")));
    }
    Ok(1.0 / w)
}

/// h = v^{3/2} (2 − v)^{-3/2} on 𝕌₂ = {v < 2}.
pub fn h_function(v: f64) -> Result<f64> {
    if !(v < 2.0) {
        return Err(LabError::Domain(format!("v = {v} ≥ 2: outside 𝕌₂")));
    }
    if v < 1.0 - 1e-12 {
        return Err(LabError::Domain(format!("v = {v} < 1 is not attained by any plane")));
    }
    Ok((v / (2.0 - v)).powf(1.5))
}

/// dh/dv and d²h/dv² of the h-function.
pub fn h_derivatives(v: f64) -> Result<(f64, f64)> {
    let h = h_function(v)?;
    let d1 = 3.0 * h / (v * (2.0 - v));
    // d/dv log h' = 1/(2v) + 5/(2(2 − v))
    let d2 = d1 * (0.5 / v + 2.5 / (2.0 - v));
    Ok((d1, d2))
}

/// 3h|E|² + (3/2 + 1/(3p)) h⁻¹ dh(E)², the closed form proposed for
/// Hess(h)(E, E). It agrees with the chain rule only at v = 1; see
/// [`hess_h_chain_rule`] for the exact value.
pub fn hess_h_model(v: f64, p: usize, e_norm_sq: f64, dh: f64) -> Result<f64> {
    if p == 0 {
        return Err(LabError::InvalidInput("p = min(n, m) must be positive".into()));
    }
    let h = h_function(v)?;
    Ok(3.0 * h * e_norm_sq + (1.5 + 1.0 / (3.0 * p as f64)) * dh * dh / h)
}

/// Hess(h)(E, E) = h'(v) Hess(v)(E, E) + h''(v) dv(E)².
pub fn hess_h_chain_rule(v: f64, hess_v: f64, dv: f64) -> Result<f64> {
    let (d1, d2) = h_derivatives(v)?;
    Ok(d1 * hess_v + d2 * dv * dv)
}

/// Threshold constants on the v-function.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Thresholds {
    /// v₀ = 2·3^{2/3} / (1 + 3^{2/3}), where h(v₀) = 3.
    pub v0: f64,
    /// 𝕌₂ = {v < 2}.
    pub u2_bound: f64,
    /// 𝕌₃ = {v < 3}.
    pub u3_bound: f64,
}

pub fn rigidity_thresholds() -> Thresholds {
    let c = 9.0f64.cbrt();
    Thresholds { v0: 2.0 * c / (1.0 + c), u2_bound: 2.0, u3_bound: 3.0 }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;
    use std::f64::consts::{FRAC_PI_3, FRAC_PI_4};

    #[test]
    fn hess_h_model_matches_chain_rule_only_at_reference_plane() {
        // on a line Hess v = v(2v² − 1) and dv = v tan θ per unit angle speed
        let at = |theta: f64| {
            let v = 1.0 / theta.cos();
            let dv = v * theta.tan();
            let dh = h_derivatives(v).unwrap().0 * dv;
            (hess_h_chain_rule(v, v * (2.0 * v * v - 1.0), dv).unwrap(), hess_h_model(v, 1, 1.0, dh).unwrap())
        };
        let (exact, model) = at(0.0);
        assert!((exact - model).abs() < 1e-14);
        let (exact, model) = at((1.0f64 / 1.5).acos());
        assert!((model - exact) / exact > 0.01, "{exact} {model}");
    }

    fn line(theta: f64) -> Subspace {
        Subspace::from_frame(DMatrix::from_row_slice(1, 2, &[theta.cos(), theta.sin()])).unwrap()
    }

    #[test]
    fn pairing_identity_and_rotation() {
        let p0 = Subspace::coordinate_plane(3, 2);
        assert!((pairing_w(&p0, &p0).unwrap() - 1.0).abs() < 1e-15);
        assert!((pairing_w(&line(FRAC_PI_3), &line(0.0)).unwrap() - 0.5).abs() < 1e-15);
    }

    #[test]
    fn pairing_flips_with_orientation() {
        let mut rng = ChaCha8Rng::seed_from_u64(3);
        let p = Subspace::random(2, 3, &mut rng);
        let q = Subspace::random(2, 3, &mut rng);
        let w = pairing_w(&p, &q).unwrap();
        assert!((pairing_w(&p.flipped(), &q).unwrap() + w).abs() < 1e-15);
    }

    #[test]
    fn dimension_mismatch_is_reported() {
        let p = Subspace::coordinate_plane(2, 2);
        let q = Subspace::coordinate_plane(2, 1);
        assert!(matches!(pairing_w(&p, &q), Err(LabError::DimensionMismatch(_))));
        assert!(jordan_angles(&p, &q).is_err());
    }

    #[test]
    fn angles_of_identical_planes_vanish() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let p = Subspace::random(3, 2, &mut rng);
        let a = jordan_angles(&p, &p).unwrap();
        assert_eq!(a.p(), 2);
        assert!(a.theta.iter().all(|t| t.abs() < 1e-14));
    }

    #[test]
    fn single_rotation_angle() {
        let a = jordan_angles(&line(FRAC_PI_4), &line(0.0)).unwrap();
        assert!((a.theta[0] - FRAC_PI_4).abs() < 1e-15);
        assert!((a.lambda[0] - 1.0).abs() < 1e-14);
    }

    #[test]
    fn right_angle_has_infinite_tangent() {
        let a = jordan_angles(&line(std::f64::consts::FRAC_PI_2), &line(0.0)).unwrap();
        assert!(a.lambda[0].is_infinite());
        assert!(a.finite_lambdas().is_err());
    }

    #[test]
    fn v_outside_u_is_a_domain_error() {
        let err = v_function(&line(2.0), &line(0.0)).unwrap_err();
        assert!(err.to_string().contains("𝕌"));
    }

    #[test]
    fn v_of_unit_slope_line() {
        let z = GraphCoordinates::from_rows(&[vec![1.0]]).unwrap();
        let v = v_function(&z.subspace(), &Subspace::coordinate_plane(1, 1)).unwrap();
        assert!((v - 2f64.sqrt()).abs() < 1e-15);
    }

    #[test]
    fn h_function_values_and_domain() {
        assert_eq!(h_function(1.0).unwrap(), 1.0);
        assert!((h_function(1.5).unwrap() - 27f64.sqrt()).abs() < 1e-14);
        assert!(h_function(2.0).unwrap_err().to_string().contains("𝕌₂"));
    }

    #[test]
    fn h_derivatives_match_finite_differences() {
        for &v in &[1.05, 1.3, 1.8] {
            let (d1, d2) = h_derivatives(v).unwrap();
            let e = 1e-5;
            let f = |x| h_function(x).unwrap();
            let fd1 = (f(v + e) - f(v - e)) / (2.0 * e);
            let fd2 = (f(v + e) - 2.0 * f(v) + f(v - e)) / (e * e);
            assert!((d1 - fd1).abs() < 1e-6 * d1);
            assert!((d2 - fd2).abs() < 1e-4 * d2);
        }
    }

    #[test]
    fn thresholds_fixed_bounds() {
        let t = rigidity_thresholds();
        assert_eq!(t.u2_bound, 2.0);
        assert_eq!(t.u3_bound, 3.0);
        assert!((h_function(t.v0).unwrap() - 3.0).abs() < 1e-12);
    }
}
