//! Frames adapted to the Jordan angles between P and P₀, the Hessian of v in
//! those frames, and geodesics used to probe it.

use nalgebra::{DMatrix, DVector};

use super::{gram_schmidt_rows, JordanAngles, Subspace};
use crate::error::{LabError, Result};

/// Orthonormal frames at P and P₀ in which W = ⟨eᵢ, εⱼ⟩ is diagonal.
///
/// Row k of `tangent` pairs with row k of `reference` (cosine μ_k) and, for
/// k < p, with row k of `normal`, which is the unit vector along the part of
/// ε'_k orthogonal to P. Rows are ordered by descending angle.
#[derive(Clone, Debug)]
pub struct AdaptedFrame {
    pub tangent: DMatrix<f64>,
    pub normal: DMatrix<f64>,
    pub reference: DMatrix<f64>,
    pub angles: JordanAngles,
    /// Sign of det(tangent · P.frameᵀ): +1 when the adapted rows keep P's orientation.
    pub orientation: f64,
}

impl AdaptedFrame {
    pub fn new(p: &Subspace, p0: &Subspace) -> Result<Self> {
        p.check_compatible(p0)?;
        let n = p.n();
        let m = p.m();
        let pc = n.min(m);
        let w = p.frame() * p0.frame().transpose();
        let svd = w.svd(true, true);
        let mut u = svd.u.expect("requested U");
        let mut v_t = svd.v_t.expect("requested Vᵀ");
        for k in 0..n {
            let col = u.column(k);
            let lead = col.iter().copied().find(|x| x.abs() > 1e-14).unwrap_or(1.0);
            if lead < 0.0 {
                u.column_mut(k).neg_mut();
                v_t.row_mut(k).neg_mut();
            }
        }
        let mut order: Vec<usize> = (0..n).collect();
        order.sort_by(|&a, &b| svd.singular_values[a].total_cmp(&svd.singular_values[b]));

        let ut_p = u.transpose() * p.frame();
        let vt_p0 = &v_t * p0.frame();
        let tangent = DMatrix::from_fn(n, p.ambient_dim(), |r, c| ut_p[(order[r], c)]);
        let reference = DMatrix::from_fn(n, p.ambient_dim(), |r, c| vt_p0[(order[r], c)]);

        let mut theta = Vec::with_capacity(pc);
        let mut seeds: Vec<DVector<f64>> = Vec::with_capacity(m);
        for k in 0..pc {
            let e = tangent.row(k).transpose();
            let eps = reference.row(k).transpose();
            let sigma = e.dot(&eps).clamp(0.0, 1.0);
            let d = &eps - sigma * &e;
            let s = d.norm();
            theta.push(s.atan2(sigma));
            if s > 1e-12 {
                seeds.push(d / s);
            }
        }
        let normal = complete_normals(&tangent, seeds, m)?;
        let mu = theta.iter().map(|t: &f64| t.cos()).collect();
        let lambda = theta.iter().map(|&t| super::tan_guarded(t)).collect();
        let orientation = (&tangent * p.frame().transpose()).determinant().signum();
        Ok(AdaptedFrame {
            tangent,
            normal,
            reference,
            angles: JordanAngles { theta, mu, lambda },
            orientation,
        })
    }

    pub fn v(&self) -> f64 {
        self.angles.v()
    }

    /// Converts a direction x (linear map tangent row i ↦ Σ_α x_{iα} normal
    /// row α) given in arbitrary orthonormal frames of P and its normal space
    /// into the adapted coordinates.
    pub fn coordinates_from(
        &self,
        tangent: &DMatrix<f64>,
        normal: &DMatrix<f64>,
        x: &DMatrix<f64>,
    ) -> DMatrix<f64> {
        let a = &self.tangent * tangent.transpose();
        let c = &self.normal * normal.transpose();
        a * x * c.transpose()
    }
}

/// Extends the given unit normals to an orthonormal basis of the normal space.
fn complete_normals(tangent: &DMatrix<f64>, seeds: Vec<DVector<f64>>, m: usize) -> Result<DMatrix<f64>> {
    let dim = tangent.ncols();
    let mut basis: Vec<DVector<f64>> = tangent.row_iter().map(|r| r.transpose()).collect();
    let mut normals: Vec<DVector<f64>> = Vec::with_capacity(m);
    let project = |v: &mut DVector<f64>, basis: &[DVector<f64>]| {
        for _ in 0..2 {
            for b in basis {
                let c = b.dot(v);
                *v -= c * b;
            }
        }
    };
    for mut s in seeds {
        project(&mut s, &basis);
        let len = s.norm();
        if len > 0.5 {
            s /= len;
            basis.push(s.clone());
            normals.push(s);
        }
    }
    while normals.len() < m {
        let mut best: Option<DVector<f64>> = None;
        for j in 0..dim {
            let mut v = DVector::zeros(dim);
            v[j] = 1.0;
            project(&mut v, &basis);
            if best.as_ref().is_none_or(|b| v.norm() > b.norm()) {
                best = Some(v);
            }
        }
        let mut v = best.expect("ambient dimension is positive");
        let len = v.norm();
        if len < 1e-6 {
            return Err(LabError::InvalidInput("cannot complete the normal frame".into()));
        }
        v /= len;
        basis.push(v.clone());
        normals.push(v);
    }
    let mut out = DMatrix::zeros(m, dim);
    for (k, v) in normals.iter().enumerate() {
        out.row_mut(k).copy_from(&v.transpose());
    }
    Ok(out)
}

fn check_direction(angles: &JordanAngles, x: &DMatrix<f64>) -> Result<()> {
    let p = angles.p();
    if x.nrows() < p || x.ncols() < p || x.nrows().min(x.ncols()) != p {
        return Err(LabError::DimensionMismatch(format!(
            "direction is {}×{} but there are {} Jordan angles",
            x.nrows(),
            x.ncols(),
            p
        )));
    }
    Ok(())
}

/// Hess(v)(E, E) for the direction with adapted coordinates x (n × m):
/// v·[|x|² + 2Σ λ_α² x_{αα}² + Σ_{α≠β} λ_αλ_β (x_{αα}x_{ββ} + x_{αβ}x_{βα})].
pub fn hess_v_quadratic_form(angles: &JordanAngles, x: &DMatrix<f64>) -> Result<f64> {
    check_direction(angles, x)?;
    let lambda = angles.finite_lambdas()?;
    let p = angles.p();
    let mut q = x.norm_squared();
    for a in 0..p {
        q += 2.0 * lambda[a] * lambda[a] * x[(a, a)] * x[(a, a)];
        for b in 0..p {
            if a != b {
                q += lambda[a] * lambda[b] * (x[(a, a)] * x[(b, b)] + x[(a, b)] * x[(b, a)]);
            }
        }
    }
    Ok(angles.v() * q)
}

/// dv(E) = −v Σ λ_α x_{αα} with the normals of [`AdaptedFrame`].
pub fn dv_form(angles: &JordanAngles, x: &DMatrix<f64>) -> Result<f64> {
    check_direction(angles, x)?;
    let lambda = angles.finite_lambdas()?;
    let s: f64 = lambda.iter().enumerate().map(|(a, l)| l * x[(a, a)]).sum();
    Ok(-angles.v() * s)
}

/// (v − 1)/(p v (v^{2/p} − 1)) + (p + 1)/(p v), continuous at v = 1.
pub fn hessian_lower_bound_coefficient(v: f64, p: usize) -> f64 {
    let pf = p as f64;
    let ratio = if v - 1.0 <= 1e-300 {
        pf / 2.0
    } else {
        (v - 1.0) / ((2.0 / pf) * (v - 1.0).ln_1p()).exp_m1()
    };
    ratio / (pf * v) + (pf + 1.0) / (pf * v)
}

/// Hess(v)(E,E) − v(2 − v)|E|² − c(v) dv(E)², the slack in the lower bound on 𝕌₂.
pub fn hess_lower_bound_residual(angles: &JordanAngles, x: &DMatrix<f64>) -> Result<f64> {
    let v = angles.v();
    if !(v < 2.0) {
        return Err(LabError::Domain(format!("v = {v} ≥ 2: outside 𝕌₂")));
    }
    let hess = hess_v_quadratic_form(angles, x)?;
    let dv = dv_form(angles, x)?;
    let c = hessian_lower_bound_coefficient(v, angles.p());
    Ok(hess - v * (2.0 - v) * x.norm_squared() - c * dv * dv)
}

/// One plane rotation eᵢ ↦ cos(r t) eᵢ + sin(r t) ν.
#[derive(Clone, Debug)]
pub struct Rotation {
    pub tangent: usize,
    pub normal: DVector<f64>,
    pub rate: f64,
}

/// Simultaneous plane rotations of the frame rows of `base`.
///
/// The normals must be orthonormal and orthogonal to `base`; each tangent row
/// may appear at most once.
pub fn grassmann_geodesic(base: &Subspace, rotations: &[Rotation], t: f64) -> Result<Subspace> {
    let n = base.n();
    let tol = 1e-10;
    for (k, r) in rotations.iter().enumerate() {
        if r.tangent >= n {
            return Err(LabError::InvalidInput(format!("rotation {k} uses tangent row {} ≥ n", r.tangent)));
        }
        if r.normal.len() != base.ambient_dim() {
            return Err(LabError::DimensionMismatch(format!("rotation {k} normal has wrong length")));
        }
        if !r.rate.is_finite() {
            return Err(LabError::InvalidInput(format!("rotation {k} has a non-finite rate")));
        }
        if (r.normal.norm() - 1.0).abs() > tol {
            return Err(LabError::InvalidInput(format!("rotation {k} normal is not a unit vector")));
        }
        if (base.frame() * &r.normal).amax() > tol {
            return Err(LabError::InvalidInput(format!("rotation {k} normal is not orthogonal to the plane")));
        }
        for (l, s) in rotations[..k].iter().enumerate() {
            if s.tangent == r.tangent {
                return Err(LabError::InvalidInput(format!("rotations {l} and {k} share a tangent row")));
            }
            if s.normal.dot(&r.normal).abs() > tol {
                return Err(LabError::InvalidInput(format!("rotation normals {l} and {k} are not orthogonal")));
            }
        }
    }
    let mut frame = base.frame().clone();
    for r in rotations {
        let (s, c) = (r.rate * t).sin_cos();
        let row = c * base.frame().row(r.tangent) + s * r.normal.transpose();
        frame.row_mut(r.tangent).copy_from(&row);
    }
    match Subspace::from_frame(frame.clone()) {
        Ok(sub) => Ok(sub),
        Err(_) => Subspace::from_frame(gram_schmidt_rows(&frame)?),
    }
}

/// The geodesic through P with velocity x, given in the coordinates of
/// `frame`, keeping P's orientation.
pub fn geodesic_from_direction(frame: &AdaptedFrame, x: &DMatrix<f64>, t: f64) -> Result<Subspace> {
    let n = frame.tangent.nrows();
    let m = frame.normal.nrows();
    if x.shape() != (n, m) {
        return Err(LabError::DimensionMismatch(format!("direction must be {n}×{m}")));
    }
    let svd = x.clone().svd(true, true);
    let a = svd.u.expect("requested U");
    let b_t = svd.v_t.expect("requested Vᵀ");
    let q = n.min(m);
    let mut rows: Vec<DVector<f64>> = (0..q).map(|k| (a.column(k).transpose() * &frame.tangent).transpose()).collect();
    // complete within the plane, taking the least dependent adapted row each time
    while rows.len() < n {
        let best = frame
            .tangent
            .row_iter()
            .map(|r| {
                let mut v: DVector<f64> = r.transpose();
                for _ in 0..2 {
                    for b in &rows {
                        let c = b.dot(&v);
                        v -= c * b;
                    }
                }
                v
            })
            .max_by(|a, b| a.norm().total_cmp(&b.norm()))
            .expect("plane has at least one row");
        let len = best.norm();
        rows.push(best / len);
    }
    let base = Subspace::from_frame(DMatrix::from_fn(n, frame.tangent.ncols(), |r, c| rows[r][c]))?;
    let mut rotations = Vec::with_capacity(q);
    for k in 0..q {
        let s = svd.singular_values[k];
        if s > 0.0 {
            let normal = (b_t.row(k) * &frame.normal).transpose();
            rotations.push(Rotation { tangent: k, normal, rate: s });
        }
    }
    let path = grassmann_geodesic(&base, &rotations, t)?;
    let sign = (base.frame() * frame.tangent.transpose()).determinant() * frame.orientation;
    Ok(if sign < 0.0 { path.flipped() } else { path })
}
