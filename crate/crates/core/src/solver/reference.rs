//! Closed-form and ODE reference solutions.

use std::f64::consts::FRAC_PI_2;

use crate::error::{LabError, Result};

/// The grim reaper profile −log cos x.
pub fn grim_reaper_reference(x: f64) -> Result<f64> {
    if !(x.abs() < FRAC_PI_2) {
        return Err(LabError::Domain(format!("grim reaper profile needs |x| < π/2, got {x}")));
    }
    Ok(-x.cos().ln())
}

/// First and second derivatives of the grim reaper profile: (tan x, sec²x).
pub fn grim_reaper_derivatives(x: f64) -> Result<(f64, f64)> {
    grim_reaper_reference(x)?;
    let t = x.tan();
    Ok((t, 1.0 + t * t))
}

/// Value and slope of the rotationally symmetric profile at one radius.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct BowlPoint {
    pub r: f64,
    pub u: f64,
    pub du: f64,
}

const BOWL_TOL: f64 = 1e-12;
/// Below this radius the axis expansion is used directly.
const AXIS_RADIUS: f64 = 1e-4;
const MAX_STEPS: usize = 10_000_000;

fn axis_series(r: f64, n: f64) -> (f64, f64) {
    let c = 1.0 / (n * n * n * (n + 2.0));
    (r * r / (2.0 * n) + 0.25 * c * r.powi(4), r / n + c * r.powi(3))
}

/// u' = p, p' = (1 + p²)(1 − (n − 1)p/r).
fn rhs(r: f64, y: [f64; 2], n: f64) -> [f64; 2] {
    let p = y[1];
    [p, (1.0 + p * p) * (1.0 - (n - 1.0) * p / r)]
}

/// One Dormand–Prince 5(4) step; returns the fifth-order update and the
/// embedded error estimate.
fn dopri_step(r: f64, y: [f64; 2], h: f64, n: f64) -> ([f64; 2], [f64; 2]) {
    const C: [f64; 6] = [1.0 / 5.0, 3.0 / 10.0, 4.0 / 5.0, 8.0 / 9.0, 1.0, 1.0];
    const A: [&[f64]; 6] = [
        &[1.0 / 5.0],
        &[3.0 / 40.0, 9.0 / 40.0],
        &[44.0 / 45.0, -56.0 / 15.0, 32.0 / 9.0],
        &[19372.0 / 6561.0, -25360.0 / 2187.0, 64448.0 / 6561.0, -212.0 / 729.0],
        &[9017.0 / 3168.0, -355.0 / 33.0, 46732.0 / 5247.0, 49.0 / 176.0, -5103.0 / 18656.0],
        &[35.0 / 384.0, 0.0, 500.0 / 1113.0, 125.0 / 192.0, -2187.0 / 6784.0, 11.0 / 84.0],
    ];
    const E: [f64; 7] = [
        71.0 / 57600.0,
        0.0,
        -71.0 / 16695.0,
        71.0 / 1920.0,
        -17253.0 / 339200.0,
        22.0 / 525.0,
        -1.0 / 40.0,
    ];
    let mut k = [[0.0; 2]; 7];
    k[0] = rhs(r, y, n);
    for s in 0..6 {
        let mut ys = y;
        for (j, a) in A[s].iter().enumerate() {
            for c in 0..2 {
                ys[c] += h * a * k[j][c];
            }
        }
        k[s + 1] = rhs(r + C[s] * h, ys, n);
    }
    // the last stage is evaluated at the new point (first-same-as-last)
    let mut y5 = y;
    for (j, a) in A[5].iter().enumerate() {
        for c in 0..2 {
            y5[c] += h * a * k[j][c];
        }
    }
    let mut err = [0.0; 2];
    for (j, e) in E.iter().enumerate() {
        for c in 0..2 {
            err[c] += h * e * k[j][c];
        }
    }
    (y5, err)
}

/// Profile of the rotationally symmetric translator in ℝⁿ⁺¹ with u(0) = 0,
/// u'(0) = 0, at the requested radii (returned in input order).
///
/// Integrates the radial ODE with an adaptive Dormand–Prince 5(4) scheme at
/// local tolerance 1e-12, starting from the axis expansion
/// u = r²/(2n) + r⁴/(4n³(n+2)).
pub fn bowl_profile(n: usize, radii: &[f64]) -> Result<Vec<BowlPoint>> {
    if n < 2 {
        return Err(LabError::Domain(format!("the radial profile needs n ≥ 2, got {n}")));
    }
    if let Some(r) = radii.iter().find(|r| !(**r >= 0.0 && r.is_finite())) {
        return Err(LabError::Domain(format!("radius must be finite and non-negative, got {r}")));
    }
    let nf = n as f64;
    let mut order: Vec<usize> = (0..radii.len()).collect();
    order.sort_by(|&a, &b| radii[a].total_cmp(&radii[b]));
    let mut out = vec![BowlPoint { r: 0.0, u: 0.0, du: 0.0 }; radii.len()];
    let (u0, p0) = axis_series(AXIS_RADIUS, nf);
    let mut r = AXIS_RADIUS;
    let mut y = [u0, p0];
    let mut h = 1e-3;
    let mut steps = 0;
    for idx in order {
        let target = radii[idx];
        if target <= AXIS_RADIUS {
            let (u, du) = axis_series(target, nf);
            out[idx] = BowlPoint { r: target, u, du };
            continue;
        }
        while r < target {
            steps += 1;
            if steps > MAX_STEPS {
                return Err(LabError::Integrator(format!("step limit reached at r = {r}")));
            }
            let last = target - r <= h;
            let step = if last { target - r } else { h };
            let (y5, err) = dopri_step(r, y, step, nf);
            let scaled = (0..2)
                .map(|c| err[c].abs() / (BOWL_TOL + BOWL_TOL * y[c].abs().max(y5[c].abs())))
                .fold(0.0f64, f64::max);
            if !scaled.is_finite() {
                return Err(LabError::Integrator(format!("non-finite state at r = {r}")));
            }
            let factor = if scaled == 0.0 { 5.0 } else { (0.9 * scaled.powf(-0.2)).clamp(0.2, 5.0) };
            if scaled <= 1.0 {
                r = if last { target } else { r + step };
                y = y5;
                if !last {
                    h = step * factor;
                }
            } else {
                h = step * factor;
            }
            if h < 1e-14 {
                return Err(LabError::Integrator(format!("step size underflow at r = {r}")));
            }
        }
        out[idx] = BowlPoint { r: target, u: y[0], du: y[1] };
    }
    Ok(out)
}

/// Height of the rotationally symmetric translator at radius r.
pub fn bowl_reference(r: f64, n: usize) -> Result<f64> {
    Ok(bowl_profile(n, &[r])?[0].u)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn grim_reaper_values() {
        assert_eq!(grim_reaper_reference(0.0).unwrap(), 0.0);
        let v = grim_reaper_reference(std::f64::consts::FRAC_PI_4).unwrap();
        assert!((v - 0.5 * 2f64.ln()).abs() < 1e-15);
        assert!((v - 0.3465736).abs() < 1e-7);
        assert!(grim_reaper_reference(FRAC_PI_2).is_err());
        assert!(grim_reaper_reference(-2.0).is_err());
        assert!(grim_reaper_reference(f64::NAN).is_err());
    }

    #[test]
    fn grim_reaper_satisfies_its_ode() {
        for i in -14..=14 {
            let x = 0.1 * i as f64;
            let (d1, d2) = grim_reaper_derivatives(x).unwrap();
            assert!((d2 - 1.0 - d1 * d1).abs() < 1e-12);
            // independent check of the derivatives by finite differences
            let h = 1e-5;
            let fd = (grim_reaper_reference(x + h).unwrap() - grim_reaper_reference(x - h).unwrap()) / (2.0 * h);
            assert!((fd - d1).abs() < 1e-8);
        }
    }

    #[test]
    fn bowl_axis_behaviour() {
        assert_eq!(bowl_reference(0.0, 2).unwrap(), 0.0);
        assert_eq!(bowl_profile(3, &[0.0]).unwrap()[0].du, 0.0);
        assert!((bowl_reference(0.1, 2).unwrap() - 0.0025).abs() < 5e-6);
        assert!(bowl_reference(1.0, 1).is_err());
        assert!(bowl_reference(-1.0, 2).is_err());
    }

    #[test]
    fn bowl_profile_is_monotone_and_ordered() {
        let radii = [2.0, 0.5, 1.0, 0.0, 3.0, 0.25];
        let prof = bowl_profile(2, &radii).unwrap();
        for (p, r) in prof.iter().zip(radii) {
            assert_eq!(p.r, r);
            if r > 0.0 {
                assert!(p.du > 0.0);
            }
        }
        let mut sorted = prof.clone();
        sorted.sort_by(|a, b| a.r.total_cmp(&b.r));
        assert!(sorted.windows(2).all(|w| w[1].u > w[0].u));
    }

    #[test]
    fn bowl_profile_satisfies_the_radial_equation() {
        // u''/(1 + u'²) + (n − 1)u'/r = 1, with u'' from differences of u'
        for n in [2usize, 3, 5] {
            let h = 1e-4;
            for r in [0.3, 1.0, 2.5] {
                let p = bowl_profile(n, &[r - h, r, r + h]).unwrap();
                let d2 = (p[2].du - p[0].du) / (2.0 * h);
                let lhs = d2 / (1.0 + p[1].du.powi(2)) + (n as f64 - 1.0) * p[1].du / r;
                assert!((lhs - 1.0).abs() < 1e-7, "n = {n}, r = {r}: {lhs}");
                // u' is the derivative of u
                let du = (p[2].u - p[0].u) / (2.0 * h);
                assert!((du - p[1].du).abs() < 1e-8);
            }
        }
    }

    #[test]
    fn bowl_profile_is_independent_of_query_set() {
        let a = bowl_reference(1.7, 2).unwrap();
        let b = bowl_profile(2, &[0.3, 0.9, 1.7]).unwrap()[2].u;
        assert!((a - b).abs() < 1e-10);
    }
}
