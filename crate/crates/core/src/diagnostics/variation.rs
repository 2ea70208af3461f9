//! Variations of the weighted volume F = ∫ e^{⟨V,X⟩} dμ: second variation,
//! Jacobi-operator Rayleigh quotients and random competitors.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{LabError, Result};
use crate::grid::Grid;
use crate::immersion::{
    parametric_weighted_volume, second_fundamental_form, weighted_volume, DriftOperator, GraphPatch, ShapeData,
};

/// exp(−1/(1 − t²)) for |t| < 1, zero otherwise.
pub fn bump(t: f64) -> f64 {
    if t.abs() < 1.0 {
        (-1.0 / (1.0 - t * t)).exp()
    } else {
        0.0
    }
}

/// Test functions must vanish within two cells of the boundary.
fn check_support(grid: &Grid, phi: &[f64]) -> Result<()> {
    if phi.len() != grid.len() {
        return Err(LabError::DimensionMismatch(format!("{} test-function values for {} nodes", phi.len(), grid.len())));
    }
    if let Some(k) = (0..grid.len()).find(|&k| grid.depth(k) < 2 && phi[k] != 0.0) {
        return Err(LabError::Precondition(format!(
            "test function is not compactly supported: φ = {} at node {k} near the boundary",
            phi[k]
        )));
    }
    if phi.iter().any(|x| !x.is_finite()) {
        return Err(LabError::InvalidInput("test function must be finite".into()));
    }
    Ok(())
}

fn require_hypersurface(patch: &GraphPatch) -> Result<()> {
    if patch.m() != 1 {
        return Err(LabError::Precondition(format!("needs codimension 1, got m = {}", patch.m())));
    }
    Ok(())
}

/// −∫φ(𝓛φ + |B|²φ) e^{⟨V,X⟩} dμ and ∫φ² e^{⟨V,X⟩} dμ.
fn jacobi_forms(patch: &GraphPatch, shape: &ShapeData, phi: &[f64]) -> (f64, f64) {
    let grid = patch.grid();
    let lphi = DriftOperator::new(patch, shape).apply(phi);
    let mut num = vec![0.0; grid.len()];
    let mut den = vec![0.0; grid.len()];
    for k in 0..grid.len() {
        if phi[k] == 0.0 {
            continue;
        }
        let weight = patch.height(k).exp() * shape.nodes[k].metric.sqrt_det;
        num[k] = -phi[k] * (lphi[k] + shape.nodes[k].b_norm_sq * phi[k]) * weight;
        den[k] = phi[k] * phi[k] * weight;
    }
    (grid.integrate(&num), grid.integrate(&den))
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SecondVariation {
    /// (F(δ) − 2F(0) + F(−δ))/δ².
    pub fd_value: f64,
    /// −∫φ(𝓛φ + |B|²φ) e^{⟨V,X⟩} dμ.
    pub formula_value: f64,
    pub rel_err: f64,
    /// (F(δ) − F(−δ))/(2δ).
    pub first_variation: f64,
    /// max(1, F(0)).
    pub scale: f64,
}

/// Compares the central second difference of F along X + sφν with the
/// Jacobi form. The perturbed surfaces are measured as parametrized
/// immersions, not re-graphed.
pub fn second_variation_check(patch: &GraphPatch, phi: &[f64], delta: f64) -> Result<SecondVariation> {
    require_hypersurface(patch)?;
    check_support(patch.grid(), phi)?;
    if !(delta > 0.0 && delta.is_finite()) {
        return Err(LabError::InvalidInput(format!("δ must be positive, got {delta}")));
    }
    let grid = patch.grid();
    let shape = second_fundamental_form(patch);
    let dir = patch.direction();
    let volume = |s: f64| {
        let points: Vec<Vec<f64>> = (0..grid.len())
            .map(|k| {
                let nu = shape.nodes[k].normals.row(0);
                patch.position(k).iter().enumerate().map(|(c, x)| x + s * phi[k] * nu[c]).collect()
            })
            .collect();
        parametric_weighted_volume(grid, &points, dir)
    };
    let (fm, f0, fp) = (volume(-delta)?, volume(0.0)?, volume(delta)?);
    let fd_value = (fp - 2.0 * f0 + fm) / (delta * delta);
    let (formula_value, _) = jacobi_forms(patch, &shape, phi);
    let rel_err = if formula_value == 0.0 && fd_value == 0.0 {
        0.0
    } else {
        (fd_value - formula_value).abs() / formula_value.abs().max(fd_value.abs())
    };
    Ok(SecondVariation { fd_value, formula_value, rel_err, first_variation: (fp - fm) / (2.0 * delta), scale: f0.max(1.0) })
}

/// ∫φ(−𝓛φ − |B|²φ) e^{⟨V,X⟩} dμ / ∫φ² e^{⟨V,X⟩} dμ.
pub fn rayleigh_quotient(patch: &GraphPatch, phi: &[f64]) -> Result<f64> {
    require_hypersurface(patch)?;
    check_support(patch.grid(), phi)?;
    let shape = second_fundamental_form(patch);
    let (num, den) = jacobi_forms(patch, &shape, phi);
    if !(den > 0.0) {
        return Err(LabError::InvalidInput("test function vanishes identically".into()));
    }
    Ok(num / den)
}

/// A random compactly supported function: a mixture of 1–4 bumps with
/// random centres, radii and signed amplitudes, modulated by a random
/// low-frequency cosine, all inside the nodes of depth ≥ 2.
pub fn random_test_function<R: Rng + ?Sized>(grid: &Grid, rng: &mut R) -> Vec<f64> {
    let n = grid.dim();
    // the support box keeps two cells clear of the boundary
    let lo: Vec<f64> = (0..n).map(|a| grid.lower()[a] + 2.0 * grid.spacing(a)).collect();
    let hi: Vec<f64> = (0..n).map(|a| grid.upper()[a] - 2.0 * grid.spacing(a)).collect();
    let count = rng.random_range(1..=4);
    let bumps: Vec<(Vec<f64>, Vec<f64>, f64)> = (0..count)
        .map(|_| {
            let centre: Vec<f64> = (0..n).map(|a| rng.random_range(lo[a]..hi[a])).collect();
            let radius: Vec<f64> = (0..n)
                .map(|a| {
                    let room = (centre[a] - lo[a]).min(hi[a] - centre[a]);
                    room * rng.random_range(0.3..1.0)
                })
                .collect();
            (centre, radius, rng.random_range(-1.0..1.0))
        })
        .collect();
    let freq: Vec<f64> = (0..n).map(|_| rng.random_range(0.0..3.0)).collect();
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    (0..grid.len())
        .map(|k| {
            if grid.depth(k) < 2 {
                return 0.0;
            }
            let x = grid.point(k);
            let wave = 1.0 + 0.5 * (x.iter().zip(&freq).map(|(a, f)| a * f).sum::<f64>() + phase).cos();
            let sum: f64 = bumps
                .iter()
                .map(|(c, r, amp)| {
                    let t2: f64 = (0..n).map(|a| ((x[a] - c[a]) / r[a]).powi(2)).sum();
                    amp * bump(t2.sqrt())
                })
                .sum();
            sum * wave
        })
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RayleighProbe {
    pub min_quotient: f64,
    pub quotients: Vec<f64>,
}

/// Minimum Jacobi Rayleigh quotient over seeded random test functions.
pub fn stability_rayleigh_probe(patch: &GraphPatch, trials: usize, seed: u64) -> Result<RayleighProbe> {
    require_hypersurface(patch)?;
    let shape = second_fundamental_form(patch);
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut quotients = Vec::with_capacity(trials);
    while quotients.len() < trials {
        let phi = random_test_function(patch.grid(), &mut rng);
        let (num, den) = jacobi_forms(patch, &shape, &phi);
        // a mixture can land on no interior node of a coarse grid
        if den > 0.0 {
            quotients.push(num / den);
        }
    }
    let min_quotient = quotients.iter().copied().fold(f64::INFINITY, f64::min);
    Ok(RayleighProbe { min_quotient, quotients })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CompetitorTest {
    /// min over trials of F(u + ψ) − F(u).
    pub min_gap: f64,
    /// min_gap / F(u).
    pub min_relative_gap: f64,
    /// Every nonzero perturbation increased F.
    pub all_positive: bool,
    pub trials: usize,
    /// Slope of log gap against log amplitude for the first perturbation,
    /// over five halvings of the amplitude.
    pub amplitude_exponent: f64,
}

fn fit_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let n = xs.len() as f64;
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

pub(crate) fn log_log_slope(xs: &[f64], ys: &[f64]) -> f64 {
    let lx: Vec<f64> = xs.iter().map(|x| x.ln()).collect();
    let ly: Vec<f64> = ys.iter().map(|y| y.ln()).collect();
    fit_slope(&lx, &ly)
}

/// Compares F on graphs of u + ψ for random ψ vanishing near ∂Ω with
/// max |ψ| = amplitude.
pub fn minimality_competitor_test(patch: &GraphPatch, trials: usize, amplitude: f64, seed: u64) -> Result<CompetitorTest> {
    require_hypersurface(patch)?;
    let n = patch.n();
    if patch.direction().iter().enumerate().any(|(c, &v)| v != if c == n { 1.0 } else { 0.0 }) {
        return Err(LabError::Precondition("competitor test needs V = εₙ₊₁".into()));
    }
    if !(amplitude > 0.0 && amplitude.is_finite()) {
        return Err(LabError::InvalidInput(format!("amplitude must be positive, got {amplitude}")));
    }
    if trials == 0 {
        return Err(LabError::InvalidInput("need at least one trial".into()));
    }
    let grid = patch.grid();
    let base = weighted_volume(patch);
    let gap = |psi: &[f64], a: f64| -> Result<f64> {
        let u: Vec<f64> = patch.values().iter().zip(psi).map(|(u, p)| u + a * p).collect();
        Ok(weighted_volume(&patch.with_values(u)?) - base)
    };
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut min_gap = f64::INFINITY;
    let mut all_positive = true;
    let mut first: Option<Vec<f64>> = None;
    let mut done = 0;
    while done < trials {
        let mut psi = random_test_function(grid, &mut rng);
        let peak = psi.iter().fold(0.0f64, |m, x| m.max(x.abs()));
        if peak == 0.0 {
            continue;
        }
        psi.iter_mut().for_each(|x| *x /= peak);
        let g = gap(&psi, amplitude)?;
        min_gap = min_gap.min(g);
        all_positive &= g > 0.0;
        first.get_or_insert(psi);
        done += 1;
    }
    let psi = first.expect("at least one trial ran");
    let amps: Vec<f64> = (0..5).map(|i| amplitude / 2f64.powi(i)).collect();
    let gaps: Vec<f64> = amps.iter().map(|&a| gap(&psi, a)).collect::<Result<_>>()?;
    let amplitude_exponent = if gaps.iter().all(|g| *g > 0.0) { log_log_slope(&amps, &gaps) } else { f64::NAN };
    Ok(CompetitorTest { min_gap, min_relative_gap: min_gap / base, all_positive, trials, amplitude_exponent })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::immersion::unit_vector;

    fn grim(nodes: usize) -> GraphPatch {
        let grid = Grid::cube(1, -1.2, 1.2, nodes).unwrap();
        GraphPatch::from_fn(grid, 1, vec![0.0, 1.0], |x| vec![-x[0].cos().ln()]).unwrap()
    }

    fn bump_field(grid: &Grid, radius: f64) -> Vec<f64> {
        (0..grid.len()).map(|k| bump(grid.point(k).iter().map(|x| x * x).sum::<f64>().sqrt() / radius)).collect()
    }

    #[test]
    fn zero_test_function_gives_zero() {
        let patch = grim(101);
        let sv = second_variation_check(&patch, &vec![0.0; 101], 1e-3).unwrap();
        assert_eq!(sv.fd_value.abs().max(sv.formula_value.abs()), sv.formula_value.abs());
        assert!(sv.fd_value.abs() < 1e-6);
        assert_eq!(sv.formula_value, 0.0);
    }

    #[test]
    fn second_variation_matches_on_grim_reaper() {
        let patch = grim(401);
        let phi = bump_field(patch.grid(), 0.8);
        let sv = second_variation_check(&patch, &phi, 1e-3).unwrap();
        assert!(sv.rel_err < 1e-2, "{sv:?}");
        assert!(sv.first_variation.abs() < 1e-4 * sv.scale, "{sv:?}");
    }

    #[test]
    fn support_is_enforced() {
        let patch = grim(51);
        assert!(matches!(rayleigh_quotient(&patch, &vec![1.0; 51]), Err(LabError::Precondition(_))));
        let plane = GraphPatch::from_fn(Grid::cube(1, -1.0, 1.0, 11).unwrap(), 2, unit_vector(3, 2), |_| vec![0.0, 0.0]);
        assert!(rayleigh_quotient(&plane.unwrap(), &[0.0; 11]).is_err());
    }

    #[test]
    fn rayleigh_quotient_on_a_plane_is_the_dirichlet_quotient() {
        let grid = Grid::cube(1, -1.0, 1.0, 401).unwrap();
        let patch = GraphPatch::from_fn(grid.clone(), 1, vec![1.0, 0.0], |_| vec![0.0]).unwrap();
        let phi = bump_field(&grid, 0.7);
        let q = rayleigh_quotient(&patch, &phi).unwrap();
        // ∫φ'² e^x / ∫φ² e^x by independent quadrature of derivatives
        let dphi: Vec<f64> = (0..grid.len())
            .map(|k| if grid.is_boundary(k) { 0.0 } else { grid.d1(|l| phi[l], k, 0) })
            .collect();
        let num: Vec<f64> = (0..grid.len()).map(|k| dphi[k] * dphi[k] * grid.coord(k, 0).exp()).collect();
        let den: Vec<f64> = (0..grid.len()).map(|k| phi[k] * phi[k] * grid.coord(k, 0).exp()).collect();
        let expect = grid.integrate(&num) / grid.integrate(&den);
        assert!(q > 0.0);
        assert!((q - expect).abs() < 1e-3 * expect, "{q} vs {expect}");
        let scaled: Vec<f64> = phi.iter().map(|x| -3.5 * x).collect();
        assert!((rayleigh_quotient(&patch, &scaled).unwrap() - q).abs() <= 1e-12 * q.abs());
    }

    #[test]
    fn probe_and_competitors_are_reproducible() {
        let patch = grim(201);
        let a = stability_rayleigh_probe(&patch, 10, 7).unwrap();
        let b = stability_rayleigh_probe(&patch, 10, 7).unwrap();
        assert_eq!(a, b);
        assert!(a.min_quotient > -1e-6);
        let c = minimality_competitor_test(&patch, 10, 0.1, 3).unwrap();
        assert!(c.all_positive);
        assert!((1.8..=2.2).contains(&c.amplitude_exponent), "{c:?}");
    }
}
