//! Helpers shared by the integration test targets.
#![allow(dead_code)]

use nalgebra::{DMatrix, DVector};

use translator_lab::grid::Grid;
use translator_lab::immersion::GraphPatch;

/// u = −log cos x sampled on [−1.2, 1.2].
pub fn grim_reaper(nodes: usize) -> GraphPatch {
    let grid = Grid::cube(1, -1.2, 1.2, nodes).unwrap();
    GraphPatch::from_fn(grid, 1, vec![0.0, 1.0], |x| vec![-x[0].cos().ln()]).unwrap()
}

/// The grim reaper in the plane spanned by ε₁ and (0, cos φ, sin φ).
pub fn rotated_grim_reaper(nodes: usize, phi: f64) -> GraphPatch {
    let grid = Grid::cube(1, -1.2, 1.2, nodes).unwrap();
    let (s, c) = phi.sin_cos();
    GraphPatch::from_fn(grid, 2, vec![0.0, c, s], |x| {
        let u = -x[0].cos().ln();
        vec![c * u, s * u]
    })
    .unwrap()
}

/// Metric tensor e^{(2/n)⟨V,x⟩}δ written out entrywise.
pub fn metric(v: &[f64], n: usize, x: &[f64]) -> DMatrix<f64> {
    let phi: f64 = x.iter().zip(v).map(|(a, b)| a * b).sum::<f64>() / n as f64;
    DMatrix::identity(x.len(), x.len()) * (2.0 * phi).exp()
}

pub fn shifted(x: &[f64], axis: usize, step: f64) -> Vec<f64> {
    let mut y = x.to_vec();
    y[axis] += step;
    y
}

/// Γˡᵢⱼ from central differences of the metric; index [l][i][j].
pub fn christoffel(v: &[f64], n: usize, x: &[f64]) -> Vec<Vec<Vec<f64>>> {
    let d = x.len();
    let step = 1e-5;
    let dg: Vec<DMatrix<f64>> = (0..d)
        .map(|k| (metric(v, n, &shifted(x, k, step)) - metric(v, n, &shifted(x, k, -step))) / (2.0 * step))
        .collect();
    let g_inv = metric(v, n, x).try_inverse().unwrap();
    let mut gamma = vec![vec![vec![0.0; d]; d]; d];
    for l in 0..d {
        for i in 0..d {
            for j in 0..d {
                gamma[l][i][j] = 0.5
                    * (0..d)
                        .map(|m| g_inv[(l, m)] * (dg[i][(m, j)] + dg[j][(m, i)] - dg[m][(i, j)]))
                        .sum::<f64>();
            }
        }
    }
    gamma
}

/// ⟨R(X,Y)Y, X⟩/(|X|²|Y|² − ⟨X,Y⟩²) with R assembled from differenced
/// Christoffel symbols.
pub fn fd_sectional(v: &[f64], n: usize, x: &[f64], xv: &DVector<f64>, yv: &DVector<f64>) -> f64 {
    let d = x.len();
    let step = 1e-3;
    let gam = christoffel(v, n, x);
    let dgam: Vec<Vec<Vec<Vec<f64>>>> = (0..d)
        .map(|k| {
            let p = christoffel(v, n, &shifted(x, k, step));
            let m = christoffel(v, n, &shifted(x, k, -step));
            (0..d)
                .map(|l| (0..d).map(|i| (0..d).map(|j| (p[l][i][j] - m[l][i][j]) / (2.0 * step)).collect()).collect())
                .collect()
        })
        .collect();
    // Rˡᵢⱼₖ = ∂ᵢΓˡⱼₖ − ∂ⱼΓˡᵢₖ + ΓˡᵢₚΓᵖⱼₖ − ΓˡⱼₚΓᵖᵢₖ
    let riemann = |l: usize, i: usize, j: usize, k: usize| {
        let mut r = dgam[i][l][j][k] - dgam[j][l][i][k];
        for p in 0..d {
            r += gam[l][i][p] * gam[p][j][k] - gam[l][j][p] * gam[p][i][k];
        }
        r
    };
    let g = metric(v, n, x);
    let mut num = 0.0;
    for i in 0..d {
        for j in 0..d {
            for k in 0..d {
                for l in 0..d {
                    for m in 0..d {
                        num += xv[i] * yv[j] * yv[k] * xv[m] * g[(m, l)] * riemann(l, i, j, k);
                    }
                }
            }
        }
    }
    let gxx = (xv.transpose() * &g * xv)[(0, 0)];
    let gyy = (yv.transpose() * &g * yv)[(0, 0)];
    let gxy = (xv.transpose() * &g * yv)[(0, 0)];
    num / (gxx * gyy - gxy * gxy)
}

