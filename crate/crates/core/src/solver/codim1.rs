//! Flux form of the codimension-one translator equation.

use super::newton::NonlinearSystem;
use super::Layout;
use crate::grid::Grid;
use crate::immersion::GraphPatch;
use crate::par_map;

pub(crate) struct FluxForm<'a> {
    pub grid: &'a Grid,
    pub layout: &'a Layout,
    pub base: &'a [f64],
}

/// Gradient on the face between node `a` and node `a + eᵢ`, with the
/// sensitivities of every component to nodal values.
fn face_gradient(grid: &Grid, u: &[f64], a: usize, axis: usize) -> (Vec<f64>, Vec<Vec<(usize, f64)>>) {
    let n = grid.dim();
    let b = grid.offset(a, axis, 1);
    let h = grid.spacing(axis);
    let mut p = vec![0.0; n];
    let mut dp = vec![Vec::new(); n];
    for c in 0..n {
        if c == axis {
            p[c] = (u[b] - u[a]) / h;
            dp[c] = vec![(b, 1.0 / h), (a, -1.0 / h)];
        } else {
            for node in [a, b] {
                for (k, w) in grid.d1_stencil(node, c).iter() {
                    p[c] += 0.5 * w * u[k];
                    dp[c].push((k, 0.5 * w));
                }
            }
        }
    }
    (p, dp)
}

/// Residual div(Du/W) − 1/W at an interior node, with its row of the Jacobian.
fn node_equation(grid: &Grid, u: &[f64], k: usize, with_jacobian: bool) -> (f64, Vec<(usize, f64)>) {
    let n = grid.dim();
    let mut r = 0.0;
    let mut jac = Vec::new();
    for i in 0..n {
        let h = grid.spacing(i);
        for (a, sign) in [(k, 1.0), (grid.offset(k, i, -1), -1.0)] {
            let (p, dp) = face_gradient(grid, u, a, i);
            let w = (1.0 + p.iter().map(|x| x * x).sum::<f64>()).sqrt();
            r += sign * p[i] / (w * h);
            if with_jacobian {
                let w3 = w * w * w;
                for c in 0..n {
                    let coef = sign * ((if c == i { 1.0 / w } else { 0.0 }) - p[i] * p[c] / w3) / h;
                    jac.extend(dp[c].iter().map(|&(node, d)| (node, coef * d)));
                }
            }
        }
    }
    let mut p = vec![0.0; n];
    let stencils: Vec<_> = (0..n).map(|c| grid.d1_stencil(k, c)).collect();
    for c in 0..n {
        p[c] = stencils[c].apply(|j| u[j]);
    }
    let w = (1.0 + p.iter().map(|x| x * x).sum::<f64>()).sqrt();
    r -= 1.0 / w;
    if with_jacobian {
        let w3 = w * w * w;
        for c in 0..n {
            jac.extend(stencils[c].iter().map(|(node, d)| (node, p[c] / w3 * d)));
        }
    }
    (r, jac)
}

impl NonlinearSystem for FluxForm<'_> {
    fn unknowns(&self) -> usize {
        self.layout.interior.len()
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let u = self.layout.scatter(self.base, x, 1);
        par_map(self.layout.interior.len(), |i| node_equation(self.grid, &u, self.layout.interior[i], false).0)
    }

    fn jacobian(&self, x: &[f64]) -> Vec<(usize, usize, f64)> {
        let u = self.layout.scatter(self.base, x, 1);
        let rows = par_map(self.layout.interior.len(), |i| node_equation(self.grid, &u, self.layout.interior[i], true).1);
        let mut out = Vec::new();
        for (row, entries) in rows.into_iter().enumerate() {
            for (node, v) in entries {
                if let Some(col) = self.layout.index_of[node] {
                    out.push((row, col, v));
                }
            }
        }
        out
    }
}

/// Discrete flux-form residual div(Du/W) − 1/W of a codimension-one patch
/// (NaN on the boundary layer).
pub fn codim1_residual(patch: &GraphPatch) -> Vec<f64> {
    let grid = patch.grid();
    let u = patch.component(0);
    par_map(grid.len(), |k| if grid.is_boundary(k) { f64::NAN } else { node_equation(grid, &u, k, false).0 })
}
