//! Non-divergence form of the graphical translator system.

use nalgebra::DMatrix;

use super::newton::NonlinearSystem;
use super::Layout;
use crate::grid::{Grid, Stencil};
use crate::immersion::GraphPatch;
use crate::par_map;

pub(crate) struct NonDivergence<'a> {
    pub grid: &'a Grid,
    pub layout: &'a Layout,
    pub base: &'a [f64],
    pub m: usize,
    pub direction: &'a [f64],
}

/// Second-derivative stencil for ∂ᵢ∂ⱼ as (node, weight) pairs.
fn second_stencil(grid: &Grid, k: usize, i: usize, j: usize) -> Vec<(usize, f64)> {
    if i == j {
        return grid.d2_stencil(k, i).iter().collect();
    }
    let mut out = Vec::with_capacity(4);
    for (ni, wi) in grid.d1_stencil(k, i).iter() {
        for (nj, wj) in grid.d1_stencil(ni, j).iter() {
            out.push((nj, wi * wj));
        }
    }
    out
}

/// Residuals R^α at node k and, optionally, their Jacobian rows as
/// (α, node, β, value).
fn node_equations(
    grid: &Grid,
    u: &[f64],
    m: usize,
    direction: &[f64],
    k: usize,
    with_jacobian: bool,
) -> (Vec<f64>, Vec<(usize, usize, usize, f64)>) {
    let n = grid.dim();
    let d1: Vec<Stencil> = (0..n).map(|c| grid.d1_stencil(k, c)).collect();
    let du = DMatrix::from_fn(m, n, |a, c| d1[c].apply(|j| u[j * m + a]));
    let mut d2 = vec![Vec::new(); n * n];
    for i in 0..n {
        for j in 0..n {
            d2[i * n + j] = second_stencil(grid, k, i, j);
        }
    }
    let uij = |a: usize, i: usize, j: usize| d2[i * n + j].iter().map(|&(node, w)| w * u[node * m + a]).sum::<f64>();
    let g = DMatrix::identity(n, n) + du.transpose() * &du;
    let ginv = g.try_inverse().expect("induced metric is invertible");
    let mut res = vec![0.0; m];
    let mut second = vec![DMatrix::zeros(n, n); m];
    for a in 0..m {
        for i in 0..n {
            for j in 0..n {
                second[a][(i, j)] = uij(a, i, j);
            }
        }
        let mut r = (&ginv * &second[a]).trace() - direction[n + a];
        for i in 0..n {
            r += du[(a, i)] * direction[i];
        }
        res[a] = r;
    }
    let mut jac = Vec::new();
    if with_jacobian {
        // q^β_j = Σ_b u^β_b g^{bj}
        let q = &du * &ginv;
        for a in 0..m {
            for i in 0..n {
                for j in 0..n {
                    let c = ginv[(i, j)];
                    jac.extend(d2[i * n + j].iter().map(|&(node, w)| (a, node, a, c * w)));
                }
            }
            for b in 0..m {
                for c in 0..n {
                    let mut coef = 0.0;
                    for i in 0..n {
                        for j in 0..n {
                            coef -= 2.0 * ginv[(i, c)] * q[(b, j)] * second[a][(i, j)];
                        }
                    }
                    if a == b {
                        coef += direction[c];
                    }
                    jac.extend(d1[c].iter().map(|(node, w)| (a, node, b, coef * w)));
                }
            }
        }
    }
    (res, jac)
}

impl NonlinearSystem for NonDivergence<'_> {
    fn unknowns(&self) -> usize {
        self.layout.interior.len() * self.m
    }

    fn residual(&self, x: &[f64]) -> Vec<f64> {
        let u = self.layout.scatter(self.base, x, self.m);
        par_map(self.layout.interior.len(), |i| {
            node_equations(self.grid, &u, self.m, self.direction, self.layout.interior[i], false).0
        })
        .into_iter()
        .flatten()
        .collect()
    }

    fn jacobian(&self, x: &[f64]) -> Vec<(usize, usize, f64)> {
        let m = self.m;
        let u = self.layout.scatter(self.base, x, m);
        let rows = par_map(self.layout.interior.len(), |i| {
            node_equations(self.grid, &u, m, self.direction, self.layout.interior[i], true).1
        });
        let mut out = Vec::new();
        for (row_node, entries) in rows.into_iter().enumerate() {
            for (a, node, b, v) in entries {
                if let Some(col) = self.layout.index_of[node] {
                    out.push((row_node * m + a, col * m + b, v));
                }
            }
        }
        out
    }
}

/// Discrete residual g^{ij}u^α_{ij} − V_α + Σᵢ u^α_i Vᵢ per node and component
/// (NaN on the boundary layer).
pub fn system_residual(patch: &GraphPatch) -> Vec<Vec<f64>> {
    let grid = patch.grid();
    par_map(grid.len(), |k| {
        if grid.is_boundary(k) {
            vec![f64::NAN; patch.m()]
        } else {
            node_equations(grid, patch.values(), patch.m(), patch.direction(), k, false).0
        }
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn jacobian_matches_finite_differences() {
        let grid = Grid::new(vec![-0.5, -0.4], vec![0.5, 0.6], vec![6, 6]).unwrap();
        let m = 2;
        let u: Vec<f64> = (0..grid.len())
            .flat_map(|k| {
                let x = grid.point(k);
                vec![0.3 * x[0] * x[0] + x[0] * x[1], (x[0] - x[1]).sin()]
            })
            .collect();
        let s = (0.1f64 * 0.1 + 0.2 * 0.2 + 0.3 * 0.3 + 0.4 * 0.4).sqrt();
        let dir = [0.1 / s, 0.2 / s, 0.3 / s, 0.4 / s];
        let layout = Layout::new(&grid);
        let sys = NonDivergence { grid: &grid, layout: &layout, base: &u, m, direction: &dir };
        let x = layout.gather(&u, m);
        let n = sys.unknowns();
        let mut dense = vec![vec![0.0; n]; n];
        for (r, c, v) in sys.jacobian(&x) {
            dense[r][c] += v;
        }
        let eps = 1e-6;
        for col in 0..n {
            let mut xp = x.clone();
            xp[col] += eps;
            let mut xm = x.clone();
            xm[col] -= eps;
            let (fp, fm) = (sys.residual(&xp), sys.residual(&xm));
            for row in 0..n {
                let fd = (fp[row] - fm[row]) / (2.0 * eps);
                assert!((fd - dense[row][col]).abs() < 1e-4 * (1.0 + fd.abs()), "({row},{col}): {fd} vs {}", dense[row][col]);
            }
        }
    }
}
