//! Damped Newton iteration with sparse direct linear solves.

use faer::prelude::*;
use faer::sparse::{SparseColMat, Triplet};
use serde::{Deserialize, Serialize};

use super::SolverConfig;
use crate::error::{LabError, Result};

/// A square nonlinear system F(x) = 0 with an analytic sparse Jacobian.
pub(crate) trait NonlinearSystem: Sync {
    fn unknowns(&self) -> usize;
    fn residual(&self, x: &[f64]) -> Vec<f64>;
    /// Jacobian entries (row, column, value); duplicates are summed.
    fn jacobian(&self, x: &[f64]) -> Vec<(usize, usize, f64)>;
}

/// History of one Newton solve.
#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct NewtonLog {
    pub iterations: usize,
    pub converged: bool,
    /// Max-norm residual before the first step and after every step.
    pub residual_history: Vec<f64>,
    /// Accepted step length of every step.
    pub step_lengths: Vec<f64>,
}

impl NewtonLog {
    pub fn final_residual(&self) -> f64 {
        self.residual_history.last().copied().unwrap_or(f64::INFINITY)
    }
}

pub(crate) fn max_norm(v: &[f64]) -> f64 {
    v.iter().fold(0.0f64, |a, x| a.max(x.abs()))
}

/// Solves J x = b for a sparse J given by triplets.
pub(crate) fn sparse_solve(n: usize, entries: Vec<(usize, usize, f64)>, b: &[f64], tol: f64) -> Result<Vec<f64>> {
    let mut entries = entries;
    entries.sort_unstable_by(|a, b| (a.1, a.0).cmp(&(b.1, b.0)));
    let mut merged: Vec<Triplet<usize, usize, f64>> = Vec::with_capacity(entries.len());
    for (r, c, v) in entries {
        match merged.last_mut() {
            Some(t) if t.row == r && t.col == c => t.val += v,
            _ => merged.push(Triplet::new(r, c, v)),
        }
    }
    let mut row_seen = vec![false; n];
    for t in &merged {
        if t.val != 0.0 {
            row_seen[t.row] = true;
        }
    }
    if let Some(row) = row_seen.iter().position(|s| !s) {
        return Err(LabError::SingularJacobian { node: row });
    }
    let mat = SparseColMat::<usize, f64>::try_new_from_triplets(n, n, &merged)
        .map_err(|e| LabError::LinearSolver(format!("{e:?}")))?;
    let lu = mat.sp_lu().map_err(|e| LabError::LinearSolver(format!("sparse LU failed: {e:?}")))?;
    let rhs = Col::from_fn(n, |i| b[i]);
    let mut x = lu.solve(&rhs);
    let bnorm = b.iter().map(|v| v * v).sum::<f64>().sqrt().max(f64::MIN_POSITIVE);
    // a couple of refinement sweeps keep the relative residual at the requested level
    for _ in 0..3 {
        let ax = &mat * &x;
        let r = Col::from_fn(n, |i| b[i] - ax[i]);
        let rnorm = (0..n).map(|i| r[i] * r[i]).sum::<f64>().sqrt();
        if !rnorm.is_finite() {
            return Err(LabError::LinearSolver("non-finite solution".into()));
        }
        if rnorm <= tol * bnorm {
            break;
        }
        let dx = lu.solve(&r);
        x += dx;
    }
    Ok((0..n).map(|i| x[i]).collect())
}

/// Newton with Armijo backtracking on the max-norm of the residual.
pub(crate) fn newton(system: &dyn NonlinearSystem, x0: Vec<f64>, config: &SolverConfig) -> Result<(Vec<f64>, NewtonLog)> {
    config.validate()?;
    let n = system.unknowns();
    let mut x = x0;
    let mut f = system.residual(&x);
    let mut norm = max_norm(&f);
    let mut log = NewtonLog { residual_history: vec![norm], ..Default::default() };
    if n == 0 {
        log.converged = true;
        return Ok((x, log));
    }
    while norm > config.newton_tol {
        if log.iterations >= config.max_iter {
            return Err(LabError::NotConverged { iterations: log.iterations, residual: norm });
        }
        let rhs: Vec<f64> = f.iter().map(|v| -v).collect();
        let dx = sparse_solve(n, system.jacobian(&x), &rhs, config.linear_solver_tol)?;
        let mut t = 1.0;
        loop {
            let trial: Vec<f64> = x.iter().zip(&dx).map(|(a, d)| a + t * d).collect();
            let ft = system.residual(&trial);
            let nt = max_norm(&ft);
            if nt.is_finite() && nt <= (1.0 - config.armijo * t) * norm {
                x = trial;
                f = ft;
                norm = nt;
                break;
            }
            t *= config.damping;
            if t < 1e-12 {
                return Err(LabError::NotConverged { iterations: log.iterations, residual: norm });
            }
        }
        log.iterations += 1;
        log.residual_history.push(norm);
        log.step_lengths.push(t);
    }
    log.converged = true;
    Ok((x, log))
}
