//! Problem files and grid-convergence studies.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::reference::bowl_profile;
use super::{solve_codim1, solve_system, BoundaryData, Solution, SolverConfig};
use crate::error::{LabError, Result};
use crate::grid::Grid;
use crate::immersion::check_direction;

/// Axis-aligned box domain.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DomainSpec {
    pub lower: Vec<f64>,
    pub upper: Vec<f64>,
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum ExactKind {
    #[serde(rename = "exact:grim_reaper")]
    GrimReaper,
    #[serde(rename = "exact:bowl")]
    Bowl,
}

/// u^α(x) = offset_α + Σᵢ slope_{αi} xᵢ.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AffineSpec {
    pub offset: Vec<f64>,
    pub slope: Vec<Vec<f64>>,
}

/// Where the Dirichlet data comes from.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum BoundarySpec {
    /// `"exact:grim_reaper"` or `"exact:bowl"`.
    Exact(ExactKind),
    /// m values per boundary node, in increasing node order.
    Inline { inline: Vec<f64> },
    Affine { affine: AffineSpec },
}

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Formulation {
    /// Flux form when m = 1 and V = εₙ₊₁, the system otherwise.
    #[default]
    Auto,
    Codim1,
    System,
}

fn one() -> usize {
    1
}

/// A Dirichlet problem for a graphical translator.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Problem {
    pub domain: DomainSpec,
    /// Nodes per axis.
    pub shape: Vec<usize>,
    /// Translation direction V in ℝⁿ⁺ᵐ.
    pub direction: Vec<f64>,
    #[serde(default = "one")]
    pub m: usize,
    pub boundary: BoundarySpec,
    #[serde(default)]
    pub formulation: Formulation,
    #[serde(default)]
    pub solver: SolverConfig,
}

impl Problem {
    pub fn from_json(text: &str) -> Result<Self> {
        let p: Problem = serde_json::from_str(text)?;
        p.validate()?;
        Ok(p)
    }

    pub fn from_path(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path)
            .map_err(|e| LabError::Io(std::io::Error::new(e.kind(), format!("{}: {e}", path.display()))))?;
        Problem::from_json(&text).map_err(|e| match e {
            LabError::Parse(msg) => LabError::Parse(format!("{}: {msg}", path.display())),
            other => other,
        })
    }

    pub fn validate(&self) -> Result<()> {
        let n = self.domain.lower.len();
        if n == 0 || self.domain.upper.len() != n || self.shape.len() != n {
            return Err(LabError::DimensionMismatch("domain bounds and shape must have the same length".into()));
        }
        if self.m == 0 {
            return Err(LabError::InvalidInput("codimension m must be positive".into()));
        }
        check_direction(&self.direction, n + self.m)?;
        self.solver.validate()?;
        if let BoundarySpec::Affine { affine } = &self.boundary {
            if affine.offset.len() != self.m || affine.slope.len() != self.m || affine.slope.iter().any(|r| r.len() != n) {
                return Err(LabError::DimensionMismatch("affine boundary needs m offsets and an m × n slope".into()));
            }
        }
        Ok(())
    }

    pub fn n(&self) -> usize {
        self.shape.len()
    }

    /// Sets every axis to `nodes` nodes.
    pub fn with_nodes(&self, nodes: usize) -> Problem {
        Problem { shape: vec![nodes; self.n()], ..self.clone() }
    }

    pub fn grid(&self) -> Result<Grid> {
        Grid::new(self.domain.lower.clone(), self.domain.upper.clone(), self.shape.clone())
    }

    fn is_vertical(&self) -> bool {
        let n = self.n();
        self.m == 1 && self.direction[..n].iter().all(|&v| v == 0.0) && self.direction[n] == 1.0
    }

    /// Exact solution at every node (interleaved), when the boundary spec
    /// names one.
    pub fn exact_nodal(&self, grid: &Grid) -> Result<Option<Vec<f64>>> {
        let n = self.n();
        let m = self.m;
        match &self.boundary {
            BoundarySpec::Exact(ExactKind::GrimReaper) => {
                // −log cos x₁ along the normal part of V; needs V tangent-free
                if self.direction[..n].iter().any(|&v| v != 0.0) {
                    return Err(LabError::Precondition("the grim reaper data needs V orthogonal to the base plane".into()));
                }
                let w = &self.direction[n..];
                let mut u = Vec::with_capacity(grid.len() * m);
                for k in 0..grid.len() {
                    let h = super::grim_reaper_reference(grid.coord(k, 0))?;
                    u.extend(w.iter().map(|c| c * h));
                }
                Ok(Some(u))
            }
            BoundarySpec::Exact(ExactKind::Bowl) => {
                if !self.is_vertical() {
                    return Err(LabError::Precondition("the bowl data needs m = 1 and V = εₙ₊₁".into()));
                }
                let radii: Vec<f64> =
                    (0..grid.len()).map(|k| grid.point(k).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
                Ok(Some(bowl_profile(n, &radii)?.into_iter().map(|p| p.u).collect()))
            }
            BoundarySpec::Affine { affine } => {
                // an affine graph translates iff its normal space is orthogonal to V
                let tangent_free = (0..m).all(|a| {
                    let s: f64 = (0..n).map(|i| affine.slope[a][i] * self.direction[i]).sum();
                    (self.direction[n + a] - s).abs() < 1e-14
                });
                if !tangent_free {
                    return Ok(None);
                }
                Ok(Some(affine_values(affine, grid)))
            }
            BoundarySpec::Inline { .. } => Ok(None),
        }
    }

    pub fn boundary_data(&self, grid: &Grid) -> Result<BoundaryData> {
        let m = self.m;
        match &self.boundary {
            BoundarySpec::Inline { inline } => BoundaryData::new(grid, m, inline.clone()),
            BoundarySpec::Affine { affine } => {
                let u = affine_values(affine, grid);
                BoundaryData::new(grid, m, gather_boundary(grid, &u, m))
            }
            BoundarySpec::Exact(_) => {
                // only boundary nodes are needed, so evaluate the oracle there
                let exact = self.exact_nodal_on(grid, &grid.boundary_nodes())?;
                BoundaryData::new(grid, m, exact)
            }
        }
    }

    fn exact_nodal_on(&self, grid: &Grid, nodes: &[usize]) -> Result<Vec<f64>> {
        let m = self.m;
        match &self.boundary {
            BoundarySpec::Exact(ExactKind::Bowl) => {
                if !self.is_vertical() {
                    return Err(LabError::Precondition("the bowl data needs m = 1 and V = εₙ₊₁".into()));
                }
                let radii: Vec<f64> =
                    nodes.iter().map(|&k| grid.point(k).iter().map(|x| x * x).sum::<f64>().sqrt()).collect();
                Ok(bowl_profile(self.n(), &radii)?.into_iter().map(|p| p.u).collect())
            }
            _ => {
                let all = self.exact_nodal(grid)?.ok_or_else(|| LabError::Precondition("no exact solution".into()))?;
                Ok(nodes.iter().flat_map(|&k| all[k * m..(k + 1) * m].iter().copied()).collect())
            }
        }
    }

    pub fn formulation(&self) -> Formulation {
        match self.formulation {
            Formulation::Auto if self.is_vertical() => Formulation::Codim1,
            Formulation::Auto => Formulation::System,
            f => f,
        }
    }

    pub fn solve(&self) -> Result<Solution> {
        self.validate()?;
        let grid = self.grid()?;
        let data = self.boundary_data(&grid)?;
        match self.formulation() {
            Formulation::Codim1 => solve_codim1(&grid, &data, &self.direction, &self.solver),
            _ => solve_system(&grid, &data, &self.direction, &self.solver),
        }
    }
}

fn affine_values(affine: &AffineSpec, grid: &Grid) -> Vec<f64> {
    let mut u = Vec::with_capacity(grid.len() * affine.offset.len());
    for k in 0..grid.len() {
        let x = grid.point(k);
        for (o, s) in affine.offset.iter().zip(&affine.slope) {
            u.push(o + s.iter().zip(&x).map(|(a, b)| a * b).sum::<f64>());
        }
    }
    u
}

fn gather_boundary(grid: &Grid, u: &[f64], m: usize) -> Vec<f64> {
    grid.boundary_nodes().into_iter().flat_map(|k| u[k * m..(k + 1) * m].iter().copied()).collect()
}

/// Errors on a sequence of nested grids and the observed orders between
/// consecutive levels.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ConvergenceStudy {
    pub nodes: Vec<usize>,
    pub spacings: Vec<f64>,
    /// Max-norm error per level: against the exact solution when one is
    /// known, otherwise against the next finer level at shared nodes.
    pub errors: Vec<f64>,
    pub orders: Vec<f64>,
    /// Order between the two finest levels; None when the errors are at
    /// rounding level (the discrete solution is exact).
    pub observed_order: Option<f64>,
    pub exact: bool,
    pub against_exact_solution: bool,
}

/// Solves on `levels` nested grids, starting from the problem's shape and
/// halving h each time (N → 2N − 1 nodes per axis).
pub fn convergence_study(problem: &Problem, levels: usize) -> Result<ConvergenceStudy> {
    if levels < 2 {
        return Err(LabError::InvalidInput("a convergence study needs at least two levels".into()));
    }
    if matches!(problem.boundary, BoundarySpec::Inline { .. }) {
        return Err(LabError::InvalidInput("inline boundary data cannot be refined".into()));
    }
    let mut shape = problem.shape.clone();
    let mut solutions = Vec::new();
    for _ in 0..levels {
        let p = Problem { shape: shape.clone(), ..problem.clone() };
        let grid = p.grid()?;
        let sol = p.solve()?;
        let exact = p.exact_nodal(&grid)?;
        solutions.push((grid, sol.patch.values().to_vec(), exact));
        shape = shape.iter().map(|s| 2 * s - 1).collect();
    }
    let against_exact_solution = solutions[0].2.is_some();
    let m = problem.m;
    let mut errors = Vec::new();
    let mut spacings = Vec::new();
    let mut nodes = Vec::new();
    let count = if against_exact_solution { levels } else { levels - 1 };
    for l in 0..count {
        let (grid, u, exact) = &solutions[l];
        let err = match exact {
            Some(ex) => u.iter().zip(ex).fold(0.0f64, |a, (x, y)| a.max((x - y).abs())),
            None => {
                let (fine, uf, _) = &solutions[l + 1];
                let mut e = 0.0f64;
                for k in 0..grid.len() {
                    let multi: Vec<usize> = (0..grid.dim()).map(|a| 2 * grid.index(k, a)).collect();
                    let kf = fine.node_of(&multi);
                    for a in 0..m {
                        e = e.max((u[k * m + a] - uf[kf * m + a]).abs());
                    }
                }
                e
            }
        };
        errors.push(err);
        spacings.push(grid.max_spacing());
        nodes.push(grid.shape()[0]);
    }
    let scale = solutions
        .last()
        .map(|(_, u, _)| u.iter().fold(1.0f64, |a, x| a.max(x.abs())))
        .unwrap_or(1.0);
    let exact = errors.iter().all(|e| *e <= 1e-11 * scale);
    let orders: Vec<f64> = errors.windows(2).map(|w| (w[0] / w[1]).log2()).collect();
    let observed_order = if exact { None } else { orders.last().copied() };
    Ok(ConvergenceStudy { nodes, spacings, errors, orders, observed_order, exact, against_exact_solution })
}
