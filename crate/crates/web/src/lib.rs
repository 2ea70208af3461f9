//! Browser bindings.
//!
//! Three operations, each taking plain numbers or JSON and returning JSON:
//! the Grassmann summary of a graph plane, a grim reaper solve compared with
//! its closed form, and the diagnostics report of that solve.

use nalgebra::DMatrix;
use serde::Serialize;
use translator_lab::diagnostics::{full_report, SuiteOptions};
use translator_lab::grassmann::{
    h_function, jordan_angles, pairing_w, rigidity_thresholds, GraphCoordinates, JordanAngles, Subspace, Thresholds,
};
use translator_lab::immersion::GraphPatch;
use translator_lab::solver::{grim_reaper_reference, BoundarySpec, DomainSpec, ExactKind, Problem, SolverConfig};
use wasm_bindgen::prelude::*;

#[derive(Serialize)]
pub struct PlaneSummary {
    pub angles: JordanAngles,
    pub w: f64,
    pub v: Option<f64>,
    pub h: Option<f64>,
    pub thresholds: Thresholds,
}

/// Summary of the plane spanned by the rows of [I | Z], measured against the coordinate plane.
pub fn plane_summary_json(z: &str) -> Result<String, String> {
    let rows: Vec<Vec<f64>> = serde_json::from_str(z).map_err(|e| format!("malformed matrix: {e}"))?;
    let cols = rows.first().map_or(0, Vec::len);
    if cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err("Z must be a non-empty rectangular matrix".into());
    }
    let z = DMatrix::from_fn(rows.len(), cols, |i, j| rows[i][j]);
    let p = GraphCoordinates::new(z).subspace();
    let q = Subspace::coordinate_plane(p.n(), p.m());
    let w = pairing_w(&p, &q).map_err(|e| e.to_string())?;
    let v = (w > 0.0).then(|| 1.0 / w);
    let summary = PlaneSummary {
        angles: jordan_angles(&p, &q).map_err(|e| e.to_string())?,
        w,
        v,
        h: v.and_then(|v| h_function(v).ok()),
        thresholds: rigidity_thresholds(),
    };
    serde_json::to_string(&summary).map_err(|e| e.to_string())
}

fn grim_problem(nodes: usize, half_width: f64) -> Result<Problem, String> {
    if !(half_width > 0.0 && half_width < 1.5) {
        return Err(format!("half width must lie in (0, 1.5), got {half_width}"));
    }
    if !(5..=4001).contains(&nodes) {
        return Err(format!("nodes must lie in 5..=4001, got {nodes}"));
    }
    let problem = Problem {
        domain: DomainSpec { lower: vec![-half_width], upper: vec![half_width] },
        shape: vec![nodes],
        direction: vec![0.0, 1.0],
        m: 1,
        boundary: BoundarySpec::Exact(ExactKind::GrimReaper),
        formulation: Default::default(),
        solver: SolverConfig::default(),
    };
    problem.validate().map_err(|e| e.to_string())?;
    Ok(problem)
}

fn solve_grim(nodes: usize, half_width: f64) -> Result<(GraphPatch, translator_lab::solver::NewtonLog), String> {
    let sol = grim_problem(nodes, half_width)?.solve().map_err(|e| e.to_string())?;
    Ok((sol.patch, sol.log))
}

#[derive(Serialize)]
pub struct GrimSolve {
    pub x: Vec<f64>,
    pub u: Vec<f64>,
    pub exact: Vec<f64>,
    pub max_error: f64,
    pub residual_history: Vec<f64>,
    pub converged: bool,
}

/// Solves the grim reaper Dirichlet problem on [−half_width, half_width].
pub fn solve_grim_reaper_json(nodes: usize, half_width: f64) -> Result<String, String> {
    let (patch, log) = solve_grim(nodes, half_width)?;
    let grid = patch.grid();
    let x: Vec<f64> = (0..grid.len()).map(|k| grid.point(k)[0]).collect();
    let exact = x.iter().map(|&x| grim_reaper_reference(x)).collect::<Result<Vec<_>, _>>().map_err(|e| e.to_string())?;
    let u = patch.values().to_vec();
    let max_error = u.iter().zip(&exact).fold(0.0f64, |a, (p, q)| a.max((p - q).abs()));
    let out = GrimSolve { x, u, exact, max_error, residual_history: log.residual_history, converged: log.converged };
    serde_json::to_string(&out).map_err(|e| e.to_string())
}

/// Full diagnostics report of the solved grim reaper.
pub fn diagnose_grim_reaper_json(nodes: usize, half_width: f64) -> Result<String, String> {
    let (patch, _) = solve_grim(nodes, half_width)?;
    let report = full_report(&patch, &SuiteOptions::default()).map_err(|e| e.to_string())?;
    serde_json::to_string(&report).map_err(|e| e.to_string())
}

#[wasm_bindgen]
pub fn plane_summary(z: &str) -> Result<String, JsValue> {
    plane_summary_json(z).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn solve_grim_reaper(nodes: usize, half_width: f64) -> Result<String, JsValue> {
    solve_grim_reaper_json(nodes, half_width).map_err(|e| JsValue::from_str(&e))
}

#[wasm_bindgen]
pub fn diagnose_grim_reaper(nodes: usize, half_width: f64) -> Result<String, JsValue> {
    diagnose_grim_reaper_json(nodes, half_width).map_err(|e| JsValue::from_str(&e))
}
