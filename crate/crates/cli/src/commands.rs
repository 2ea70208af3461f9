use std::fs;
use std::path::Path;

use nalgebra::DMatrix;
use serde::Serialize;
use translator_lab::diagnostics::{
    full_report, minimality_competitor_test, stability_rayleigh_probe, volume_growth_profile, CompetitorTest,
    RayleighProbe,
};
use translator_lab::grassmann::{
    h_function, jordan_angles, pairing_w, rigidity_thresholds, GraphCoordinates, JordanAngles, Subspace, Thresholds,
};
use translator_lab::immersion::{read_patch, translator_residual, write_patch};
use translator_lab::solver::{Formulation, NewtonLog, Problem};

use crate::config::{write_config, DiagnoseConfig, GrassmannConfig, GrowthConfig, SolveConfig};
use crate::CliError;

fn write_json<T: Serialize>(path: &Path, value: &T) -> Result<(), CliError> {
    let text = serde_json::to_string_pretty(value).map_err(|e| CliError::usage(e.to_string()))? + "\n";
    fs::write(path, text).map_err(|e| CliError::usage(format!("{}: {e}", path.display())))
}

#[derive(Serialize)]
struct SolveLog {
    formulation: Formulation,
    shape: Vec<usize>,
    #[serde(flatten)]
    newton: NewtonLog,
    /// max |H − V^N| over interior nodes of the written patch.
    geometric_residual: f64,
    /// Max-norm error against the exact solution, when the problem names one.
    max_error_vs_exact: Option<f64>,
}

pub fn solve(c: &SolveConfig) -> Result<(), CliError> {
    let path = c.problem.as_deref().ok_or_else(|| CliError::usage("solve needs --problem <file>"))?;
    let mut problem = Problem::from_path(path)?;
    if let Some(nodes) = c.grid {
        problem = problem.with_nodes(nodes);
    }
    problem.validate()?;
    write_config(&c.out, c)?;
    write_json(&c.out.join("problem.json"), &problem)?;
    let sol = problem.solve()?;
    let grid = problem.grid()?;
    let max_error_vs_exact = problem.exact_nodal(&grid)?.map(|exact| {
        exact.iter().zip(sol.patch.values()).fold(0.0f64, |a, (x, y)| a.max((x - y).abs()))
    });
    write_patch(&sol.patch, &c.out.join("patch"))?;
    let log = SolveLog {
        formulation: problem.formulation(),
        shape: problem.shape.clone(),
        geometric_residual: translator_residual(&sol.patch).max_norm(false),
        newton: sol.log,
        max_error_vs_exact,
    };
    write_json(&c.out.join("solve_log.json"), &log)?;
    println!(
        "solved {:?} on {:?} nodes: {} Newton steps, residual {:.3e}",
        log.formulation,
        log.shape,
        log.newton.iterations,
        log.newton.final_residual()
    );
    if let Some(e) = log.max_error_vs_exact {
        println!("max error against the exact solution {e:.3e}");
    }
    println!("wrote {}", c.out.join("patch.json").display());
    Ok(())
}

#[derive(Serialize)]
struct Variation {
    seed: u64,
    stability: Option<RayleighProbe>,
    competitors: Option<CompetitorTest>,
    pass: bool,
}

pub fn diagnose(c: &DiagnoseConfig) -> Result<(), CliError> {
    let path = c.patch.as_deref().ok_or_else(|| CliError::usage("diagnose needs --patch <file>"))?;
    let patch = read_patch(path)?;
    let hashed = write_config(&c.out, c)?;
    let report = full_report(&patch, &c.suite)?.with_config_hash(&hashed);
    report.write(&c.out.join("report"))?;

    let status = &report.translator;
    println!(
        "translator residual {:.3e} (tolerance {:.3e}): {}",
        status.residual,
        status.tolerance,
        if status.detected { "translator" } else if status.assumed { "assumed translator" } else { "not a translator" }
    );
    for r in &report.checks {
        println!(
            "{:<20} {:<4} violation {:.3e}  tolerance {:.3e}  nodes {}",
            r.name,
            if r.pass { "ok" } else { "FAIL" },
            r.max_violation,
            r.tolerance,
            r.nodes_evaluated
        );
    }
    for e in &report.estimates {
        println!("{:<20} estimate {:.6}", e.name, e.value);
    }
    for s in &report.skipped_checks {
        println!("skipped {s}");
    }

    let mut pass = report.all_passed();
    if c.stability_trials > 0 || c.competitor_trials > 0 {
        let stability = (c.stability_trials > 0).then(|| stability_rayleigh_probe(&patch, c.stability_trials, c.seed)).transpose()?;
        let competitors = (c.competitor_trials > 0)
            .then(|| minimality_competitor_test(&patch, c.competitor_trials, c.competitor_amplitude, c.seed))
            .transpose()?;
        let ok = stability.as_ref().is_none_or(|s| s.min_quotient >= -1e-6)
            && competitors.as_ref().is_none_or(|t| t.min_relative_gap >= -1e-8 && t.all_positive);
        if let Some(s) = &stability {
            println!("min Rayleigh quotient {:.6} over {} trials", s.min_quotient, s.quotients.len());
        }
        if let Some(t) = &competitors {
            println!("min relative competitor gap {:.3e} over {} trials", t.min_relative_gap, t.trials);
        }
        write_json(&c.out.join("variation.json"), &Variation { seed: c.seed, stability, competitors, pass: ok })?;
        pass &= ok;
    }
    if pass {
        Ok(())
    } else {
        Err(CliError::failed(format!("checks failed; see {}", c.out.join("report.json").display())))
    }
}

fn matrix(rows: &[Vec<f64>], what: &str) -> Result<DMatrix<f64>, CliError> {
    let n = rows.len();
    let cols = rows.first().map_or(0, Vec::len);
    if n == 0 || cols == 0 || rows.iter().any(|r| r.len() != cols) {
        return Err(CliError::usage(format!("{what} must be a non-empty rectangular matrix")));
    }
    Ok(DMatrix::from_fn(n, cols, |i, j| rows[i][j]))
}

#[derive(Serialize)]
struct PlaneSummary {
    n: usize,
    m: usize,
    angles: JordanAngles,
    w: f64,
    v: Option<f64>,
    /// Defined on v < 2 only.
    h: Option<f64>,
}

#[derive(Serialize)]
struct GrassmannOutput {
    #[serde(skip_serializing_if = "Option::is_none")]
    plane: Option<PlaneSummary>,
    #[serde(skip_serializing_if = "Option::is_none")]
    thresholds: Option<Thresholds>,
}

pub fn grassmann(c: &GrassmannConfig) -> Result<(), CliError> {
    let p = match (&c.z, &c.p) {
        (Some(_), Some(_)) => return Err(CliError::usage("give either --z or --p, not both")),
        (Some(z), None) => Some(GraphCoordinates::new(matrix(z, "Z")?).subspace()),
        (None, Some(f)) => Some(Subspace::from_frame(matrix(f, "P")?)?),
        (None, None) => None,
    };
    if p.is_none() && !c.thresholds {
        return Err(CliError::usage("grassmann needs --z, --p or --thresholds"));
    }
    let plane = match p {
        None => None,
        Some(p) => {
            let q = match &c.q {
                Some(f) => Subspace::from_frame(matrix(f, "Q")?)?,
                None => Subspace::coordinate_plane(p.n(), p.m()),
            };
            let w = pairing_w(&p, &q)?;
            let v = (w > 0.0).then(|| 1.0 / w);
            let h = v.and_then(|v| h_function(v).ok());
            Some(PlaneSummary { n: p.n(), m: p.m(), angles: jordan_angles(&p, &q)?, w, v, h })
        }
    };
    let out = GrassmannOutput { plane, thresholds: c.thresholds.then(rigidity_thresholds) };
    let text = serde_json::to_string_pretty(&out).map_err(|e| CliError::usage(e.to_string()))?;
    println!("{text}");
    if let Some(dir) = &c.out {
        write_config(dir, c)?;
        write_json(&dir.join("grassmann.json"), &out)?;
    }
    Ok(())
}

#[derive(Serialize)]
struct GrowthSummary {
    origin: Vec<f64>,
    monotone: bool,
    slack: f64,
    truncated: bool,
    inscribed_radius: f64,
    steps: usize,
}

pub fn growth(c: &GrowthConfig) -> Result<(), CliError> {
    let path = c.patch.as_deref().ok_or_else(|| CliError::usage("growth needs --patch <file>"))?;
    let patch = read_patch(path)?;
    let origin = match &c.origin {
        Some(o) => o.clone(),
        None => {
            let grid = patch.grid();
            let centre: Vec<f64> = grid.lower().iter().zip(grid.upper()).map(|(a, b)| 0.5 * (a + b)).collect();
            patch.position(grid.nearest_node(&centre))
        }
    };
    write_config(&c.out, c)?;
    let profile = volume_growth_profile(&patch, &origin, &c.growth)?;
    let csv = profile.to_csv()?;
    let csv_path = c.out.join("profile.csv");
    fs::write(&csv_path, csv).map_err(|e| CliError::usage(format!("{}: {e}", csv_path.display())))?;
    let summary = GrowthSummary {
        origin,
        monotone: profile.monotone,
        slack: profile.slack,
        truncated: profile.truncated,
        inscribed_radius: profile.inscribed_radius,
        steps: profile.points.len(),
    };
    write_json(&c.out.join("growth.json"), &summary)?;
    let (lo, hi) = profile.points.iter().fold((f64::INFINITY, 0.0f64), |(a, b), p| (a.min(p.ratio), b.max(p.ratio)));
    println!("{} radii up to {:.4}: vol/ρⁿ in [{lo:.6}, {hi:.6}]", summary.steps, profile.points.last().map_or(0.0, |p| p.rho));
    if profile.truncated {
        println!("warning: requested radius exceeds the inscribed radius {:.4}; profile truncated", profile.inscribed_radius);
    }
    if profile.monotone {
        println!("nondecreasing within relative slack {}", profile.slack);
        Ok(())
    } else {
        Err(CliError::failed(format!("profile decreases beyond relative slack {}", profile.slack)))
    }
}
