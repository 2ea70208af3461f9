//! Pointwise inequalities on translators and the gradient bound on v.

use super::context::Context;
use super::identities::gate;
use super::report::{DiagnosticsReport, Estimate};
use super::SuiteOptions;
use crate::error::{LabError, Result};
use crate::grassmann::h_function;
use crate::immersion::GraphPatch;

/// Evaluates the pointwise inequalities on interior nodes.
///
/// Nodes outside the region where an inequality applies (v ≥ 2 for the
/// h-function, v ≥ 3 for v itself) are skipped and counted. The Simons
/// constant is k = 2 when m = 1 or the normal bundle is flat to tolerance,
/// otherwise k = 3, unless `simons_k` overrides it.
pub fn inequality_suite(patch: &GraphPatch, options: &SuiteOptions) -> Result<DiagnosticsReport> {
    let ctx = Context::new(patch, options)?;
    run(&ctx, options)
}

/// k in the Simons-type inequality chosen from the normal bundle.
pub(crate) fn simons_constant(ctx: &Context) -> f64 {
    if ctx.normal_bundle_flat() {
        2.0
    } else {
        3.0
    }
}

pub(crate) fn run(ctx: &Context, options: &SuiteOptions) -> Result<DiagnosticsReport> {
    if !(options.k0_bound < 3.0) {
        return Err(LabError::InvalidInput(format!("the K₀ bound must be below 3, got {}", options.k0_bound)));
    }
    let mut report = ctx.empty_report();
    let v = ctx.v_field();
    let b2 = ctx.shape.b_norm_sq();
    let k = options.simons_k.map(f64::from).unwrap_or_else(|| simons_constant(ctx));

    if gate(ctx, options, "gradient_v", &mut report)? {
        report.checks.push(ctx.inequality("gradient_v", "v⁴|B|² ≥ |∇v|²", false, |node| {
            let vk = v[node];
            vk.is_finite().then(|| (vk.powi(4) * b2[node], ctx.grad_sq(&v, node)))
        }));
    }
    if gate(ctx, options, "simons", &mut report)? {
        let lb = ctx.drift.apply(&b2);
        let mut rec = ctx.inequality("simons", "𝓛|B|² ≥ 2|∇|B||² − k|B|⁴", true, |node| {
            let b = b2[node];
            // |∇|B||² = |∇|B|²|² / (4|B|²), taken as 0 where B vanishes
            let grad = if b > 0.0 { ctx.grad_sq(&b2, node) / (4.0 * b) } else { 0.0 };
            Some((lb[node], 2.0 * grad - k * b * b))
        });
        rec.note = Some(format!("k = {k}"));
        report.checks.push(rec);
    }
    if gate(ctx, options, "h_inequality", &mut report)? {
        let hv: Vec<f64> =
            v.iter().map(|&x| if x <= 2.0 - 1e-6 { h_function(x).unwrap_or(f64::NAN) } else { f64::NAN }).collect();
        let lh = ctx.drift.apply(&hv);
        report.checks.push(ctx.inequality("h_inequality", "𝓛h ≥ 3h|B|² on 𝕌₂", true, |node| {
            hv[node].is_finite().then(|| (lh[node], 3.0 * hv[node] * b2[node]))
        }));
    }
    let in_u3: Vec<f64> = v.iter().map(|&x| if x <= 3.0 - 1e-6 { x } else { f64::NAN }).collect();
    let lv = ctx.drift.apply(&in_u3);
    if gate(ctx, options, "v_subharmonic", &mut report)? {
        report.checks.push(ctx.inequality("v_subharmonic", "𝓛v ≥ 0 on 𝕌₃", true, |node| {
            in_u3[node].is_finite().then(|| (lv[node], 0.0))
        }));
    }
    if options.wants("k0") && ctx.translator_checks_allowed() {
        let mut inf = f64::INFINITY;
        let mut count = 0;
        for &node in &ctx.nodes {
            if in_u3[node] <= options.k0_bound && b2[node] > 1e-12 && lv[node].is_finite() {
                inf = inf.min(lv[node] / b2[node]);
                count += 1;
            }
        }
        report.estimates.push(Estimate {
            name: "k0".into(),
            anchor: format!("inf 𝓛v/|B|² over v ≤ {}", options.k0_bound),
            value: if count == 0 { f64::NAN } else { inf },
            nodes_evaluated: count,
        });
    }
    if options.wants("normal_bundle_k") {
        report.estimates.push(Estimate {
            name: "normal_bundle_k".into(),
            anchor: "k = 2 if m = 1 or [A^α, A^β] = 0, else k = 3".into(),
            value: simons_constant(ctx),
            nodes_evaluated: ctx.nodes.len(),
        });
    }
    Ok(report)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::grid::Grid;
    use crate::immersion::unit_vector;

    #[test]
    fn flat_plane_slacks_vanish() {
        let grid = Grid::cube(2, -1.0, 1.0, 9).unwrap();
        let patch = GraphPatch::from_fn(grid, 1, unit_vector(3, 1), |x| vec![0.2 * x[0] - 0.1]).unwrap();
        let report = inequality_suite(&patch, &SuiteOptions::default()).unwrap();
        assert_eq!(report.checks.len(), 4);
        for c in &report.checks {
            assert!(c.min_slack.unwrap().abs() < 1e-12, "{c:?}");
        }
    }

    #[test]
    fn grim_reaper_simons_uses_k_two() {
        let grid = Grid::cube(1, -1.2, 1.2, 401).unwrap();
        let patch = GraphPatch::from_fn(grid, 1, vec![0.0, 1.0], |x| vec![-x[0].cos().ln()]).unwrap();
        let report = inequality_suite(&patch, &SuiteOptions::default()).unwrap();
        assert!(report.all_passed(), "{:#?}", report.checks);
        assert_eq!(report.estimate("normal_bundle_k").unwrap().value, 2.0);
        assert_eq!(report.check("simons").unwrap().note.as_deref(), Some("k = 2"));
        // the inequality is an equality for curves, so the slack is tiny
        assert!(report.check("simons").unwrap().min_slack.unwrap().abs() < 1e-3);
        let k0 = report.estimate("k0").unwrap();
        assert!(k0.value > 0.0 && k0.nodes_evaluated > 0);
    }

    #[test]
    fn curved_normal_bundle_selects_k_three() {
        // u = (xy, (x² − y²)/2): the shape operators do not commute
        let grid = Grid::cube(2, -0.5, 0.5, 21).unwrap();
        let patch = GraphPatch::from_fn(grid, 2, unit_vector(4, 3), |x| {
            vec![x[0] * x[1], 0.5 * (x[0] * x[0] - x[1] * x[1])]
        })
        .unwrap();
        let report = inequality_suite(&patch, &SuiteOptions::default()).unwrap();
        assert!(!report.translator.detected);
        assert_eq!(report.estimate("normal_bundle_k").unwrap().value, 3.0);
        let names: Vec<&str> = report.checks.iter().map(|c| c.name.as_str()).collect();
        assert_eq!(names, ["gradient_v"]);
        assert!(report.all_passed());
    }
}
