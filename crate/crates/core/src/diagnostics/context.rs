//! Per-patch quantities shared by the check suites, and the generic
//! comparison loops that turn nodal LHS/RHS values into records.

use nalgebra::{DMatrix, DVector};

use super::report::{CheckKind, CheckRecord, DiagnosticsReport, TranslatorStatus};
use super::SuiteOptions;
use crate::error::{LabError, Result};
use crate::grassmann::{pairing_w, AdaptedFrame, Subspace};
use crate::immersion::{second_fundamental_form, DriftOperator, GraphPatch, ShapeData};
use crate::par_map;

pub(crate) struct Context<'a> {
    pub patch: &'a GraphPatch,
    pub shape: ShapeData,
    /// 𝓛 = Δ + ⟨V, ∇·⟩.
    pub drift: DriftOperator,
    /// Δ.
    pub laplace: DriftOperator,
    /// Nodes at which checks are evaluated.
    pub nodes: Vec<usize>,
    pub h: f64,
    pub constant: f64,
    pub status: TranslatorStatus,
    /// The coordinate n-plane that graphs are measured against.
    pub reference: Subspace,
    /// w = ⟨γ, P₀⟩ from the Gauss map.
    pub w: Vec<f64>,
}

/// Values an identity check compares at one node.
pub(crate) struct Sides {
    pub lhs: Vec<f64>,
    pub rhs: Vec<f64>,
    /// Extra magnitude entering the tolerance scale.
    pub scale: f64,
}

impl Sides {
    pub fn scalar(lhs: f64, rhs: f64) -> Self {
        Sides { lhs: vec![lhs], rhs: vec![rhs], scale: 0.0 }
    }
}

impl<'a> Context<'a> {
    pub fn new(patch: &'a GraphPatch, options: &SuiteOptions) -> Result<Self> {
        if !(options.constant > 0.0) {
            return Err(LabError::InvalidInput(format!("tolerance constant must be positive, got {}", options.constant)));
        }
        let shape = second_fundamental_form(patch);
        let drift = DriftOperator::new(patch, &shape);
        let laplace = DriftOperator::laplace_beltrami(patch, &shape);
        let grid = patch.grid();
        let nodes = grid.nodes_with_depth(options.min_depth.max(1));
        let reference = Subspace::coordinate_plane(patch.n(), patch.m());
        let w = shape
            .nodes
            .iter()
            .map(|g| pairing_w(&g.tangent_plane(), &reference).expect("same Grassmannian"))
            .collect();
        let h = grid.max_spacing();
        let mut ctx = Context {
            patch,
            shape,
            drift,
            laplace,
            nodes,
            h,
            constant: options.constant,
            status: TranslatorStatus { residual: 0.0, tolerance: 0.0, detected: false, assumed: options.assume_translator },
            reference,
            w,
        };
        let rec = ctx.identity("translator_equation", "H = V^N", true, |k| {
            let g = &ctx.shape.nodes[k];
            let vn = g.normals.transpose() * g.normal_components(ctx.patch.direction());
            Some(Sides { lhs: g.mean_curvature_vector().as_slice().to_vec(), rhs: vn.as_slice().to_vec(), scale: 0.0 })
        });
        ctx.status.residual = rec.max_violation;
        ctx.status.tolerance = rec.tolerance;
        ctx.status.detected = rec.pass;
        Ok(ctx)
    }

    pub fn translator_checks_allowed(&self) -> bool {
        self.status.detected || self.status.assumed
    }

    pub fn empty_report(&self) -> DiagnosticsReport {
        DiagnosticsReport::empty(self.patch, self.status.clone())
    }

    pub fn tolerance(&self, scale: f64) -> f64 {
        self.constant * self.h * self.h * scale
    }

    /// Runs an identity check over the evaluation nodes; `f` returns None to
    /// skip a node. Non-finite sides also skip.
    pub fn identity<F>(&self, name: &str, anchor: &str, translator_only: bool, f: F) -> CheckRecord
    where
        F: Fn(usize) -> Option<Sides> + Sync + Send,
    {
        let per_node: Vec<Option<Sides>> = par_map(self.nodes.len(), |i| {
            f(self.nodes[i]).filter(|s| s.lhs.iter().chain(&s.rhs).all(|x| x.is_finite()))
        });
        let mut violation: f64 = 0.0;
        let mut scale: f64 = 1.0;
        let mut evaluated = 0;
        for s in per_node.iter().flatten() {
            evaluated += 1;
            for (l, r) in s.lhs.iter().zip(&s.rhs) {
                violation = violation.max((l - r).abs());
                scale = scale.max(l.abs()).max(r.abs());
            }
            scale = scale.max(s.scale);
        }
        let tol = self.tolerance(scale);
        let mut rec = CheckRecord::new(name, anchor, CheckKind::Identity, translator_only, violation, tol);
        rec.nodes_evaluated = evaluated;
        rec.nodes_skipped = self.nodes.len() - evaluated;
        rec.constant = self.constant;
        rec.scale = scale;
        rec
    }

    /// Runs an inequality check LHS ≥ RHS over the evaluation nodes.
    pub fn inequality<F>(&self, name: &str, anchor: &str, translator_only: bool, f: F) -> CheckRecord
    where
        F: Fn(usize) -> Option<(f64, f64)> + Sync + Send,
    {
        let per_node: Vec<Option<(f64, f64)>> = par_map(self.nodes.len(), |i| {
            f(self.nodes[i]).filter(|(l, r)| l.is_finite() && r.is_finite())
        });
        let mut min_slack = f64::INFINITY;
        let mut scale: f64 = 1.0;
        let mut evaluated = 0;
        for (l, r) in per_node.iter().flatten() {
            evaluated += 1;
            min_slack = min_slack.min(l - r);
            scale = scale.max(l.abs()).max(r.abs());
        }
        let violation = if evaluated == 0 { 0.0 } else { (-min_slack).max(0.0) };
        let tol = self.tolerance(scale);
        let mut rec = CheckRecord::new(name, anchor, CheckKind::Inequality, translator_only, violation, tol);
        rec.nodes_evaluated = evaluated;
        rec.nodes_skipped = self.nodes.len() - evaluated;
        rec.constant = self.constant;
        rec.scale = scale;
        rec.min_slack = (evaluated > 0).then_some(min_slack);
        rec
    }

    /// v = 1/w, NaN outside 𝕌.
    pub fn v_field(&self) -> Vec<f64> {
        self.w.iter().map(|&w| if w > 0.0 { 1.0 / w } else { f64::NAN }).collect()
    }

    /// |∇f|² = g^{ij} ∂ᵢf ∂ⱼf at one node.
    pub fn grad_sq(&self, f: &[f64], k: usize) -> f64 {
        let grid = self.patch.grid();
        let n = grid.dim();
        let d = DVector::from_fn(n, |i, _| grid.d1(|l| f[l], k, i));
        (d.transpose() * &self.shape.nodes[k].metric.g_inv * &d)[(0, 0)]
    }

    /// The Gauss-map differential γ_*(E_j) as n × m matrices in the frames
    /// (E, e_α): entry (i, α) is h_{α,ij}.
    pub fn gauss_directions(&self, k: usize) -> Vec<DMatrix<f64>> {
        let g = &self.shape.nodes[k];
        let (n, m) = (g.n(), g.m());
        (0..n).map(|j| DMatrix::from_fn(n, m, |i, a| g.h_ortho[a][(i, j)])).collect()
    }

    /// Frames adapted to (γ(x), P₀) and the Gauss-map directions in them.
    pub fn adapted_directions(&self, k: usize) -> Option<(AdaptedFrame, Vec<DMatrix<f64>>)> {
        let g = &self.shape.nodes[k];
        let frame = AdaptedFrame::new(&g.tangent_plane(), &self.reference).ok()?;
        if frame.angles.lambda.iter().any(|l| !l.is_finite()) {
            return None;
        }
        let dirs = self.gauss_directions(k).iter().map(|x| frame.coordinates_from(&g.frame, &g.normals, x)).collect();
        Some((frame, dirs))
    }

    /// Whether [A^α, A^β] vanishes to tolerance at every evaluated node.
    pub fn normal_bundle_flat(&self) -> bool {
        if self.patch.m() == 1 || self.patch.n() == 1 {
            return true;
        }
        let mut worst: f64 = 0.0;
        let mut scale: f64 = 1.0;
        for &k in &self.nodes {
            let g = &self.shape.nodes[k];
            worst = worst.max(g.normal_curvature_sq().sqrt());
            scale = scale.max(g.b_norm_sq);
        }
        worst <= self.tolerance(scale)
    }
}
