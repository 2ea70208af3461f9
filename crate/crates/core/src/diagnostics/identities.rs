//! Pointwise identities: definition-level ones that hold on every graph and
//! translator-only ones that use H = V^N.

use nalgebra::{DMatrix, DVector};

use super::context::{Context, Sides};
use super::report::{CheckRecord, DiagnosticsReport};
use super::{SuiteOptions, TRANSLATOR_ONLY};
use crate::error::{LabError, Result};
use crate::grassmann::{dv_form, h_derivatives, h_function, hess_v_quadratic_form, rigidity_thresholds};
use crate::immersion::{gauss_map_energy_density, gauss_map_tension, tension_formula, GraphPatch};
use crate::par_map;

/// Evaluates the pointwise identities on interior nodes.
///
/// Translator-only identities run when the patch passes the translator
/// equation check to C·h²·scale, or when `assume_translator` is set.
/// Requesting them by name on a patch that is neither is an error.
pub fn identity_suite(patch: &GraphPatch, options: &SuiteOptions) -> Result<DiagnosticsReport> {
    let ctx = Context::new(patch, options)?;
    run(&ctx, options)
}

pub(crate) fn gate(ctx: &Context, options: &SuiteOptions, name: &str, report: &mut DiagnosticsReport) -> Result<bool> {
    if !options.wants(name) {
        return Ok(false);
    }
    if TRANSLATOR_ONLY.contains(&name) && !ctx.translator_checks_allowed() {
        if options.explicitly_requested(name) {
            return Err(LabError::Precondition(format!(
                "check '{name}' needs a translator, but max |H − V^N| = {:e} exceeds {:e}",
                ctx.status.residual, ctx.status.tolerance
            )));
        }
        report.skipped_checks.push(format!("{name}: patch is not a translator"));
        return Ok(false);
    }
    Ok(true)
}

pub(crate) fn run(ctx: &Context, options: &SuiteOptions) -> Result<DiagnosticsReport> {
    let mut report = ctx.empty_report();
    let push = |rec: CheckRecord, report: &mut DiagnosticsReport| report.checks.push(rec);

    // the translator test itself is only a check when the patch is claimed to be one
    if options.wants("translator_equation") {
        if ctx.translator_checks_allowed() || options.explicitly_requested("translator_equation") {
            push(translator_equation(ctx), &mut report);
        } else {
            report.skipped_checks.push("translator_equation: patch is not a translator".into());
        }
    }
    if gate(ctx, options, "gauss_map_energy", &mut report)? {
        push(gauss_map_energy(ctx), &mut report);
    }
    if gate(ctx, options, "laplacian_r2", &mut report)? {
        push(laplacian_r2(ctx, false), &mut report);
    }
    if gate(ctx, options, "tension_formula", &mut report)? {
        push(tension_vs_formula(ctx), &mut report);
    }
    if gate(ctx, options, "dh", &mut report)? {
        push(dh(ctx), &mut report);
    }
    if gate(ctx, options, "dr", &mut report)? {
        push(laplacian_r2(ctx, true), &mut report);
    }
    if gate(ctx, options, "tension_field", &mut report)? {
        push(tension_field(ctx), &mut report);
    }
    if gate(ctx, options, "w_identity", &mut report)? {
        if ctx.normal_bundle_flat() {
            push(w_identity(ctx), &mut report);
        } else {
            report.skipped_checks.push("w_identity: normal bundle is not flat (see w_full)".into());
        }
    }
    if gate(ctx, options, "w_full", &mut report)? {
        push(w_full(ctx), &mut report);
    }
    if gate(ctx, options, "v_identity", &mut report)? {
        push(v_identity(ctx), &mut report);
    }
    if gate(ctx, options, "composition_h", &mut report)? {
        push(composition_h(ctx), &mut report);
    }
    if gate(ctx, options, "simons_identity", &mut report)? {
        push(simons_identity(ctx), &mut report);
    }
    Ok(report)
}

fn translator_equation(ctx: &Context) -> CheckRecord {
    let mut rec = ctx.identity("translator_equation", "H = V^N", true, |k| {
        let g = &ctx.shape.nodes[k];
        let vn = g.normals.transpose() * g.normal_components(ctx.patch.direction());
        Some(Sides { lhs: g.mean_curvature_vector().as_slice().to_vec(), rhs: vn.as_slice().to_vec(), scale: 0.0 })
    });
    rec.translator_only = true;
    rec
}

/// |dγ|² from differences of the tangent projector against |B|².
fn gauss_map_energy(ctx: &Context) -> CheckRecord {
    let energy = gauss_map_energy_density(ctx.patch, &ctx.shape);
    ctx.identity("gauss_map_energy", "|dγ|² = |B|²", false, |k| {
        Some(Sides::scalar(energy[k], ctx.shape.nodes[k].b_norm_sq_metric))
    })
}

/// Δ|X|² against 2n + 2⟨H, X⟩, or against 2n + 2⟨V^N, X⟩ on translators.
fn laplacian_r2(ctx: &Context, translator: bool) -> CheckRecord {
    let patch = ctx.patch;
    let r2: Vec<f64> = (0..patch.grid().len()).map(|k| patch.position(k).iter().map(|x| x * x).sum()).collect();
    let lhs = ctx.laplace.apply(&r2);
    let n = patch.n() as f64;
    let (name, anchor) = if translator {
        ("dr", "Δ|X|² = 2n + 2⟨V^N, X⟩")
    } else {
        ("laplacian_r2", "Δ|X|² = 2n + 2⟨H, X⟩")
    };
    ctx.identity(name, anchor, translator, |k| {
        let g = &ctx.shape.nodes[k];
        let x = &g.position;
        let vector = if translator {
            g.normals.transpose() * g.normal_components(patch.direction())
        } else {
            g.mean_curvature_vector()
        };
        Some(Sides::scalar(lhs[k], 2.0 * n + 2.0 * vector.dot(x)))
    })
}

fn matrix_sides(a: &DMatrix<f64>, b: &DMatrix<f64>) -> Sides {
    Sides { lhs: a.as_slice().to_vec(), rhs: b.as_slice().to_vec(), scale: 0.0 }
}

/// Tangential part of 𝓛P against its closed form in ∇^⊥(H − V^N).
fn tension_vs_formula(ctx: &Context) -> CheckRecord {
    let tension = gauss_map_tension(&ctx.drift, &ctx.shape);
    let formula = tension_formula(ctx.patch, &ctx.shape);
    ctx.identity("tension_formula", "τ_f(γ) = Σ ⟨∇^⊥_{E_k}(H − V^N), e_α⟩ (E_k e_αᵀ + e_α E_kᵀ)", false, |k| {
        Some(matrix_sides(&tension[k], &formula[k]))
    })
}

/// The f-tension of the Gauss map vanishes; scaled by the size of 𝓛P.
fn tension_field(ctx: &Context) -> CheckRecord {
    let proj: Vec<DMatrix<f64>> = ctx.shape.nodes.iter().map(|g| g.frame.transpose() * &g.frame).collect();
    let lp = ctx.drift.apply_matrix(&proj);
    let tension = gauss_map_tension(&ctx.drift, &ctx.shape);
    ctx.identity("tension_field", "τ_f(γ) = 0", true, |k| {
        let zero = DMatrix::zeros(tension[k].nrows(), tension[k].ncols());
        let mut s = matrix_sides(&tension[k], &zero);
        s.scale = lp[k].amax();
        Some(s)
    })
}

/// ⟨∂ⱼH, e_α⟩ against −Σ g^{kl}⟨V, T_l⟩ h_{α,jk}, componentwise.
fn dh(ctx: &Context) -> CheckRecord {
    let grid = ctx.patch.grid();
    let (n, m) = (ctx.patch.n(), ctx.patch.m());
    let dim = ctx.patch.ambient_dim();
    let hvec: Vec<DVector<f64>> = ctx.shape.nodes.iter().map(|g| g.mean_curvature_vector()).collect();
    let v = DVector::from_column_slice(ctx.patch.direction());
    ctx.identity("dh", "∇_j H = −⟨V, e_k⟩ B_jk", true, |k| {
        let g = &ctx.shape.nodes[k];
        let vt = &g.metric.g_inv * (&g.tangents * &v);
        let mut lhs = Vec::with_capacity(n * m);
        let mut rhs = Vec::with_capacity(n * m);
        for j in 0..n {
            let dhj = DVector::from_fn(dim, |c, _| grid.d1(|l| hvec[l][c], k, j));
            for a in 0..m {
                lhs.push(dhj.dot(&g.normals.row(a).transpose()));
                rhs.push(-(0..n).map(|kk| vt[kk] * g.h[a][(j, kk)]).sum::<f64>());
            }
        }
        Some(Sides { lhs, rhs, scale: 0.0 })
    })
}

/// 𝓛w against −|B|²w.
fn w_identity(ctx: &Context) -> CheckRecord {
    let lw = ctx.drift.apply(&ctx.w);
    ctx.identity("w_identity", "𝓛w = −|B|² w (flat normal bundle)", true, |k| {
        let g = &ctx.shape.nodes[k];
        Some(Sides::scalar(lw[k], -g.b_norm_sq * ctx.w[k]))
    })
}

/// det of the first n columns of the tangent frame with rows j, k replaced
/// by the normals α, β: ⟨e_{αj,βk}, ε₁ ∧ ⋯ ∧ εₙ⟩.
fn replaced_pairing(frame: &DMatrix<f64>, normals: &DMatrix<f64>, j: usize, a: usize, k: usize, b: usize) -> f64 {
    let n = frame.nrows();
    let mut rows = frame.columns(0, n).into_owned();
    rows.row_mut(j).copy_from(&normals.row(a).columns(0, n));
    rows.row_mut(k).copy_from(&normals.row(b).columns(0, n));
    rows.determinant()
}

/// 𝓛w against −|B|²w plus the double-replacement term.
fn w_full(ctx: &Context) -> CheckRecord {
    let lw = ctx.drift.apply(&ctx.w);
    let (n, m) = (ctx.patch.n(), ctx.patch.m());
    ctx.identity(
        "w_full",
        "𝓛w = −|B|² w + Σ_i Σ_{α<β, j≠k} (h_{α,ij} h_{β,ik} − h_{β,ij} h_{α,ik}) ⟨e_{αj,βk}, ε₁∧⋯∧εₙ⟩",
        true,
        |node| {
            let g = &ctx.shape.nodes[node];
            let ho = &g.h_ortho;
            let mut extra = 0.0;
            for a in 0..m {
                for b in a + 1..m {
                    for j in 0..n {
                        for k in 0..n {
                            if j == k {
                                continue;
                            }
                            let coef: f64 =
                                (0..n).map(|i| ho[a][(i, j)] * ho[b][(i, k)] - ho[b][(i, j)] * ho[a][(i, k)]).sum();
                            if coef != 0.0 {
                                extra += coef * replaced_pairing(&g.frame, &g.normals, j, a, k, b);
                            }
                        }
                    }
                }
            }
            Some(Sides::scalar(lw[node], -g.b_norm_sq * ctx.w[node] + extra))
        },
    )
}

/// 𝓛v against the explicit quadratic expression in the adapted frames,
/// evaluated on 𝕌₂.
fn v_identity(ctx: &Context) -> CheckRecord {
    let v = ctx.v_field();
    let lv = ctx.drift.apply(&v);
    ctx.identity(
        "v_identity",
        "𝓛v = v|B|² + v Σ 2λ_α² h_{α,αj}² + v Σ_{α≠β} λ_α λ_β (h_{α,αj} h_{β,βj} + h_{α,βj} h_{β,αj})",
        true,
        |k| {
            if !(v[k] < 2.0 - 1e-6) {
                return None;
            }
            let (frame, dirs) = ctx.adapted_directions(k)?;
            let lambda = &frame.angles.lambda;
            let p = lambda.len();
            let vk = frame.v();
            let mut rhs = 0.0;
            for x in &dirs {
                // x[(i, α)] = h_{α,ij} in the adapted frames
                rhs += x.norm_squared();
                for a in 0..p {
                    rhs += 2.0 * lambda[a] * lambda[a] * x[(a, a)] * x[(a, a)];
                    for b in 0..p {
                        if a != b {
                            rhs += lambda[a] * lambda[b] * (x[(a, a)] * x[(b, b)] + x[(b, a)] * x[(a, b)]);
                        }
                    }
                }
            }
            Some(Sides::scalar(lv[k], vk * rhs))
        },
    )
}

/// Multiplier on C for the composition check: the fourth derivatives of h∘γ
/// are large, and the measured error on the grim reaper is 14·h²·scale at
/// every resolution from 201 to 1601 nodes.
const COMPOSITION_CONSTANT_FACTOR: f64 = 3.0;

/// 𝓛(h∘γ) against Σ_j Hess h(γ_*E_j, γ_*E_j) where h ≤ 3 (v ≤ v₀).
///
/// h blows up like (2 − v)^{-3/2}, so the differences of h∘γ lose their
/// O(h²) accuracy near v = 2; the check stays on a fixed set where h is
/// bounded so that it converges uniformly under refinement.
fn composition_h(ctx: &Context) -> CheckRecord {
    let v = ctx.v_field();
    let hv: Vec<f64> =
        v.iter().map(|&x| if x < 2.0 - 1e-6 { h_function(x).unwrap_or(f64::NAN) } else { f64::NAN }).collect();
    let lh = ctx.drift.apply(&hv);
    let v0 = rigidity_thresholds().v0;
    let mut rec = ctx.identity("composition_h", "𝓛(h∘γ) = Σ_j Hess h(γ_* e_j, γ_* e_j) on h ≤ 3", true, |k| {
        if !(v[k] <= v0) {
            return None;
        }
        let (frame, dirs) = ctx.adapted_directions(k)?;
        let (d1, d2) = h_derivatives(frame.v()).ok()?;
        let mut rhs = 0.0;
        for x in &dirs {
            let hess = hess_v_quadratic_form(&frame.angles, x).ok()?;
            let dv = dv_form(&frame.angles, x).ok()?;
            rhs += d1 * hess + d2 * dv * dv;
        }
        Some(Sides::scalar(lh[k], rhs))
    });
    rec.constant *= COMPOSITION_CONSTANT_FACTOR;
    rec.tolerance *= COMPOSITION_CONSTANT_FACTOR;
    rec.pass = rec.max_violation <= rec.tolerance;
    rec
}

/// |∇B|² in orthonormal frames from differences of the normal-valued
/// coefficients B(∂ᵢ, ∂ⱼ), with Christoffel corrections.
pub(crate) fn covariant_derivative_sq(ctx: &Context) -> Vec<f64> {
    let grid = ctx.patch.grid();
    let (n, m) = (ctx.patch.n(), ctx.patch.m());
    let dim = n + m;
    // b[node][i * n + j] = Σ_α h_{α,ij} e_α as an ambient vector
    let b: Vec<Vec<DVector<f64>>> = ctx
        .shape
        .nodes
        .iter()
        .map(|g| {
            let mut out = Vec::with_capacity(n * n);
            for i in 0..n {
                for j in 0..n {
                    let mut acc = DVector::zeros(dim);
                    for a in 0..m {
                        acc += g.normals.row(a).transpose() * g.h[a][(i, j)];
                    }
                    out.push(acc);
                }
            }
            out
        })
        .collect();
    let u = ctx.patch.values();
    par_map(grid.len(), |k| {
        if grid.depth(k) < 1 {
            return f64::NAN;
        }
        let g = &ctx.shape.nodes[k];
        // Γ^l_{ki} = g^{lp} Σ_β u^β_{ki} u^β_p
        let du = DMatrix::from_fn(m, n, |a, i| grid.d1(|l| u[l * m + a], k, i));
        let d2u: Vec<DMatrix<f64>> = (0..m)
            .map(|a| DMatrix::from_fn(n, n, |i, j| grid.d_second(|l| u[l * m + a], k, i, j)))
            .collect();
        let gamma: Vec<DMatrix<f64>> = (0..n)
            .map(|l| {
                DMatrix::from_fn(n, n, |kk, i| {
                    (0..n)
                        .map(|p| g.metric.g_inv[(l, p)] * (0..m).map(|a| d2u[a][(kk, i)] * du[(a, p)]).sum::<f64>())
                        .sum()
                })
            })
            .collect();
        let mut total = 0.0;
        for a in 0..m {
            // coordinate components t[(i, j, kk)]
            let mut t = vec![0.0; n * n * n];
            for i in 0..n {
                for j in 0..n {
                    for kk in 0..n {
                        let dbij = DVector::from_fn(dim, |c, _| grid.d1(|l| b[l][i * n + j][c], k, kk));
                        let mut val = dbij.dot(&g.normals.row(a).transpose());
                        for l in 0..n {
                            val -= gamma[l][(kk, i)] * g.h[a][(l, j)] + gamma[l][(kk, j)] * g.h[a][(i, l)];
                        }
                        t[(i * n + j) * n + kk] = val;
                    }
                }
            }
            let c = &g.frame_change;
            for p in 0..n {
                for q in 0..n {
                    for r in 0..n {
                        let mut val = 0.0;
                        for i in 0..n {
                            for j in 0..n {
                                for kk in 0..n {
                                    val += c[(p, i)] * c[(q, j)] * c[(r, kk)] * t[(i * n + j) * n + kk];
                                }
                            }
                        }
                        total += val * val;
                    }
                }
            }
        }
        total
    })
}

/// 𝓛|B|² against 2|∇B|² − 2Σ_{α≠β}|[A^α, A^β]|² − 2Σ S_{αβ}².
fn simons_identity(ctx: &Context) -> CheckRecord {
    let b2 = ctx.shape.b_norm_sq();
    let lb = ctx.drift.apply(&b2);
    let nabla = covariant_derivative_sq(ctx);
    ctx.identity("simons_identity", "𝓛|B|² = 2|∇B|² − 2Σ_{α≠β}|[A^α, A^β]|² − 2Σ S_{αβ}²", true, |k| {
        let g = &ctx.shape.nodes[k];
        let rhs = 2.0 * nabla[k] - 2.0 * g.normal_curvature_sq() - 2.0 * g.s.norm_squared();
        Some(Sides::scalar(lb[k], rhs))
    })
}
