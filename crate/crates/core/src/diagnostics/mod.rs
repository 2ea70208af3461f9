//! Discrete checks of the identities, inequalities and variational
//! statements satisfied by translators, collected into reports.
//!
//! Every pointwise check compares a left-hand side and a right-hand side that
//! are computed along different code paths, on nodes at least two cells away
//! from the boundary, against the tolerance C·h²·scale with
//! scale = max(1, max|LHS|, max|RHS|).

mod context;
mod growth;
mod identities;
mod inequalities;
mod probes;
mod report;
mod variation;

pub use growth::{volume_growth_profile, GrowthOptions, GrowthPoint, GrowthProfile};
pub use identities::identity_suite;
pub use inequalities::inequality_suite;
pub use probes::{
    curvature_estimate_probe, omori_yau_probe, sobolev_threshold, CurvatureEstimate, OmoriYauEntry,
    OmoriYauProbe,
};
pub use report::{CheckKind, CheckRecord, DiagnosticsReport, Estimate, GridSummary, Provenance, TranslatorStatus};
pub use variation::{
    bump, minimality_competitor_test, random_test_function, rayleigh_quotient, second_variation_check,
    stability_rayleigh_probe, CompetitorTest, RayleighProbe, SecondVariation,
};

use serde::{Deserialize, Serialize};

/// Names of the pointwise identity checks, in report order.
pub const IDENTITY_CHECKS: &[&str] = &[
    "translator_equation",
    "gauss_map_energy",
    "laplacian_r2",
    "tension_formula",
    "dh",
    "dr",
    "tension_field",
    "w_identity",
    "w_full",
    "v_identity",
    "composition_h",
    "simons_identity",
];

/// Names of the pointwise inequality checks, in report order.
pub const INEQUALITY_CHECKS: &[&str] = &["gradient_v", "simons", "h_inequality", "v_subharmonic"];

/// Checks that only hold on translators.
pub const TRANSLATOR_ONLY: &[&str] = &[
    "dh",
    "dr",
    "tension_field",
    "w_identity",
    "w_full",
    "v_identity",
    "composition_h",
    "simons_identity",
    "simons",
    "h_inequality",
    "v_subharmonic",
];

/// Default C in the tolerance C·h²·scale.
pub const DEFAULT_CONSTANT: f64 = 10.0;

/// Options shared by the two pointwise suites.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SuiteOptions {
    /// Run translator-only checks even when the patch fails the
    /// translator-equation check.
    pub assume_translator: bool,
    /// Restrict to these check names (None runs everything applicable).
    pub checks: Option<Vec<String>>,
    pub constant: f64,
    /// Nodes closer than this many cells to the boundary are not evaluated.
    pub min_depth: usize,
    /// Upper v bound for the K₀ estimate (must be < 3).
    pub k0_bound: f64,
    /// Forces the constant in the Simons-type inequality.
    pub simons_k: Option<u8>,
}

impl Default for SuiteOptions {
    fn default() -> Self {
        SuiteOptions { assume_translator: false, checks: None, constant: DEFAULT_CONSTANT, min_depth: 2, k0_bound: 2.5, simons_k: None }
    }
}

impl SuiteOptions {
    pub(crate) fn wants(&self, name: &str) -> bool {
        self.checks.as_ref().is_none_or(|c| c.iter().any(|x| x == name))
    }

    pub(crate) fn explicitly_requested(&self, name: &str) -> bool {
        self.checks.as_ref().is_some_and(|c| c.iter().any(|x| x == name))
    }
}

/// Reported quantities without a verdict.
pub const ESTIMATES: &[&str] = &["k0", "normal_bundle_k"];

/// Every check and estimate name known to the suites.
pub fn known_checks() -> Vec<&'static str> {
    IDENTITY_CHECKS.iter().chain(INEQUALITY_CHECKS).chain(ESTIMATES).copied().collect()
}

/// Runs both pointwise suites and merges them into one report.
pub fn full_report(patch: &crate::immersion::GraphPatch, options: &SuiteOptions) -> crate::Result<DiagnosticsReport> {
    if let Some(names) = &options.checks {
        let known = known_checks();
        if let Some(bad) = names.iter().find(|n| !known.contains(&n.as_str())) {
            return Err(crate::LabError::InvalidInput(format!(
                "unknown check '{bad}'; known checks: {}",
                known.join(", ")
            )));
        }
    }
    let ctx = context::Context::new(patch, options)?;
    let mut report = identities::run(&ctx, options)?;
    let ineq = inequalities::run(&ctx, options)?;
    report.checks.extend(ineq.checks);
    report.estimates.extend(ineq.estimates);
    report.skipped_checks.extend(ineq.skipped_checks);
    Ok(report)
}
