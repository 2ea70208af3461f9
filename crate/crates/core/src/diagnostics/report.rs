//! Report records and their JSON/CSV serialization.

use std::path::Path;

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::error::{LabError, Result};
use crate::immersion::GraphPatch;

pub const REPORT_FORMAT: &str = "translator-lab-diagnostics";
pub const REPORT_VERSION: u32 = 1;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CheckKind {
    /// |LHS − RHS| ≤ tolerance.
    Identity,
    /// LHS − RHS ≥ −tolerance.
    Inequality,
}

/// One named check.
///
/// `pass` is always `max_violation <= tolerance`; for inequalities the
/// violation is max(0, −min slack).
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CheckRecord {
    pub name: String,
    /// The statement being checked, as a formula.
    pub anchor: String,
    pub kind: CheckKind,
    pub translator_only: bool,
    pub max_violation: f64,
    pub tolerance: f64,
    pub pass: bool,
    pub nodes_evaluated: usize,
    pub nodes_skipped: usize,
    /// C in C·h²·scale.
    pub constant: f64,
    pub scale: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub min_slack: Option<f64>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

impl CheckRecord {
    pub(crate) fn new(
        name: &str,
        anchor: &str,
        kind: CheckKind,
        translator_only: bool,
        max_violation: f64,
        tolerance: f64,
    ) -> Self {
        CheckRecord {
            name: name.to_string(),
            anchor: anchor.to_string(),
            kind,
            translator_only,
            max_violation,
            tolerance,
            // NaN violations fail
            pass: max_violation <= tolerance,
            nodes_evaluated: 0,
            nodes_skipped: 0,
            constant: 0.0,
            scale: 0.0,
            min_slack: None,
            note: None,
        }
    }
}

/// A reported quantity that carries no pass/fail verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub name: String,
    pub anchor: String,
    pub value: f64,
    pub nodes_evaluated: usize,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GridSummary {
    pub n: usize,
    pub m: usize,
    pub shape: Vec<usize>,
    /// Largest grid spacing.
    pub h: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct TranslatorStatus {
    /// max |H − V^N| over evaluated nodes.
    pub residual: f64,
    pub tolerance: f64,
    pub detected: bool,
    pub assumed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Provenance {
    /// SHA-256 of the resolved configuration JSON, when one was supplied.
    pub config_hash: Option<String>,
    /// SHA-256 of the patch grid, direction and values (little-endian f64).
    pub patch_hash: String,
    pub crate_version: String,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DiagnosticsReport {
    pub format: String,
    pub version: u32,
    pub grid: GridSummary,
    pub translator: TranslatorStatus,
    pub checks: Vec<CheckRecord>,
    pub estimates: Vec<Estimate>,
    /// Checks that were not run, with the reason.
    pub skipped_checks: Vec<String>,
    pub provenance: Provenance,
}

pub(crate) fn patch_hash(patch: &GraphPatch) -> String {
    let mut hasher = Sha256::new();
    let grid = patch.grid();
    hasher.update((patch.n() as u64).to_le_bytes());
    hasher.update((patch.m() as u64).to_le_bytes());
    for &s in grid.shape() {
        hasher.update((s as u64).to_le_bytes());
    }
    for x in grid.lower().iter().chain(grid.upper()).chain(patch.direction()).chain(patch.values()) {
        hasher.update(x.to_le_bytes());
    }
    hex(&hasher.finalize())
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex(&Sha256::digest(bytes))
}

fn hex(bytes: &[u8]) -> String {
    bytes.iter().map(|b| format!("{b:02x}")).collect()
}

impl DiagnosticsReport {
    pub(crate) fn empty(patch: &GraphPatch, translator: TranslatorStatus) -> Self {
        let grid = patch.grid();
        DiagnosticsReport {
            format: REPORT_FORMAT.to_string(),
            version: REPORT_VERSION,
            grid: GridSummary { n: patch.n(), m: patch.m(), shape: grid.shape().to_vec(), h: grid.max_spacing() },
            translator,
            checks: Vec::new(),
            estimates: Vec::new(),
            skipped_checks: Vec::new(),
            provenance: Provenance {
                config_hash: None,
                patch_hash: patch_hash(patch),
                crate_version: env!("CARGO_PKG_VERSION").to_string(),
            },
        }
    }

    pub fn all_passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn check(&self, name: &str) -> Option<&CheckRecord> {
        self.checks.iter().find(|c| c.name == name)
    }

    pub fn estimate(&self, name: &str) -> Option<&Estimate> {
        self.estimates.iter().find(|c| c.name == name)
    }

    /// Keeps only the named checks and estimates.
    pub fn filter(mut self, names: &[String]) -> Self {
        self.checks.retain(|c| names.contains(&c.name));
        self.estimates.retain(|c| names.contains(&c.name));
        self
    }

    /// Appends the checks of another report on the same patch.
    pub fn merge(mut self, other: DiagnosticsReport) -> Result<Self> {
        if other.provenance.patch_hash != self.provenance.patch_hash {
            return Err(LabError::InvalidInput("cannot merge reports on different patches".into()));
        }
        self.checks.extend(other.checks);
        self.estimates.extend(other.estimates);
        self.skipped_checks.extend(other.skipped_checks);
        Ok(self)
    }

    pub fn with_config_hash(mut self, config_json: &str) -> Self {
        self.provenance.config_hash = Some(sha256_hex(config_json.as_bytes()));
        self
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    /// One row per check: name, anchor, kind, violation, tolerance, pass,
    /// nodes evaluated and skipped.
    pub fn to_csv(&self) -> Result<String> {
        let mut w = csv::Writer::from_writer(Vec::new());
        w.write_record([
            "name",
            "anchor",
            "kind",
            "max_violation",
            "tolerance",
            "pass",
            "nodes_evaluated",
            "nodes_skipped",
        ])
        ?;
        for c in &self.checks {
            let kind = match c.kind {
                CheckKind::Identity => "identity",
                CheckKind::Inequality => "inequality",
            };
            w.write_record([
                c.name.clone(),
                c.anchor.clone(),
                kind.to_string(),
                format!("{:e}", c.max_violation),
                format!("{:e}", c.tolerance),
                c.pass.to_string(),
                c.nodes_evaluated.to_string(),
                c.nodes_skipped.to_string(),
            ])
            ?;
        }
        let bytes = w.into_inner().map_err(|e| LabError::Io(e.into_error()))?;
        String::from_utf8(bytes).map_err(|e| LabError::Parse(e.to_string()))
    }

    /// Writes `<stem>.json` and `<stem>.csv`.
    pub fn write(&self, stem: &Path) -> Result<()> {
        std::fs::write(stem.with_extension("json"), self.to_json()?)?;
        std::fs::write(stem.with_extension("csv"), self.to_csv()?)?;
        Ok(())
    }
}
