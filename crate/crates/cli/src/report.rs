//! Per-asset JSON reports and the cross-asset summary table.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};
use stylfacts::facts::{FactConfig, FactId};
use stylfacts::series::GapPolicy;

use crate::io::write_atomic;
use crate::CliError;

/// Bumped on any change to the report layout.
pub const REPORT_SCHEMA_VERSION: &str = "1.0.0";

/// JSON Schema every report validates against.
pub const REPORT_SCHEMA: &str = include_str!("../schema/report.schema.json");

pub const SKIPPED: &str = "skipped";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ToolInfo {
    pub name: String,
    pub version: String,
}

impl ToolInfo {
    pub fn current() -> Self {
        ToolInfo {
            name: "stylfacts".into(),
            version: env!("CARGO_PKG_VERSION").into(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DataSummary {
    pub start: String,
    pub end: String,
    pub n_bars: usize,
    pub n_returns: usize,
    pub grid_step_secs: i64,
    pub expected_slots: usize,
    pub gap_count: usize,
    pub filled: usize,
    pub gap_policy: GapPolicy,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerdictEntry {
    pub fact: FactId,
    pub title: String,
    /// `supported`, `not_supported`, `inconclusive` or `skipped`.
    pub status: String,
    pub metrics: BTreeMap<String, f64>,
    /// Plot-data files, relative to the asset directory.
    pub curves: Vec<String>,
    pub notes: Vec<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConfigEcho {
    pub input: String,
    pub master_seed: u64,
    pub facts: Vec<FactId>,
    pub params: FactConfig,
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Outcome {
    Ok,
    Failed,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AssetReport {
    pub schema_version: String,
    pub tool: ToolInfo,
    pub asset_id: String,
    pub outcome: Outcome,
    pub error: Option<String>,
    pub data: Option<DataSummary>,
    pub verdicts: Vec<VerdictEntry>,
    pub config: ConfigEcho,
    /// Plot-data files not tied to a single fact.
    pub plots: Vec<String>,
}

impl AssetReport {
    pub fn status_of(&self, fact: FactId) -> &str {
        self.verdicts
            .iter()
            .find(|v| v.fact == fact)
            .map_or(SKIPPED, |v| v.status.as_str())
    }

    pub fn to_json(&self) -> Result<String, CliError> {
        let mut s =
            serde_json::to_string_pretty(self).map_err(|e| CliError::Internal(e.to_string()))?;
        s.push('\n');
        Ok(s)
    }
}

/// `asset,F1,…` with one row per asset.
pub fn summary_csv(facts: &[FactId], reports: &[AssetReport]) -> String {
    let mut out = String::from("asset");
    for f in facts {
        out.push(',');
        out.push_str(&f.to_string());
    }
    out.push('\n');
    for r in reports {
        out.push_str(&r.asset_id);
        for &f in facts {
            out.push(',');
            out.push_str(r.status_of(f));
        }
        out.push('\n');
    }
    out
}

/// Rebuilds `summary.csv` from the `*/report.json` files under `dir`.
pub fn merge_reports(dir: &Path, out: &Path) -> Result<usize, CliError> {
    let entries =
        std::fs::read_dir(dir).map_err(|e| CliError::Io(format!("{}: {e}", dir.display())))?;
    let mut reports = Vec::new();
    for entry in entries {
        let entry = entry.map_err(|e| CliError::Io(e.to_string()))?;
        let path = entry.path().join("report.json");
        if !path.is_file() {
            continue;
        }
        let text = std::fs::read_to_string(&path)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        let report: AssetReport = serde_json::from_str(&text)
            .map_err(|e| CliError::Io(format!("{}: {e}", path.display())))?;
        reports.push(report);
    }
    reports.sort_by(|a, b| a.asset_id.cmp(&b.asset_id));
    let mut facts: Vec<FactId> = reports
        .iter()
        .flat_map(|r| r.verdicts.iter().map(|v| v.fact))
        .collect();
    facts.sort();
    facts.dedup();
    write_atomic(out, summary_csv(&facts, &reports).as_bytes())?;
    Ok(reports.len())
}
