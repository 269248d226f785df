//! Run configuration: a JSON file mirroring [`RunConfig`].

use std::collections::BTreeSet;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use stylfacts::facts::{FactConfig, FactId};
use stylfacts::series::{GapPolicy, SamplingGrid, SessionMask};

use crate::CliError;

/// Environment variable that replaces the configured master seed.
pub const SEED_ENV: &str = "STYLFACTS_SEED";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AssetInput {
    pub id: String,
    /// CSV file; relative paths are resolved against the config file's directory.
    pub path: PathBuf,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunConfig {
    #[serde(default)]
    pub assets: Vec<AssetInput>,
    /// Nominal spacing of the bar grid in seconds.
    pub grid_step_secs: i64,
    #[serde(default)]
    pub session: Option<SessionMask>,
    #[serde(default)]
    pub gap_policy: GapPolicy,
    /// Facts to run; all eleven when absent.
    #[serde(default)]
    pub facts: Option<Vec<FactId>>,
    #[serde(default)]
    pub seed: u64,
    #[serde(default)]
    pub out_dir: Option<PathBuf>,
    #[serde(default)]
    pub workers: Option<usize>,
    /// Per-fact parameter overrides. The `seed` inside is replaced by a
    /// per-asset seed derived from the master seed.
    #[serde(default)]
    pub params: FactConfig,
}

impl RunConfig {
    pub fn from_json(text: &str) -> Result<Self, CliError> {
        serde_json::from_str(text).map_err(|e| CliError::Config(e.to_string()))
    }

    /// Reads the file and resolves asset paths against its directory.
    pub fn load(path: &Path) -> Result<Self, CliError> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| CliError::Config(format!("cannot read {}: {e}", path.display())))?;
        let mut config = Self::from_json(&text)?;
        let base = path.parent().unwrap_or(Path::new("."));
        for a in &mut config.assets {
            if a.path.is_relative() {
                a.path = base.join(&a.path);
            }
        }
        if let Some(out) = &config.out_dir {
            if out.is_relative() {
                config.out_dir = Some(base.join(out));
            }
        }
        Ok(config)
    }

    /// Applies `STYLFACTS_SEED` when it is set.
    pub fn apply_seed_override(&mut self, value: Option<&str>) -> Result<(), CliError> {
        if let Some(v) = value {
            self.seed = v.trim().parse().map_err(|_| {
                CliError::Config(format!("{SEED_ENV}={v:?} is not an unsigned integer"))
            })?;
        }
        Ok(())
    }

    /// Keeps only the listed assets, in config order.
    pub fn select_assets(&mut self, ids: &[String]) -> Result<(), CliError> {
        if ids.is_empty() {
            return Ok(());
        }
        for id in ids {
            if !self.assets.iter().any(|a| &a.id == id) {
                return Err(CliError::Config(format!(
                    "asset {id:?} is not in the config"
                )));
            }
        }
        self.assets.retain(|a| ids.contains(&a.id));
        Ok(())
    }

    /// The configured facts in canonical order without duplicates.
    pub fn fact_set(&self) -> Vec<FactId> {
        match &self.facts {
            None => FactId::ALL.to_vec(),
            Some(list) => list
                .iter()
                .copied()
                .collect::<BTreeSet<_>>()
                .into_iter()
                .collect(),
        }
    }

    pub fn grid(&self) -> Result<SamplingGrid, CliError> {
        let grid =
            SamplingGrid::new(self.grid_step_secs).map_err(|e| CliError::Config(e.to_string()))?;
        Ok(match self.session {
            Some(mask) => grid.with_mask(mask),
            None => grid,
        })
    }

    /// Checks everything that can be checked before any asset is touched.
    pub fn validate(&self) -> Result<(), CliError> {
        self.grid()?;
        if self.workers == Some(0) {
            return Err(CliError::Config("workers must be at least 1".into()));
        }
        if self.facts.as_ref().is_some_and(|f| f.is_empty()) {
            return Err(CliError::Config("fact list is empty".into()));
        }
        let mut seen = BTreeSet::new();
        for a in &self.assets {
            let ok_id = !a.id.is_empty()
                && a.id != "."
                && a.id != ".."
                && a.id
                    .chars()
                    .all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c));
            if !ok_id {
                return Err(CliError::Config(format!(
                    "asset id {:?} must be non-empty and use only letters, digits, '-', '_' or '.'",
                    a.id
                )));
            }
            if !seen.insert(a.id.as_str()) {
                return Err(CliError::Config(format!("duplicate asset id {:?}", a.id)));
            }
            if !a.path.exists() {
                return Err(CliError::Config(format!(
                    "input {} for asset {:?} does not exist",
                    a.path.display(),
                    a.id
                )));
            }
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn minimal_config() {
        let c = RunConfig::from_json(r#"{"grid_step_secs": 86400}"#).unwrap();
        assert!(c.assets.is_empty());
        assert_eq!(c.fact_set().len(), 11);
        assert_eq!(c.gap_policy, GapPolicy::DropAndReindex);
        c.validate().unwrap();
    }

    #[test]
    fn rejects_bad_configs() {
        assert!(RunConfig::from_json(r#"{"grid_step_secs": 86400, "colour": 1}"#).is_err());
        assert!(RunConfig::from_json(r#"{"grid_step_secs": 86400, "facts": ["F12"]}"#).is_err());
        let c = RunConfig::from_json(r#"{"grid_step_secs": 0}"#).unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_json(
            r#"{"grid_step_secs": 60, "assets": [{"id": "a/b", "path": "x.csv"}]}"#,
        )
        .unwrap();
        assert!(c.validate().is_err());
        let c = RunConfig::from_json(
            r#"{"grid_step_secs": 60, "assets": [{"id": "a", "path": "/nonexistent.csv"}]}"#,
        )
        .unwrap();
        assert!(c.validate().is_err());
    }

    #[test]
    fn fact_set_is_canonical() {
        let c = RunConfig::from_json(r#"{"grid_step_secs": 60, "facts": ["F10", "F2", "F2"]}"#)
            .unwrap();
        assert_eq!(c.fact_set(), vec![FactId::F2, FactId::F10]);
    }

    #[test]
    fn seed_override() {
        let mut c = RunConfig::from_json(r#"{"grid_step_secs": 60, "seed": 3}"#).unwrap();
        c.apply_seed_override(None).unwrap();
        assert_eq!(c.seed, 3);
        c.apply_seed_override(Some("17")).unwrap();
        assert_eq!(c.seed, 17);
        assert!(c.apply_seed_override(Some("x")).is_err());
    }
}
