//! The `analyze` pipeline: ingest each asset, run the fact suite, write reports
//! and plot data.

use std::path::{Path, PathBuf};

use rayon::prelude::*;
use stylfacts::export::{write_curve_csv, write_volatility_csv};
use stylfacts::facts::{run_facts, FactConfig, FactId};
use stylfacts::rng::derive_seed;
use stylfacts::series::{
    compute_log_returns, format_timestamp, read_bars_csv, validate_and_gapfill, Validated,
};
use stylfacts::volatility::VolScale;

use crate::config::{AssetInput, RunConfig};
use crate::io::write_atomic;
use crate::report::{
    summary_csv, AssetReport, ConfigEcho, DataSummary, Outcome, ToolInfo, VerdictEntry,
    REPORT_SCHEMA, REPORT_SCHEMA_VERSION, SKIPPED,
};
use crate::CliError;

#[derive(Debug)]
pub struct AnalyzeOutcome {
    pub reports: Vec<AssetReport>,
    pub out_dir: PathBuf,
}

impl AnalyzeOutcome {
    pub fn failed_assets(&self) -> usize {
        self.reports
            .iter()
            .filter(|r| r.outcome == Outcome::Failed)
            .count()
    }
}

/// Runs every configured asset and writes `<out>/<asset>/report.json`, the
/// plot CSVs, `<out>/summary.csv` and `<out>/report.schema.json`.
pub fn run_analyze(
    config: &RunConfig,
    out_dir: &Path,
    workers: usize,
) -> Result<AnalyzeOutcome, CliError> {
    config.validate()?;
    let facts = config.fact_set();
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.max(1))
        .build()
        .map_err(|e| CliError::Internal(e.to_string()))?;
    let results: Vec<Result<AssetReport, CliError>> = pool.install(|| {
        config
            .assets
            .par_iter()
            .map(|a| process_asset(a, config, &facts, out_dir))
            .collect()
    });
    let reports = results.into_iter().collect::<Result<Vec<_>, _>>()?;
    write_atomic(
        &out_dir.join("summary.csv"),
        summary_csv(&facts, &reports).as_bytes(),
    )?;
    write_atomic(
        &out_dir.join("report.schema.json"),
        REPORT_SCHEMA.as_bytes(),
    )?;
    Ok(AnalyzeOutcome {
        reports,
        out_dir: out_dir.to_path_buf(),
    })
}

fn fact_config_for(asset: &AssetInput, config: &RunConfig) -> FactConfig {
    FactConfig {
        seed: derive_seed(config.seed, &asset.id),
        ..config.params.clone()
    }
}

fn load(asset: &AssetInput, config: &RunConfig) -> Result<Validated, String> {
    let file = std::fs::File::open(&asset.path)
        .map_err(|e| format!("cannot open {}: {e}", asset.path.display()))?;
    let bars = read_bars_csv(std::io::BufReader::new(file)).map_err(|e| e.to_string())?;
    let grid = config.grid().map_err(|e| e.to_string())?;
    validate_and_gapfill(&asset.id, bars, grid, config.gap_policy).map_err(|e| e.to_string())
}

/// Builds and writes one report. Input problems become a failed report; only
/// output errors propagate.
fn process_asset(
    asset: &AssetInput,
    config: &RunConfig,
    facts: &[FactId],
    out_dir: &Path,
) -> Result<AssetReport, CliError> {
    let fact_config = fact_config_for(asset, config);
    let asset_dir = out_dir.join(&asset.id);
    let mut report = AssetReport {
        schema_version: REPORT_SCHEMA_VERSION.into(),
        tool: ToolInfo::current(),
        asset_id: asset.id.clone(),
        outcome: Outcome::Ok,
        error: None,
        data: None,
        verdicts: Vec::new(),
        config: ConfigEcho {
            input: asset
                .path
                .file_name()
                .map_or_else(String::new, |n| n.to_string_lossy().into_owned()),
            master_seed: config.seed,
            facts: facts.to_vec(),
            params: fact_config.clone(),
        },
        plots: Vec::new(),
    };
    match load(asset, config) {
        Err(reason) => {
            report.outcome = Outcome::Failed;
            report.verdicts = facts
                .iter()
                .map(|&f| VerdictEntry {
                    fact: f,
                    title: f.title().into(),
                    status: SKIPPED.into(),
                    metrics: Default::default(),
                    curves: Vec::new(),
                    notes: vec![reason.clone()],
                })
                .collect();
            report.error = Some(reason);
        }
        Ok(validated) => {
            let series = &validated.series;
            let bars = series.bars();
            report.data = Some(DataSummary {
                start: format_timestamp(bars[0].timestamp),
                end: format_timestamp(bars[bars.len() - 1].timestamp),
                n_bars: bars.len(),
                n_returns: compute_log_returns(series).map_or(0, |r| r.len()),
                grid_step_secs: series.grid.step_secs,
                expected_slots: validated.gaps.expected_slots,
                gap_count: validated.gaps.gap_count,
                filled: validated.gaps.filled,
                gap_policy: validated.gaps.policy,
            });
            let plots_dir = asset_dir.join("plots");
            let window = fact_config.window_for(series);
            for (name, scale) in [
                ("volatility.csv", VolScale::Native),
                ("volatility_std.csv", VolScale::Std),
            ] {
                let mut buf = Vec::new();
                if write_volatility_csv(&mut buf, series, window, scale).is_ok() {
                    write_atomic(&plots_dir.join(name), &buf)?;
                    report.plots.push(format!("plots/{name}"));
                }
            }
            for verdict in run_facts(series, facts, &fact_config) {
                let mut curves = Vec::new();
                for curve in &verdict.curves {
                    let name = format!("{}_{}.csv", verdict.fact, curve.name);
                    let mut buf = Vec::new();
                    write_curve_csv(&mut buf, curve)
                        .map_err(|e| CliError::Internal(e.to_string()))?;
                    write_atomic(&plots_dir.join(&name), &buf)?;
                    curves.push(format!("plots/{name}"));
                }
                report.verdicts.push(VerdictEntry {
                    fact: verdict.fact,
                    title: verdict.fact.title().into(),
                    status: verdict.status.as_str().into(),
                    metrics: verdict.metrics,
                    curves,
                    notes: verdict.notes,
                });
            }
        }
    }
    write_atomic(&asset_dir.join("report.json"), report.to_json()?.as_bytes())?;
    Ok(report)
}
