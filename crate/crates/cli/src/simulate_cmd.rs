//! The `simulate` subcommand: a synthetic path in the standard input CSV format.

use clap::{Args, ValueEnum};
use stylfacts::fitting::{GarchParams, OuParams};
use stylfacts::series::{parse_timestamp, write_bars_csv};
use stylfacts::simulate::{
    simulate, Extremes, GbmParams, GjrParams, Innovations, ModelParams, Recursion, SimSpec,
    VolumeModel, DEFAULT_SUBSTEPS,
};

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelArg {
    Gbm,
    Ou,
    #[value(alias = "garch11")]
    Garch,
    Gjr,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum InnovationArg {
    Gaussian,
    T,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum RecursionArg {
    Bar,
    Substep,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ExtremesArg {
    Bridge,
    Discrete,
}

#[derive(Debug, Clone, Args)]
pub struct SimulateArgs {
    #[arg(long, value_enum)]
    pub model: ModelArg,
    /// Number of bar returns (the file holds one more bar).
    #[arg(long)]
    pub n: usize,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    /// GBM drift per step, OU long-run log price, or GARCH/GJR mean return.
    #[arg(long)]
    pub mu: Option<f64>,
    /// GBM or OU diffusion per step.
    #[arg(long, default_value_t = 0.01)]
    pub sigma: f64,
    /// GBM starting price.
    #[arg(long, default_value_t = 100.0)]
    pub s0: f64,
    /// OU mean-reversion speed per step.
    #[arg(long, default_value_t = 0.05)]
    pub theta: f64,
    #[arg(long, default_value_t = 1e-6)]
    pub omega: f64,
    /// ARCH coefficient; 0.09 for GARCH and 0.03 for GJR when absent.
    #[arg(long)]
    pub alpha: Option<f64>,
    #[arg(long, default_value_t = 0.89)]
    pub beta: f64,
    /// GJR asymmetry coefficient.
    #[arg(long, default_value_t = 0.1)]
    pub gamma: f64,
    #[arg(long, value_enum, default_value_t = InnovationArg::Gaussian)]
    pub innovations: InnovationArg,
    /// Degrees of freedom for `--innovations t`.
    #[arg(long, default_value_t = 4.0)]
    pub dof: f64,
    #[arg(long, default_value_t = DEFAULT_SUBSTEPS)]
    pub substeps: usize,
    /// Variance recursion time scale; `substep` for GJR and `bar` otherwise when absent.
    #[arg(long, value_enum)]
    pub recursion: Option<RecursionArg>,
    #[arg(long, value_enum, default_value_t = ExtremesArg::Bridge)]
    pub extremes: ExtremesArg,
    /// Emit a synthetic volume column.
    #[arg(long)]
    pub volume: bool,
    #[arg(long, default_value_t = 1e6)]
    pub volume_scale: f64,
    #[arg(long, default_value_t = 0.5)]
    pub volume_noise: f64,
    #[arg(long, default_value_t = 86_400)]
    pub step_secs: i64,
    /// First timestamp, ISO-8601 or epoch seconds.
    #[arg(long, default_value = "2000-01-01T00:00:00Z")]
    pub start: String,
    /// Output file; standard output when absent.
    #[arg(long)]
    pub out: Option<std::path::PathBuf>,
}

impl SimulateArgs {
    pub fn to_spec(&self) -> Result<SimSpec, CliError> {
        let params = match self.model {
            ModelArg::Gbm => ModelParams::Gbm(GbmParams {
                mu: self.mu.unwrap_or(0.0),
                sigma: self.sigma,
                s0: self.s0,
            }),
            ModelArg::Ou => ModelParams::Ou(OuParams {
                theta: self.theta,
                mu: self.mu.unwrap_or(100f64.ln()),
                sigma: self.sigma,
            }),
            ModelArg::Garch => ModelParams::Garch11(GarchParams {
                omega: self.omega,
                alpha: self.alpha.unwrap_or(0.09),
                beta: self.beta,
                mean: self.mu.unwrap_or(0.0),
            }),
            ModelArg::Gjr => ModelParams::Gjr(GjrParams {
                omega: self.omega,
                alpha: self.alpha.unwrap_or(0.03),
                gamma: self.gamma,
                beta: self.beta,
                mean: self.mu.unwrap_or(0.0),
            }),
        };
        let start = parse_timestamp(&self.start).map_err(|e| CliError::Usage(e.to_string()))?;
        Ok(SimSpec {
            substeps_per_bar: self.substeps,
            innovations: match self.innovations {
                InnovationArg::Gaussian => Innovations::Gaussian,
                InnovationArg::T => Innovations::StudentT { dof: self.dof },
            },
            recursion: match (self.recursion, self.model) {
                (Some(RecursionArg::Bar), _) => Recursion::Bar,
                (Some(RecursionArg::Substep), _) | (None, ModelArg::Gjr) => Recursion::Substep,
                (None, _) => Recursion::Bar,
            },
            extremes: match self.extremes {
                ExtremesArg::Bridge => Extremes::Bridge,
                ExtremesArg::Discrete => Extremes::Discrete,
            },
            volume: self.volume.then_some(VolumeModel {
                scale: self.volume_scale,
                noise: self.volume_noise,
            }),
            step_secs: self.step_secs,
            start_timestamp: start,
            ..SimSpec::new(params, self.n, self.seed)
        })
    }
}

/// Simulates and returns the CSV bytes.
pub fn run_simulate(args: &SimulateArgs) -> Result<Vec<u8>, CliError> {
    let spec = args.to_spec()?;
    let out = simulate(&spec).map_err(|e| CliError::Usage(e.to_string()))?;
    let mut buf = Vec::new();
    write_bars_csv(&mut buf, out.prices.bars()).map_err(|e| CliError::Internal(e.to_string()))?;
    Ok(buf)
}
