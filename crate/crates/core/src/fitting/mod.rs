//! Parameter estimation: damped least squares, GARCH quasi-likelihood, OU and
//! tail-exponent regressions.

mod garch;
mod lm;
mod ou;
mod simplex;
mod tail;

pub use garch::{fit_garch11, garch_filter, GarchFit, GarchParams};
pub use lm::{
    fit_power_law, fit_power_law_values, lm_minimize, CurveModel, LmConfig, LmResult, PowerLawFit,
};
pub use ou::{fit_ou, fit_ou_checked, OuParams};
pub use simplex::{nelder_mead, SimplexConfig, SimplexResult};
pub use tail::{fit_tail_exponent, TailFit, TailSide, DEFAULT_TAIL_FRACTION};
