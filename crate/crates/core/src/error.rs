use std::fmt;

use thiserror::Error;

/// One anchor's misfit after calibration.
#[derive(Debug, Clone, PartialEq)]
pub struct Residual {
    pub anchor: String,
    pub target: f64,
    pub model: f64,
    /// Relative misfit, scaled by the anchor's reference magnitude.
    pub relative: f64,
}

impl fmt::Display for Residual {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(
            f,
            "{}: target {:.6e}, model {:.6e}, rel {:.3e}",
            self.anchor, self.target, self.model, self.relative
        )
    }
}

#[derive(Debug, Error)]
pub enum Error {
    #[error("validation error: {0}")]
    Validation(String),

    #[error("numerical error: {what} (condition number {condition:.3e})")]
    Numerical { what: String, condition: f64 },

    #[error("protocol violation at t = {t:.6e} s: {detail}")]
    Protocol { t: f64, detail: String },

    #[error("calibration failed: {message}{}", format_residuals(.residuals))]
    Calibration {
        message: String,
        residuals: Vec<Residual>,
    },

    #[error("input data error{}: {message}", line.map(|l| format!(" at line {l}")).unwrap_or_default())]
    InputData { line: Option<usize>, message: String },

    #[error("configuration error: {0}")]
    Config(String),

    #[error("uncalibrated: {0}")]
    Uncalibrated(String),
}

fn format_residuals(residuals: &[Residual]) -> String {
    let mut out = String::new();
    for r in residuals {
        out.push_str("\n  ");
        out.push_str(&r.to_string());
    }
    out
}

pub type Result<T> = std::result::Result<T, Error>;

pub(crate) fn validation(msg: impl Into<String>) -> Error {
    Error::Validation(msg.into())
}
