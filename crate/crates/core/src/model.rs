//! Error models: which physical parameters are perturbed around the nominal
//! operating point, and how a point in error space is represented.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Nominal Rabi frequency of a rectangular pulse. With unit duration this
/// makes the nominal pulse area exactly pi.
pub const NOMINAL_RABI: f64 = std::f64::consts::PI;

/// Nominal duration of a rectangular pulse.
pub const NOMINAL_DURATION: f64 = 1.0;

/// Which parameters carry systematic errors.
///
/// * `Double`: relative pulse-area error `alpha` and relative phase error
///   `epsilon`; pulses are ideal resonant rotations.
/// * `Triple`: rectangular pulses with relative Rabi-frequency error `alpha`,
///   absolute detuning `delta` (in units of the nominal Rabi frequency) and
///   relative phase error `epsilon`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ErrorModel {
    Double,
    Triple,
}

impl ErrorModel {
    /// Length of the error vector accepted by
    /// [`sequence_propagator`](crate::su2::sequence_propagator):
    /// `(alpha, epsilon)` or `(alpha, delta, epsilon)`.
    pub fn dim(self) -> usize {
        match self {
            ErrorModel::Double => 2,
            ErrorModel::Triple => 3,
        }
    }

    /// Default per-variable caps for expansions. Coefficient multi-indices
    /// are ordered as powers of `(alpha, epsilon[, delta])`.
    pub fn default_caps(self) -> Vec<usize> {
        match self {
            ErrorModel::Double => vec![5, 2],
            ErrorModel::Triple => vec![5, 2, 5],
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            ErrorModel::Double => "double",
            ErrorModel::Triple => "triple",
        }
    }
}

impl std::str::FromStr for ErrorModel {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "double" => Ok(ErrorModel::Double),
            "triple" => Ok(ErrorModel::Triple),
            other => Err(Error::InvalidProblem(format!("unknown error model '{other}'"))),
        }
    }
}

impl std::fmt::Display for ErrorModel {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// A point in error space. `delta` is ignored by the double model.
#[derive(Debug, Clone, Copy, Default, PartialEq, Serialize, Deserialize)]
pub struct Errors {
    pub alpha: f64,
    pub delta: f64,
    pub epsilon: f64,
}

impl Errors {
    pub const ZERO: Errors = Errors {
        alpha: 0.0,
        delta: 0.0,
        epsilon: 0.0,
    };

    pub fn double(alpha: f64, epsilon: f64) -> Self {
        Errors {
            alpha,
            delta: 0.0,
            epsilon,
        }
    }

    pub fn triple(alpha: f64, delta: f64, epsilon: f64) -> Self {
        Errors {
            alpha,
            delta,
            epsilon,
        }
    }

    /// Reads `(alpha, epsilon)` for the double model or
    /// `(alpha, delta, epsilon)` for the triple model.
    pub fn from_slice(model: ErrorModel, values: &[f64]) -> Result<Self> {
        if values.len() != model.dim() {
            return Err(Error::DimensionMismatch {
                expected: model.dim(),
                got: values.len(),
            });
        }
        Ok(match model {
            ErrorModel::Double => Errors::double(values[0], values[1]),
            ErrorModel::Triple => Errors::triple(values[0], values[1], values[2]),
        })
    }
}
