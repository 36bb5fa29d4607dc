//! Composite pi pulses whose relative phases carry systematic errors:
//! exact propagators, truncated-series expansions of the propagator around
//! the zero-error point, a phase solver that nullifies chosen expansion
//! coefficients, and robustness-landscape profiling.

pub mod catalog;
pub mod cli;
pub mod error;
pub mod expansion;
pub mod jets;
pub mod json;
pub mod model;
pub mod profiler;
pub mod solver;
pub mod su2;
pub mod suite;

pub use error::{Error, Result};
pub use jets::TruncatedSeries;
pub use model::{ErrorModel, Errors};
pub use su2::{CompositeSequence, Propagator, PulseSpec};
