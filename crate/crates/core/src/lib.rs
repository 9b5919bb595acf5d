//! Kuramoto oscillators with Gamma-distributed coupling delays bounded below
//! by a gap: linear stability of incoherence, Hopf normal forms, reduced
//! mean-field integration and finite-N simulation.

// `!(x > 0.0)` is used on purpose so NaN fails validation.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod distributions;
pub mod ensemble;
pub mod error;
pub mod history;
pub mod meanfield;
pub mod normal_form;
pub mod quadrature;
pub mod series;
pub mod spectral;

pub const VERSION: &str = env!("CARGO_PKG_VERSION");

pub use distributions::{DelayKernel, FrequencyDist, Moments, QuadratureOptions, QuadratureRule};
pub use ensemble::{EnsembleState, ProbeStats};
pub use error::{Error, Result};
pub use meanfield::{MeanFieldConfig, SweepTable};
pub use normal_form::{Criticality, NormalFormData};
pub use series::OrderParamSeries;
pub use spectral::{BranchInfo, HopfPoint, SearchOptions, SystemParams};
