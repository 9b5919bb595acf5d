//! Fixtures shared by the benchmarks.

use num_complex::Complex64;

use kuragap::meanfield::MeanFieldConfig;
use kuragap::{DelayKernel, FrequencyDist, SystemParams};

pub fn freq() -> FrequencyDist {
    FrequencyDist::new(3.0, 1.0).unwrap()
}

/// Gamma mean 0.5 with total mean and variance 3.
pub fn case1() -> DelayKernel {
    DelayKernel::with_fixed_moments(3.0, 3.0, 0.5).unwrap()
}

/// Gamma mean 2.8 with total mean and variance 3.
pub fn case2() -> DelayKernel {
    DelayKernel::with_fixed_moments(3.0, 3.0, 2.8).unwrap()
}

pub fn meanfield(t_end: f64) -> MeanFieldConfig {
    let params = SystemParams::new(1.1 * 2.6992, freq(), case1()).unwrap();
    let mut cfg = MeanFieldConfig::new(params, Complex64::new(0.1, 0.0));
    cfg.t_end = Some(t_end);
    cfg
}
