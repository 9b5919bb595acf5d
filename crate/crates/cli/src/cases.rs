//! Parameter sets shared by the default recipes and the acceptance suite.

use kuragap::{DelayKernel, FrequencyDist};

pub fn freq(center: f64, half_width: f64) -> FrequencyDist {
    FrequencyDist::new(center, half_width).expect("valid frequency distribution")
}

/// T = 0.5, τ0 = 2.5, n = 1/12 (total mean 3, variance 3).
pub fn case1() -> DelayKernel {
    DelayKernel::with_fixed_moments(3.0, 3.0, 0.5).expect("valid kernel")
}

/// T = 2.8, τ0 = 0.2, n = 7.84/3 (total mean 3, variance 3).
pub fn case2() -> DelayKernel {
    DelayKernel::with_fixed_moments(3.0, 3.0, 2.8).expect("valid kernel")
}

/// No delay.
pub fn instantaneous() -> DelayKernel {
    DelayKernel::point_mass(0.0).expect("valid kernel")
}
