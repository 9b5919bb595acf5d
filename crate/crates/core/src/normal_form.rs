//! Cubic normal form at a Hopf point.
//!
//! With `k = k̄ + ν` the critical mode amplitude obeys, to leading order,
//!
//! ```text
//! dA/dt = a ν A + b A |A|²,   a = H(iβ)/D,   b = -k̄ H(-iβ)/D,   D = 2 - k̄ H'(iβ)
//! ```
//!
//! where `a` also equals the root speed `λ'(k̄)`.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distributions::{DelayKernel, FrequencyDist};
use crate::error::{Error, Result};
use crate::spectral::{refine_root, HopfPoint, SystemParams};

const DEGENERATE_D: f64 = 1e-12;
const DEGENERATE_B: f64 = 1e-10;
const CROSS_CHECK: f64 = 1e-10;
const FD_STEP: f64 = 1e-6;
const FD_TOL: f64 = 1e-5;

/// How the amplitude relates to the coupling offset.
pub const DETUNING_CONVENTION: &str = "a multiplies (k - kbar); amplitudes are in unscaled variables";

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Criticality {
    Supercritical,
    Subcritical,
    Degenerate,
}

impl Criticality {
    pub fn from_cubic(b: Complex64) -> Self {
        if b.re < -DEGENERATE_B {
            Criticality::Supercritical
        } else if b.re > DEGENERATE_B {
            Criticality::Subcritical
        } else {
            Criticality::Degenerate
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Criticality::Supercritical => "supercritical",
            Criticality::Subcritical => "subcritical",
            Criticality::Degenerate => "degenerate",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct NormalFormData {
    pub a: Complex64,
    pub b: Complex64,
    pub classification: Criticality,
    pub kbar: f64,
    pub beta: f64,
}

fn gamma_closed_form_d(kernel: &DelayKernel, kbar: f64, beta: f64) -> Option<Complex64> {
    match *kernel {
        DelayKernel::GammaWithGap { shape, mean, gap } => {
            let base = Complex64::new(1.0, beta * mean / shape);
            let shift = Complex64::from_polar(1.0, -beta * gap);
            let bracket = mean * shift / base + gap * shift;
            Some(2.0 + kbar * bracket * base.powf(-shape))
        }
        DelayKernel::PointMass { .. } => None,
    }
}

/// Coefficients `a`, `b` and the criticality at a Hopf point.
///
/// For Gamma kernels the expanded closed form of `D` is evaluated alongside
/// the transform-based one; a mismatch beyond 1e-10 is reported as
/// [`Error::Inconsistent`].
pub fn nf_coefficients(freq: &FrequencyDist, kernel: &DelayKernel, point: &HopfPoint) -> Result<NormalFormData> {
    let _ = freq;
    let (kbar, beta) = (point.kbar, point.beta);
    let lambda = Complex64::new(0.0, beta);
    let h = kernel.laplace(lambda)?;
    let h_conj = kernel.laplace(-lambda)?;
    let d = 2.0 - kbar * kernel.laplace_derivative(lambda)?;
    if d.norm() < DEGENERATE_D {
        return Err(Error::Degenerate {
            kbar,
            modulus: d.norm(),
        });
    }
    let a = h / d;
    let b = -kbar * h_conj / d;

    if let Some(dc) = gamma_closed_form_d(kernel, kbar, beta) {
        let ac = h / dc;
        if (ac - a).norm() > CROSS_CHECK * a.norm().max(1.0) {
            return Err(Error::Inconsistent {
                formula: ac,
                finite_difference: a,
            });
        }
    }

    Ok(NormalFormData {
        a,
        b,
        classification: Criticality::from_cubic(b),
        kbar,
        beta,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct Transversality {
    pub a: Complex64,
    /// Central difference of the tracked root over k̄(1 ± 1e-6).
    pub root_derivative: Complex64,
    pub relative_error: f64,
}

impl Transversality {
    pub fn re_a(&self) -> f64 {
        self.a.re
    }
}

/// Checks `a = λ'(k̄)` by tracking the critical root under small changes of k.
///
/// Returns [`Error::Inconsistent`] when the two disagree by more than 1e-5
/// relative. The sign of `Re a` is reported, not enforced.
pub fn nf_transversality_check(
    freq: &FrequencyDist,
    kernel: &DelayKernel,
    point: &HopfPoint,
) -> Result<Transversality> {
    let nf = nf_coefficients(freq, kernel, point)?;
    let guess = Complex64::new(0.0, point.beta);
    let params = SystemParams {
        coupling: point.kbar,
        freq: *freq,
        kernel: *kernel,
    };
    let step = FD_STEP * point.kbar;
    let up = refine_root(&params.with_coupling(point.kbar + step), guess)?;
    let down = refine_root(&params.with_coupling(point.kbar - step), guess)?;
    let fd = (up - down) / (2.0 * step);
    let relative_error = (fd - nf.a).norm() / nf.a.norm();
    if !(relative_error <= FD_TOL) {
        return Err(Error::Inconsistent {
            formula: nf.a,
            finite_difference: fd,
        });
    }
    Ok(Transversality {
        a: nf.a,
        root_derivative: fd,
        relative_error,
    })
}

/// Stationary `|A|` of the truncated amplitude equation at coupling `k`.
///
/// Supercritical points give the stable branch for `k > k̄`; subcritical
/// points give the unstable branch for `k < k̄`.
pub fn nf_amplitude(data: &NormalFormData, k: f64, kbar: f64) -> Option<f64> {
    let (ra, rb) = (data.a.re, data.b.re);
    let radicand = match data.classification {
        Criticality::Supercritical if k >= kbar => (k - kbar) * ra / -rb,
        Criticality::Subcritical if k <= kbar => (kbar - k) * ra / rb,
        _ => return None,
    };
    (radicand >= 0.0).then(|| radicand.sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{first_hopf, SearchOptions};

    fn zero_delay() -> (FrequencyDist, DelayKernel, HopfPoint) {
        let freq = FrequencyDist::new(3.0, 1.0).unwrap();
        let kernel = DelayKernel::point_mass(0.0).unwrap();
        let p = first_hopf(&freq, &kernel, &SearchOptions::default()).unwrap();
        (freq, kernel, p)
    }

    #[test]
    fn zero_delay_coefficients_exact() {
        let (freq, kernel, p) = zero_delay();
        let nf = nf_coefficients(&freq, &kernel, &p).unwrap();
        assert_eq!(nf.a, Complex64::new(0.5, 0.0));
        assert_eq!(nf.b, Complex64::new(-1.0, 0.0));
        assert_eq!(nf.classification, Criticality::Supercritical);
        let t = nf_transversality_check(&freq, &kernel, &p).unwrap();
        assert!((t.root_derivative.re - 0.5).abs() < 1e-6);
    }

    #[test]
    fn zero_delay_amplitude() {
        let (freq, kernel, p) = zero_delay();
        let nf = nf_coefficients(&freq, &kernel, &p).unwrap();
        assert_eq!(nf_amplitude(&nf, 2.0, 2.0), Some(0.0));
        assert!((nf_amplitude(&nf, 2.2, 2.0).unwrap() - 0.1f64.sqrt()).abs() < 1e-15);
        assert_eq!(nf_amplitude(&nf, 1.9, 2.0), None);
    }

    #[test]
    fn gap_cases_classified() {
        let freq = FrequencyDist::new(3.0, 1.0).unwrap();
        for (t, want) in [(0.5, Criticality::Supercritical), (2.8, Criticality::Subcritical)] {
            let kernel = DelayKernel::with_fixed_moments(3.0, 3.0, t).unwrap();
            let p = first_hopf(&freq, &kernel, &SearchOptions::default()).unwrap();
            let nf = nf_coefficients(&freq, &kernel, &p).unwrap();
            assert_eq!(nf.classification, want, "T = {t}: b = {}", nf.b);
            let tr = nf_transversality_check(&freq, &kernel, &p).unwrap();
            assert!(tr.re_a() > 0.0 && tr.relative_error < 1e-5);
        }
    }

    #[test]
    fn classification_invariant_under_time_rescaling() {
        let freq = FrequencyDist::new(3.0, 1.0).unwrap();
        for t in [0.5, 1.5, 2.8] {
            let kernel = DelayKernel::with_fixed_moments(3.0, 3.0, t).unwrap();
            let p = first_hopf(&freq, &kernel, &SearchOptions::default()).unwrap();
            let nf = nf_coefficients(&freq, &kernel, &p).unwrap();
            for s in [0.25, 4.0] {
                let f2 = FrequencyDist::new(3.0 * s, s).unwrap();
                let DelayKernel::GammaWithGap { shape, mean, gap } = kernel else {
                    unreachable!()
                };
                let k2 = DelayKernel::gamma(shape, mean / s, gap / s).unwrap();
                let p2 = first_hopf(&f2, &k2, &SearchOptions::default()).unwrap();
                let nf2 = nf_coefficients(&f2, &k2, &p2).unwrap();
                assert_eq!(nf.classification, nf2.classification);
                assert!((p2.kbar / s - p.kbar).abs() < 1e-8 * p.kbar);
            }
        }
    }

    #[test]
    fn amplitude_square_root_onset() {
        let freq = FrequencyDist::new(3.0, 1.0).unwrap();
        let kernel = DelayKernel::with_fixed_moments(3.0, 3.0, 0.5).unwrap();
        let p = first_hopf(&freq, &kernel, &SearchOptions::default()).unwrap();
        let nf = nf_coefficients(&freq, &kernel, &p).unwrap();
        let d = 1e-4 * p.kbar;
        let r = nf_amplitude(&nf, p.kbar + 2.0 * d, p.kbar).unwrap() / nf_amplitude(&nf, p.kbar + d, p.kbar).unwrap();
        assert!((r - 2f64.sqrt()).abs() < 1e-3);
    }

    #[test]
    fn degenerate_threshold() {
        assert_eq!(
            Criticality::from_cubic(Complex64::new(1e-11, 3.0)),
            Criticality::Degenerate
        );
        assert_eq!(
            Criticality::from_cubic(Complex64::new(-1e-9, 0.0)),
            Criticality::Supercritical
        );
    }
}
