//! Delay kernels and the Lorentzian frequency distribution.
//!
//! A delay is `τ = τ0 + τ̃` where the gap `τ0 ≥ 0` is the minimal delay and
//! `τ̃ ~ Gamma(n, T/n)` has mean `T`. The kernel density is therefore
//! `h(τ - τ0)`, supported on `[τ0, ∞)`, with Laplace transform
//!
//! ```text
//! H(λ) = ∫ e^{-λτ} h(τ - τ0) dτ = (1 + Tλ/n)^{-n} e^{-λ τ0}
//! ```
//!
//! The point-mass kernel (all delays equal to `τ0`) is kept as its own variant
//! so the zero-variance case stays exact.

use std::f64::consts::PI;

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma};
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Distribution of the coupling delay.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "camelCase", deny_unknown_fields)]
pub enum DelayKernel {
    /// `τ0 + Gamma(shape, mean/shape)`.
    #[serde(rename_all = "camelCase")]
    GammaWithGap { shape: f64, mean: f64, gap: f64 },
    /// Every delay equals `gap`.
    PointMass { gap: f64 },
}

/// Mean, variance, skewness and excess kurtosis of the total delay.
///
/// The standardised moments are undefined for a point mass.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Moments {
    pub mean: f64,
    pub variance: f64,
    pub skewness: Option<f64>,
    pub excess_kurtosis: Option<f64>,
}

impl DelayKernel {
    pub fn gamma(shape: f64, mean: f64, gap: f64) -> Result<Self> {
        let k = DelayKernel::GammaWithGap { shape, mean, gap };
        k.validate()?;
        Ok(k)
    }

    pub fn point_mass(gap: f64) -> Result<Self> {
        let k = DelayKernel::PointMass { gap };
        k.validate()?;
        Ok(k)
    }

    /// Gamma kernel whose total delay has the given mean and variance while
    /// the Gamma part has mean `gamma_mean`: `τ0 = mean - T`, `n = T² / variance`.
    pub fn with_fixed_moments(total_mean: f64, variance: f64, gamma_mean: f64) -> Result<Self> {
        if !(variance > 0.0) {
            return Err(invalid("variance must be > 0"));
        }
        Self::gamma(gamma_mean * gamma_mean / variance, gamma_mean, total_mean - gamma_mean)
    }

    pub fn validate(&self) -> Result<()> {
        match *self {
            DelayKernel::GammaWithGap { shape, mean, gap } => {
                if !(shape > 0.0 && shape.is_finite()) {
                    return Err(invalid("shape n must be > 0"));
                }
                if !(mean > 0.0 && mean.is_finite()) {
                    return Err(invalid("gamma mean T must be > 0"));
                }
                if !(gap >= 0.0 && gap.is_finite()) {
                    return Err(invalid("gap τ0 must be ≥ 0"));
                }
            }
            DelayKernel::PointMass { gap } => {
                if !(gap >= 0.0 && gap.is_finite()) {
                    return Err(invalid("gap τ0 must be ≥ 0"));
                }
            }
        }
        Ok(())
    }

    pub fn gap(&self) -> f64 {
        match *self {
            DelayKernel::GammaWithGap { gap, .. } | DelayKernel::PointMass { gap } => gap,
        }
    }

    /// Mean of the Gamma part (`T`); zero for a point mass.
    pub fn gamma_mean(&self) -> f64 {
        match *self {
            DelayKernel::GammaWithGap { mean, .. } => mean,
            DelayKernel::PointMass { .. } => 0.0,
        }
    }

    /// Density `h(τ - τ0)` of the total delay.
    pub fn pdf(&self, tau: f64) -> Result<f64> {
        match *self {
            DelayKernel::PointMass { .. } => Err(Error::NoDensity),
            DelayKernel::GammaWithGap { shape, mean, gap } => {
                let s = tau - gap;
                if s < 0.0 {
                    return Ok(0.0);
                }
                let rate = shape / mean;
                if s == 0.0 {
                    return Ok(if shape < 1.0 {
                        f64::INFINITY
                    } else if shape == 1.0 {
                        rate
                    } else {
                        0.0
                    });
                }
                let log_pdf = (shape - 1.0) * s.ln() - rate * s + shape * rate.ln() - ln_gamma(shape);
                Ok(log_pdf.exp())
            }
        }
    }

    pub fn moments(&self) -> Moments {
        match *self {
            DelayKernel::GammaWithGap { shape, mean, gap } => Moments {
                mean: mean + gap,
                variance: mean * mean / shape,
                skewness: Some(2.0 / shape.sqrt()),
                excess_kurtosis: Some(6.0 / shape),
            },
            DelayKernel::PointMass { gap } => Moments {
                mean: gap,
                variance: 0.0,
                skewness: None,
                excess_kurtosis: None,
            },
        }
    }

    /// `H(λ)` on the principal branch of the complex power.
    pub fn laplace(&self, lambda: Complex64) -> Result<Complex64> {
        let delay = (-lambda * self.gap()).exp();
        match *self {
            DelayKernel::PointMass { .. } => Ok(delay),
            DelayKernel::GammaWithGap { shape, mean, .. } => {
                let base = gamma_base(shape, mean, lambda)?;
                Ok(base.powf(-shape) * delay)
            }
        }
    }

    /// `H'(λ) = -∫ τ e^{-λτ} h(τ - τ0) dτ`.
    pub fn laplace_derivative(&self, lambda: Complex64) -> Result<Complex64> {
        let value = self.laplace(lambda)?;
        let gap = self.gap();
        match *self {
            DelayKernel::PointMass { .. } => Ok(-gap * value),
            DelayKernel::GammaWithGap { shape, mean, .. } => {
                let base = gamma_base(shape, mean, lambda)?;
                Ok(-(mean / base + gap) * value)
            }
        }
    }

    /// `count` i.i.d. delays drawn from a ChaCha stream seeded with `seed`.
    pub fn sample(&self, seed: u64, count: usize) -> Vec<f64> {
        let mut rng = ChaCha8Rng::seed_from_u64(seed);
        self.sample_with(&mut rng, count)
    }

    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, count: usize) -> Vec<f64> {
        match *self {
            DelayKernel::PointMass { gap } => vec![gap; count],
            DelayKernel::GammaWithGap { shape, mean, gap } => {
                // Marsaglia–Tsang, with the U^{1/n} boost for shape < 1.
                let dist = Gamma::new(shape, mean / shape).expect("validated kernel");
                (0..count).map(|_| gap + dist.sample(rng)).collect()
            }
        }
    }

    pub fn quadrature(&self, order: usize) -> Result<QuadratureRule> {
        self.quadrature_with(&QuadratureOptions {
            order,
            ..QuadratureOptions::default()
        })
    }

    /// Node set approximating `∫ f(τ) h(τ - τ0) dτ ≈ Σ w_m f(τ_m)`.
    ///
    /// An `order`-point Gauss rule for the Gamma weight is tried first; it is
    /// kept when it reproduces `H(iβ)` to 1e-10 for `|β| ≤ omega_max`,
    /// otherwise the composite rule (Gauss–Jacobi head, adaptive
    /// Gauss–Legendre panels of the same order) is returned.
    pub fn quadrature_with(&self, opts: &QuadratureOptions) -> Result<QuadratureRule> {
        let order = opts.order;
        if order == 0 {
            return Err(invalid("quadrature order must be ≥ 1"));
        }
        if order > quadrature::MAX_ORDER {
            return Err(Error::QuadratureOrder {
                requested: order,
                max: quadrature::MAX_ORDER,
            });
        }
        let (shape, mean, gap) = match *self {
            DelayKernel::PointMass { gap } => {
                return Ok(QuadratureRule {
                    nodes: vec![gap],
                    weights: vec![1.0],
                    method: QuadratureMethod::PointMass,
                })
            }
            DelayKernel::GammaWithGap { shape, mean, gap } => (shape, mean, gap),
        };
        let scale = mean / shape;

        let (x, w) = quadrature::gauss_laguerre(order, shape - 1.0);
        let gauss = QuadratureRule {
            nodes: x.iter().map(|x| gap + scale * x).collect(),
            weights: w,
            method: QuadratureMethod::Gauss,
        };
        if gauss.is_valid() && self.reproduces_transform(&gauss, opts.omega_max, 1e-10) {
            return Ok(gauss);
        }

        let (s, mut w) = quadrature::composite_gamma(shape, scale, order, opts.omega_max, opts.tolerance);
        let total: f64 = w.iter().sum();
        w.iter_mut().for_each(|w| *w /= total);
        Ok(QuadratureRule {
            nodes: s.iter().map(|s| gap + s).collect(),
            weights: w,
            method: QuadratureMethod::Composite,
        })
    }

    fn reproduces_transform(&self, rule: &QuadratureRule, omega_max: f64, tol: f64) -> bool {
        (-20..=20).all(|j| {
            let beta = omega_max * j as f64 / 20.0;
            let lambda = Complex64::new(0.0, beta);
            match self.laplace(lambda) {
                Ok(exact) => (rule.laplace(lambda) - exact).norm() <= tol,
                Err(_) => false,
            }
        })
    }
}

fn gamma_base(shape: f64, mean: f64, lambda: Complex64) -> Result<Complex64> {
    let base = 1.0 + lambda * (mean / shape);
    if base.im == 0.0 && base.re <= 0.0 {
        return Err(Error::BranchCut { lambda });
    }
    Ok(base)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct QuadratureOptions {
    /// Gauss order (per panel for the composite rule).
    pub order: usize,
    /// Highest angular frequency the rule must resolve.
    pub omega_max: f64,
    /// Absolute accuracy target of the composite rule.
    pub tolerance: f64,
}

impl Default for QuadratureOptions {
    fn default() -> Self {
        QuadratureOptions {
            order: 24,
            omega_max: 10.0,
            tolerance: 1e-13,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum QuadratureMethod {
    PointMass,
    Gauss,
    Composite,
}

/// Discretisation of the delay distribution: positive weights summing to one
/// at strictly increasing nodes `τ_m ≥ τ0`.
#[derive(Debug, Clone, PartialEq)]
pub struct QuadratureRule {
    nodes: Vec<f64>,
    weights: Vec<f64>,
    method: QuadratureMethod,
}

impl QuadratureRule {
    pub fn nodes(&self) -> &[f64] {
        &self.nodes
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn len(&self) -> usize {
        self.nodes.len()
    }

    pub fn is_empty(&self) -> bool {
        self.nodes.is_empty()
    }

    pub fn method(&self) -> QuadratureMethod {
        self.method
    }

    pub fn max_node(&self) -> f64 {
        self.nodes.last().copied().unwrap_or(0.0)
    }

    pub fn integrate<F: Fn(f64) -> f64>(&self, f: F) -> f64 {
        self.nodes.iter().zip(&self.weights).map(|(&t, &w)| w * f(t)).sum()
    }

    /// Quadrature approximation of `H(λ)`.
    pub fn laplace(&self, lambda: Complex64) -> Complex64 {
        self.nodes
            .iter()
            .zip(&self.weights)
            .map(|(&t, &w)| w * (-lambda * t).exp())
            .sum()
    }

    fn is_valid(&self) -> bool {
        self.weights.iter().all(|w| *w > 0.0 && w.is_finite()) && self.nodes.windows(2).all(|p| p[0] < p[1])
    }
}

/// Lorentzian distribution of natural frequencies.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct FrequencyDist {
    pub center: f64,
    pub half_width: f64,
}

impl FrequencyDist {
    /// `half_width == 0` is accepted (identical oscillators); operations that
    /// need a positive width reject it themselves.
    pub fn new(center: f64, half_width: f64) -> Result<Self> {
        if !center.is_finite() {
            return Err(invalid("center must be finite"));
        }
        if !(half_width >= 0.0 && half_width.is_finite()) {
            return Err(invalid("halfWidth must be ≥ 0"));
        }
        Ok(FrequencyDist { center, half_width })
    }

    pub fn density(&self, omega: f64) -> f64 {
        let d = omega - self.center;
        self.half_width / (PI * (d * d + self.half_width * self.half_width))
    }

    /// Inverse-CDF draw `ω0 + Δ tan(π(u - ½))`, optionally clamped to
    /// `|ω - ω0| ≤ clamp · Δ`.
    pub fn sample_with<R: Rng + ?Sized>(&self, rng: &mut R, clamp: Option<f64>) -> f64 {
        let u: f64 = rng.random();
        let mut offset = self.half_width * (PI * (u - 0.5)).tan();
        if let Some(c) = clamp {
            let lim = c * self.half_width;
            offset = offset.clamp(-lim, lim);
        }
        self.center + offset
    }
}
