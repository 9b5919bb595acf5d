//! Linear stability of the incoherent state.
//!
//! The characteristic equation of the reduced delay equation is
//!
//! ```text
//! λ + iω0 + Δ - (k/2) H(λ) = 0
//! ```
//!
//! A Hopf value is a pair (k̄, β) with a root λ = iβ. Writing
//! `1 + iTβ/n = ρ e^{iϑ}` and `ψ = nϑ + βτ0`, the real and imaginary parts give
//! `Δ = (k/2) ρ^{-n} cos ψ` and `β + ω0 = -(k/2) ρ^{-n} sin ψ`, so β solves
//! `-(β + ω0)/Δ = tan ψ(β)`. We solve the equivalent phase condition
//!
//! ```text
//! φ(β) = ψ(β) + arctan((β + ω0)/Δ) = jπ
//! ```
//!
//! which has no poles. `φ` is strictly increasing in β, so every level `jπ`
//! is hit exactly once; even levels have `cos ψ > 0` and give positive
//! couplings `k̄ = 2Δ ρ^n / cos ψ`. The level index `j/2` labels a Hopf branch
//! continuously in the kernel parameters.

mod double_hopf;
mod grid;

pub use double_hopf::{double_hopf_locate, DoubleHopf, ScalarScan};
pub use grid::{hopf_curve_grid, Axis, AxisRange, CurveGrid, GridKind, KernelFamily, Plane};

use std::f64::consts::PI;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::distributions::{DelayKernel, FrequencyDist};
use crate::error::{invalid, Error, Result};

const NEWTON_MAX_ITER: usize = 50;
const NEWTON_TOL: f64 = 1e-12;
const MERGE_TOL: f64 = 1e-8;

/// Physical parameters of the oscillator population.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SystemParams {
    pub coupling: f64,
    pub freq: FrequencyDist,
    pub kernel: DelayKernel,
}

impl SystemParams {
    pub fn new(coupling: f64, freq: FrequencyDist, kernel: DelayKernel) -> Result<Self> {
        let p = SystemParams { coupling, freq, kernel };
        p.validate()?;
        Ok(p)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.coupling >= 0.0 && self.coupling.is_finite()) {
            return Err(invalid("coupling k must be ≥ 0"));
        }
        FrequencyDist::new(self.freq.center, self.freq.half_width)?;
        self.kernel.validate()
    }

    pub fn with_coupling(&self, coupling: f64) -> Self {
        SystemParams { coupling, ..*self }
    }
}

/// A critical coupling `kbar` at which `λ = iβ` solves the characteristic equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct HopfPoint {
    pub kbar: f64,
    pub beta: f64,
    /// `|char_residual(kbar, iβ)|` after refinement.
    pub residual: f64,
    /// Continuous branch label (half the phase level).
    pub branch: i64,
    /// False when Newton refinement stalled; `residual` is then the
    /// bisection-level value.
    pub converged: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct SearchOptions {
    /// Scan bound J on |β|; `None` selects [`default_bound`].
    pub bound: Option<f64>,
    /// Points of the bracketing grid over [-J, J].
    pub grid_size: usize,
}

impl Default for SearchOptions {
    fn default() -> Self {
        SearchOptions {
            bound: None,
            grid_size: 4000,
        }
    }
}

impl SearchOptions {
    pub fn with_bound(bound: f64) -> Self {
        SearchOptions {
            bound: Some(bound),
            ..Self::default()
        }
    }

    fn resolve(&self, freq: &FrequencyDist, kernel: &DelayKernel) -> f64 {
        self.bound.unwrap_or_else(|| default_bound(freq, kernel))
    }
}

/// `10 (|ω0| + Δ + 2π / max(τ0 + T, 1e-3))`.
pub fn default_bound(freq: &FrequencyDist, kernel: &DelayKernel) -> f64 {
    let span = (kernel.gap() + kernel.gamma_mean()).max(1e-3);
    10.0 * (freq.center.abs() + freq.half_width + 2.0 * PI / span)
}

/// `λ + (iω0 + Δ) - (k/2) H(λ)`.
pub fn char_residual(params: &SystemParams, lambda: Complex64) -> Result<Complex64> {
    let h = params.kernel.laplace(lambda)?;
    Ok(lambda + Complex64::new(params.freq.half_width, params.freq.center) - 0.5 * params.coupling * h)
}

fn phase(freq: &FrequencyDist, kernel: &DelayKernel, beta: f64) -> f64 {
    kernel_phase(kernel, beta) + ((beta + freq.center) / freq.half_width).atan()
}

/// `ψ(β) = n arctan(Tβ/n) + βτ0`, the argument of `1 / H(iβ)`.
fn kernel_phase(kernel: &DelayKernel, beta: f64) -> f64 {
    match *kernel {
        DelayKernel::GammaWithGap { shape, mean, gap } => shape * (mean * beta / shape).atan() + beta * gap,
        DelayKernel::PointMass { gap } => beta * gap,
    }
}

/// `ρ^n = |1 + iTβ/n|^n = 1 / |H(iβ)|`.
fn kernel_gain(kernel: &DelayKernel, beta: f64) -> f64 {
    match *kernel {
        DelayKernel::GammaWithGap { shape, mean, .. } => {
            let x = mean * beta / shape;
            (1.0 + x * x).powf(0.5 * shape)
        }
        DelayKernel::PointMass { .. } => 1.0,
    }
}

/// Real roots of `-(β + ω0)/Δ = tan ψ(β)` in [-J, J] with their phase level.
fn tan_roots(freq: &FrequencyDist, kernel: &DelayKernel, opts: &SearchOptions) -> Result<Vec<(f64, i64)>> {
    if !(freq.half_width > 0.0) {
        return Err(Error::ZeroWidth);
    }
    let bound = opts.resolve(freq, kernel);
    if !(bound > 0.0 && bound.is_finite()) {
        return Err(invalid("search bound J must be > 0"));
    }
    let size = opts.grid_size.max(2);
    let grid: Vec<f64> = (0..size)
        .map(|i| -bound + 2.0 * bound * i as f64 / (size - 1) as f64)
        .collect();
    let values: Vec<f64> = grid.iter().map(|&b| phase(freq, kernel, b)).collect();

    let lo_level = (values[0] / PI).ceil() as i64;
    let hi_level = (values[size - 1] / PI).floor() as i64;
    let mut roots = Vec::new();
    for level in lo_level..=hi_level {
        let target = level as f64 * PI;
        let idx = values.partition_point(|&v| v < target);
        let (mut a, mut b) = if idx == 0 {
            (grid[0], grid[0])
        } else if idx >= size {
            (grid[size - 1], grid[size - 1])
        } else {
            (grid[idx - 1], grid[idx])
        };
        while b - a > 1e-12 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if phase(freq, kernel, m) < target {
                a = m;
            } else {
                b = m;
            }
        }
        roots.push((0.5 * (a + b), level));
    }
    Ok(roots)
}

/// All β ∈ [-J, J] solving the tangent form of the Hopf condition, ascending.
///
/// Includes roots with `cos ψ < 0`, which correspond to negative couplings.
pub fn hopf_candidates(freq: &FrequencyDist, kernel: &DelayKernel, opts: &SearchOptions) -> Result<Vec<f64>> {
    Ok(tan_roots(freq, kernel, opts)?.into_iter().map(|r| r.0).collect())
}

/// Hopf points with `k̄ > 0`, refined by Newton and sorted by ascending `k̄`.
pub fn hopf_points(freq: &FrequencyDist, kernel: &DelayKernel, opts: &SearchOptions) -> Result<Vec<HopfPoint>> {
    let mut points = Vec::new();
    for (beta, level) in tan_roots(freq, kernel, opts)? {
        if level.rem_euclid(2) != 0 || beta.abs() <= 1e-8 {
            continue;
        }
        let cos_psi = kernel_phase(kernel, beta).cos();
        if cos_psi <= 0.0 {
            continue;
        }
        let kbar = 2.0 * freq.half_width * kernel_gain(kernel, beta) / cos_psi;
        let mut point = refine_hopf(freq, kernel, kbar, beta)?;
        point.branch = level / 2;
        if point.beta.abs() > 1e-8 && point.kbar > 0.0 {
            points.push(point);
        }
    }
    points.sort_by(|a, b| a.kbar.total_cmp(&b.kbar));
    points.dedup_by(|b, a| (a.kbar - b.kbar).abs() <= MERGE_TOL && (a.beta - b.beta).abs() <= MERGE_TOL);
    Ok(points)
}

/// Two-dimensional Newton iteration on (Re, Im) of the residual in (k, β).
pub fn refine_hopf(freq: &FrequencyDist, kernel: &DelayKernel, kbar: f64, beta: f64) -> Result<HopfPoint> {
    let shift = Complex64::new(freq.half_width, freq.center);
    let eval = |k: f64, b: f64| -> Result<(Complex64, Complex64, Complex64)> {
        let lambda = Complex64::new(0.0, b);
        let h = kernel.laplace(lambda)?;
        let dh = kernel.laplace_derivative(lambda)?;
        let f = lambda + shift - 0.5 * k * h;
        let df_dk = -0.5 * h;
        let df_db = Complex64::i() * (1.0 - 0.5 * k * dh);
        Ok((f, df_dk, df_db))
    };

    let (mut k, mut b) = (kbar, beta);
    let (mut f, mut fk, mut fb) = eval(k, b)?;
    let mut best = (k, b, f.norm());
    for _ in 0..NEWTON_MAX_ITER {
        if f.norm() <= NEWTON_TOL {
            break;
        }
        let det = fk.re * fb.im - fb.re * fk.im;
        if det == 0.0 || !det.is_finite() {
            break;
        }
        let dk = -(f.re * fb.im - fb.re * f.im) / det;
        let db = -(fk.re * f.im - f.re * fk.im) / det;
        k += dk;
        b += db;
        (f, fk, fb) = eval(k, b)?;
        if f.norm() < best.2 {
            best = (k, b, f.norm());
        }
        if dk.abs() <= 1e-16 * k.abs() && db.abs() <= 1e-16 * b.abs().max(1.0) {
            break;
        }
    }
    let (k, b, residual) = best;
    Ok(HopfPoint {
        kbar: k,
        beta: b,
        residual,
        branch: 0,
        converged: residual <= NEWTON_TOL.max(1e-15 * (b.abs() + shift.norm() + 0.5 * k)),
    })
}

/// Smallest Hopf value k₀.
pub fn first_hopf(freq: &FrequencyDist, kernel: &DelayKernel, opts: &SearchOptions) -> Result<HopfPoint> {
    hopf_points(freq, kernel, opts)?
        .into_iter()
        .next()
        .ok_or_else(|| Error::SearchBound {
            bound: opts.resolve(freq, kernel),
        })
}

/// Hopf values up to a coupling and the induced stability of incoherence.
#[derive(Debug, Clone, PartialEq)]
pub struct BranchInfo {
    /// All Hopf points found, ascending in `kbar`.
    pub points: Vec<HopfPoint>,
    pub coupling: f64,
    /// Number of Hopf values ≤ `coupling`.
    pub branch_count: usize,
    pub incoherence_stable: bool,
}

/// Counts Hopf crossings below `params.coupling`.
///
/// Incoherence is stable at k = 0 for Δ > 0 and every crossing moves a root
/// to the right (Re λ'(k̄) > 0), so it is stable exactly below the first Hopf
/// value. Since `k̄ = 2ρⁿ |Δ + i(β + ω0)| ≥ 2|β + ω0|`, the bound J is widened
/// to `k/2 + |ω0| + 1` so no crossing below `k` is missed.
pub fn branch_info(params: &SystemParams, opts: &SearchOptions) -> Result<BranchInfo> {
    let k = params.coupling;
    let need = 0.5 * k + params.freq.center.abs() + 1.0;
    let bound = opts.resolve(&params.freq, &params.kernel).max(need);
    let opts = SearchOptions {
        bound: Some(bound),
        ..*opts
    };
    let points = hopf_points(&params.freq, &params.kernel, &opts)?;
    let branch_count = points.iter().filter(|p| p.kbar <= k).count();
    Ok(BranchInfo {
        points,
        coupling: k,
        branch_count,
        incoherence_stable: branch_count == 0,
    })
}

/// `Re dλ/dk` at k = 0 for identical oscillators: `½ ∫ cos(ω0 τ) h(τ - τ0) dτ`.
pub fn identical_limit_growth(omega0: f64, kernel: &DelayKernel) -> Result<f64> {
    Ok(0.5 * kernel.laplace(Complex64::new(0.0, omega0))?.re)
}

/// Newton iteration for a characteristic root near `guess`.
pub fn refine_root(params: &SystemParams, guess: Complex64) -> Result<Complex64> {
    let mut lambda = guess;
    for _ in 0..NEWTON_MAX_ITER {
        let f = char_residual(params, lambda)?;
        if f.norm() <= 1e-14 {
            return Ok(lambda);
        }
        let df = 1.0 - 0.5 * params.coupling * params.kernel.laplace_derivative(lambda)?;
        let step = f / df;
        lambda -= step;
        if step.norm() <= 1e-15 * lambda.norm().max(1.0) {
            return Ok(lambda);
        }
    }
    let f = char_residual(params, lambda)?;
    if f.norm() <= 1e-11 {
        Ok(lambda)
    } else {
        Err(Error::NoConvergence(format!(
            "characteristic root near {guess} (residual {:e})",
            f.norm()
        )))
    }
}
