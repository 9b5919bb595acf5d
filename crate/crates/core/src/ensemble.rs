//! Finite-N Kuramoto population with one delay per oscillator:
//!
//! ```text
//! θ_i' = ω_i + (k/N) Σ_j sin(θ_j(t - τ_i) - θ_i(t)) = ω_i + k Im(Z(t - τ_i) e^{-iθ_i})
//! ```
//!
//! with `Z(t) = (1/N) Σ_j e^{iθ_j(t)}`. Only the global mean field needs a
//! history, so each step costs O(N).

use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use std::f64::consts::{PI, TAU};

use crate::error::{invalid, Result};
use crate::history::{History, Interpolation, Stencil};
use crate::series::{tail_stats, OrderParamSeries, DEFAULT_WINDOW};
use crate::spectral::SystemParams;

/// Tail mean below which a trial counts as incoherent in the coexistence
/// test, before the finite-N correction of [`incoherent_threshold`].
pub const INCOHERENT: f64 = 0.05;
/// Tail means below this are discarded from the filtered mean.
pub const COHERENCE_THRESHOLD: f64 = 0.2;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum InitMode {
    /// Equally spaced phases plus a small uniform perturbation.
    PerturbedIncoherent,
    /// Independent uniform phases.
    Random,
}

#[derive(Debug, Clone)]
pub struct EnsembleState {
    pub params: SystemParams,
    pub theta: Vec<f64>,
    pub omega: Vec<f64>,
    pub tau: Vec<f64>,
    pub time: f64,
    /// Created on the first integration, when the step is known.
    history: Option<History>,
}

impl EnsembleState {
    pub fn len(&self) -> usize {
        self.theta.len()
    }

    pub fn is_empty(&self) -> bool {
        self.theta.is_empty()
    }

    pub fn order_parameter(&self) -> Complex64 {
        mean_phasor(&self.theta)
    }

    /// Adds `shift` to every phase; only valid before the first integration.
    pub fn rotate(&mut self, shift: f64) {
        assert!(self.history.is_none(), "rotate after integration started");
        for t in &mut self.theta {
            *t = (*t + shift).rem_euclid(TAU);
        }
    }
}

/// `e^{ix}`; Taylor polynomials for |x| ≤ 0.5 (truncation below 1e-19).
#[inline]
fn expi_small(x: f64) -> Complex64 {
    if x.abs() > 0.5 {
        let (s, c) = x.sin_cos();
        return Complex64::new(c, s);
    }
    let x2 = x * x;
    let c = 1.0
        - x2 / 2.0
            * (1.0
                - x2 / 12.0
                    * (1.0
                        - x2 / 30.0 * (1.0 - x2 / 56.0 * (1.0 - x2 / 90.0 * (1.0 - x2 / 132.0 * (1.0 - x2 / 182.0))))));
    let s = x
        * (1.0
            - x2 / 6.0
                * (1.0
                    - x2 / 20.0
                        * (1.0
                            - x2 / 42.0
                                * (1.0 - x2 / 72.0 * (1.0 - x2 / 110.0 * (1.0 - x2 / 156.0 * (1.0 - x2 / 210.0)))))));
    Complex64::new(c, s)
}

fn mean_phasor(theta: &[f64]) -> Complex64 {
    let (s, c) = theta.iter().fold((0.0, 0.0), |(s, c), &t| {
        let (st, ct) = t.sin_cos();
        (s + st, c + ct)
    });
    Complex64::new(c, s) / theta.len() as f64
}

/// Seeds frequencies, delays and phases from one ChaCha8 stream.
///
/// `clamp` bounds |ω - ω0| by `clamp · Δ`.
pub fn ens_init(
    n: usize,
    params: &SystemParams,
    seed: u64,
    mode: InitMode,
    perturbation: f64,
    clamp: Option<f64>,
) -> Result<EnsembleState> {
    params.validate()?;
    if n < 2 {
        return Err(invalid("N must be ≥ 2"));
    }
    if !(0.0..=1.0).contains(&perturbation) {
        return Err(invalid("perturbation must lie in [0, 1]"));
    }
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let omega: Vec<f64> = (0..n).map(|_| params.freq.sample_with(&mut rng, clamp)).collect();
    let tau = params.kernel.sample_with(&mut rng, n);
    let theta = match mode {
        InitMode::PerturbedIncoherent => (0..n)
            .map(|i| {
                let eta = if perturbation > 0.0 {
                    rng.random_range(-PI..PI)
                } else {
                    0.0
                };
                (TAU * i as f64 / n as f64 + perturbation * eta).rem_euclid(TAU)
            })
            .collect(),
        InitMode::Random => (0..n).map(|_| rng.random_range(0.0..TAU)).collect(),
    };
    Ok(EnsembleState {
        params: *params,
        theta,
        omega,
        tau,
        time: 0.0,
        history: None,
    })
}

/// `min(0.01, τ0/10)`, the gap term only for τ0 > 0.
pub fn default_dt(params: &SystemParams) -> f64 {
    let gap = params.kernel.gap();
    if gap > 0.0 {
        0.01f64.min(gap / 10.0)
    } else {
        0.01
    }
}

/// Advances the state by `duration` with fixed RK4 steps, recording the
/// instantaneous `r(t)` and its delay average `(1/N) Σ_i Z(t - τ_i)` every
/// `record_interval`.
pub fn ens_integrate(
    state: &mut EnsembleState,
    duration: f64,
    dt: f64,
    record_interval: f64,
) -> Result<OrderParamSeries> {
    let limit = default_dt(&state.params);
    if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
        return Err(invalid(format!("dt must lie in (0, {limit}]")));
    }
    if !(duration >= 0.0 && duration.is_finite()) {
        return Err(invalid("integration time must be ≥ 0"));
    }
    if !(record_interval > 0.0) {
        return Err(invalid("recordInterval must be > 0"));
    }
    let n = state.len();
    let max_delay = state.tau.iter().cloned().fold(0.0, f64::max);
    let mut history = match state.history.take() {
        Some(h) if h.dt() == dt => h,
        Some(_) => return Err(invalid("dt must not change between integrations of one state")),
        None => History::constant(state.order_parameter(), dt, max_delay, Interpolation::CubicHermite),
    };

    let stencils = |offset: f64| -> Vec<Stencil> { state.tau.iter().map(|&t| history.stencil(t, offset)).collect() };
    let (s0, s_half, s1) = (stencils(0.0), stencils(0.5), stencils(1.0));

    let k = state.params.coupling;
    let omega = &state.omega;
    let inv_n = 1.0 / n as f64;

    let phasors = |th: &[f64], ph: &mut [Complex64]| -> Complex64 {
        let mut z = Complex64::new(0.0, 0.0);
        for (p, &t) in ph.iter_mut().zip(th) {
            let (s, c) = t.sin_cos();
            *p = Complex64::new(c, s);
            z += *p;
        }
        z * inv_n
    };
    // Stage phasors e^{i(θ + h·d)} obtained by rotating the step-start phasors.
    let rotated = |base: &[Complex64], h: f64, d: &[f64], ph: &mut [Complex64]| -> Complex64 {
        let mut z = Complex64::new(0.0, 0.0);
        for ((p, b), &di) in ph.iter_mut().zip(base).zip(d) {
            *p = b * expi_small(h * di);
            z += *p;
        }
        z * inv_n
    };
    // θ' given the phasors `ph` of the stage phases and their mean `z_now`.
    let rhs = |st: &[Stencil], hist: &History, out: &mut [f64], ph: &[Complex64], z_now: Complex64| -> Complex64 {
        let mut delayed = Complex64::new(0.0, 0.0);
        for i in 0..ph.len() {
            let r = hist.eval(&st[i], z_now);
            delayed += r;
            out[i] = omega[i] + k * (r * ph[i].conj()).im;
        }
        delayed * inv_n
    };

    let steps = (duration / dt).round() as usize;
    let every = ((record_interval / dt).round() as usize).max(1);
    let mut times = Vec::with_capacity(steps / every + 2);
    let mut values = Vec::with_capacity(steps / every + 2);
    let mut delayed = Vec::with_capacity(steps / every + 2);

    let mut k1 = vec![0.0; n];
    let mut k2 = vec![0.0; n];
    let mut k3 = vec![0.0; n];
    let mut k4 = vec![0.0; n];
    let mut ph = vec![Complex64::new(0.0, 0.0); n];
    let mut base = ph.clone();
    let theta = &mut state.theta;
    let t0 = state.time;

    let mut z = phasors(theta, &mut ph);
    for step in 0..=steps {
        let avg = rhs(&s0, &history, &mut k1, &ph, z);
        let z_dot = ph
            .iter()
            .zip(&k1)
            .map(|(p, &d)| Complex64::new(0.0, d) * p)
            .sum::<Complex64>()
            * inv_n;
        history.set_newest_slope(z_dot);
        if step % every == 0 || step == steps {
            times.push(t0 + step as f64 * dt);
            values.push(z);
            delayed.push(avg);
        }
        if step == steps {
            break;
        }
        base.copy_from_slice(&ph);
        let zs = rotated(&base, 0.5 * dt, &k1, &mut ph);
        rhs(&s_half, &history, &mut k2, &ph, zs);
        let zs = rotated(&base, 0.5 * dt, &k2, &mut ph);
        rhs(&s_half, &history, &mut k3, &ph, zs);
        let zs = rotated(&base, dt, &k3, &mut ph);
        rhs(&s1, &history, &mut k4, &ph, zs);
        for i in 0..n {
            theta[i] = (theta[i] + dt / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i])).rem_euclid(TAU);
        }
        z = phasors(theta, &mut ph);
        // The slope is replaced by the exact value at the start of the next step.
        history.push(z, z_dot);
    }
    state.time = t0 + steps as f64 * dt;
    state.history = Some(history);
    Ok(OrderParamSeries::new(times, values, Some(delayed)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", default, deny_unknown_fields)]
pub struct ProbeConfig {
    pub n: usize,
    pub trials: usize,
    pub base_seed: u64,
    pub mode: InitMode,
    pub t_end: f64,
    /// `None` selects [`default_dt`].
    pub dt: Option<f64>,
    pub perturbation: f64,
    pub window_fraction: f64,
    pub record_interval: f64,
    /// Bound on |ω - ω0| in units of Δ; `None` keeps the Lorentzian untruncated.
    pub clamp: Option<f64>,
}

impl Default for ProbeConfig {
    fn default() -> Self {
        ProbeConfig {
            n: 128,
            trials: 100,
            base_seed: 0,
            mode: InitMode::PerturbedIncoherent,
            t_end: 200.0,
            dt: None,
            perturbation: 0.05,
            window_fraction: DEFAULT_WINDOW,
            record_interval: 0.1,
            clamp: None,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct ProbeStats {
    pub k: f64,
    pub min_abs_r: f64,
    pub mean_abs_r: f64,
    pub std_abs_r: f64,
    /// Mean over trials with tail mean ≥ 0.2; `None` if there are none.
    pub filtered_mean_abs_r: Option<f64>,
    pub trial_count: usize,
    /// Some trials end below [`incoherent_threshold`] and others above 0.2.
    pub coexistence: bool,
    pub tail_means: Vec<f64>,
}

/// `max(0.05, 2 √(π / 4N))`: twice the mean |r| of N random phases, so the
/// incoherent floor of a finite ensemble still counts as incoherent.
pub fn incoherent_threshold(n: usize) -> f64 {
    INCOHERENT.max(2.0 * (PI / (4.0 * n as f64)).sqrt())
}

impl ProbeStats {
    /// `n` is the ensemble size, used for the incoherence threshold.
    pub fn from_tail_means(k: f64, n: usize, tail_means: Vec<f64>) -> Self {
        let m = tail_means.len() as f64;
        let mean = tail_means.iter().sum::<f64>() / m;
        let std = if tail_means.len() > 1 {
            (tail_means.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (m - 1.0)).sqrt()
        } else {
            0.0
        };
        let kept: Vec<f64> = tail_means
            .iter()
            .copied()
            .filter(|&x| x >= COHERENCE_THRESHOLD)
            .collect();
        let filtered = (!kept.is_empty()).then(|| kept.iter().sum::<f64>() / kept.len() as f64);
        let low = tail_means.iter().any(|&x| x < incoherent_threshold(n));
        ProbeStats {
            k,
            min_abs_r: tail_means.iter().cloned().fold(f64::INFINITY, f64::min),
            mean_abs_r: mean,
            std_abs_r: std,
            filtered_mean_abs_r: filtered,
            trial_count: tail_means.len(),
            coexistence: low && !kept.is_empty(),
            tail_means,
        }
    }
}

/// Runs `trials` simulations with seeds `base_seed + i` and summarises the
/// tail means of |r|. Trials run in parallel; results are gathered in seed
/// order.
pub fn ens_stability_probe(params: &SystemParams, cfg: &ProbeConfig) -> Result<ProbeStats> {
    if cfg.trials == 0 {
        return Err(invalid("trials must be ≥ 1"));
    }
    if !(cfg.t_end > 0.0) {
        return Err(invalid("tEnd must be > 0"));
    }
    if !(cfg.window_fraction > 0.0 && cfg.window_fraction <= 1.0) {
        return Err(invalid("windowFraction must lie in (0, 1]"));
    }
    let dt = cfg.dt.unwrap_or_else(|| default_dt(params));
    let tails: Vec<f64> = (0..cfg.trials)
        .into_par_iter()
        .map(|i| -> Result<f64> {
            let seed = cfg.base_seed.wrapping_add(i as u64);
            let mut st = ens_init(cfg.n, params, seed, cfg.mode, cfg.perturbation, cfg.clamp)?;
            let s = ens_integrate(&mut st, cfg.t_end, dt, cfg.record_interval)?;
            Ok(tail_stats(&s.times, &s.values, cfg.window_fraction).mean)
        })
        .collect::<Result<_>>()?;
    Ok(ProbeStats::from_tail_means(params.coupling, cfg.n, tails))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::distributions::{DelayKernel, FrequencyDist};

    fn params(k: f64, kernel: DelayKernel) -> SystemParams {
        SystemParams::new(k, FrequencyDist::new(3.0, 1.0).unwrap(), kernel).unwrap()
    }

    #[test]
    fn equally_spaced_phases_cancel() {
        let p = params(1.0, DelayKernel::point_mass(1.0).unwrap());
        let st = ens_init(128, &p, 3, InitMode::PerturbedIncoherent, 0.0, None).unwrap();
        assert!(st.order_parameter().norm() <= 1e-12);
    }

    #[test]
    fn init_is_deterministic() {
        let p = params(1.0, DelayKernel::gamma(2.0, 1.0, 0.5).unwrap());
        let a = ens_init(64, &p, 11, InitMode::Random, 0.0, None).unwrap();
        let b = ens_init(64, &p, 11, InitMode::Random, 0.0, None).unwrap();
        assert_eq!((a.theta, a.omega, a.tau), (b.theta, b.omega, b.tau));
    }

    #[test]
    fn uncoupled_rotators() {
        let p = params(0.0, DelayKernel::gamma(2.0, 1.0, 0.5).unwrap());
        let mut st = ens_init(16, &p, 5, InitMode::Random, 0.0, Some(50.0)).unwrap();
        let (th0, om) = (st.theta.clone(), st.omega.clone());
        ens_integrate(&mut st, 10.0, 0.01, 1.0).unwrap();
        for i in 0..16 {
            let expect = (th0[i] + om[i] * 10.0).rem_euclid(TAU);
            let d = (st.theta[i] - expect).rem_euclid(TAU);
            assert!(d.min(TAU - d) < 1e-8, "oscillator {i}");
        }
    }

    #[test]
    fn trajectory_continues_across_calls() {
        let p = params(2.0, DelayKernel::gamma(2.0, 1.0, 0.5).unwrap());
        let mut a = ens_init(32, &p, 1, InitMode::Random, 0.0, None).unwrap();
        let mut b = a.clone();
        ens_integrate(&mut a, 4.0, 0.01, 1.0).unwrap();
        ens_integrate(&mut b, 2.0, 0.01, 1.0).unwrap();
        ens_integrate(&mut b, 2.0, 0.01, 1.0).unwrap();
        assert_eq!(a.theta, b.theta);
        assert!(ens_integrate(&mut b, 1.0, 0.005, 1.0).is_err());
    }

    #[test]
    fn rejects_coarse_step() {
        let p = params(1.0, DelayKernel::point_mass(0.05).unwrap());
        let mut st = ens_init(8, &p, 1, InitMode::Random, 0.0, None).unwrap();
        assert!(ens_integrate(&mut st, 1.0, 0.01, 0.1).is_err());
    }

    #[test]
    fn single_trial_statistics() {
        let s = ProbeStats::from_tail_means(1.0, 128, vec![0.31]);
        assert_eq!((s.min_abs_r, s.mean_abs_r, s.std_abs_r), (0.31, 0.31, 0.0));
        assert_eq!(s.filtered_mean_abs_r, Some(0.31));
        assert!(!s.coexistence);
    }

    #[test]
    fn coexistence_flag() {
        let s = ProbeStats::from_tail_means(1.0, 10_000, vec![0.02, 0.5, 0.6, 0.1]);
        assert!(s.coexistence);
        // 0.1 is within the random-phase floor at N = 128 but not at N = 10⁴.
        assert!(ProbeStats::from_tail_means(1.0, 128, vec![0.1, 0.5]).coexistence);
        assert!(!ProbeStats::from_tail_means(1.0, 10_000, vec![0.1, 0.5]).coexistence);
        assert_eq!(incoherent_threshold(10_000), INCOHERENT);
        assert_eq!(s.filtered_mean_abs_r, Some(0.55));
        assert_eq!(s.min_abs_r, 0.02);
    }
}
