//! Reduced mean-field delay equation on the Ott–Antonsen manifold:
//!
//! ```text
//! α' = -(iω0 + Δ) α + (k/2) R - (k/2) conj(R) α²,   R(t) = ∫ α(t - τ) h(τ - τ0) dτ
//! ```
//!
//! The delay integral is replaced by a quadrature rule, turning the system
//! into a multi-delay equation integrated with classical RK4.

use num_complex::Complex64;
use rayon::join;
use serde::{Deserialize, Serialize};

use crate::distributions::{DelayKernel, FrequencyDist, QuadratureOptions};
use crate::error::{invalid, Error, Result};
use crate::history::{History, Interpolation, Stencil};
use crate::series::{tail_stats, OrderParamSeries, DEFAULT_WINDOW};
use crate::spectral::{HopfPoint, SystemParams};

const ESCAPE: f64 = 1e-3;

/// Initial function on `t ≤ 0`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "camelCase",
    rename_all_fields = "camelCase",
    deny_unknown_fields
)]
pub enum InitialHistory {
    Constant {
        value: Complex64,
    },
    /// `value · e^{iΩt}`; used to continue a rotating state between runs.
    Rotating {
        value: Complex64,
        frequency: f64,
    },
}

impl InitialHistory {
    pub fn constant(value: Complex64) -> Self {
        InitialHistory::Constant { value }
    }

    pub fn value(&self) -> Complex64 {
        match *self {
            InitialHistory::Constant { value } | InitialHistory::Rotating { value, .. } => value,
        }
    }

    fn at(&self, t: f64) -> (Complex64, Complex64) {
        match *self {
            InitialHistory::Constant { value } => (value, Complex64::new(0.0, 0.0)),
            InitialHistory::Rotating { value, frequency } => {
                let v = value * Complex64::from_polar(1.0, frequency * t);
                (v, Complex64::new(0.0, frequency) * v)
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct MeanFieldConfig {
    pub params: SystemParams,
    /// `None` selects [`MeanFieldConfig::default_dt`].
    pub dt: Option<f64>,
    /// `None` selects `400 / Δ`.
    pub t_end: Option<f64>,
    #[serde(default)]
    pub quadrature: QuadratureOptions,
    pub initial: InitialHistory,
    /// Spacing of recorded samples (rounded to whole steps).
    #[serde(default = "default_record_interval")]
    pub record_interval: f64,
    #[serde(default)]
    pub interpolation: Interpolation,
    #[serde(default = "default_window")]
    pub window_fraction: f64,
}

fn default_record_interval() -> f64 {
    0.1
}

fn default_window() -> f64 {
    DEFAULT_WINDOW
}

impl MeanFieldConfig {
    pub fn new(params: SystemParams, initial: Complex64) -> Self {
        MeanFieldConfig {
            params,
            dt: None,
            t_end: None,
            quadrature: QuadratureOptions::default(),
            initial: InitialHistory::constant(initial),
            record_interval: default_record_interval(),
            interpolation: Interpolation::CubicHermite,
            window_fraction: DEFAULT_WINDOW,
        }
    }

    /// `min(0.005, τ0/20, 0.1/(|ω0| + Δ + k))`, the τ0 term only for τ0 > 0.
    pub fn default_dt(params: &SystemParams) -> f64 {
        let mut dt = 0.005f64.min(0.1 / (params.freq.center.abs() + params.freq.half_width + params.coupling));
        let gap = params.kernel.gap();
        if gap > 0.0 {
            dt = dt.min(gap / 20.0);
        }
        dt
    }

    pub fn effective_dt(&self) -> f64 {
        self.dt.unwrap_or_else(|| Self::default_dt(&self.params))
    }

    pub fn effective_t_end(&self) -> Result<f64> {
        match self.t_end {
            Some(t) => Ok(t),
            None if self.params.freq.half_width > 0.0 => Ok(400.0 / self.params.freq.half_width),
            None => Err(invalid("tEnd must be given when halfWidth is 0")),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.params.validate()?;
        let dt = self.effective_dt();
        let mut limit = 0.01f64;
        let gap = self.params.kernel.gap();
        if gap > 0.0 {
            limit = limit.min(gap / 10.0);
        }
        if !(dt > 0.0 && dt <= limit * (1.0 + 1e-12)) {
            return Err(invalid(format!("dt must lie in (0, {limit}]")));
        }
        let t_end = self.effective_t_end()?;
        if !(t_end > 0.0 && t_end.is_finite()) {
            return Err(invalid("tEnd must be > 0"));
        }
        if !(self.initial.value().norm() <= 1.0) {
            return Err(invalid("initial |α| must be ≤ 1"));
        }
        if !(self.record_interval > 0.0) {
            return Err(invalid("recordInterval must be > 0"));
        }
        if !(self.window_fraction > 0.0 && self.window_fraction <= 1.0) {
            return Err(invalid("windowFraction must lie in (0, 1]"));
        }
        Ok(())
    }
}

/// Weighted stencils for one stage offset, with zero-delay mass split off.
struct StageSum {
    lags: Vec<usize>,
    coefs: Vec<[f64; 4]>,
    current_weight: f64,
}

impl StageSum {
    fn new(history: &History, nodes: &[f64], weights: &[f64], offset: f64) -> Self {
        let mut lags = Vec::with_capacity(nodes.len());
        let mut coefs = Vec::with_capacity(nodes.len());
        let mut current_weight = 0.0;
        for (&tau, &w) in nodes.iter().zip(weights) {
            match history.stencil(tau, offset).scaled(w) {
                Stencil::Current => current_weight += w,
                Stencil::Past { lag, coef } => {
                    lags.push(lag);
                    coefs.push(coef);
                }
            }
        }
        StageSum {
            lags,
            coefs,
            current_weight,
        }
    }

    #[inline]
    fn past(&self, history: &History) -> Complex64 {
        self.lags
            .iter()
            .zip(&self.coefs)
            .map(|(&lag, coef)| history.eval_past(lag, coef))
            .sum()
    }
}

/// Integrates the reduced equation with constant or rotating initial history.
pub fn mf_integrate(config: &MeanFieldConfig) -> Result<OrderParamSeries> {
    config.validate()?;
    let p = &config.params;
    let dt = config.effective_dt();
    let t_end = config.effective_t_end()?;
    let rule = p.kernel.quadrature_with(&config.quadrature)?;
    let mut history = History::from_fn(dt, rule.max_node(), config.interpolation, |t| config.initial.at(t));
    let stage = |c| StageSum::new(&history, rule.nodes(), rule.weights(), c);
    let (s0, s_half, s1) = (stage(0.0), stage(0.5), stage(1.0));

    let decay = Complex64::new(p.freq.half_width, p.freq.center);
    let half_k = 0.5 * p.coupling;
    let rhs = |a: Complex64, r: Complex64| -decay * a + half_k * (r - r.conj() * a * a);

    let steps = (t_end / dt).round() as usize;
    let every = ((config.record_interval / dt).round() as usize).max(1);
    let mut times = Vec::with_capacity(steps / every + 2);
    let mut values = Vec::with_capacity(steps / every + 2);
    let mut delayed = Vec::with_capacity(steps / every + 2);

    // With every delay above two steps, the end-of-step lookup of one step is
    // the start-of-step lookup of the next.
    let reuse = rule.nodes()[0] >= 2.0 * dt;
    let mut carried: Option<Complex64> = None;

    let mut y = history.newest();
    for n in 0..steps {
        let r0 = match carried.take() {
            Some(r) => r,
            None => s0.past(&history) + s0.current_weight * y,
        };
        let k1 = rhs(y, r0);
        history.set_newest_slope(k1);
        if n % every == 0 {
            times.push(n as f64 * dt);
            values.push(y);
            delayed.push(r0);
        }
        let rh = s_half.past(&history);
        let y2 = y + 0.5 * dt * k1;
        let k2 = rhs(y2, rh + s_half.current_weight * y2);
        let y3 = y + 0.5 * dt * k2;
        let k3 = rhs(y3, rh + s_half.current_weight * y3);
        let y4 = y + dt * k3;
        let past1 = s1.past(&history);
        let k4 = rhs(y4, past1 + s1.current_weight * y4);
        y += dt / 6.0 * (k1 + 2.0 * k2 + 2.0 * k3 + k4);
        if !(y.norm() <= 1.0 + ESCAPE) {
            return Err(Error::ManifoldEscape {
                time: (n + 1) as f64 * dt,
                modulus: y.norm(),
            });
        }
        history.push(y, k4);
        if reuse {
            carried = Some(past1);
        }
    }
    let r_end = s0.past(&history) + s0.current_weight * y;
    times.push(steps as f64 * dt);
    values.push(y);
    delayed.push(r_end);

    let mut series = OrderParamSeries::new(times, values, Some(delayed));
    series.tail = tail_stats(&series.times, &series.values, config.window_fraction);
    Ok(series)
}

/// Rotating state `α = ρ e^{iΩt}` of the mean-field equation.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct RotatingWave {
    pub coupling: f64,
    pub amplitude: f64,
    pub frequency: f64,
}

/// The rotating state with frequency Ω, if one exists with k > 0 and ρ ≤ 1.
///
/// Substituting `α = ρ e^{iΩt}` gives `R = α H(iΩ)` and
/// `Δ = (k/2)(1 - ρ²) Re H`, `Ω + ω0 = (k/2)(1 + ρ²) Im H`, which are solved
/// for k and ρ².
pub fn rotating_wave(freq: &FrequencyDist, kernel: &DelayKernel, omega: f64) -> Result<Option<RotatingWave>> {
    let h = kernel.laplace(Complex64::new(0.0, omega))?;
    if h.re == 0.0 || h.im == 0.0 {
        return Ok(None);
    }
    let lo = freq.half_width / h.re;
    let hi = (omega + freq.center) / h.im;
    let k = lo + hi;
    let rho2 = (hi - lo) / k;
    if !(k > 0.0 && (0.0..=1.0).contains(&rho2)) {
        return Ok(None);
    }
    Ok(Some(RotatingWave {
        coupling: k,
        amplitude: rho2.sqrt(),
        frequency: omega,
    }))
}

/// Samples the rotating branch born at a Hopf point, following Ω away from β
/// in the direction where the amplitude grows, until the branch ends or
/// `samples` points are collected.
pub fn rotating_wave_branch(
    freq: &FrequencyDist,
    kernel: &DelayKernel,
    start: &HopfPoint,
    step: f64,
    samples: usize,
) -> Result<Vec<RotatingWave>> {
    let probe = 1e-6 * step.abs().max(1e-9);
    let ahead = rotating_wave(freq, kernel, start.beta + probe)?;
    let sign = if ahead.is_some() { 1.0 } else { -1.0 };
    let mut out = vec![RotatingWave {
        coupling: start.kbar,
        amplitude: 0.0,
        frequency: start.beta,
    }];
    for i in 1..=samples {
        match rotating_wave(freq, kernel, start.beta + sign * step.abs() * i as f64)? {
            Some(w) => out.push(w),
            None => break,
        }
    }
    Ok(out)
}

/// All rotating states on the branch from `start` with coupling `k`, in
/// order of increasing amplitude.
///
/// The branch is walked in frequency steps of `step` for at most `samples`
/// steps; each bracketed crossing is refined by bisection in Ω.
pub fn rotating_waves_at(
    freq: &FrequencyDist,
    kernel: &DelayKernel,
    start: &HopfPoint,
    k: f64,
    step: f64,
    samples: usize,
) -> Result<Vec<RotatingWave>> {
    let branch = rotating_wave_branch(freq, kernel, start, step, samples)?;
    let mut out = Vec::new();
    for pair in branch.windows(2) {
        let (a, b) = (pair[0], pair[1]);
        if (a.coupling - k) * (b.coupling - k) > 0.0 || a.coupling == b.coupling {
            continue;
        }
        let (mut lo, mut hi) = (a.frequency, b.frequency);
        let below = a.coupling < k;
        let mut best = if (a.coupling - k).abs() < (b.coupling - k).abs() {
            a
        } else {
            b
        };
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if mid == lo || mid == hi {
                break;
            }
            let Some(w) = rotating_wave(freq, kernel, mid)? else {
                break;
            };
            if (w.coupling - k).abs() < (best.coupling - k).abs() {
                best = w;
            }
            if (w.coupling < k) == below {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        out.push(best);
    }
    Ok(out)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum SweepDirection {
    Up,
    Down,
    Both,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct SweepOptions {
    /// Strictly increasing coupling grid.
    pub ks: Vec<f64>,
    pub direction: SweepDirection,
    /// Continued states are rescaled to at least this modulus, so a branch
    /// that decayed to zero can still be left when it loses stability.
    #[serde(default = "default_floor")]
    pub floor: f64,
    /// Modulus of the constant history that starts the down sweep.
    #[serde(default = "default_down_start")]
    pub down_start: f64,
    /// Amplitude gap that marks a coupling as bistable.
    #[serde(default = "default_gap_threshold")]
    pub gap_threshold: f64,
}

fn default_floor() -> f64 {
    0.01
}

fn default_down_start() -> f64 {
    0.9
}

fn default_gap_threshold() -> f64 {
    0.05
}

impl SweepOptions {
    pub fn new(ks: Vec<f64>, direction: SweepDirection) -> Self {
        SweepOptions {
            ks,
            direction,
            floor: default_floor(),
            down_start: default_down_start(),
            gap_threshold: default_gap_threshold(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepCell {
    pub amplitude: Option<f64>,
    pub delayed_amplitude: Option<f64>,
    pub converged: bool,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepRow {
    pub k: f64,
    pub up: Option<SweepCell>,
    pub down: Option<SweepCell>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct SweepTable {
    pub rows: Vec<SweepRow>,
    /// Couplings whose up and down amplitudes differ by more than the threshold.
    pub bistable: Vec<f64>,
}

fn sweep_one(template: &MeanFieldConfig, ks: &[f64], start: InitialHistory, floor: f64) -> Vec<SweepCell> {
    let mut initial = start;
    ks.iter()
        .map(|&k| {
            let mut cfg = *template;
            cfg.params = template.params.with_coupling(k);
            cfg.initial = initial;
            match mf_integrate(&cfg) {
                Ok(series) => {
                    let last = series.last().unwrap_or(start.value());
                    let scale = if last.norm() < floor {
                        if last.norm() > 0.0 {
                            floor / last.norm()
                        } else {
                            0.0
                        }
                    } else {
                        1.0
                    };
                    let value = if scale == 0.0 {
                        Complex64::new(floor, 0.0)
                    } else {
                        last * scale
                    };
                    initial = match series.tail_frequency(cfg.window_fraction) {
                        Some(frequency) if last.norm() >= floor => InitialHistory::Rotating { value, frequency },
                        _ => InitialHistory::constant(value),
                    };
                    SweepCell {
                        amplitude: Some(series.tail.mean),
                        delayed_amplitude: series.delayed_tail_mean(cfg.window_fraction),
                        converged: series.tail.converged,
                        error: None,
                    }
                }
                Err(e) => {
                    initial = InitialHistory::constant(Complex64::new(floor, 0.0));
                    SweepCell {
                        amplitude: None,
                        delayed_amplitude: None,
                        converged: false,
                        error: Some(e.to_string()),
                    }
                }
            }
        })
        .collect()
}

/// Continuation sweep in k; each run starts from the final state of the
/// previous one. Up and down sweeps run concurrently.
pub fn mf_hysteresis_sweep(template: &MeanFieldConfig, opts: &SweepOptions) -> Result<SweepTable> {
    if opts.ks.is_empty() {
        return Err(invalid("sweep needs at least one coupling"));
    }
    if !opts.ks.windows(2).all(|w| w[0] < w[1]) {
        return Err(invalid("sweep couplings must be strictly increasing"));
    }
    if !(opts.floor >= 0.0 && opts.floor <= 1.0 && opts.down_start > 0.0 && opts.down_start <= 1.0) {
        return Err(invalid("floor and downStart must lie in [0, 1]"));
    }
    let mut check = *template;
    for &k in &opts.ks {
        check.params = template.params.with_coupling(k);
        check.validate()?;
    }

    let want_up = opts.direction != SweepDirection::Down;
    let want_down = opts.direction != SweepDirection::Up;
    let (up, down) = join(
        || want_up.then(|| sweep_one(template, &opts.ks, template.initial, opts.floor)),
        || {
            want_down.then(|| {
                let rev: Vec<f64> = opts.ks.iter().rev().copied().collect();
                let start = InitialHistory::constant(Complex64::new(opts.down_start, 0.0));
                let mut cells = sweep_one(template, &rev, start, opts.floor);
                cells.reverse();
                cells
            })
        },
    );

    let rows: Vec<SweepRow> = opts
        .ks
        .iter()
        .enumerate()
        .map(|(i, &k)| SweepRow {
            k,
            up: up.as_ref().map(|c| c[i].clone()),
            down: down.as_ref().map(|c| c[i].clone()),
        })
        .collect();
    let bistable = rows
        .iter()
        .filter_map(|r| {
            let u = r.up.as_ref()?.amplitude?;
            let d = r.down.as_ref()?.amplitude?;
            ((u - d).abs() > opts.gap_threshold).then_some(r.k)
        })
        .collect();
    Ok(SweepTable { rows, bistable })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{first_hopf, SearchOptions};

    fn zero_delay(k: f64) -> SystemParams {
        SystemParams::new(
            k,
            FrequencyDist::new(3.0, 1.0).unwrap(),
            DelayKernel::point_mass(0.0).unwrap(),
        )
        .unwrap()
    }

    #[test]
    fn uncoupled_decay() {
        let mut cfg = MeanFieldConfig::new(zero_delay(0.0), Complex64::new(0.5, 0.0));
        cfg.t_end = Some(5.0);
        let s = mf_integrate(&cfg).unwrap();
        let expect = 0.5 * (-5.0f64).exp();
        assert!((s.last().unwrap().norm() - expect).abs() < 0.01 * expect);
    }

    #[test]
    fn zero_delay_steady_state_closed_form() {
        // Without delay |α|² = 1 - 2Δ/k.
        let mut cfg = MeanFieldConfig::new(zero_delay(4.0), Complex64::new(0.1, 0.0));
        cfg.t_end = Some(60.0);
        let s = mf_integrate(&cfg).unwrap();
        assert!((s.tail.mean - 0.5f64.sqrt()).abs() < 1e-9 && s.tail.converged);
    }

    #[test]
    fn rejects_invalid_configs() {
        let gap = SystemParams::new(
            1.0,
            FrequencyDist::new(3.0, 1.0).unwrap(),
            DelayKernel::point_mass(0.05).unwrap(),
        )
        .unwrap();
        let mut cfg = MeanFieldConfig::new(gap, Complex64::new(0.1, 0.0));
        cfg.dt = Some(0.01);
        assert!(mf_integrate(&cfg).is_err());
        let cfg = MeanFieldConfig::new(gap, Complex64::new(1.5, 0.0));
        assert!(mf_integrate(&cfg).is_err());
    }

    #[test]
    fn rotating_wave_starts_at_hopf_point() {
        let freq = FrequencyDist::new(3.0, 1.0).unwrap();
        let kernel = DelayKernel::with_fixed_moments(3.0, 3.0, 0.5).unwrap();
        let p = first_hopf(&freq, &kernel, &SearchOptions::default()).unwrap();
        let w = rotating_wave(&freq, &kernel, p.beta + 1e-9).unwrap();
        let w = w.or(rotating_wave(&freq, &kernel, p.beta - 1e-9).unwrap()).unwrap();
        assert!((w.coupling - p.kbar).abs() < 1e-6 && w.amplitude < 1e-3);
        let branch = rotating_wave_branch(&freq, &kernel, &p, 1e-3, 50).unwrap();
        assert!(branch.len() > 10);
        assert!(branch.windows(2).all(|w| w[1].amplitude > w[0].amplitude));
    }

    #[test]
    fn zero_delay_rotating_wave() {
        let freq = FrequencyDist::new(3.0, 1.0).unwrap();
        let kernel = DelayKernel::point_mass(0.0).unwrap();
        // H ≡ 1 so Im H = 0: the branch is vertical in Ω and not parametrised by it.
        assert_eq!(rotating_wave(&freq, &kernel, -3.0).unwrap(), None);
    }

    #[test]
    fn sweep_rejects_unsorted_grid() {
        let cfg = MeanFieldConfig::new(zero_delay(1.0), Complex64::new(0.01, 0.0));
        let opts = SweepOptions::new(vec![1.0, 0.5], SweepDirection::Both);
        assert!(mf_hysteresis_sweep(&cfg, &opts).is_err());
    }

    #[test]
    fn sweep_below_onset_stays_incoherent() {
        let mut cfg = MeanFieldConfig::new(zero_delay(1.0), Complex64::new(0.01, 0.0));
        cfg.t_end = Some(80.0);
        let mut opts = SweepOptions::new(vec![0.5, 1.0, 1.5], SweepDirection::Both);
        opts.floor = 0.0;
        let table = mf_hysteresis_sweep(&cfg, &opts).unwrap();
        assert!(table.bistable.is_empty());
        for r in &table.rows {
            assert!(r.up.as_ref().unwrap().amplitude.unwrap() < 1e-6);
            assert!(r.down.as_ref().unwrap().amplitude.unwrap() < 1e-6);
        }
    }
}
