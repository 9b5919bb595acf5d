//! The acceptance suite: eleven pass/fail checks with fixed tolerances.

use std::time::Instant;

use anyhow::{ensure, Result};
use num_complex::Complex64;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde_json::json;

use kuragap::ensemble::{ens_stability_probe, InitMode, ProbeConfig, COHERENCE_THRESHOLD};
use kuragap::meanfield::{
    mf_hysteresis_sweep, mf_integrate, rotating_waves_at, InitialHistory, MeanFieldConfig, SweepDirection, SweepOptions,
};
use kuragap::normal_form::{nf_amplitude, nf_coefficients, nf_transversality_check, Criticality};
use kuragap::spectral::{
    char_residual, default_bound, first_hopf, hopf_curve_grid, hopf_points, HopfPoint, SearchOptions,
};
use kuragap::{DelayKernel, FrequencyDist, QuadratureOptions, SystemParams};

use crate::cases::{case1, case2, freq, instantaneous};
use crate::config::{CommandName, EnsembleProbeParams, Job, RegionMapParams, RunConfig, VerifyParams};
use crate::output::{render_csv, Report};

#[derive(Debug, Clone, PartialEq)]
pub struct Outcome {
    pub id: u32,
    pub name: &'static str,
    pub passed: bool,
    pub detail: String,
    pub seconds: f64,
}

impl Outcome {
    pub fn line(&self) -> String {
        format!(
            "[{}] {:>2}. {} ({:.1} s): {}",
            if self.passed { "PASS" } else { "FAIL" },
            self.id,
            self.name,
            self.seconds,
            self.detail
        )
    }
}

#[derive(Debug, Clone, Copy)]
pub struct Settings {
    /// Run only the reduced finite-N variant.
    pub quick: bool,
    pub seed: u64,
}

type Check = fn(&Settings) -> Result<(bool, String)>;

pub const CRITERIA: [(u32, &str, Check); 11] = [
    (1, "critical coupling, case 1", c1_case1),
    (2, "critical coupling, case 2", c2_case2),
    (3, "criticality classification", c3_classification),
    (4, "zero-delay closed form", c4_zero_delay),
    (5, "transversality over random draws", c5_transversality),
    (6, "coefficient vs root derivative", c6_coefficient),
    (7, "normal form vs mean field", c7_amplitude),
    (8, "hysteresis", c8_hysteresis),
    (9, "finite-N probe", c9_finite_n),
    (10, "numerics invariants", c10_numerics),
    (11, "region-map self-consistency", c11_region_map),
];

pub fn run_one(id: u32, s: &Settings) -> Outcome {
    let (_, name, check) = CRITERIA[(id - 1) as usize];
    let start = Instant::now();
    let (passed, detail) = match check(s) {
        Ok(r) => r,
        Err(e) => (false, format!("error: {e:#}")),
    };
    Outcome {
        id,
        name,
        passed,
        detail,
        seconds: start.elapsed().as_secs_f64(),
    }
}

/// Runs the selected criteria in order, handing each outcome to `each`.
pub fn run(p: &VerifyParams, mut each: impl FnMut(&Outcome)) -> Vec<Outcome> {
    let s = Settings {
        quick: p.quick,
        seed: p.seed,
    };
    CRITERIA
        .iter()
        .filter(|c| p.criteria.is_empty() || p.criteria.contains(&c.0))
        .map(|c| {
            let o = run_one(c.0, &s);
            each(&o);
            o
        })
        .collect()
}

pub fn report(outcomes: &[Outcome]) -> Report {
    let mut r = Report::new(crate::commands::columns(CommandName::Verify).to_vec());
    for o in outcomes {
        r.push(vec![
            (o.id as i64).into(),
            o.name.into(),
            o.passed.into(),
            o.detail.clone().into(),
            o.seconds.into(),
        ]);
    }
    let passed = outcomes.iter().filter(|o| o.passed).count();
    r.summary.insert("passed".into(), json!(passed));
    r.summary.insert("total".into(), json!(outcomes.len()));
    r.failed = passed < outcomes.len();
    r
}

fn standard() -> FrequencyDist {
    freq(3.0, 1.0)
}

fn hopf(kernel: &DelayKernel) -> Result<HopfPoint> {
    Ok(first_hopf(&standard(), kernel, &SearchOptions::default())?)
}

fn critical(kernel: DelayKernel, target: f64, tol: f64) -> Result<(bool, String)> {
    let start = Instant::now();
    let p = hopf(&kernel)?;
    let secs = start.elapsed().as_secs_f64();
    let ok = (p.kbar - target).abs() <= tol && secs < 1.0;
    Ok((
        ok,
        format!(
            "k̄ = {:.6} (target {target} ± {tol}, off by {:.4}), β = {:.6}, {:.3} s of 1 s",
            p.kbar,
            p.kbar - target,
            p.beta,
            secs
        ),
    ))
}

fn c1_case1(_: &Settings) -> Result<(bool, String)> {
    critical(case1(), 2.6992, 1e-3)
}

fn c2_case2(_: &Settings) -> Result<(bool, String)> {
    critical(case2(), 7.0388, 1e-2)
}

fn c3_classification(_: &Settings) -> Result<(bool, String)> {
    let b = |k: DelayKernel| -> Result<Complex64> { Ok(nf_coefficients(&standard(), &k, &hopf(&k)?)?.b) };
    let (b1, b2) = (b(case1())?, b(case2())?);
    let ok = Criticality::from_cubic(b1) == Criticality::Supercritical
        && Criticality::from_cubic(b2) == Criticality::Subcritical;
    Ok((
        ok,
        format!(
            "case 1 Re b = {:.6} (want < 0), case 2 Re b = {:.6} (want > 0)",
            b1.re, b2.re
        ),
    ))
}

fn c4_zero_delay(_: &Settings) -> Result<(bool, String)> {
    let mut worst: f64 = 0.0;
    let mut exact = true;
    // ω0 = 0 puts the root at β = 0, which the Hopf search filters out.
    let cases = [(3.0, 1.0), (0.25, 0.5), (-2.5, 2.0), (7.0, 0.01), (-40.0, 3.0)];
    for (w, d) in cases {
        let f = freq(w, d);
        let p = first_hopf(&f, &instantaneous(), &SearchOptions::default())?;
        worst = worst.max((p.kbar - 2.0 * d).abs()).max((p.beta + w).abs());
        let nf = nf_coefficients(&f, &instantaneous(), &p)?;
        exact &= nf.a == Complex64::new(0.5, 0.0) && nf.b == Complex64::new(-p.kbar / 2.0, 0.0);
    }
    Ok((
        worst <= 1e-12 && exact,
        format!(
            "{} (ω0, Δ) pairs: max |k̄ - 2Δ|, |β + ω0| = {worst:.2e} (≤ 1e-12); a = 1/2 and b = -k̄/2 exactly: {exact}",
            cases.len()
        ),
    ))
}

/// ω0 ∈ [-5, 5], Δ ∈ (0, 2], T ∈ (0, 4], n ∈ (0.05, 10], τ0 ∈ [0, 8].
pub fn random_draws(seed: u64, count: usize) -> Vec<(FrequencyDist, DelayKernel)> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    (0..count)
        .map(|_| {
            let w = rng.random_range(-5.0..=5.0);
            let d = 2.0 * (1.0 - rng.random::<f64>());
            let t = 4.0 * (1.0 - rng.random::<f64>());
            let n = 0.05 + 9.95 * (1.0 - rng.random::<f64>());
            let g = rng.random_range(0.0..=8.0);
            (
                freq(w, d),
                DelayKernel::gamma(n, t, g).expect("draw within kernel domain"),
            )
        })
        .collect()
}

fn c5_transversality(s: &Settings) -> Result<(bool, String)> {
    let draws = random_draws(s.seed, 1000);
    let results: Vec<Result<f64, String>> = draws
        .par_iter()
        .map(|(f, k)| {
            let p = first_hopf(f, k, &SearchOptions::default()).map_err(|e| e.to_string())?;
            nf_transversality_check(f, k, &p)
                .map(|t| t.re_a())
                .map_err(|e| e.to_string())
        })
        .collect();
    let violations = results.iter().filter(|r| matches!(r, Ok(a) if *a <= 0.0)).count();
    let errors: Vec<(usize, &String)> = results
        .iter()
        .enumerate()
        .filter_map(|(i, r)| r.as_ref().err().map(|e| (i, e)))
        .collect();
    let min = results
        .iter()
        .filter_map(|r| r.as_ref().ok())
        .cloned()
        .fold(f64::INFINITY, f64::min);
    let mut detail = format!(
        "{} draws (seed {}): {violations} with Re a ≤ 0, {} unevaluated, min Re a = {min:.3e}",
        draws.len(),
        s.seed,
        errors.len()
    );
    if let Some((i, e)) = errors.first() {
        detail.push_str(&format!("; first failure draw {i}: {e}"));
    }
    Ok((violations == 0 && errors.is_empty(), detail))
}

fn c6_coefficient(_: &Settings) -> Result<(bool, String)> {
    let mut parts = Vec::new();
    let mut worst: f64 = 0.0;
    for (label, k) in [
        ("case 1", case1()),
        ("case 2", case2()),
        ("zero delay", instantaneous()),
    ] {
        let p = hopf(&k)?;
        let t = nf_transversality_check(&standard(), &k, &p)?;
        worst = worst.max(t.relative_error);
        parts.push(format!("{label} {:.1e}", t.relative_error));
    }
    Ok((
        worst <= 1e-5,
        format!("relative |a - λ'(k̄)|/|a|: {} (≤ 1e-5)", parts.join(", ")),
    ))
}

/// Tail |α| at `k`, started on the normal-form prediction rotating at β.
fn settled_amplitude(kernel: DelayKernel, p: &HopfPoint, k: f64, t_end: f64, dt: f64) -> Result<(f64, bool)> {
    let f = standard();
    let nf = nf_coefficients(&f, &kernel, p)?;
    let start = nf_amplitude(&nf, k, p.kbar).unwrap_or(0.05);
    let mut cfg = MeanFieldConfig::new(SystemParams::new(k, f, kernel)?, Complex64::new(start, 0.0));
    cfg.initial = InitialHistory::Rotating {
        value: Complex64::new(start, 0.0),
        frequency: p.beta,
    };
    cfg.dt = Some(dt);
    cfg.t_end = Some(t_end);
    let s = mf_integrate(&cfg)?;
    Ok((s.tail.mean, s.tail.converged))
}

fn c7_amplitude(_: &Settings) -> Result<(bool, String)> {
    let start = Instant::now();
    let kernel = case1();
    let p = hopf(&kernel)?;
    let nf = nf_coefficients(&standard(), &kernel, &p)?;
    let eps = [0.005, 0.01, 0.02, 0.05];
    let runs: Vec<Result<(f64, f64, bool)>> = eps
        .par_iter()
        .map(|&e| {
            let k = (1.0 + e) * p.kbar;
            // Six e-folds of the amplitude relaxation, measured over the last quarter.
            let t_end = (6.0 / (2.0 * nf.a.re * e * p.kbar)).max(400.0);
            let (amp, ok) = settled_amplitude(kernel, &p, k, t_end, 0.01)?;
            Ok((e, amp, ok))
        })
        .collect();
    let runs: Vec<(f64, f64, bool)> = runs.into_iter().collect::<Result<_>>()?;
    let amp_at = |e: f64| runs.iter().find(|r| r.0 == e).unwrap().1;
    let predicted = nf_amplitude(&nf, 1.02 * p.kbar, p.kbar).unwrap_or(f64::NAN);
    let rel = (amp_at(0.02) - predicted).abs() / predicted;

    let xs: Vec<f64> = eps.iter().map(|e| e.ln()).collect();
    let ys: Vec<f64> = eps.iter().map(|&e| amp_at(e).ln()).collect();
    let slope = least_squares_slope(&xs, &ys);
    let settled = runs.iter().all(|r| r.2);
    let secs = start.elapsed().as_secs_f64();
    let ok = rel <= 0.10 && (slope - 0.5).abs() <= 0.05 && settled && secs < 120.0;
    Ok((
        ok,
        format!(
            "1.02 k̄: |α| = {:.5} vs normal form {:.5} ({:.1}% of 10%); exponent {:.4} over ε ∈ [0.005, 0.05] (0.5 ± 0.05); tails settled: {settled}; {secs:.0} s of 120 s",
            amp_at(0.02),
            predicted,
            100.0 * rel,
            slope
        ),
    ))
}

pub fn least_squares_slope(x: &[f64], y: &[f64]) -> f64 {
    let n = x.len() as f64;
    let (mx, my) = (x.iter().sum::<f64>() / n, y.iter().sum::<f64>() / n);
    let sxy: f64 = x.iter().zip(y).map(|(a, b)| (a - mx) * (b - my)).sum();
    let sxx: f64 = x.iter().map(|a| (a - mx) * (a - mx)).sum();
    sxy / sxx
}

/// Bistable couplings of an up/down sweep over `ratios · k̄`.
fn bistable_window(kernel: DelayKernel, ratios: &[f64], t_end: f64) -> Result<(f64, Vec<f64>)> {
    let p = hopf(&kernel)?;
    let ks: Vec<f64> = ratios.iter().map(|r| r * p.kbar).collect();
    let mut template = MeanFieldConfig::new(SystemParams::new(ks[0], standard(), kernel)?, Complex64::new(0.01, 0.0));
    template.dt = Some(0.01);
    template.t_end = Some(t_end);
    let table = mf_hysteresis_sweep(&template, &SweepOptions::new(ks, SweepDirection::Both))?;
    for row in &table.rows {
        for c in [&row.up, &row.down].into_iter().flatten() {
            ensure!(c.error.is_none(), "sweep run at k = {} failed: {:?}", row.k, c.error);
        }
    }
    Ok((p.kbar, table.bistable))
}

fn c8_hysteresis(_: &Settings) -> Result<(bool, String)> {
    let ratios2: Vec<f64> = (0..16).map(|i| 0.80 + 0.02 * i as f64).collect();
    let ratios1: Vec<f64> = (0..9).map(|i| 0.80 + 0.05 * i as f64).collect();
    let (k2, w2) = bistable_window(case2(), &ratios2, 400.0)?;
    let (k1, w1) = bistable_window(case1(), &ratios1, 1500.0)?;
    let lo2 = w2.iter().cloned().fold(f64::INFINITY, f64::min);
    let hi2 = w2.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    let ok = !w2.is_empty() && lo2 < k2 && w1.is_empty();
    let case2 = if w2.is_empty() {
        "case 2: no bistable coupling".to_string()
    } else {
        format!(
            "case 2: {} bistable couplings in [{lo2:.4}, {hi2:.4}] = [{:.3}, {:.3}] k̄",
            w2.len(),
            lo2 / k2,
            hi2 / k2
        )
    };
    Ok((
        ok,
        format!(
            "{case2} (lower edge must be < k̄ = {k2:.4}); case 1: {} bistable couplings (want 0, k̄ = {k1:.4})",
            w1.len()
        ),
    ))
}

struct ProbeRun {
    crossing: Option<f64>,
    min_abs_r: f64,
    means: Vec<(f64, f64)>,
    seconds: f64,
}

fn probe_run(n: usize, trials: usize, seed: u64) -> Result<ProbeRun> {
    let start = Instant::now();
    let kernel = case1();
    let kbar = 2.6992;
    let ratios = [0.5, 0.9, 0.95, 1.0, 1.05, 1.1];
    let random = ProbeConfig {
        n,
        trials,
        base_seed: seed,
        mode: InitMode::Random,
        ..ProbeConfig::default()
    };
    let perturbed = ProbeConfig {
        mode: InitMode::PerturbedIncoherent,
        ..random
    };
    let mut means = Vec::new();
    for r in ratios {
        let s = ens_stability_probe(&SystemParams::new(r * kbar, standard(), kernel)?, &random)?;
        means.push((r, s.mean_abs_r));
    }
    let low = ens_stability_probe(&SystemParams::new(0.5 * kbar, standard(), kernel)?, &perturbed)?;
    let crossing = means
        .windows(2)
        .find(|w| w[0].1 < COHERENCE_THRESHOLD && w[1].1 >= COHERENCE_THRESHOLD)
        .map(|w| {
            let (a, b) = (w[0], w[1]);
            a.0 + (COHERENCE_THRESHOLD - a.1) * (b.0 - a.0) / (b.1 - a.1)
        });
    Ok(ProbeRun {
        crossing,
        min_abs_r: low.min_abs_r,
        means,
        seconds: start.elapsed().as_secs_f64(),
    })
}

fn probe_ok(r: &ProbeRun, band: (f64, f64), limit: f64) -> bool {
    r.crossing.is_some_and(|c| c >= band.0 && c <= band.1) && r.min_abs_r < 0.1 && r.seconds <= limit
}

fn probe_text(label: &str, r: &ProbeRun, band: (f64, f64), limit: f64) -> String {
    let means: Vec<String> = r.means.iter().map(|(k, m)| format!("{k}:{m:.3}")).collect();
    format!(
        "{label}: mean|r| crosses 0.2 at {} k̄ (band [{}, {}]), minAbsR(0.5 k̄) = {:.4} (< 0.1), mean|r| by k/k̄ [{}], {:.0} s of {limit} s",
        r.crossing.map_or("no".to_string(), |c| format!("{c:.4}")),
        band.0,
        band.1,
        r.min_abs_r,
        means.join(" "),
        r.seconds
    )
}

fn c9_finite_n(s: &Settings) -> Result<(bool, String)> {
    // Near onset the finite-N fluctuations of |r| scale like N^(-1/4) and pull
    // the crossing below k̄; at N = 64 it sits near 0.8 k̄, so the smoke run
    // only checks that a crossing exists and is not late.
    let (smoke_band, full_band) = ((0.7, 1.05), (0.95, 1.05));
    let smoke = probe_run(64, 25, s.seed)?;
    let smoke_ok = probe_ok(&smoke, smoke_band, 120.0);
    let smoke_text = probe_text("N=64/25 trials", &smoke, smoke_band, 120.0);
    if s.quick {
        return Ok((smoke_ok, format!("{smoke_text}; full variant skipped")));
    }
    let full = probe_run(128, 100, s.seed)?;
    Ok((
        smoke_ok && probe_ok(&full, full_band, 900.0),
        format!(
            "{}; {smoke_text}",
            probe_text("N=128/100 trials", &full, full_band, 900.0)
        ),
    ))
}

fn c10_numerics(s: &Settings) -> Result<(bool, String)> {
    // Quadrature at M = 24 against the closed-form transform.
    let kernels = [
        case1(),
        case2(),
        DelayKernel::gamma(3.0, 3.0, 1.0)?,
        DelayKernel::gamma(0.5, 1.0, 0.0)?,
    ];
    let points = [
        Complex64::new(0.0, -2.6),
        Complex64::new(0.0, 1.0),
        Complex64::new(0.0, -7.5),
        Complex64::new(0.3, 4.0),
        Complex64::new(1.0, 0.0),
    ];
    let mut quad_err: f64 = 0.0;
    for k in &kernels {
        let rule = k.quadrature(24)?;
        for &z in &points {
            quad_err = quad_err.max((rule.laplace(z) - k.laplace(z)?).norm());
        }
    }

    // Step halving and rule doubling on a settled coherent state.
    let kernel = case1();
    let p = hopf(&kernel)?;
    let k = 1.1 * p.kbar;
    let wave = rotating_waves_at(&standard(), &kernel, &p, k, 1e-4, 20_000)?;
    let wave = *wave
        .first()
        .ok_or_else(|| anyhow::anyhow!("no rotating wave at 1.1 k̄"))?;
    let tail = |dt: f64, order: usize| -> Result<f64> {
        let mut cfg = MeanFieldConfig::new(SystemParams::new(k, standard(), kernel)?, Complex64::new(0.0, 0.0));
        cfg.initial = InitialHistory::Rotating {
            value: Complex64::new(0.8 * wave.amplitude, 0.0),
            frequency: wave.frequency,
        };
        cfg.dt = Some(dt);
        cfg.t_end = Some(400.0);
        cfg.quadrature = QuadratureOptions {
            order,
            ..QuadratureOptions::default()
        };
        Ok(mf_integrate(&cfg)?.tail.mean)
    };
    let runs: Vec<Result<f64>> = [(0.005, 24), (0.0025, 24), (0.005, 48)]
        .par_iter()
        .map(|&(dt, m)| tail(dt, m))
        .collect();
    let runs: Vec<f64> = runs.into_iter().collect::<Result<_>>()?;
    let (d_dt, d_m) = ((runs[0] - runs[1]).abs(), (runs[0] - runs[2]).abs());

    // Residuals of every located Hopf point.
    let mut residual: f64 = 0.0;
    let mut count = 0;
    for (f, k) in [
        (standard(), case1()),
        (standard(), case2()),
        (standard(), instantaneous()),
        (standard(), DelayKernel::gamma(3.0, 3.0, 2.0)?),
        (freq(3.0, 0.3), DelayKernel::gamma(3.0, 1.0, 4.0)?),
    ] {
        for q in hopf_points(&f, &k, &SearchOptions::default())? {
            let r = char_residual(&SystemParams::new(q.kbar, f, k)?, Complex64::new(0.0, q.beta))?.norm();
            residual = residual.max(r);
            count += 1;
        }
    }

    // Byte-identical reruns of a seeded command.
    let mut probe = EnsembleProbeParams {
        kernel: case1(),
        couplings: crate::config::CouplingGrid::List(vec![2.0, 3.2]),
        ..EnsembleProbeParams::default()
    };
    probe.probe = ProbeConfig {
        n: 32,
        trials: 4,
        t_end: 20.0,
        base_seed: s.seed,
        ..probe.probe
    };
    let cfg = RunConfig::new(Job::EnsembleProbe(probe));
    let a = render_csv(&cfg, &crate::commands::run(&cfg)?);
    let b = render_csv(&cfg, &crate::commands::run(&cfg)?);
    let identical = a == b;

    let ok = quad_err < 1e-8 && d_dt < 1e-4 && d_m < 1e-4 && residual < 1e-10 && identical;
    Ok((
        ok,
        format!(
            "M=24 Laplace error {quad_err:.1e} (< 1e-8); tail |α| change {d_dt:.1e} on dt halving, {d_m:.1e} on M doubling (< 1e-4); max residual of {count} Hopf points {residual:.1e} (< 1e-10); {} reruns identical: {identical}",
            CommandName::EnsembleProbe.as_str()
        ),
    ))
}

fn c11_region_map(s: &Settings) -> Result<(bool, String)> {
    let p = RegionMapParams::default();
    let grid = hopf_curve_grid(&p.frequency, &p.family, &p.plane, &p.search)?;
    let (xs, ys) = (p.plane.x.values(), p.plane.y.values());
    let mut rng = ChaCha8Rng::seed_from_u64(s.seed ^ 0x5eed);
    let mut worst: f64 = 0.0;
    let mut missing = 0;
    for _ in 0..20 {
        let (ix, iy) = (rng.random_range(0..xs.len()), rng.random_range(0..ys.len()));
        let kernel = p.family.kernel(&[(p.plane.x.axis, xs[ix]), (p.plane.y.axis, ys[iy])])?;
        let fine = SearchOptions {
            bound: Some(2.0 * default_bound(&p.frequency, &kernel)),
            grid_size: 20_000,
        };
        let reference = first_hopf(&p.frequency, &kernel, &fine)?.kbar;
        match grid.get(ix, iy) {
            Some(v) => worst = worst.max((v - reference).abs()),
            None => missing += 1,
        }
    }
    let cells = xs.len() * ys.len();
    Ok((
        grid.failures == 0 && missing == 0 && worst <= 1e-6,
        format!(
            "{}x{} grid: {} of {cells} cells failed; 20 random cells vs refined solves: max |Δk̄| = {worst:.1e} (≤ 1e-6)",
            xs.len(),
            ys.len(),
            grid.failures
        ),
    ))
}
