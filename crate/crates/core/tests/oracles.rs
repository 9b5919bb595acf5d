//! Independent oracles for the integrators and the stability analysis.

use kuragap::ensemble::{ens_init, ens_integrate, InitMode};
use kuragap::history::{History, Interpolation};
use kuragap::meanfield::{mf_integrate, rotating_waves_at, InitialHistory, MeanFieldConfig};
use kuragap::normal_form::{nf_amplitude, nf_coefficients};
use kuragap::spectral::{first_hopf, SearchOptions};
use kuragap::{DelayKernel, FrequencyDist, SystemParams};
use num_complex::Complex64;

fn case1() -> (FrequencyDist, DelayKernel) {
    (
        FrequencyDist::new(3.0, 1.0).unwrap(),
        DelayKernel::with_fixed_moments(3.0, 3.0, 0.5).unwrap(),
    )
}

/// y' = e·y(t-1) with history e^t has the exact solution e^t.
fn rk4_exponential(dt: f64, interp: Interpolation) -> f64 {
    let e = std::f64::consts::E;
    let mut h = History::from_fn(dt, 1.0, interp, |t| {
        let v = Complex64::new(t.exp(), 0.0);
        (v, v)
    });
    let s0 = h.stencil(1.0, 0.0);
    let sh = h.stencil(1.0, 0.5);
    let s1 = h.stencil(1.0, 1.0);
    let zero = Complex64::new(0.0, 0.0);
    let mut y = Complex64::new(1.0, 0.0);
    let t_end = 3.0;
    let steps = (t_end / dt).round() as usize;
    for _ in 0..steps {
        let k1 = e * h.eval(&s0, zero);
        h.set_newest_slope(k1);
        let k2 = e * h.eval(&sh, zero);
        let k4 = e * h.eval(&s1, zero);
        y += dt / 6.0 * (k1 + 4.0 * k2 + k4);
        h.push(y, k4);
    }
    (y.re - t_end.exp()).abs() / t_end.exp()
}

#[test]
fn hermite_history_keeps_fourth_order_linear_does_not() {
    let herm = [0.1, 0.05].map(|dt| rk4_exponential(dt, Interpolation::CubicHermite));
    let lin = [0.1, 0.05].map(|dt| rk4_exponential(dt, Interpolation::Linear));
    let order = |e: [f64; 2]| (e[0] / e[1]).log2();
    assert!(order(herm) > 3.5, "Hermite order {} ({herm:?})", order(herm));
    assert!(order(lin) < 2.5, "linear order {} ({lin:?})", order(lin));
    assert!(herm[1] < 1e-6, "{herm:?}");
}

#[test]
fn meanfield_matches_rotating_wave_branch() {
    let (freq, kernel) = case1();
    let p = first_hopf(&freq, &kernel, &SearchOptions::default()).unwrap();
    let k = 1.05 * p.kbar;
    let exact = rotating_waves_at(&freq, &kernel, &p, k, 1e-4, 20_000).unwrap();
    assert_eq!(exact.len(), 1);
    let nf = nf_coefficients(&freq, &kernel, &p).unwrap();
    let start = nf_amplitude(&nf, k, p.kbar).unwrap();
    let mut cfg = MeanFieldConfig::new(SystemParams::new(k, freq, kernel).unwrap(), Complex64::new(start, 0.0));
    cfg.t_end = Some(400.0);
    let s = mf_integrate(&cfg).unwrap();
    assert!(s.tail.converged);
    assert!(
        (s.tail.mean - exact[0].amplitude).abs() < 1e-3,
        "{} vs {}",
        s.tail.mean,
        exact[0].amplitude
    );
    let w = s.tail_frequency(0.25).unwrap();
    assert!((w - exact[0].frequency).abs() < 1e-3);
    // |R| = |α| |H(iΩ)| on a rotating state.
    let h = kernel.laplace(Complex64::new(0.0, exact[0].frequency)).unwrap().norm();
    let r = s.delayed_tail_mean(0.25).unwrap();
    assert!((r - exact[0].amplitude * h).abs() < 2e-3);
}

#[test]
fn meanfield_below_and_above_onset() {
    let (freq, kernel) = case1();
    let p = first_hopf(&freq, &kernel, &SearchOptions::default()).unwrap();
    // Growth near onset is slow (rate ~0.014 at 1.05 k̄), hence the long horizon.
    let run = |f: f64| {
        let params = SystemParams::new(f * p.kbar, freq, kernel).unwrap();
        let mut cfg = MeanFieldConfig::new(params, Complex64::new(0.01, 0.0));
        cfg.t_end = Some(1000.0);
        mf_integrate(&cfg).unwrap()
    };
    let below = run(0.95);
    assert!(below.tail.mean < 1e-3);
    let above = run(1.05);
    assert!(above.tail.mean > 0.05 && above.tail.converged, "{:?}", above.tail);
    assert!(above.values.iter().all(|a| a.norm() <= 1.0 + 1e-6));
}

#[test]
fn rotating_initial_history_is_continued() {
    // Starting exactly on the rotating state keeps it there.
    let (freq, kernel) = case1();
    let p = first_hopf(&freq, &kernel, &SearchOptions::default()).unwrap();
    let k = 1.1 * p.kbar;
    let w = rotating_waves_at(&freq, &kernel, &p, k, 1e-4, 20_000).unwrap()[0];
    let mut cfg = MeanFieldConfig::new(SystemParams::new(k, freq, kernel).unwrap(), Complex64::new(0.0, 0.0));
    cfg.initial = InitialHistory::Rotating {
        value: Complex64::new(w.amplitude, 0.0),
        frequency: w.frequency,
    };
    cfg.t_end = Some(20.0);
    let s = mf_integrate(&cfg).unwrap();
    assert!(s.values.iter().all(|a| (a.norm() - w.amplitude).abs() < 1e-8));
}

/// Heun reference with step h = τ/m, constant pre-history, delays on grid points only.
fn two_oscillator_reference(theta0: [f64; 2], omega: f64, k: f64, tau: f64, t_end: f64) -> [f64; 2] {
    let m = 20_000usize;
    let h = tau / m as f64;
    let steps = (t_end / h).round() as usize;
    let mut traj: Vec<[f64; 2]> = vec![theta0; m + 1];
    let f = |now: [f64; 2], past: [f64; 2]| -> [f64; 2] {
        let c = |i: usize| omega + 0.5 * k * ((past[0] - now[i]).sin() + (past[1] - now[i]).sin());
        [c(0), c(1)]
    };
    for _ in 0..steps {
        let idx = traj.len() - 1;
        let y = traj[idx];
        let a = f(y, traj[idx - m]);
        let pred = [y[0] + h * a[0], y[1] + h * a[1]];
        let b = f(pred, traj[idx + 1 - m]);
        traj.push([y[0] + 0.5 * h * (a[0] + b[0]), y[1] + 0.5 * h * (a[1] + b[1])]);
    }
    *traj.last().unwrap()
}

#[test]
fn two_oscillators_match_reference_integrator() {
    // τ on both step grids so the derivative kinks at multiples of τ fall on step boundaries.
    let tau = 1.25;
    let freq = FrequencyDist::new(1.5, 0.0).unwrap();
    let params = SystemParams::new(0.3, freq, DelayKernel::point_mass(tau).unwrap()).unwrap();
    let mut st = ens_init(2, &params, 0, InitMode::Random, 0.0, None).unwrap();
    st.omega = vec![1.5, 1.5];
    st.theta = vec![0.3, 2.1];
    let reference = two_oscillator_reference([0.3, 2.1], 1.5, 0.3, tau, 6.0);
    ens_integrate(&mut st, 6.0, 0.01, 1.0).unwrap();
    let diff = |a: f64, b: f64| {
        let d = (a - b).rem_euclid(std::f64::consts::TAU);
        d.min(std::f64::consts::TAU - d)
    };
    assert!(diff(st.theta[0], reference[0]) < 1e-5);
    assert!(diff(st.theta[1], reference[1]) < 1e-5);
    let gap = |a: f64, b: f64| diff(a - b, 0.0);
    assert!((gap(st.theta[0], st.theta[1]) - gap(reference[0], reference[1])).abs() < 1e-5);
}

#[test]
fn zero_delay_ensemble_recovers_classical_amplitude() {
    let params = SystemParams::new(
        4.0,
        FrequencyDist::new(3.0, 1.0).unwrap(),
        DelayKernel::point_mass(0.0).unwrap(),
    )
    .unwrap();
    let mut st = ens_init(512, &params, 2, InitMode::Random, 0.0, None).unwrap();
    let s = ens_integrate(&mut st, 60.0, 0.01, 0.1).unwrap();
    assert!((s.tail.mean - 0.5f64.sqrt()).abs() < 0.1, "{}", s.tail.mean);
}

#[test]
fn random_phases_have_expected_incoherence() {
    let params = SystemParams::new(
        1.0,
        FrequencyDist::new(3.0, 1.0).unwrap(),
        DelayKernel::point_mass(1.0).unwrap(),
    )
    .unwrap();
    let n = 128;
    let seeds = 2000;
    let r: Vec<f64> = (0..seeds)
        .map(|s| {
            ens_init(n, &params, s, InitMode::Random, 0.0, None)
                .unwrap()
                .order_parameter()
                .norm()
        })
        .collect();
    let mean = r.iter().sum::<f64>() / seeds as f64;
    let var = r.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (seeds - 1) as f64;
    let se = (var / seeds as f64).sqrt();
    let expect = (std::f64::consts::PI / (4.0 * n as f64)).sqrt();
    assert!((mean - expect).abs() < 3.0 * se, "{mean} vs {expect} ± {se}");
}

#[test]
fn global_phase_shift_leaves_modulus_unchanged() {
    let (freq, kernel) = case1();
    let params = SystemParams::new(3.0, freq, kernel).unwrap();
    let mut a = ens_init(64, &params, 9, InitMode::Random, 0.0, None).unwrap();
    let mut b = a.clone();
    b.rotate(1.234);
    let sa = ens_integrate(&mut a, 20.0, 0.01, 0.5).unwrap();
    let sb = ens_integrate(&mut b, 20.0, 0.01, 0.5).unwrap();
    for (x, y) in sa.values.iter().zip(&sb.values) {
        assert!((x.norm() - y.norm()).abs() < 1e-10);
        assert!(x.norm() <= 1.0 + 1e-12);
    }
}
