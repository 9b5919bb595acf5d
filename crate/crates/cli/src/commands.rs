//! One runner per subcommand; each turns a validated job into a [`Report`].

use anyhow::{Context, Result};
use rayon::prelude::*;
use serde_json::json;

use kuragap::ensemble::{default_dt as ensemble_dt, ens_stability_probe, incoherent_threshold};
use kuragap::meanfield::{mf_hysteresis_sweep, mf_integrate, MeanFieldConfig};
use kuragap::normal_form::{nf_coefficients, nf_transversality_check, DETUNING_CONVENTION};
use kuragap::spectral::{double_hopf_locate, first_hopf, hopf_curve_grid, hopf_points};
use kuragap::SystemParams;

use crate::config::{
    CommandName, DiagramParams, DoubleHopfParams, EnsembleProbeParams, HopfLocusParams, Job, NormalFormParams,
    RegionMapParams, RunConfig, SweepParams,
};
use crate::output::{Cell, Report};
use crate::verify;

pub fn run(cfg: &RunConfig) -> Result<Report> {
    let name = cfg.command().as_str();
    let report = match &cfg.job {
        Job::HopfLocus(p) => hopf_locus(p),
        Job::NormalForm(p) => normal_form(p),
        Job::RegionMap(p) => region_map(p),
        Job::Diagram(p) => diagram(p),
        Job::Meanfield(p) => meanfield(p),
        Job::Sweep(p) => sweep(p),
        Job::EnsembleProbe(p) => ensemble_probe(p),
        Job::DoubleHopf(p) => double_hopf(p),
        Job::Verify(p) => Ok(verify::report(&verify::run(p, |o| eprintln!("{}", o.line())))),
    };
    report.with_context(|| format!("{name} failed"))
}

/// Frozen column layout of each command's table.
pub fn columns(cmd: CommandName) -> &'static [&'static str] {
    match cmd {
        CommandName::HopfLocus => &["parameter", "branch", "kbar", "beta", "residual", "converged"],
        CommandName::NormalForm => &[
            "kbar",
            "beta",
            "residual",
            "branch",
            "aRe",
            "aIm",
            "bRe",
            "bIm",
            "classification",
            "rootDerivativeRe",
            "rootDerivativeIm",
            "transversalityRelativeError",
        ],
        CommandName::RegionMap => &["x", "y", "kbar"],
        CommandName::Diagram => &["parameter", "k", "crossedBranches", "incoherenceStable"],
        CommandName::Meanfield => &["t", "alphaRe", "alphaIm", "absAlpha", "absDelayed"],
        CommandName::Sweep => &[
            "k",
            "upAmplitude",
            "upDelayed",
            "upConverged",
            "downAmplitude",
            "downDelayed",
            "downConverged",
            "bistable",
        ],
        CommandName::EnsembleProbe => &[
            "k",
            "minAbsR",
            "meanAbsR",
            "stdAbsR",
            "filteredMeanAbsR",
            "trialCount",
            "coexistence",
        ],
        CommandName::DoubleHopf => &[
            "parameter",
            "kbar1",
            "beta1",
            "branch1",
            "residual1",
            "kbar2",
            "beta2",
            "branch2",
            "residual2",
        ],
        CommandName::Verify => &["id", "criterion", "passed", "detail", "seconds"],
    }
}

fn hopf_locus(p: &HopfLocusParams) -> Result<Report> {
    let values: Vec<Option<f64>> = match &p.scan {
        Some(s) => s.values().into_iter().map(Some).collect(),
        None => vec![None],
    };
    let results: Vec<_> = values
        .par_iter()
        .map(|v| {
            let overrides: Vec<_> = p.scan.iter().zip(v).map(|(s, &x)| (s.axis, x)).collect();
            let kernel = p.family.kernel(&overrides)?;
            hopf_points(&p.frequency, &kernel, &p.search)
        })
        .collect();

    let mut r = Report::new(columns(CommandName::HopfLocus).to_vec());
    for (v, res) in values.iter().zip(results) {
        match res {
            Ok(pts) => {
                for q in pts.iter().take(p.max_branches) {
                    r.push(vec![
                        (*v).into(),
                        q.branch.into(),
                        q.kbar.into(),
                        q.beta.into(),
                        q.residual.into(),
                        q.converged.into(),
                    ]);
                }
            }
            Err(e) => {
                r.warnings.push(match v {
                    Some(x) => format!("parameter {x}: {e}"),
                    None => e.to_string(),
                });
                r.push(vec![
                    (*v).into(),
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    Cell::Missing,
                    false.into(),
                ]);
            }
        }
    }
    r.summary
        .insert("scanAxis".into(), json!(p.scan.map(|s| s.axis.name())));
    Ok(r)
}

fn normal_form(p: &NormalFormParams) -> Result<Report> {
    let point = first_hopf(&p.frequency, &p.kernel, &p.search)?;
    let nf = nf_coefficients(&p.frequency, &p.kernel, &point)?;
    let mut r = Report::new(columns(CommandName::NormalForm).to_vec());
    let (dre, dim, rel) = match nf_transversality_check(&p.frequency, &p.kernel, &point) {
        Ok(t) => (
            t.root_derivative.re.into(),
            t.root_derivative.im.into(),
            t.relative_error.into(),
        ),
        Err(e) => {
            r.warnings.push(e.to_string());
            (Cell::Missing, Cell::Missing, Cell::Missing)
        }
    };
    r.push(vec![
        point.kbar.into(),
        point.beta.into(),
        point.residual.into(),
        point.branch.into(),
        nf.a.re.into(),
        nf.a.im.into(),
        nf.b.re.into(),
        nf.b.im.into(),
        nf.classification.name().into(),
        dre,
        dim,
        rel,
    ]);
    r.summary
        .insert("detuningConvention".into(), json!(DETUNING_CONVENTION));
    Ok(r)
}

fn region_map(p: &RegionMapParams) -> Result<Report> {
    let grid = hopf_curve_grid(&p.frequency, &p.family, &p.plane, &p.search)?;
    let (xs, ys) = (p.plane.x.values(), p.plane.y.values());
    let mut r = Report::new(columns(CommandName::RegionMap).to_vec());
    for (iy, &y) in ys.iter().enumerate() {
        for (ix, &x) in xs.iter().enumerate() {
            r.push(vec![x.into(), y.into(), grid.get(ix, iy).into()]);
        }
    }
    if grid.failures > 0 {
        r.warnings.push(format!(
            "{} of {} cells have no Hopf value",
            grid.failures,
            xs.len() * ys.len()
        ));
    }
    r.summary.insert("xAxis".into(), json!(p.plane.x.axis.name()));
    r.summary.insert("yAxis".into(), json!(p.plane.y.axis.name()));
    r.summary.insert("failures".into(), json!(grid.failures));
    Ok(r)
}

fn diagram(p: &DiagramParams) -> Result<Report> {
    let plane = p.plane();
    let grid = hopf_curve_grid(&p.frequency, &p.family, &plane, &p.search)?;
    let (xs, ks) = (plane.x.values(), plane.y.values());
    let mut r = Report::new(columns(CommandName::Diagram).to_vec());
    for (ik, &k) in ks.iter().enumerate() {
        for (ix, &x) in xs.iter().enumerate() {
            let count = grid.get(ix, ik);
            let stable = count.map_or(Cell::Missing, |c| Cell::Bool(c == 0.0));
            r.push(vec![
                x.into(),
                k.into(),
                count.map(|c| c as i64).map_or(Cell::Missing, Cell::Int),
                stable,
            ]);
        }
    }
    let failed = grid.curves.iter().filter(|c| c.is_none()).count();
    if failed > 0 {
        r.warnings.push(format!("{failed} parameter values have no Hopf list"));
    }
    r.summary.insert("parameterAxis".into(), json!(plane.x.axis.name()));
    Ok(r)
}

fn meanfield(c: &MeanFieldConfig) -> Result<Report> {
    let s = mf_integrate(c)?;
    let mut r = Report::new(columns(CommandName::Meanfield).to_vec());
    let delayed = s.delayed.as_deref().unwrap_or(&[]);
    for (i, (&t, a)) in s.times.iter().zip(&s.values).enumerate() {
        r.push(vec![
            t.into(),
            a.re.into(),
            a.im.into(),
            a.norm().into(),
            delayed.get(i).map(|z| z.norm()).into(),
        ]);
    }
    r.summary.insert("dt".into(), json!(c.effective_dt()));
    r.summary.insert("tEnd".into(), json!(c.effective_t_end()?));
    r.summary.insert("tail".into(), json!(s.tail));
    r.summary
        .insert("tailDelayedMean".into(), json!(s.delayed_tail_mean(c.window_fraction)));
    r.summary
        .insert("tailFrequency".into(), json!(s.tail_frequency(c.window_fraction)));
    if !s.tail.converged {
        r.warnings.push("tail amplitude has not settled".into());
    }
    Ok(r)
}

fn sweep(p: &SweepParams) -> Result<Report> {
    let t = mf_hysteresis_sweep(&p.template, &p.options())?;
    let mut r = Report::new(columns(CommandName::Sweep).to_vec());
    let cells = |c: &Option<kuragap::meanfield::SweepCell>| -> [Cell; 3] {
        match c {
            Some(c) => [c.amplitude.into(), c.delayed_amplitude.into(), c.converged.into()],
            None => [Cell::Missing, Cell::Missing, Cell::Missing],
        }
    };
    for row in &t.rows {
        for (dir, c) in [("up", &row.up), ("down", &row.down)] {
            if let Some(e) = c.as_ref().and_then(|c| c.error.as_ref()) {
                r.warnings.push(format!("{dir} sweep at k = {}: {e}", row.k));
            }
        }
        let [ua, ud, uc] = cells(&row.up);
        let [da, dd, dc] = cells(&row.down);
        r.push(vec![
            row.k.into(),
            ua,
            ud,
            uc,
            da,
            dd,
            dc,
            t.bistable.contains(&row.k).into(),
        ]);
    }
    let window = (!t.bistable.is_empty()).then(|| {
        [
            t.bistable.iter().cloned().fold(f64::INFINITY, f64::min),
            t.bistable.iter().cloned().fold(f64::NEG_INFINITY, f64::max),
        ]
    });
    r.summary.insert("bistableWindow".into(), json!(window));
    Ok(r)
}

fn ensemble_probe(p: &EnsembleProbeParams) -> Result<Report> {
    let mut r = Report::new(columns(CommandName::EnsembleProbe).to_vec());
    let mut coexist = Vec::new();
    for k in p.couplings.values() {
        let params = SystemParams::new(k, p.frequency, p.kernel)?;
        let s = ens_stability_probe(&params, &p.probe)?;
        if s.coexistence {
            coexist.push(k);
        }
        r.push(vec![
            k.into(),
            s.min_abs_r.into(),
            s.mean_abs_r.into(),
            s.std_abs_r.into(),
            s.filtered_mean_abs_r.into(),
            s.trial_count.into(),
            s.coexistence.into(),
        ]);
    }
    let base = SystemParams::new(0.0, p.frequency, p.kernel)?;
    r.summary
        .insert("dt".into(), json!(p.probe.dt.unwrap_or_else(|| ensemble_dt(&base))));
    r.summary.insert("clamp".into(), json!(p.probe.clamp));
    r.summary
        .insert("incoherentThreshold".into(), json!(incoherent_threshold(p.probe.n)));
    r.summary.insert("coexistence".into(), json!(coexist));
    Ok(r)
}

fn double_hopf(p: &DoubleHopfParams) -> Result<Report> {
    let hh = double_hopf_locate(&p.frequency, &p.scan, &p.search)?;
    let mut r = Report::new(columns(CommandName::DoubleHopf).to_vec());
    let (a, b) = (hh.first, hh.second);
    r.push(vec![
        hh.parameter.into(),
        a.kbar.into(),
        a.beta.into(),
        a.branch.into(),
        a.residual.into(),
        b.kbar.into(),
        b.beta.into(),
        b.branch.into(),
        b.residual.into(),
    ]);
    r.summary.insert("axis".into(), json!(p.scan.axis.name()));
    r.summary.insert("kernel".into(), json!(hh.kernel));
    Ok(r)
}
