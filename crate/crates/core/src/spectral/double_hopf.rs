//! Crossings of the two lowest Hopf branches along a scalar kernel parameter.

use serde::{Deserialize, Serialize};

use super::grid::{Axis, KernelFamily};
use super::{hopf_points, HopfPoint, SearchOptions};
use crate::distributions::{DelayKernel, FrequencyDist};
use crate::error::{invalid, Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct ScalarScan {
    pub family: KernelFamily,
    pub axis: Axis,
    pub from: f64,
    pub to: f64,
    /// Subintervals sampled when looking for a swap of two branches.
    #[serde(default = "default_samples")]
    pub samples: usize,
    /// Branch labels to follow; `None` takes the lowest crossing pair in the
    /// first subinterval (from `from`) where any two branches swap order.
    #[serde(default)]
    pub branches: Option<[i64; 2]>,
}

fn default_samples() -> usize {
    16
}

impl ScalarScan {
    pub fn new(family: KernelFamily, axis: Axis, from: f64, to: f64) -> Self {
        ScalarScan {
            family,
            axis,
            from,
            to,
            samples: default_samples(),
            branches: None,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct DoubleHopf {
    pub parameter: f64,
    pub kernel: DelayKernel,
    pub first: HopfPoint,
    pub second: HopfPoint,
}

fn kbar_of(pts: &[HopfPoint], label: i64) -> Option<f64> {
    pts.iter().find(|q| q.branch == label).map(|q| q.kbar)
}

/// Pairs of labels present in both lists whose order differs, lowest first.
fn swapped_pairs(a: &[HopfPoint], b: &[HopfPoint]) -> Vec<(i64, i64, f64)> {
    let mut out = Vec::new();
    for (i, p) in a.iter().enumerate() {
        for q in &a[i + 1..] {
            if let (Some(x), Some(y)) = (kbar_of(b, p.branch), kbar_of(b, q.branch)) {
                if (p.kbar - q.kbar).signum() != (x - y).signum() {
                    out.push((p.branch, q.branch, p.kbar.max(q.kbar).max(x).max(y)));
                }
            }
        }
    }
    out.sort_by(|u, v| u.2.total_cmp(&v.2));
    out
}

/// Bisects on the scan parameter for a point where two Hopf branches have
/// equal critical coupling.
///
/// Branches are followed by their phase label, which is continuous in the
/// kernel parameters, so a reordering of the list is seen as a sign change.
pub fn double_hopf_locate(freq: &FrequencyDist, scan: &ScalarScan, opts: &SearchOptions) -> Result<DoubleHopf> {
    if scan.axis == Axis::Coupling {
        return Err(invalid("the double-Hopf scan must vary a kernel parameter"));
    }
    if scan.samples == 0 {
        return Err(invalid("samples must be ≥ 1"));
    }
    if !(scan.from.is_finite() && scan.to.is_finite()) || scan.from == scan.to {
        return Err(invalid("the scan needs two distinct finite end points"));
    }
    let eval = |p: f64| -> Result<(DelayKernel, Vec<HopfPoint>)> {
        let kernel = scan.family.kernel(&[(scan.axis, p)])?;
        let pts = hopf_points(freq, &kernel, opts)?;
        Ok((kernel, pts))
    };

    let ps: Vec<f64> = (0..=scan.samples)
        .map(|i| scan.from + (scan.to - scan.from) * i as f64 / scan.samples as f64)
        .collect();
    let mut prev = eval(ps[0])?.1;
    let mut found = None;
    for w in ps.windows(2) {
        let next = eval(w[1])?.1;
        let pair = match scan.branches {
            Some([a, b]) => match (
                kbar_of(&prev, a),
                kbar_of(&prev, b),
                kbar_of(&next, a),
                kbar_of(&next, b),
            ) {
                (Some(x0), Some(y0), Some(x1), Some(y1)) if (x0 - y0).signum() != (x1 - y1).signum() => Some((a, b)),
                _ => None,
            },
            None => swapped_pairs(&prev, &next).first().map(|c| (c.0, c.1)),
        };
        if let Some(pair) = pair {
            found = Some((w[0], w[1], pair));
            break;
        }
        prev = next;
    }
    let Some((lo, hi, labels)) = found else {
        return Err(Error::NotFound(format!(
            "no two Hopf branches cross for {} in [{}, {}]",
            scan.axis.name(),
            scan.from,
            scan.to
        )));
    };

    let gap_at = |p: f64| -> Result<(f64, DelayKernel, HopfPoint, HopfPoint)> {
        let (kernel, pts) = eval(p)?;
        let find = |label: i64| {
            pts.iter().copied().find(|q| q.branch == label).ok_or_else(|| {
                Error::NotFound(format!(
                    "Hopf branch {label} left the search window at {} = {p}",
                    scan.axis.name()
                ))
            })
        };
        let (a, b) = (find(labels.0)?, find(labels.1)?);
        Ok((a.kbar - b.kbar, kernel, a, b))
    };

    let (mut lo, mut hi) = (lo, hi);
    let (d_lo, ..) = gap_at(lo)?;
    let mut best = gap_at(lo)?;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        let cur = gap_at(mid)?;
        if cur.0.abs() < best.0.abs() {
            best = cur;
        }
        if cur.0.signum() == d_lo.signum() {
            lo = mid;
        } else {
            hi = mid;
        }
        let width = (hi - lo).abs();
        if (best.0.abs() <= 1e-10 && width <= 1e-12 * (1.0 + lo.abs()))
            || width <= 4.0 * f64::EPSILON * (1.0 + lo.abs())
        {
            break;
        }
    }
    let (d, kernel, a, b) = best;
    if d.abs() > 1e-8 {
        return Err(Error::NoConvergence(format!(
            "Hopf values differ by {d:e} at the best double-Hopf estimate"
        )));
    }
    if (a.beta - b.beta).abs() <= 1e-4 {
        return Err(Error::NotFound("the crossing branches share a frequency".into()));
    }
    let parameter = match scan.axis {
        Axis::GammaMean => kernel.gamma_mean(),
        Axis::Gap => kernel.gap(),
        Axis::Shape => match kernel {
            DelayKernel::GammaWithGap { shape, .. } => shape,
            DelayKernel::PointMass { .. } => f64::NAN,
        },
        Axis::Coupling => unreachable!(),
    };
    let (first, second) = if a.beta < b.beta { (a, b) } else { (b, a) };
    Ok(DoubleHopf {
        parameter,
        kernel,
        first,
        second,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::spectral::{char_residual, SystemParams};
    use num_complex::Complex64;

    fn setup() -> (FrequencyDist, KernelFamily) {
        (
            FrequencyDist::new(3.0, 1.0).unwrap(),
            KernelFamily::Gamma {
                shape: 3.0,
                mean: 3.0,
                gap: 0.0,
            },
        )
    }

    #[test]
    fn crossing_in_gap_scan() {
        let (freq, family) = setup();
        let hh = double_hopf_locate(
            &freq,
            &ScalarScan::new(family, Axis::Gap, 0.0, 4.0),
            &SearchOptions::default(),
        )
        .unwrap();
        assert!(hh.parameter > 2.5 && hh.parameter < 2.75, "{}", hh.parameter);
        assert!((hh.first.kbar - hh.second.kbar).abs() < 1e-8);
        assert!((hh.first.beta - hh.second.beta).abs() > 0.1);
        for p in [hh.first, hh.second] {
            let params = SystemParams::new(p.kbar, freq, hh.kernel).unwrap();
            assert!(char_residual(&params, Complex64::new(0.0, p.beta)).unwrap().norm() < 1e-10);
        }
    }

    #[test]
    fn reversed_scan_and_explicit_labels() {
        let (freq, family) = setup();
        let a = double_hopf_locate(
            &freq,
            &ScalarScan::new(family, Axis::Gap, 4.0, 2.0),
            &SearchOptions::default(),
        )
        .unwrap();
        assert!(a.parameter > 2.5 && a.parameter < 2.75, "{}", a.parameter);
        // Higher branches cross first on [3, 8]; the labels pick the -1/1 crossing.
        let mut scan = ScalarScan::new(family, Axis::Gap, 3.0, 8.0);
        scan.branches = Some([1, -1]);
        let b = double_hopf_locate(&freq, &scan, &SearchOptions::default()).unwrap();
        assert!(b.parameter > 4.25 && b.parameter < 4.5, "{}", b.parameter);
        assert_eq!((b.first.branch, b.second.branch), (-1, 1));
    }

    #[test]
    fn no_crossing() {
        let (freq, family) = setup();
        let mut scan = ScalarScan::new(family, Axis::Gap, 0.5, 8.0);
        scan.branches = Some([0, -1]);
        assert!(matches!(
            double_hopf_locate(&freq, &scan, &SearchOptions::default()),
            Err(Error::NotFound(_))
        ));
        let bad = ScalarScan::new(family, Axis::Coupling, 0.0, 1.0);
        assert!(double_hopf_locate(&freq, &bad, &SearchOptions::default()).is_err());
    }
}
