//! Hopf values over two-parameter planes.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::{first_hopf, hopf_points, HopfPoint, SearchOptions};
use crate::distributions::{DelayKernel, FrequencyDist};
use crate::error::{invalid, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Axis {
    GammaMean,
    Gap,
    Shape,
    Coupling,
}

impl Axis {
    pub fn name(self) -> &'static str {
        match self {
            Axis::GammaMean => "gammaMean",
            Axis::Gap => "gap",
            Axis::Shape => "shape",
            Axis::Coupling => "coupling",
        }
    }
}

/// `steps` equally spaced values from `from` to `to` inclusive.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase", deny_unknown_fields)]
pub struct AxisRange {
    pub axis: Axis,
    pub from: f64,
    pub to: f64,
    pub steps: usize,
}

impl AxisRange {
    pub fn values(&self) -> Vec<f64> {
        match self.steps {
            0 => Vec::new(),
            1 => vec![self.from],
            s => (0..s)
                .map(|i| self.from + (self.to - self.from) * i as f64 / (s - 1) as f64)
                .collect(),
        }
    }

    fn validate(&self) -> Result<()> {
        if self.steps == 0 {
            return Err(invalid(format!("axis {} needs at least one step", self.axis.name())));
        }
        if !(self.from.is_finite() && self.to.is_finite()) {
            return Err(invalid(format!("axis {} bounds must be finite", self.axis.name())));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Plane {
    pub x: AxisRange,
    pub y: AxisRange,
}

/// A one-parameter family of kernels; axis values override the base fields.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    tag = "type",
    rename_all = "camelCase",
    rename_all_fields = "camelCase",
    deny_unknown_fields
)]
pub enum KernelFamily {
    Gamma {
        shape: f64,
        mean: f64,
        gap: f64,
    },
    /// Total mean and variance held fixed; the Gamma mean T sets the gap
    /// `total_mean - T` and the shape `T² / variance`.
    FixedMoments {
        total_mean: f64,
        variance: f64,
        gamma_mean: f64,
    },
    PointMass {
        gap: f64,
    },
}

impl KernelFamily {
    pub fn kernel(&self, overrides: &[(Axis, f64)]) -> Result<DelayKernel> {
        let get = |axis: Axis| overrides.iter().find(|o| o.0 == axis).map(|o| o.1);
        let forbid = |axis: Axis, family: &str| -> Result<()> {
            match get(axis) {
                Some(_) => Err(invalid(format!(
                    "axis {} is not a parameter of the {family} family",
                    axis.name()
                ))),
                None => Ok(()),
            }
        };
        match *self {
            KernelFamily::Gamma { shape, mean, gap } => DelayKernel::gamma(
                get(Axis::Shape).unwrap_or(shape),
                get(Axis::GammaMean).unwrap_or(mean),
                get(Axis::Gap).unwrap_or(gap),
            ),
            KernelFamily::FixedMoments {
                total_mean,
                variance,
                gamma_mean,
            } => {
                forbid(Axis::Shape, "fixedMoments")?;
                forbid(Axis::Gap, "fixedMoments")?;
                DelayKernel::with_fixed_moments(total_mean, variance, get(Axis::GammaMean).unwrap_or(gamma_mean))
            }
            KernelFamily::PointMass { gap } => {
                forbid(Axis::Shape, "pointMass")?;
                forbid(Axis::GammaMean, "pointMass")?;
                DelayKernel::point_mass(get(Axis::Gap).unwrap_or(gap))
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum GridKind {
    /// Each cell holds the first Hopf value of its kernel.
    FirstHopf,
    /// One axis is the coupling; each cell holds the number of Hopf values ≤ k.
    BranchCount,
}

#[derive(Debug, Clone, PartialEq)]
pub struct CurveGrid {
    pub plane: Plane,
    pub kind: GridKind,
    /// Row-major in y: `values[iy * nx + ix]`. `None` marks a failed cell.
    pub values: Vec<Option<f64>>,
    /// For `BranchCount` grids, the Hopf list of each kernel-axis value.
    pub curves: Vec<Option<Vec<HopfPoint>>>,
    pub failures: usize,
}

impl CurveGrid {
    pub fn nx(&self) -> usize {
        self.plane.x.steps
    }

    pub fn ny(&self) -> usize {
        self.plane.y.steps
    }

    pub fn get(&self, ix: usize, iy: usize) -> Option<f64> {
        self.values[iy * self.nx() + ix]
    }
}

/// Evaluates the plane cell by cell in parallel; cells whose kernel is invalid
/// or whose search fails are recorded as `None`.
pub fn hopf_curve_grid(
    freq: &FrequencyDist,
    family: &KernelFamily,
    plane: &Plane,
    opts: &SearchOptions,
) -> Result<CurveGrid> {
    plane.x.validate()?;
    plane.y.validate()?;
    if plane.x.axis == plane.y.axis {
        return Err(invalid("plane axes must differ"));
    }
    let xs = plane.x.values();
    let ys = plane.y.values();
    let (nx, ny) = (xs.len(), ys.len());

    if plane.x.axis == Axis::Coupling || plane.y.axis == Axis::Coupling {
        let x_is_k = plane.x.axis == Axis::Coupling;
        let (ks, kernel_axis, kernel_vals) = if x_is_k {
            (&xs, plane.y.axis, &ys)
        } else {
            (&ys, plane.x.axis, &xs)
        };
        let kmax = ks.iter().cloned().fold(0.0, f64::max);
        let curves: Vec<Option<Vec<HopfPoint>>> = kernel_vals
            .par_iter()
            .map(|&v| {
                let kernel = family.kernel(&[(kernel_axis, v)]).ok()?;
                let bound = opts.resolve(freq, &kernel).max(0.5 * kmax + freq.center.abs() + 1.0);
                let o = SearchOptions {
                    bound: Some(bound),
                    ..*opts
                };
                hopf_points(freq, &kernel, &o).ok()
            })
            .collect();
        let mut values = vec![None; nx * ny];
        for iy in 0..ny {
            for ix in 0..nx {
                let (ik, iv) = if x_is_k { (ix, iy) } else { (iy, ix) };
                values[iy * nx + ix] = curves[iv]
                    .as_ref()
                    .map(|pts| pts.iter().filter(|p| p.kbar <= ks[ik]).count() as f64);
            }
        }
        let failures = values.iter().filter(|v| v.is_none()).count();
        return Ok(CurveGrid {
            plane: *plane,
            kind: GridKind::BranchCount,
            values,
            curves,
            failures,
        });
    }

    let values: Vec<Option<f64>> = (0..nx * ny)
        .into_par_iter()
        .map(|idx| {
            let (ix, iy) = (idx % nx, idx / nx);
            let kernel = family.kernel(&[(plane.x.axis, xs[ix]), (plane.y.axis, ys[iy])]).ok()?;
            first_hopf(freq, &kernel, opts).ok().map(|p| p.kbar)
        })
        .collect();
    let failures = values.iter().filter(|v| v.is_none()).count();
    Ok(CurveGrid {
        plane: *plane,
        kind: GridKind::FirstHopf,
        values,
        curves: Vec::new(),
        failures,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn range(axis: Axis, from: f64, to: f64, steps: usize) -> AxisRange {
        AxisRange { axis, from, to, steps }
    }

    #[test]
    fn axis_values_inclusive() {
        assert_eq!(range(Axis::Gap, 0.0, 1.0, 3).values(), vec![0.0, 0.5, 1.0]);
        assert_eq!(range(Axis::Gap, 2.0, 9.0, 1).values(), vec![2.0]);
    }

    #[test]
    fn grid_cells_match_direct_solves() {
        let freq = FrequencyDist::new(3.0, 0.3).unwrap();
        let family = KernelFamily::Gamma {
            shape: 3.0,
            mean: 1.0,
            gap: 0.0,
        };
        let plane = Plane {
            x: range(Axis::GammaMean, 0.1, 2.8, 4),
            y: range(Axis::Gap, 0.0, 8.0, 3),
        };
        let opts = SearchOptions::default();
        let grid = hopf_curve_grid(&freq, &family, &plane, &opts).unwrap();
        assert_eq!(grid.failures, 0);
        for iy in 0..3 {
            for ix in 0..4 {
                let k = DelayKernel::gamma(3.0, plane.x.values()[ix], plane.y.values()[iy]).unwrap();
                let direct = first_hopf(&freq, &k, &opts).unwrap().kbar;
                assert!((grid.get(ix, iy).unwrap() - direct).abs() < 1e-12);
            }
        }
    }

    #[test]
    fn zero_delay_row_is_constant() {
        let freq = FrequencyDist::new(3.0, 0.7).unwrap();
        let family = KernelFamily::PointMass { gap: 0.0 };
        let plane = Plane {
            x: range(Axis::Gap, 0.0, 0.0, 1),
            y: range(Axis::Coupling, 0.0, 5.0, 11),
        };
        let grid = hopf_curve_grid(&freq, &family, &plane, &SearchOptions::default()).unwrap();
        let pts = grid.curves[0].as_ref().unwrap();
        assert_eq!(pts.len(), 1);
        assert!((pts[0].kbar - 1.4).abs() < 1e-12);
        // k = 1.0 below, k = 1.5 above 2Δ
        assert_eq!(grid.get(0, 2), Some(0.0));
        assert_eq!(grid.get(0, 3), Some(1.0));
    }

    #[test]
    fn invalid_cells_are_missing_not_fatal() {
        let freq = FrequencyDist::new(3.0, 1.0).unwrap();
        let family = KernelFamily::FixedMoments {
            total_mean: 3.0,
            variance: 3.0,
            gamma_mean: 1.0,
        };
        let plane = Plane {
            x: range(Axis::GammaMean, 0.5, 3.5, 3),
            y: range(Axis::Coupling, 0.0, 8.0, 5),
        };
        let grid = hopf_curve_grid(&freq, &family, &plane, &SearchOptions::default()).unwrap();
        // T = 3.5 exceeds the total mean: negative gap.
        assert!(grid.curves[2].is_none());
        assert_eq!(grid.failures, 5);
        assert_eq!(grid.get(0, 0), Some(0.0));
    }

    #[test]
    fn rejects_degenerate_planes() {
        let freq = FrequencyDist::new(3.0, 1.0).unwrap();
        let family = KernelFamily::PointMass { gap: 0.0 };
        let plane = Plane {
            x: range(Axis::Gap, 0.0, 1.0, 2),
            y: range(Axis::Gap, 0.0, 1.0, 2),
        };
        assert!(hopf_curve_grid(&freq, &family, &plane, &SearchOptions::default()).is_err());
    }
}
