//! Dense history of a complex signal on a uniform step grid.
//!
//! Values and slopes are kept at grid points `t_j = j·dt` in a ring buffer;
//! delayed lookups interpolate between neighbouring points. Lookups are
//! compiled into [`Stencil`]s once per (delay, stage offset) pair, since both
//! are fixed for a fixed-step integration.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub enum Interpolation {
    #[default]
    CubicHermite,
    Linear,
}

/// Precomputed weights for `x(t_n + c·dt - τ)` relative to the newest index n.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stencil {
    /// Zero delay: the caller supplies the current stage value.
    Current,
    /// `c0·y[n-lag] + c1·f[n-lag] + c2·y[n-lag+1] + c3·f[n-lag+1]`.
    Past { lag: usize, coef: [f64; 4] },
}

impl Stencil {
    /// Multiplies all coefficients by `w`, so weighted sums need no extra pass.
    pub fn scaled(self, w: f64) -> Self {
        match self {
            Stencil::Current => Stencil::Current,
            Stencil::Past { lag, coef } => Stencil::Past {
                lag,
                coef: coef.map(|c| c * w),
            },
        }
    }
}

/// Each point is stored twice, at `j` and `j + len`, so the two points of an
/// interpolation interval are always adjacent without wrapping.
#[derive(Debug, Clone)]
pub struct History {
    data: Vec<[Complex64; 2]>,
    newest: usize,
    len: usize,
    /// Completed steps; the slot of t = 0 is reached at lag `steps + 1`.
    steps: usize,
    /// Derivative of the initial function at t = 0 from the left. The stored
    /// slope there becomes the right derivative of the solution once stepping
    /// starts.
    origin_left: Complex64,
    dt: f64,
    interp: Interpolation,
}

impl History {
    /// History `phi` on `t ≤ 0` returning (value, derivative), sampled back to
    /// `max_delay` plus two steps of margin.
    pub fn from_fn<F: Fn(f64) -> (Complex64, Complex64)>(
        dt: f64,
        max_delay: f64,
        interp: Interpolation,
        phi: F,
    ) -> Self {
        let len = (max_delay / dt).ceil() as usize + 3;
        let mut data = vec![[Complex64::new(0.0, 0.0); 2]; 2 * len];
        // Index j stores t = -(len - 1 - j)·dt; the newest slot is t = 0.
        for j in 0..len {
            let t = -((len - 1 - j) as f64) * dt;
            let (v, s) = phi(t);
            data[j] = [v, s];
            data[j + len] = [v, s];
        }
        let origin_left = data[len - 1][1];
        History {
            data,
            newest: len - 1,
            len,
            steps: 0,
            origin_left,
            dt,
            interp,
        }
    }

    pub fn constant(value: Complex64, dt: f64, max_delay: f64, interp: Interpolation) -> Self {
        Self::from_fn(dt, max_delay, interp, |_| (value, Complex64::new(0.0, 0.0)))
    }

    pub fn dt(&self) -> f64 {
        self.dt
    }

    pub fn newest(&self) -> Complex64 {
        self.data[self.newest][0]
    }

    /// Stencil for `x(t_n + offset·dt - delay)`, offset in [0, 1].
    ///
    /// Delays shorter than the stage offset are extrapolated from the last
    /// completed step.
    pub fn stencil(&self, delay: f64, offset: f64) -> Stencil {
        if delay == 0.0 {
            return Stencil::Current;
        }
        let p = offset - delay / self.dt;
        let mut base = p.floor();
        // Guard against rounding for grid-aligned delays.
        if p - base > 1.0 - 1e-12 {
            base += 1.0;
        }
        let lag = (-base).max(1.0) as usize;
        let theta = (p + lag as f64).max(0.0);
        assert!(lag + 1 < self.len, "delay {delay} exceeds the recorded history span");
        let coef = match self.interp {
            Interpolation::CubicHermite => {
                let (t2, t3) = (theta * theta, theta * theta * theta);
                [
                    2.0 * t3 - 3.0 * t2 + 1.0,
                    (t3 - 2.0 * t2 + theta) * self.dt,
                    -2.0 * t3 + 3.0 * t2,
                    (t3 - t2) * self.dt,
                ]
            }
            Interpolation::Linear => [1.0 - theta, 0.0, theta, 0.0],
        };
        Stencil::Past { lag, coef }
    }

    /// Value of a `Past` stencil; `current` is returned for `Current`.
    #[inline]
    pub fn eval(&self, s: &Stencil, current: Complex64) -> Complex64 {
        match *s {
            Stencil::Current => current,
            Stencil::Past { lag, coef } => self.eval_past(lag, &coef),
        }
    }

    #[inline]
    pub fn eval_past(&self, lag: usize, coef: &[f64; 4]) -> Complex64 {
        let i0 = self.newest + self.len - lag;
        let [y0, f0] = self.data[i0];
        let [y1, mut f1] = self.data[i0 + 1];
        if lag == self.steps + 1 {
            f1 = self.origin_left;
        }
        y0 * coef[0] + f0 * coef[1] + y1 * coef[2] + f1 * coef[3]
    }

    /// Appends the point `t_{n+1}` and drops the oldest.
    pub fn push(&mut self, value: Complex64, slope: Complex64) {
        self.newest = (self.newest + 1) % self.len;
        self.steps += 1;
        self.data[self.newest] = [value, slope];
        self.data[self.newest + self.len] = [value, slope];
    }

    /// Replaces the slope at the newest point.
    pub fn set_newest_slope(&mut self, slope: Complex64) {
        self.data[self.newest][1] = slope;
        self.data[self.newest + self.len][1] = slope;
    }
}
