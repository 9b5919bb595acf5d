use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Default fraction of the horizon used for tail statistics.
pub const DEFAULT_WINDOW: f64 = 0.25;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct TailStats {
    pub window_fraction: f64,
    pub mean: f64,
    pub std: f64,
    pub converged: bool,
}

/// Sampled complex order parameter.
///
/// `values` is the instantaneous quantity (α for the mean field, r for an
/// ensemble); `delayed`, when present, is its delay average at the same times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "camelCase")]
pub struct OrderParamSeries {
    pub times: Vec<f64>,
    pub values: Vec<Complex64>,
    pub delayed: Option<Vec<Complex64>>,
    pub tail: TailStats,
}

impl OrderParamSeries {
    pub fn new(times: Vec<f64>, values: Vec<Complex64>, delayed: Option<Vec<Complex64>>) -> Self {
        let tail = tail_stats(&times, &values, DEFAULT_WINDOW);
        OrderParamSeries {
            times,
            values,
            delayed,
            tail,
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<Complex64> {
        self.values.last().copied()
    }

    /// Tail mean of the delay-averaged modulus, if recorded.
    pub fn delayed_tail_mean(&self, window_fraction: f64) -> Option<f64> {
        self.delayed
            .as_ref()
            .map(|d| tail_stats(&self.times, d, window_fraction).mean)
    }

    /// Mean angular velocity of the values over the tail window.
    pub fn tail_frequency(&self, window_fraction: f64) -> Option<f64> {
        let start = window_start(&self.times, window_fraction);
        let (t, v) = (&self.times[start..], &self.values[start..]);
        if t.len() < 2 || v.iter().any(|z| z.norm() == 0.0) {
            return None;
        }
        let turn: f64 = v.windows(2).map(|w| (w[1] / w[0]).arg()).sum();
        Some(turn / (t[t.len() - 1] - t[0]))
    }
}

fn window_start(times: &[f64], window_fraction: f64) -> usize {
    match (times.first(), times.last()) {
        (Some(&a), Some(&b)) => {
            let cut = b - window_fraction.clamp(0.0, 1.0) * (b - a);
            times.partition_point(|&t| t < cut).min(times.len() - 1)
        }
        _ => 0,
    }
}

/// Mean and standard deviation of `|z|` over the final `window_fraction` of
/// the time span. Converged when std/mean < 0.02 or mean < 1e-6.
pub fn tail_stats(times: &[f64], values: &[Complex64], window_fraction: f64) -> TailStats {
    if values.is_empty() {
        return TailStats {
            window_fraction,
            mean: f64::NAN,
            std: f64::NAN,
            converged: false,
        };
    }
    let tail = &values[window_start(times, window_fraction)..];
    let n = tail.len() as f64;
    let mean = tail.iter().map(|z| z.norm()).sum::<f64>() / n;
    let var = tail.iter().map(|z| (z.norm() - mean).powi(2)).sum::<f64>() / n;
    let std = var.sqrt();
    TailStats {
        window_fraction,
        mean,
        std,
        converged: mean < 1e-6 || std / mean < 0.02,
    }
}

/// `(tail mean |α|, converged)` over the final `window_fraction`.
pub fn steady_amplitude(series: &OrderParamSeries, window_fraction: f64) -> (f64, bool) {
    let s = tail_stats(&series.times, &series.values, window_fraction);
    (s.mean, s.converged)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn constant_modulus_converges() {
        let times: Vec<f64> = (0..100).map(|i| i as f64).collect();
        let values = times.iter().map(|&t| Complex64::from_polar(0.3, 2.0 * t)).collect();
        let s = OrderParamSeries::new(times, values, None);
        let (a, ok) = steady_amplitude(&s, 0.25);
        assert!((a - 0.3).abs() < 1e-15 && ok);
    }

    #[test]
    fn decay_converges_to_zero() {
        let times: Vec<f64> = (0..=200).map(|i| 0.5 * i as f64).collect();
        let values = times.iter().map(|&t| Complex64::new(0.5 * (-t).exp(), 0.0)).collect();
        let s = OrderParamSeries::new(times, values, None);
        let (a, ok) = steady_amplitude(&s, 0.25);
        assert!(a < 1e-6 && ok);
    }

    #[test]
    fn oscillating_modulus_not_converged() {
        let times: Vec<f64> = (0..400).map(|i| 0.1 * i as f64).collect();
        let values = times
            .iter()
            .map(|&t| Complex64::new(0.5 + 0.2 * t.sin(), 0.0))
            .collect();
        assert!(!OrderParamSeries::new(times, values, None).tail.converged);
    }

    #[test]
    fn tail_frequency_of_rotation() {
        let times: Vec<f64> = (0..1000).map(|i| 0.01 * i as f64).collect();
        let values = times.iter().map(|&t| Complex64::from_polar(0.4, -2.5 * t)).collect();
        let s = OrderParamSeries::new(times, values, None);
        assert!((s.tail_frequency(0.5).unwrap() + 2.5).abs() < 1e-10);
    }
}
