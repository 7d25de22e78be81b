//! Sliding-window cubic fit for smoothed temperature and temperature rate.

use std::collections::VecDeque;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Number of samples the fit needs.
pub const WINDOW: usize = 10;

/// Smoothed temperature (K) and rate (K/s) at the newest sample time.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Estimate {
    pub temperature: f64,
    pub rate: f64,
}

#[derive(Debug, Clone, Default, PartialEq)]
pub struct SampleWindow {
    samples: VecDeque<(f64, f64)>,
}

impl SampleWindow {
    pub fn new() -> Self {
        Self {
            samples: VecDeque::with_capacity(WINDOW),
        }
    }

    pub fn len(&self) -> usize {
        self.samples.len()
    }

    pub fn is_empty(&self) -> bool {
        self.samples.is_empty()
    }

    /// Adds a sample and, once the window is full, returns the least-squares
    /// cubic evaluated at `t`.
    pub fn push_and_estimate(&mut self, t: f64, temperature: f64) -> Result<Option<Estimate>> {
        if !t.is_finite() || !temperature.is_finite() {
            return Err(Error::InvalidArgument("non-finite sample".into()));
        }
        if let Some(&(last, _)) = self.samples.back() {
            if !(t > last) {
                return Err(Error::NonMonotonicTime { got: t, last });
            }
        }
        if self.samples.len() == WINDOW {
            self.samples.pop_front();
        }
        self.samples.push_back((t, temperature));
        if self.samples.len() < WINDOW {
            return Ok(None);
        }
        Ok(Some(fit_cubic(&self.samples)?))
    }
}

fn fit_cubic(samples: &VecDeque<(f64, f64)>) -> Result<Estimate> {
    let n = samples.len();
    let mean = samples.iter().map(|s| s.0).sum::<f64>() / n as f64;
    let half = samples
        .iter()
        .map(|s| (s.0 - mean).abs())
        .fold(0.0, f64::max);
    let x = |t: f64| (t - mean) / half;
    let a = DMatrix::from_fn(n, 4, |i, j| x(samples[i].0).powi(j as i32));
    let y = DVector::from_iterator(n, samples.iter().map(|s| s.1));
    let c = a
        .svd(true, true)
        .solve(&y, 1e-14)
        .map_err(|e| Error::Divergence(format!("cubic fit failed: {e}")))?;
    let xe = x(samples[n - 1].0);
    Ok(Estimate {
        temperature: c[0] + xe * (c[1] + xe * (c[2] + xe * c[3])),
        rate: (c[1] + xe * (2.0 * c[2] + 3.0 * xe * c[3])) / half,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::{Rng, SeedableRng};
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn nothing_before_ten_samples() {
        let mut w = SampleWindow::new();
        for k in 0..9 {
            assert_eq!(w.push_and_estimate(k as f64, 300.0).unwrap(), None);
        }
        assert!(w.push_and_estimate(9.0, 300.0).unwrap().is_some());
    }

    #[test]
    fn exact_on_cubic() {
        let mut w = SampleWindow::new();
        let mut est = None;
        for k in 0..10 {
            let t = k as f64;
            est = w.push_and_estimate(t, t * t * t).unwrap();
        }
        let e = est.unwrap();
        assert!((e.temperature - 729.0).abs() < 1e-9 * 729.0);
        assert!((e.rate - 243.0).abs() < 1e-9 * 243.0);
    }

    #[test]
    fn constant_signal() {
        let mut w = SampleWindow::new();
        let mut est = None;
        for k in 0..15 {
            est = w.push_and_estimate(0.5 * k as f64, 300.0).unwrap();
        }
        let e = est.unwrap();
        assert!((e.temperature - 300.0).abs() < 1e-10);
        assert!(e.rate.abs() < 1e-10);
    }

    #[test]
    fn noisy_ramp_slope() {
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let mut w = SampleWindow::new();
        let mut est = None;
        for k in 0..10 {
            let t = k as f64;
            est = w.push_and_estimate(t, 2.0 * t + 300.0 + rng.random_range(-0.1..=0.1)).unwrap();
        }
        assert!((est.unwrap().rate - 2.0).abs() < 0.15);
    }

    #[test]
    fn rejects_non_increasing_time() {
        let mut w = SampleWindow::new();
        w.push_and_estimate(1.0, 300.0).unwrap();
        assert_eq!(
            w.push_and_estimate(1.0, 300.0),
            Err(Error::NonMonotonicTime { got: 1.0, last: 1.0 })
        );
    }

    #[test]
    fn large_timestamps_stay_accurate() {
        let mut w = SampleWindow::new();
        let mut est = None;
        for k in 0..10 {
            let t = 1e6 + k as f64;
            let s = t - 1e6;
            est = w.push_and_estimate(t, 300.0 + 0.5 * s - 0.01 * s * s).unwrap();
        }
        let e = est.unwrap();
        assert!((e.rate - (0.5 - 0.02 * 9.0)).abs() < 1e-7);
    }
}
