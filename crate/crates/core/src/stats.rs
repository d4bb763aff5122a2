//! Sample statistics and confidence intervals.

use serde::{Deserialize, Serialize};
use statrs::distribution::{ContinuousCDF, Normal};

use crate::scalar::Scalar;
use crate::{Error, Result};

/// Samples below this count get the (min, max) range instead of a normal
/// interval.
pub const MIN_NORMAL_SAMPLES: usize = 5;

pub const DEFAULT_LEVEL: f64 = 0.90;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum CiMethod {
    /// `mean ± z·sd/√n`.
    #[default]
    NormalMean,
    /// Empirical central quantile range, widened to contain the mean.
    Percentile,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ConfidenceInterval<T = f64> {
    pub low: T,
    pub high: T,
    pub n: usize,
    pub mean: T,
}

impl<T: Scalar> ConfidenceInterval<T> {
    pub fn point(v: T) -> Self {
        ConfidenceInterval {
            low: v,
            high: v,
            n: 1,
            mean: v,
        }
    }

    pub fn width(&self) -> T {
        self.high - self.low
    }

    pub fn contains(&self, v: T) -> bool {
        self.low <= v && v <= self.high
    }
}

pub fn mean<T: Scalar>(samples: &[T]) -> Option<T> {
    if samples.is_empty() {
        return None;
    }
    Some(samples.iter().copied().sum::<T>() / T::from_count(samples.len()))
}

/// Sample standard deviation with the `n - 1` denominator; zero for a single
/// sample.
pub fn sample_sd<T: Scalar>(samples: &[T]) -> Option<T> {
    let m = mean(samples)?;
    if samples.len() < 2 {
        return Some(T::zero());
    }
    let ss: T = samples.iter().map(|&x| (x - m) * (x - m)).sum();
    Some((ss / T::from_count(samples.len() - 1)).sqrt())
}

/// Two-sided standard-normal critical value for a confidence `level`.
pub fn z_value(level: f64) -> f64 {
    let std = Normal::new(0.0, 1.0).expect("standard normal");
    std.inverse_cdf(0.5 + level / 2.0)
}

fn quantile_sorted<T: Scalar>(sorted: &[T], q: f64) -> T {
    let pos = q * (sorted.len() - 1) as f64;
    let lo = pos.floor() as usize;
    let hi = pos.ceil() as usize;
    let frac = T::lit(pos - lo as f64);
    sorted[lo] + (sorted[hi] - sorted[lo]) * frac
}

/// Confidence interval of the mean at `level` (e.g. 0.90).
///
/// Fewer than [`MIN_NORMAL_SAMPLES`] samples fall back to the sample range.
pub fn compute_ci<T: Scalar>(samples: &[T], level: f64, method: CiMethod) -> Result<ConfidenceInterval<T>> {
    let n = samples.len();
    let m = mean(samples).ok_or(Error::EmptySamples)?;
    if !(0.0 < level && level < 1.0) {
        return Err(Error::InvalidSpec(format!("confidence level {level} outside (0, 1)")));
    }
    if n < MIN_NORMAL_SAMPLES {
        let (lo, hi) = samples
            .iter()
            .fold((samples[0], samples[0]), |(lo, hi), &x| (lo.min(x), hi.max(x)));
        return Ok(ConfidenceInterval {
            low: lo,
            high: hi,
            n,
            mean: m,
        });
    }
    let (low, high) = match method {
        CiMethod::NormalMean => {
            let sd = sample_sd(samples).unwrap_or_else(T::zero);
            let half = T::lit(z_value(level)) * sd / T::from_count(n).sqrt();
            (m - half, m + half)
        }
        CiMethod::Percentile => {
            let mut sorted = samples.to_vec();
            sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite samples"));
            let tail = (1.0 - level) / 2.0;
            let lo = quantile_sorted(&sorted, tail);
            let hi = quantile_sorted(&sorted, 1.0 - tail);
            (lo.min(m), hi.max(m))
        }
    };
    Ok(ConfidenceInterval { low, high, n, mean: m })
}
