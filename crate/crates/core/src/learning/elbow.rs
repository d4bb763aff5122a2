//! Cluster-count selection by the elbow of the WCSS curve.
//!
//! Both axes are min-max normalised and the chosen k is the one farthest from
//! the chord joining the first and last points of the curve. k = 1 is never
//! chosen; near-ties (within [`TIE_EPS`]) resolve to the smallest k.

use super::kmeans::{distinct_count, kmeans_1d};
use crate::scalar::Scalar;
use crate::{Error, Result};

pub const TIE_EPS: f64 = 1e-12;

#[derive(Debug, Clone, PartialEq)]
pub struct ElbowChoice<T = f64> {
    pub k: usize,
    /// WCSS for k = 1..=k_max.
    pub wcss: Vec<T>,
}

/// Picks k from a WCSS series indexed from k = 1.
pub fn elbow_from_wcss<T: Scalar>(wcss: &[T]) -> Result<usize> {
    let k_max = wcss.len();
    if k_max < 2 {
        return Err(Error::Clustering(format!("k_max = {k_max} must be at least 2")));
    }
    let ys: Vec<f64> = wcss.iter().map(|w| w.to_f64().unwrap_or(f64::NAN)).collect();
    let (lo, hi) = ys.iter().fold((f64::INFINITY, f64::NEG_INFINITY), |(lo, hi), &y| {
        (lo.min(y), hi.max(y))
    });
    let span = hi - lo;
    let norm_y = |y: f64| if span > 0.0 { (y - lo) / span } else { 0.0 };
    let norm_x = |k: usize| (k - 1) as f64 / (k_max - 1) as f64;

    let (x0, y0) = (0.0, norm_y(ys[0]));
    let (x1, y1) = (1.0, norm_y(ys[k_max - 1]));
    let (dx, dy) = (x1 - x0, y1 - y0);
    let len = (dx * dx + dy * dy).sqrt();
    let distance = |k: usize| {
        let (x, y) = (norm_x(k), norm_y(ys[k - 1]));
        ((x - x0) * dy - (y - y0) * dx).abs() / len
    };

    let dists: Vec<f64> = (2..=k_max).map(distance).collect();
    let max = dists.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let offset = dists
        .iter()
        .position(|&d| d >= max - TIE_EPS)
        .expect("non-empty candidate range");
    Ok(offset + 2)
}

/// Computes WCSS(k) for k = 1..=k_max and applies [`elbow_from_wcss`].
///
/// WCSS for k at or above the number of distinct values is zero: every value
/// can sit on its own centroid.
pub fn select_k_elbow<T: Scalar>(values: &[T], k_max: usize, seed: u64, restarts: usize) -> Result<ElbowChoice<T>> {
    if k_max < 2 {
        return Err(Error::Clustering(format!("k_max = {k_max} must be at least 2")));
    }
    if values.len() < k_max {
        return Err(Error::Clustering(format!(
            "{} values cannot support k_max = {k_max}",
            values.len()
        )));
    }
    let distinct = distinct_count(values);
    let wcss = (1..=k_max)
        .map(|k| {
            if k >= distinct {
                Ok(T::zero())
            } else {
                kmeans_1d(values, k, seed, restarts).map(|c| c.wcss)
            }
        })
        .collect::<Result<Vec<T>>>()?;
    let k = elbow_from_wcss(&wcss)?;
    Ok(ElbowChoice { k, wcss })
}
