//! One-dimensional k-means with k-means++ seeding and best-of-restarts.

use rand::Rng;

use crate::scalar::Scalar;
use crate::seed;
use crate::{Error, Result};

pub const MAX_ITERATIONS: usize = 100;
pub const DEFAULT_RESTARTS: usize = 10;

#[derive(Debug, Clone, PartialEq)]
pub struct Clustering<T = f64> {
    /// Cluster index per input value, in input order.
    pub labels: Vec<usize>,
    /// Cluster centres, strictly ascending.
    pub centroids: Vec<T>,
    /// Within-cluster sum of squares.
    pub wcss: T,
}

impl<T: Scalar> Clustering<T> {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }

    pub fn sizes(&self) -> Vec<usize> {
        let mut sizes = vec![0; self.k()];
        for &l in &self.labels {
            sizes[l] += 1;
        }
        sizes
    }
}

pub fn distinct_count<T: Scalar>(values: &[T]) -> usize {
    let mut sorted = values.to_vec();
    sorted.sort_by(|a, b| a.partial_cmp(b).expect("finite values"));
    sorted.dedup();
    sorted.len()
}

pub fn wcss<T: Scalar>(values: &[T], labels: &[usize], centroids: &[T]) -> T {
    values
        .iter()
        .zip(labels)
        .map(|(&x, &l)| (x - centroids[l]) * (x - centroids[l]))
        .sum()
}

/// Nearest centroid; ties go to the lower index.
fn nearest<T: Scalar>(x: T, centroids: &[T]) -> usize {
    let mut best = 0;
    let mut best_d = (x - centroids[0]).abs();
    for (j, &c) in centroids.iter().enumerate().skip(1) {
        let d = (x - c).abs();
        if d < best_d {
            best = j;
            best_d = d;
        }
    }
    best
}

fn seed_plus_plus<T: Scalar>(values: &[T], k: usize, rng: &mut impl Rng) -> Vec<T> {
    let mut centroids = Vec::with_capacity(k);
    centroids.push(values[rng.random_range(0..values.len())]);
    let mut d2: Vec<f64> = values
        .iter()
        .map(|&x| ((x - centroids[0]) * (x - centroids[0])).to_f64().unwrap_or(0.0))
        .collect();
    while centroids.len() < k {
        let total: f64 = d2.iter().sum();
        // Guaranteed positive while fewer centroids than distinct values.
        let mut target = rng.random::<f64>() * total;
        let mut pick = None;
        for (i, &w) in d2.iter().enumerate() {
            if w <= 0.0 {
                continue;
            }
            if target < w {
                pick = Some(i);
                break;
            }
            target -= w;
        }
        // Rounding can walk off the end; take the last positive weight.
        let pick = pick
            .or_else(|| d2.iter().rposition(|&w| w > 0.0))
            .expect("a point not yet chosen as centroid");
        let c = values[pick];
        centroids.push(c);
        for (w, &x) in d2.iter_mut().zip(values) {
            *w = w.min(((x - c) * (x - c)).to_f64().unwrap_or(0.0));
        }
    }
    centroids
}

/// Recomputes centroids as member means. Empty clusters take the point
/// farthest from its own centroid (lowest index on ties), drawn from clusters
/// that can spare one.
fn update<T: Scalar>(values: &[T], labels: &mut [usize], centroids: &mut [T]) {
    let k = centroids.len();
    loop {
        let mut sizes = vec![0usize; k];
        for &l in labels.iter() {
            sizes[l] += 1;
        }
        let Some(empty) = sizes.iter().position(|&s| s == 0) else {
            break;
        };
        let mut far: Option<(usize, T)> = None;
        for (i, (&x, &l)) in values.iter().zip(labels.iter()).enumerate() {
            if sizes[l] < 2 {
                continue;
            }
            let d = (x - centroids[l]).abs();
            if far.is_none_or(|(_, fd)| d > fd) {
                far = Some((i, d));
            }
        }
        let (i, _) = far.expect("k <= number of points");
        labels[i] = empty;
        centroids[empty] = values[i];
    }
    let mut sums = vec![T::zero(); k];
    let mut counts = vec![0usize; k];
    for (&x, &l) in values.iter().zip(labels.iter()) {
        sums[l] = sums[l] + x;
        counts[l] += 1;
    }
    for j in 0..k {
        centroids[j] = sums[j] / T::from_count(counts[j]);
    }
}

fn lloyd<T: Scalar>(values: &[T], mut centroids: Vec<T>) -> (Vec<usize>, Vec<T>) {
    let mut labels: Vec<usize> = values.iter().map(|&x| nearest(x, &centroids)).collect();
    for _ in 0..MAX_ITERATIONS {
        update(values, &mut labels, &mut centroids);
        let next: Vec<usize> = values.iter().map(|&x| nearest(x, &centroids)).collect();
        if next == labels {
            break;
        }
        labels = next;
    }
    (labels, centroids)
}

/// Clusters `values` into `k` groups, keeping the lowest-WCSS result over
/// `restarts` seeded k-means++ initialisations. Centroids come back ascending
/// and labels are renumbered to match.
pub fn kmeans_1d<T: Scalar>(values: &[T], k: usize, seed: u64, restarts: usize) -> Result<Clustering<T>> {
    if values.is_empty() {
        return Err(Error::Clustering("no values to cluster".into()));
    }
    if values.iter().any(|v| !v.is_finite()) {
        return Err(Error::Clustering("non-finite value".into()));
    }
    if k == 0 {
        return Err(Error::Clustering("k must be positive".into()));
    }
    let distinct = distinct_count(values);
    if k > distinct {
        return Err(Error::Clustering(format!(
            "k = {k} exceeds the {distinct} distinct values"
        )));
    }

    let mut rng = seed::rng(seed);
    let mut best: Option<(T, Vec<usize>, Vec<T>)> = None;
    for _ in 0..restarts.max(1) {
        let init = seed_plus_plus(values, k, &mut rng);
        let (labels, centroids) = lloyd(values, init);
        let cost = wcss(values, &labels, &centroids);
        if best.as_ref().is_none_or(|(b, _, _)| cost < *b) {
            best = Some((cost, labels, centroids));
        }
    }
    let (_, labels, centroids) = best.expect("at least one restart");

    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| centroids[a].partial_cmp(&centroids[b]).expect("finite centroids"));
    let mut rank = vec![0; k];
    for (new, &old) in order.iter().enumerate() {
        rank[old] = new;
    }
    let labels: Vec<usize> = labels.into_iter().map(|l| rank[l]).collect();
    let centroids: Vec<T> = order.iter().map(|&j| centroids[j]).collect();
    let wcss = wcss(values, &labels, &centroids);
    Ok(Clustering {
        labels,
        centroids,
        wcss,
    })
}
