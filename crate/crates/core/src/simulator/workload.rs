//! Piecewise-constant arrival workloads.

use rand::Rng;
use rand_distr::Exp;
use serde::{Deserialize, Serialize};

use crate::seed;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RateSegment {
    /// Seconds.
    pub duration: f64,
    /// Requests per second.
    pub rate: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum ArrivalProcess {
    /// Evenly spaced arrivals at the segment rate, starting at the segment start.
    Deterministic,
    /// Exponential inter-arrival times.
    #[default]
    Poisson,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WorkloadSpec {
    pub segments: Vec<RateSegment>,
    #[serde(default)]
    pub process: ArrivalProcess,
    /// Total request cap; later arrivals are dropped from the trace.
    pub max_requests: usize,
    #[serde(default)]
    pub seed: u64,
}

impl WorkloadSpec {
    pub fn validate(&self) -> Result<()> {
        if self.max_requests == 0 {
            return Err(Error::Workload("request cap must be at least 1".into()));
        }
        for (i, s) in self.segments.iter().enumerate() {
            if !(s.duration.is_finite() && s.duration > 0.0) {
                return Err(Error::Workload(format!("segment {i}: duration must be > 0")));
            }
            if !(s.rate.is_finite() && s.rate >= 0.0) {
                return Err(Error::Workload(format!("segment {i}: rate must be >= 0")));
            }
        }
        Ok(())
    }

    pub fn total_duration(&self) -> f64 {
        self.segments.iter().map(|s| s.duration).sum()
    }

    pub fn peak_rate(&self) -> f64 {
        self.segments.iter().map(|s| s.rate).fold(0.0, f64::max)
    }

    /// Repeats the segment list until the cumulative expected arrivals reach
    /// `max_requests`.
    pub fn cycled_to_cap(mut self) -> Self {
        let per_cycle: f64 = self.segments.iter().map(|s| s.duration * s.rate).sum();
        if per_cycle > 0.0 {
            let cycles = ((self.max_requests as f64 / per_cycle).ceil() as usize).max(1) + 1;
            let base = self.segments.clone();
            self.segments = std::iter::repeat_n(base, cycles).flatten().collect();
        }
        self
    }
}

/// Arrival timestamps, strictly increasing, at most `max_requests` long.
pub fn generate_workload(spec: &WorkloadSpec) -> Result<Vec<f64>> {
    spec.validate()?;
    let mut rng = seed::derived_rng(spec.seed, "arrivals");
    let mut out: Vec<f64> = Vec::new();
    let mut start = 0.0;
    'segments: for seg in &spec.segments {
        let end = start + seg.duration;
        if seg.rate > 0.0 {
            match spec.process {
                ArrivalProcess::Deterministic => {
                    let mut i = 0u64;
                    loop {
                        let t = start + i as f64 / seg.rate;
                        if t >= end {
                            break;
                        }
                        if !push(&mut out, t, spec.max_requests) {
                            break 'segments;
                        }
                        i += 1;
                    }
                }
                ArrivalProcess::Poisson => {
                    let exp = Exp::new(seg.rate).map_err(|e| Error::Workload(e.to_string()))?;
                    let mut t = start + rng.sample(exp);
                    while t < end {
                        if !push(&mut out, t, spec.max_requests) {
                            break 'segments;
                        }
                        t += rng.sample(exp);
                    }
                }
            }
        }
        start = end;
    }
    if out.is_empty() {
        return Err(Error::Workload("workload produces no arrivals".into()));
    }
    Ok(out)
}

fn push(out: &mut Vec<f64>, t: f64, cap: usize) -> bool {
    if out.len() >= cap {
        return false;
    }
    let t = match out.last() {
        Some(&last) if t <= last => last.next_up(),
        _ => t,
    };
    out.push(t);
    true
}

#[cfg(test)]
mod tests {
    use super::*;

    fn spec(segments: &[(f64, f64)], process: ArrivalProcess, cap: usize) -> WorkloadSpec {
        WorkloadSpec {
            segments: segments
                .iter()
                .map(|&(duration, rate)| RateSegment { duration, rate })
                .collect(),
            process,
            max_requests: cap,
            seed: 42,
        }
    }

    #[test]
    fn evenly_spaced() {
        let a = generate_workload(&spec(&[(10.0, 5.0)], ArrivalProcess::Deterministic, 1000)).unwrap();
        assert_eq!(a.len(), 50);
        for (i, t) in a.iter().enumerate() {
            assert!((t - 0.2 * i as f64).abs() < 1e-12);
        }
    }

    #[test]
    fn zero_rate_segment_is_silent() {
        let a = generate_workload(&spec(
            &[(2.0, 1.0), (5.0, 0.0), (2.0, 1.0)],
            ArrivalProcess::Deterministic,
            100,
        ))
        .unwrap();
        assert_eq!(a, vec![0.0, 1.0, 7.0, 8.0]);
    }

    #[test]
    fn cap_truncates() {
        let a = generate_workload(&spec(&[(100.0, 10.0)], ArrivalProcess::Poisson, 25)).unwrap();
        assert_eq!(a.len(), 25);
    }

    #[test]
    fn empty_workload_is_error() {
        assert!(generate_workload(&spec(&[(3.0, 0.0)], ArrivalProcess::Poisson, 10)).is_err());
        assert!(generate_workload(&spec(&[(3.0, 1.0)], ArrivalProcess::Poisson, 0)).is_err());
        assert!(generate_workload(&spec(&[(-1.0, 1.0)], ArrivalProcess::Poisson, 5)).is_err());
    }

    #[test]
    fn cycling_reaches_cap() {
        let s = spec(&[(10.0, 2.0), (5.0, 8.0)], ArrivalProcess::Poisson, 500).cycled_to_cap();
        let a = generate_workload(&s).unwrap();
        assert_eq!(a.len(), 500);
    }
}
