//! Desk-scale defaults: a five-model detector family whose endpoints sit at
//! 45 ms / 0.50 confidence and 766 ms / 0.75 confidence, and a bursty
//! workload peaking at 28 requests per second.

use crate::config::ExperimentConfig;
use crate::controller::NaivePolicyConfig;
use crate::profiles::{ModelSpec, ProfileFamilySpec};
use crate::simulator::workload::{ArrivalProcess, RateSegment, WorkloadSpec};

pub const DEFAULT_IMAGE_COUNT: usize = 2000;
pub const DEFAULT_REQUESTS: usize = 5000;
pub const PEAK_RATE: f64 = 28.0;

/// `(id, label, tau_system mean, c mean, s_cpu mean, b mean)`.
const FAMILY: [(&str, &str, f64, f64, f64, f64); 5] = [
    ("v5n", "YOLOv5n-like", 0.045, 0.50, 43.0, 3.0),
    ("v5s", "YOLOv5s-like", 0.120, 0.56, 51.0, 3.8),
    ("v5m", "YOLOv5m-like", 0.250, 0.63, 59.0, 4.5),
    ("v5l", "YOLOv5l-like", 0.450, 0.69, 67.0, 5.2),
    ("v5x", "YOLOv5x-like", 0.766, 0.75, 75.0, 6.0),
];

pub fn model_ids() -> Vec<String> {
    FAMILY.iter().map(|m| m.0.to_string()).collect()
}

pub fn desk_family(seed: u64) -> ProfileFamilySpec {
    ProfileFamilySpec {
        models: FAMILY
            .iter()
            .map(|&(id, label, tau, c, s, b)| ModelSpec {
                model_id: id.into(),
                label: label.into(),
                tau_system_mean: tau,
                tau_system_sd: 0.12 * tau,
                overhead: 0.005,
                c_mean: c,
                c_sd: 0.1,
                s_cpu_mean: s,
                s_cpu_sd: 5.0,
                b_mean: b,
                b_sd: 1.5,
            })
            .collect(),
        image_count: DEFAULT_IMAGE_COUNT,
        seed,
    }
}

/// One cycle of the bursty pattern: quiet, ramp, busy, a short spike, and a
/// decay back to quiet.
pub fn bursty_segments() -> Vec<RateSegment> {
    [
        (20.0, 1.0),
        (15.0, 3.0),
        (15.0, 6.0),
        (10.0, 15.0),
        (3.0, PEAK_RATE),
        (10.0, 15.0),
        (15.0, 6.0),
        (10.0, 3.0),
    ]
    .into_iter()
    .map(|(duration, rate)| RateSegment { duration, rate })
    .collect()
}

pub fn bursty_workload(seed: u64, max_requests: usize) -> WorkloadSpec {
    WorkloadSpec {
        segments: bursty_segments(),
        process: ArrivalProcess::Poisson,
        max_requests,
        seed,
    }
    .cycled_to_cap()
}

/// Constant delay outside the serving process in the comparison scenario,
/// seconds. Puts the fastest static model's mean response time near 0.28 s.
pub const COMPARISON_NETWORK_DELAY: f64 = 0.12;

/// Three preset rate tiers: up to 5 rps on the medium model, up to 15 rps on
/// the small one, the nano model above.
pub fn preset_naive() -> NaivePolicyConfig {
    NaivePolicyConfig::new([(5.0, "v5m"), (15.0, "v5s"), (f64::INFINITY, "v5n")])
        .expect("preset thresholds are ascending")
}

/// The desk-scale policy comparison: default family and workload, the
/// preset naive tiers and [`COMPARISON_NETWORK_DELAY`].
pub fn comparison_config(seed: u64) -> ExperimentConfig {
    let mut cfg = ExperimentConfig {
        seed,
        naive: Some(preset_naive()),
        ..ExperimentConfig::default()
    };
    cfg.simulation.network_delay = COMPARISON_NETWORK_DELAY;
    cfg
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn family_spans_endpoints() {
        let spec = desk_family(1);
        spec.validate().unwrap();
        let first = &spec.models[0];
        let last = &spec.models[4];
        assert_eq!((first.tau_system_mean, first.c_mean), (0.045, 0.50));
        assert_eq!((last.tau_system_mean, last.c_mean), (0.766, 0.75));
    }

    #[test]
    fn workload_reaches_cap_and_peak() {
        let spec = bursty_workload(3, DEFAULT_REQUESTS);
        assert_eq!(spec.peak_rate(), PEAK_RATE);
        let arrivals = crate::simulator::workload::generate_workload(&spec).unwrap();
        assert_eq!(arrivals.len(), DEFAULT_REQUESTS);
    }
}
