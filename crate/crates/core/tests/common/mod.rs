#![allow(dead_code)]

use std::collections::BTreeMap;

use mlswitch_core::learning::CiMatrix;
use mlswitch_core::profiles::{KpiRecord, ModelProfile};
use mlswitch_core::simulator::CompletionRecord;
use mlswitch_core::stats::ConfidenceInterval;
use mlswitch_core::{Kpi, KpiValues};

pub fn record(image: usize, model: &str, c: f64, tau_system: f64) -> KpiRecord {
    KpiRecord {
        image_id: format!("img-{image:06}"),
        model_id: model.into(),
        c,
        tau_model: tau_system * 0.9,
        tau_system,
        s_cpu: 50.0,
        b: 3,
    }
}

/// Profile whose every record has the same service time and confidence.
pub fn constant_profile(model: &str, tau_system: f64, c: f64, images: usize) -> ModelProfile {
    let records = (0..images).map(|i| record(i, model, c, tau_system)).collect();
    ModelProfile::new(model, model, records).unwrap()
}

pub fn completion(id: u64, c: f64, r: f64) -> CompletionRecord {
    CompletionRecord {
        request_id: id,
        arrival_t: id as f64,
        start_t: id as f64,
        finish_t: id as f64 + r,
        model_id: "m".into(),
        c,
        tau_model: 0.05,
        tau_system: 0.05,
        s_cpu: 40.0,
        b: 2,
        r,
    }
}

pub fn interval(low: f64, high: f64) -> ConfidenceInterval<f64> {
    ConfidenceInterval {
        low,
        high,
        n: 30,
        mean: (low + high) / 2.0,
    }
}

/// Per-model `(tau interval, c interval)` for each cluster of one anchor.
pub type ClusterSpec = Vec<BTreeMap<String, (ConfidenceInterval<f64>, ConfidenceInterval<f64>)>>;

pub fn matrix(anchor: &str, clusters: &ClusterSpec) -> CiMatrix {
    CiMatrix {
        anchor_model_id: anchor.into(),
        clusters: clusters
            .iter()
            .map(|per_model| {
                per_model
                    .iter()
                    .map(|(m, (tau, c))| {
                        let mut cis = KpiValues::from_fn(|_| interval(0.4, 0.6));
                        cis[Kpi::TauModel] = *tau;
                        cis[Kpi::TauSystem] = interval(tau.low + 0.005, tau.high + 0.005);
                        cis[Kpi::C] = *c;
                        (m.clone(), cis)
                    })
                    .collect()
            })
            .collect(),
        kpi_scale: None,
    }
}

/// Minimum WCSS over all partitions of `values` into `k` non-empty groups,
/// by dynamic programming over contiguous runs of the sorted values.
pub fn optimal_wcss(values: &[f64], k: usize) -> f64 {
    let mut xs = values.to_vec();
    xs.sort_by(f64::total_cmp);
    let n = xs.len();
    let cost = |i: usize, j: usize| {
        let run = &xs[i..j];
        let m = run.iter().sum::<f64>() / run.len() as f64;
        run.iter().map(|x| (x - m) * (x - m)).sum::<f64>()
    };
    let mut dp = vec![vec![f64::INFINITY; n + 1]; k + 1];
    dp[0][0] = 0.0;
    for g in 1..=k {
        for j in g..=n {
            for i in (g - 1)..j {
                let c = dp[g - 1][i] + cost(i, j);
                if c < dp[g][j] {
                    dp[g][j] = c;
                }
            }
        }
    }
    dp[k][n]
}
