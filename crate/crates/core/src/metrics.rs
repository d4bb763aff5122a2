//! Per-request utility, penalty accounting and run summaries.
//!
//! Utility of one request is `w_e·E(c) + w_d·T(r)` where both terms are
//! piecewise: inside the closed target band the term is the raw value, outside
//! it is a penalty proportional to the distance from the violated bound.
//! The terms are generic over any ordered numeric type, so they can be
//! evaluated exactly over rationals as well as in floating point.

use std::io::Write;

use num_traits::Num;
use serde::{Deserialize, Serialize};

use crate::controller::knowledge::{Event, EventKind};
use crate::simulator::CompletionRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(
    default,
    deny_unknown_fields,
    bound(deserialize = "T: Deserialize<'de>, UtilityParams<T>: Default")
)]
pub struct UtilityParams<T = f64> {
    pub w_e: T,
    pub w_d: T,
    pub c_min: T,
    pub c_max: T,
    pub r_min: T,
    pub r_max: T,
    pub p_ev: T,
    pub p_dv: T,
    /// Keep the positive-valued confidence violation branches exactly as
    /// originally written instead of negating them.
    pub literal_confidence_signs: bool,
}

impl Default for UtilityParams<f64> {
    fn default() -> Self {
        UtilityParams {
            w_e: 0.5,
            w_d: 0.5,
            c_min: 0.5,
            c_max: 1.0,
            r_min: 0.1,
            r_max: 1.0,
            p_ev: 1.0,
            p_dv: 1.0,
            literal_confidence_signs: false,
        }
    }
}

impl<T: Num + PartialOrd + Copy> UtilityParams<T> {
    pub fn with_weights(mut self, w_e: T, w_d: T) -> Self {
        self.w_e = w_e;
        self.w_d = w_d;
        self
    }

    pub fn validate(&self) -> Result<()> {
        let zero = T::zero();
        let ok = self.c_min <= self.c_max
            && self.r_min <= self.r_max
            && self.p_ev >= zero
            && self.p_dv >= zero
            && self.w_e >= zero
            && self.w_d >= zero;
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidSpec(
                "utility parameters need C_min <= C_max, R_min <= R_max and non-negative weights and penalties".into(),
            ))
        }
    }

    pub fn confidence_in_range(&self, c: T) -> bool {
        self.c_min <= c && c <= self.c_max
    }

    pub fn response_in_range(&self, r: T) -> bool {
        self.r_min <= r && r <= self.r_max
    }
}

pub fn utility_confidence_term<T: Num + PartialOrd + Copy>(c: T, p: &UtilityParams<T>) -> T {
    let raw = if c > p.c_max {
        (c - p.c_max) * p.p_ev
    } else if c < p.c_min {
        (p.c_min - c) * p.p_ev
    } else {
        return c;
    };
    if p.literal_confidence_signs {
        raw
    } else {
        T::zero() - raw
    }
}

pub fn utility_response_term<T: Num + PartialOrd + Copy>(r: T, p: &UtilityParams<T>) -> T {
    if r > p.r_max {
        (p.r_max - r) * p.p_dv
    } else if r < p.r_min {
        (r - p.r_min) * p.p_dv
    } else {
        r
    }
}

pub fn utility_per_request<T: Num + PartialOrd + Copy>(c: T, r: T, p: &UtilityParams<T>) -> T {
    p.w_e * utility_confidence_term(c, p) + p.w_d * utility_response_term(r, p)
}

pub fn total_utility(records: &[CompletionRecord], params: &UtilityParams) -> Result<f64> {
    if records.is_empty() {
        return Err(Error::InvalidSpec("no completed requests to score".into()));
    }
    Ok(records.iter().map(|r| utility_per_request(r.c, r.r, params)).sum())
}

/// `(response-time violations, confidence violations)`.
pub fn count_penalties(records: &[CompletionRecord], params: &UtilityParams) -> (usize, usize) {
    records.iter().fold((0, 0), |(nr, nc), rec| {
        (
            nr + usize::from(!params.response_in_range(rec.r)),
            nc + usize::from(!params.confidence_in_range(rec.c)),
        )
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WeightPair {
    pub w_e: f64,
    pub w_d: f64,
}

impl WeightPair {
    pub const fn new(w_e: f64, w_d: f64) -> Self {
        WeightPair { w_e, w_d }
    }
}

/// The five weightings from pure response-time to pure confidence.
pub const DEFAULT_WEIGHT_GRID: [WeightPair; 5] = [
    WeightPair::new(0.0, 1.0),
    WeightPair::new(0.25, 0.75),
    WeightPair::new(0.5, 0.5),
    WeightPair::new(0.75, 0.25),
    WeightPair::new(1.0, 0.0),
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RunSummary {
    pub policy: String,
    pub requests: usize,
    pub switch_count: usize,
    pub avg_c: f64,
    pub avg_r: f64,
    pub avg_s_cpu: f64,
    pub r_penalties: usize,
    pub c_penalties: usize,
    pub utilities: Vec<(WeightPair, f64)>,
}

impl RunSummary {
    pub fn utility_at(&self, w: WeightPair) -> Option<f64> {
        self.utilities.iter().find(|(p, _)| *p == w).map(|(_, u)| *u)
    }
}

pub fn summarize(
    policy: &str,
    records: &[CompletionRecord],
    events: &[Event],
    grid: &[WeightPair],
    params: &UtilityParams,
) -> Result<RunSummary> {
    if records.is_empty() {
        return Err(Error::InvalidSpec(format!("policy `{policy}` completed no requests")));
    }
    let n = records.len() as f64;
    let (r_penalties, c_penalties) = count_penalties(records, params);
    let utilities = grid
        .iter()
        .map(|&w| {
            let p = params.with_weights(w.w_e, w.w_d);
            total_utility(records, &p).map(|u| (w, u))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(RunSummary {
        policy: policy.to_string(),
        requests: records.len(),
        switch_count: events.iter().filter(|e| e.kind == EventKind::Switch).count(),
        avg_c: records.iter().map(|r| r.c).sum::<f64>() / n,
        avg_r: records.iter().map(|r| r.r).sum::<f64>() / n,
        avg_s_cpu: records.iter().map(|r| r.s_cpu).sum::<f64>() / n,
        r_penalties,
        c_penalties,
        utilities,
    })
}

pub const SUMMARY_HEADER: [&str; 8] = [
    "policy",
    "requests",
    "switch_count",
    "avg_c",
    "avg_r",
    "avg_s_cpu",
    "r_penalties",
    "c_penalties",
];

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SummaryRow {
    pub policy: String,
    pub requests: usize,
    pub switch_count: usize,
    pub avg_c: f64,
    pub avg_r: f64,
    pub avg_s_cpu: f64,
    pub r_penalties: usize,
    pub c_penalties: usize,
}

impl From<&RunSummary> for SummaryRow {
    fn from(s: &RunSummary) -> Self {
        SummaryRow {
            policy: s.policy.clone(),
            requests: s.requests,
            switch_count: s.switch_count,
            avg_c: s.avg_c,
            avg_r: s.avg_r,
            avg_s_cpu: s.avg_s_cpu,
            r_penalties: s.r_penalties,
            c_penalties: s.c_penalties,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub w_e: f64,
    pub w_d: f64,
    pub policy: String,
    pub total_utility: f64,
}

pub fn write_summaries<W: Write>(writer: W, summaries: &[RunSummary]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for s in summaries {
        w.serialize(SummaryRow::from(s))?;
    }
    w.flush().map_err(|e| Error::io("<summary writer>", e))?;
    Ok(())
}

/// Weight-major utility sweep: `w_e,w_d,policy,total_utility`.
pub fn write_sweep<W: Write>(writer: W, summaries: &[RunSummary], grid: &[WeightPair]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for &pair in grid {
        for s in summaries {
            if let Some(u) = s.utility_at(pair) {
                w.serialize(SweepRow {
                    w_e: pair.w_e,
                    w_d: pair.w_d,
                    policy: s.policy.clone(),
                    total_utility: u,
                })?;
            }
        }
    }
    w.flush().map_err(|e| Error::io("<sweep writer>", e))?;
    Ok(())
}
