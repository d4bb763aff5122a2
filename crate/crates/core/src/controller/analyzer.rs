//! Analyze phase: match the live window to a cluster of the active model's
//! rules, derive the request-rate range that cluster can sustain and decide,
//! after a debounce, whether the planner should run.

use crate::controller::knowledge::Knowledge;
use crate::controller::monitor::SystemState;
use crate::kpi::{Kpi, KpiValues};
use crate::learning::CiMatrix;
use crate::scalar::Scalar;
use crate::stats::ConfidenceInterval;
use crate::{Error, Result};

pub const DEFAULT_T_WAIT: f64 = 0.25;

#[derive(Debug, Clone, PartialEq)]
pub struct PlannerInput {
    pub v_adj: f64,
    pub m_prime: String,
    pub cluster: usize,
}

/// The two KPIs whose per-cluster offline means of the anchor differ most,
/// measured as variance across clusters after scaling each KPI by its
/// profile-wide standard deviation. Ties keep [`Kpi::ALL`] order.
pub fn discriminating_kpis(ci: &CiMatrix) -> Result<[Kpi; 2]> {
    let scale = ci.kpi_scale.unwrap_or(KpiValues::splat(1.0));
    let means = (0..ci.cluster_count())
        .map(|l| ci.anchor_means(l))
        .collect::<Result<Vec<_>>>()?;
    let k = means.len() as f64;
    let spread = KpiValues::from_fn(|kpi| {
        if scale[kpi] <= 0.0 || means.is_empty() {
            return 0.0;
        }
        let z: Vec<f64> = means.iter().map(|m| m[kpi] / scale[kpi]).collect();
        let mu = z.iter().sum::<f64>() / k;
        z.iter().map(|x| (x - mu) * (x - mu)).sum::<f64>() / k
    });
    let mut order = Kpi::ALL;
    order.sort_by(|a, b| spread[*b].total_cmp(&spread[*a]));
    Ok([order[0], order[1]])
}

/// Nearest cluster to the window means in the 2-D scaled space of the
/// discriminating KPIs; ties go to the lower cluster index.
pub fn find_closest_cluster(window_means: &KpiValues<f64>, ci: &CiMatrix) -> Result<usize> {
    if ci.cluster_count() <= 1 {
        return Ok(0);
    }
    let kpis = discriminating_kpis(ci)?;
    let scale = ci.kpi_scale.unwrap_or(KpiValues::splat(1.0));
    let unit = |kpi: Kpi| if scale[kpi] > 0.0 { scale[kpi] } else { 1.0 };
    let mut best = (0, f64::INFINITY);
    for l in 0..ci.cluster_count() {
        let centre = ci.anchor_means(l)?;
        let d2: f64 = kpis
            .iter()
            .map(|&k| {
                let d = (window_means[k] - centre[k]) / unit(k);
                d * d
            })
            .sum();
        if d2 < best.1 {
            best = (l, d2);
        }
    }
    Ok(best.0)
}

/// `(1 / high, 1 / low)` of a processing-time interval, in requests per second.
pub fn rate_range<T: Scalar>(tau: &ConfidenceInterval<T>) -> Result<(T, T)> {
    if !(tau.low > T::zero()) || tau.high < tau.low {
        return Err(Error::RuleCorruption(format!(
            "processing-time interval [{:?}, {:?}] must be positive and ordered",
            tau.low, tau.high
        )));
    }
    Ok((tau.high.recip(), tau.low.recip()))
}

pub fn feasible_rate_range(ci: &CiMatrix, m_prime: &str, cluster: usize) -> Result<(f64, f64)> {
    rate_range(ci.entry(cluster, m_prime, Kpi::TauModel)?)
}

/// Arrival rate plus the whole backlog, treated as demand that must clear
/// within the next second.
pub fn compute_adjusted_rate(v: f64, i_w: usize) -> f64 {
    v + i_w as f64
}

#[derive(Debug, Clone, PartialEq)]
pub struct Assessment {
    pub cluster: usize,
    pub v_min: f64,
    pub v_max: f64,
    pub v_adj: f64,
}

impl Assessment {
    pub fn in_range(&self) -> bool {
        self.v_min <= self.v_adj && self.v_adj <= self.v_max
    }
}

/// Cluster, feasible range and adjusted rate for `state`; `None` when the
/// window is empty.
pub fn assess(state: &SystemState, ci: &CiMatrix) -> Result<Option<Assessment>> {
    let Some(means) = state.window_means else {
        return Ok(None);
    };
    let cluster = find_closest_cluster(&means.kpis, ci)?;
    let (v_min, v_max) = feasible_rate_range(ci, &state.m_prime, cluster)?;
    Ok(Some(Assessment {
        cluster,
        v_min,
        v_max,
        v_adj: compute_adjusted_rate(state.v, state.i_w),
    }))
}

/// Violation debounce: armed at the first violating check, fires at the first
/// still-violating check at least `t_wait` later, disarms on any clean check.
#[derive(Debug, Clone, PartialEq)]
pub struct Debounce {
    t_wait: f64,
    armed_at: Option<f64>,
}

impl Debounce {
    pub fn new(t_wait: f64) -> Self {
        Debounce { t_wait, armed_at: None }
    }

    pub fn armed_at(&self) -> Option<f64> {
        self.armed_at
    }

    /// Returns true when the planner should run now.
    pub fn update(&mut self, violating: bool, now: f64) -> bool {
        if !violating {
            self.armed_at = None;
            return false;
        }
        let armed = *self.armed_at.get_or_insert(now);
        if now - armed >= self.t_wait {
            self.armed_at = None;
            true
        } else {
            false
        }
    }
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct AnalyzeOutcome {
    pub assessment: Option<Assessment>,
    pub trigger: Option<PlannerInput>,
}

#[derive(Debug, Clone)]
pub struct Analyzer {
    debounce: Debounce,
}

impl Analyzer {
    pub fn new(t_wait: f64) -> Self {
        Analyzer {
            debounce: Debounce::new(t_wait),
        }
    }

    pub fn debounce(&self) -> &Debounce {
        &self.debounce
    }

    pub fn analyze(&mut self, state: &SystemState, knowledge: &Knowledge, now: f64) -> Result<AnalyzeOutcome> {
        let ci = knowledge.rules_for(&state.m_prime)?;
        let Some(assessment) = assess(state, ci)? else {
            return Ok(AnalyzeOutcome::default());
        };
        let fire = self.debounce.update(!assessment.in_range(), now);
        let trigger = fire.then(|| PlannerInput {
            v_adj: assessment.v_adj,
            m_prime: state.m_prime.clone(),
            cluster: assessment.cluster,
        });
        Ok(AnalyzeOutcome {
            assessment: Some(assessment),
            trigger,
        })
    }
}
