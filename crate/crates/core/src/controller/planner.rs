//! Plan phase: keep the models that can absorb the adjusted request rate and
//! pick the one with the highest lower confidence bound on confidence.

use std::cmp::Ordering;
use std::collections::BTreeSet;

use crate::controller::analyzer::PlannerInput;
use crate::controller::knowledge::Knowledge;
use crate::kpi::Kpi;
use crate::simulator::CompletionRecord;
use crate::stats::{compute_ci, CiMethod};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Eq)]
pub enum PlanAction {
    NoOp,
    SwitchTo(String),
}

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptationPlan {
    pub action: PlanAction,
    pub reason: String,
}

impl AdaptationPlan {
    pub fn noop(reason: impl Into<String>) -> Self {
        AdaptationPlan {
            action: PlanAction::NoOp,
            reason: reason.into(),
        }
    }

    pub fn switch_to(model: impl Into<String>, reason: impl Into<String>) -> Self {
        AdaptationPlan {
            action: PlanAction::SwitchTo(model.into()),
            reason: reason.into(),
        }
    }
}

/// Planner view of one model under the matched cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct Candidate {
    pub model_id: String,
    pub tau_low: f64,
    pub tau_high: f64,
    pub c_low: f64,
}

impl Candidate {
    /// Highest request rate the model is expected to sustain.
    pub fn max_rate(&self) -> f64 {
        1.0 / self.tau_low
    }

    pub fn accepts(&self, v_adj: f64) -> bool {
        v_adj <= self.max_rate()
    }
}

/// Builds the candidate list: the active model from its live window, every
/// other model from the active model's rule matrix at the matched cluster.
pub fn candidates(
    input: &PlannerInput,
    knowledge: &Knowledge,
    live_window: &[CompletionRecord],
    level: f64,
    method: CiMethod,
) -> Result<Vec<Candidate>> {
    let ci = knowledge.rules_for(&input.m_prime)?;
    if input.cluster >= ci.cluster_count() {
        return Err(Error::RuleCorruption(format!(
            "cluster {} out of range for `{}`",
            input.cluster, input.m_prime
        )));
    }
    let models: Vec<String> = ci.models().map(str::to_string).collect();
    models
        .into_iter()
        .map(|model| {
            let (tau, c) = if model == input.m_prime && !live_window.is_empty() {
                let taus: Vec<f64> = live_window.iter().map(|r| r.tau_model).collect();
                let cs: Vec<f64> = live_window.iter().map(|r| r.c).collect();
                let mut tau = compute_ci(&taus, level, method)?;
                // A wide live interval can reach zero; the fastest observation
                // is the tightest bound that stays physical.
                if tau.low <= 0.0 {
                    tau.low = taus.iter().copied().fold(f64::INFINITY, f64::min);
                }
                (tau, compute_ci(&cs, level, method)?)
            } else {
                (
                    *ci.entry(input.cluster, &model, Kpi::TauModel)?,
                    *ci.entry(input.cluster, &model, Kpi::C)?,
                )
            };
            if !(tau.low > 0.0) {
                return Err(Error::RuleCorruption(format!(
                    "non-positive processing-time bound for `{model}` in cluster {}",
                    input.cluster
                )));
            }
            Ok(Candidate {
                model_id: model,
                tau_low: tau.low,
                tau_high: tau.high,
                c_low: c.low,
            })
        })
        .collect()
}

/// Preference order: higher `c_low`, then the incumbent, then smaller
/// `tau_high`, then model id.
fn preference(a: &Candidate, b: &Candidate, incumbent: &str) -> Ordering {
    b.c_low
        .total_cmp(&a.c_low)
        .then_with(|| (b.model_id == incumbent).cmp(&(a.model_id == incumbent)))
        .then_with(|| a.tau_high.total_cmp(&b.tau_high))
        .then_with(|| a.model_id.cmp(&b.model_id))
}

pub fn select_best<'a>(
    candidates: &'a [Candidate],
    v_adj: f64,
    incumbent: &str,
    excluded: &BTreeSet<String>,
) -> Option<&'a Candidate> {
    candidates
        .iter()
        .filter(|c| !excluded.contains(&c.model_id) && c.accepts(v_adj))
        .min_by(|a, b| preference(a, b, incumbent))
}

pub fn plan(
    input: &PlannerInput,
    knowledge: &Knowledge,
    live_window: &[CompletionRecord],
    level: f64,
    method: CiMethod,
) -> Result<AdaptationPlan> {
    let cands = candidates(input, knowledge, live_window, level, method)?;
    let Some(best) = select_best(&cands, input.v_adj, &input.m_prime, knowledge.blacklist()) else {
        return Ok(AdaptationPlan::noop(format!(
            "no suitable model for v_adj={:.3}",
            input.v_adj
        )));
    };
    if best.model_id == input.m_prime {
        Ok(AdaptationPlan::noop(format!(
            "{} remains best for v_adj={:.3} (c_low={:.4})",
            best.model_id, input.v_adj, best.c_low
        )))
    } else {
        Ok(AdaptationPlan::switch_to(
            best.model_id.clone(),
            format!(
                "v_adj={:.3} cluster={} max_rate={:.3} c_low={:.4}",
                input.v_adj,
                input.cluster,
                best.max_rate(),
                best.c_low
            ),
        ))
    }
}
