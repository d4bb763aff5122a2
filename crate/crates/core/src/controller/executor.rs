//! Execute phase.

use crate::controller::knowledge::{EventKind, Knowledge};
use crate::controller::planner::{AdaptationPlan, PlanAction};
use crate::{Error, Result};

/// Switch cost with preloaded models, seconds.
pub const DEFAULT_SWITCH_LATENCY: f64 = 0.005;

/// What the executor needs from the serving system.
pub trait ServingSystem {
    fn active_model(&self) -> &str;
    fn has_model(&self, model: &str) -> bool;
    /// True while a previously requested switch has not taken effect.
    fn switching(&self) -> bool;
    /// Pauses service intake for `latency`, then makes `model` active.
    fn begin_switch(&mut self, model: &str, now: f64, latency: f64);
}

#[derive(Debug, Clone, PartialEq)]
pub enum ExecutionEffect {
    Unchanged,
    Switching {
        from: String,
        to: String,
        effective_at: f64,
    },
}

pub fn execute(
    plan: &AdaptationPlan,
    system: &mut dyn ServingSystem,
    knowledge: &mut Knowledge,
    now: f64,
    switch_latency: f64,
) -> Result<ExecutionEffect> {
    match &plan.action {
        PlanAction::SwitchTo(target) if target != system.active_model() => {
            if !system.has_model(target) {
                return Err(Error::Execution(format!("unknown model `{target}`")));
            }
            let from = system.active_model().to_string();
            system.begin_switch(target, now, switch_latency);
            let effective_at = now + switch_latency;
            knowledge.log_event(
                now,
                EventKind::Switch,
                format!("{from} -> {target} at {effective_at}; {}", plan.reason),
            );
            Ok(ExecutionEffect::Switching {
                from,
                to: target.clone(),
                effective_at,
            })
        }
        _ => {
            knowledge.log_event(now, EventKind::NoOp, plan.reason.clone());
            Ok(ExecutionEffect::Unchanged)
        }
    }
}
