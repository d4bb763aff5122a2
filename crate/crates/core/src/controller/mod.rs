//! The MAPE-K controller and the baseline policies it is compared against.
//!
//! A [`ControlLoop`] owns the [`Knowledge`] and a [`Monitor`], is fed arrivals
//! and completions by the serving system, and on every step asks its
//! [`SwitchingPolicy`] for an [`AdaptationPlan`] which it hands to
//! [`execute`].

pub mod adaptive;
pub mod analyzer;
pub mod baseline;
pub mod degradation;
pub mod executor;
pub mod knowledge;
pub mod monitor;
pub mod planner;

pub use adaptive::{AdaptiveConfig, AdaptiveController};
pub use analyzer::{
    assess, compute_adjusted_rate, discriminating_kpis, feasible_rate_range, find_closest_cluster, rate_range,
    AnalyzeOutcome, Analyzer, Assessment, Debounce, PlannerInput,
};
pub use baseline::{naive_policy, NaivePolicy, NaivePolicyConfig, RateThreshold, StaticPolicy};
pub use degradation::{DegradationConfig, DegradationTracker};
pub use executor::{execute, ExecutionEffect, ServingSystem, DEFAULT_SWITCH_LATENCY};
pub use knowledge::{Event, EventKind, Knowledge, MetricsSample};
pub use monitor::{monitor_snapshot, window_means, Monitor, SystemState, WindowMeans};
pub use planner::{candidates, plan, select_best, AdaptationPlan, Candidate, PlanAction};

use crate::simulator::CompletionRecord;
use crate::Result;

/// A model-selection strategy driven by monitor snapshots.
pub trait SwitchingPolicy: Send {
    fn name(&self) -> String;
    fn initial_model(&self) -> String;
    /// Returns a plan to execute, or `None` to leave the system untouched
    /// without logging a decision.
    fn decide(&mut self, state: &SystemState, knowledge: &mut Knowledge) -> Result<Option<AdaptationPlan>>;
}

pub struct ControlLoop {
    monitor: Monitor,
    policy: Box<dyn SwitchingPolicy>,
    knowledge: Knowledge,
    switch_latency: f64,
}

impl ControlLoop {
    pub fn new(policy: Box<dyn SwitchingPolicy>, knowledge: Knowledge, window_len: usize, switch_latency: f64) -> Self {
        ControlLoop {
            monitor: Monitor::new(window_len),
            policy,
            knowledge,
            switch_latency,
        }
    }

    pub fn policy_name(&self) -> String {
        self.policy.name()
    }

    pub fn initial_model(&self) -> String {
        self.policy.initial_model()
    }

    pub fn knowledge(&self) -> &Knowledge {
        &self.knowledge
    }

    pub fn on_arrival(&mut self, t: f64) {
        self.monitor.observe_arrival(t);
    }

    pub fn on_completion(&mut self, record: CompletionRecord) -> Result<()> {
        self.monitor.observe_completion(&record);
        self.knowledge.append_completion(record)
    }

    /// One monitor → analyze → plan → execute pass. `periodic` marks ticks,
    /// which also write a MONITOR event.
    pub fn step(&mut self, now: f64, pending: usize, system: &mut dyn ServingSystem, periodic: bool) -> Result<()> {
        let state = self.monitor.snapshot(now, pending, system.active_model());
        self.knowledge.record_metrics(MetricsSample {
            time: now,
            v: state.v,
            pending,
            active_model: state.m_prime.clone(),
        });
        if periodic {
            self.knowledge.log_event(
                now,
                EventKind::Monitor,
                format!(
                    "m'={} v={} i_w={} window={}",
                    state.m_prime,
                    state.v,
                    state.i_w,
                    state.window.len()
                ),
            );
        }
        if system.switching() {
            return Ok(());
        }
        if let Some(plan) = self.policy.decide(&state, &mut self.knowledge)? {
            execute(&plan, system, &mut self.knowledge, now, self.switch_latency)?;
        }
        Ok(())
    }

    pub fn into_knowledge(self) -> Knowledge {
        self.knowledge
    }
}
