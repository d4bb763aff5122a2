use crate::controller::analyzer::{Analyzer, DEFAULT_T_WAIT};
use crate::controller::degradation::{DegradationConfig, DegradationTracker};
use crate::controller::knowledge::{EventKind, Knowledge};
use crate::controller::monitor::SystemState;
use crate::controller::planner::{plan, AdaptationPlan, PlanAction};
use crate::controller::SwitchingPolicy;
use crate::stats::{CiMethod, DEFAULT_LEVEL};
use crate::Result;

#[derive(Debug, Clone, PartialEq)]
pub struct AdaptiveConfig {
    pub t_wait: f64,
    pub ci_level: f64,
    pub ci_method: CiMethod,
    pub degradation: Option<DegradationConfig>,
}

impl Default for AdaptiveConfig {
    fn default() -> Self {
        AdaptiveConfig {
            t_wait: DEFAULT_T_WAIT,
            ci_level: DEFAULT_LEVEL,
            ci_method: CiMethod::NormalMean,
            degradation: None,
        }
    }
}

/// Rule-driven analyze/plan policy.
#[derive(Debug, Clone)]
pub struct AdaptiveController {
    config: AdaptiveConfig,
    analyzer: Analyzer,
    tracker: DegradationTracker,
    initial: String,
}

impl AdaptiveController {
    pub fn new(config: AdaptiveConfig, initial_model: impl Into<String>) -> Self {
        AdaptiveController {
            analyzer: Analyzer::new(config.t_wait),
            tracker: DegradationTracker::new(config.degradation),
            config,
            initial: initial_model.into(),
        }
    }
}

impl SwitchingPolicy for AdaptiveController {
    fn name(&self) -> String {
        "adamls".into()
    }

    fn initial_model(&self) -> String {
        self.initial.clone()
    }

    fn decide(&mut self, state: &SystemState, knowledge: &mut Knowledge) -> Result<Option<AdaptationPlan>> {
        let outcome = self.analyzer.analyze(state, knowledge, state.time)?;
        let Some(assessment) = outcome.assessment else {
            return Ok(None);
        };
        if self.tracker.enabled() {
            self.tracker.blacklist_degraded(
                knowledge,
                &state.m_prime,
                assessment.cluster,
                &state.window,
                state.time,
            )?;
        }
        let Some(input) = outcome.trigger else {
            return Ok(None);
        };
        knowledge.log_event(
            state.time,
            EventKind::AnalyzeTrigger,
            format!(
                "m'={} cluster={} v={} i_w={} v_adj={} range=[{:.3}, {:.3}]",
                input.m_prime, input.cluster, state.v, state.i_w, input.v_adj, assessment.v_min, assessment.v_max
            ),
        );
        let plan = plan(
            &input,
            knowledge,
            &state.window,
            self.config.ci_level,
            self.config.ci_method,
        )?;
        let target = match &plan.action {
            PlanAction::NoOp => "none",
            PlanAction::SwitchTo(m) => m.as_str(),
        };
        knowledge.log_event(
            state.time,
            EventKind::Plan,
            format!("switch_to={target}; {}", plan.reason),
        );
        Ok(Some(plan))
    }
}
