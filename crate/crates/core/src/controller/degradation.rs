//! Optional removal of models whose live confidence falls persistently below
//! their learned lower bound. Disabled unless configured.

use std::collections::{BTreeMap, BTreeSet};

use serde::{Deserialize, Serialize};

use crate::controller::knowledge::{EventKind, Knowledge};
use crate::kpi::Kpi;
use crate::simulator::CompletionRecord;
use crate::Result;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DegradationConfig {
    /// Allowed shortfall below the learned `low(c)`.
    pub margin: f64,
    /// Consecutive failing analyses before removal.
    pub consecutive: usize,
}

#[derive(Debug, Clone, Default)]
pub struct DegradationTracker {
    config: Option<DegradationConfig>,
    streaks: BTreeMap<String, usize>,
    generation: u64,
}

impl DegradationTracker {
    pub fn new(config: Option<DegradationConfig>) -> Self {
        DegradationTracker {
            config,
            ..Default::default()
        }
    }

    pub fn enabled(&self) -> bool {
        self.config.is_some()
    }

    /// Scores one analysis of `model` (matched to `cluster`) against its own
    /// rule matrix and returns the current blacklist.
    pub fn blacklist_degraded(
        &mut self,
        knowledge: &mut Knowledge,
        model: &str,
        cluster: usize,
        window: &[CompletionRecord],
        now: f64,
    ) -> Result<BTreeSet<String>> {
        let Some(cfg) = self.config else {
            return Ok(BTreeSet::new());
        };
        if knowledge.rules_generation() != self.generation {
            self.streaks.clear();
            self.generation = knowledge.rules_generation();
        }
        if window.is_empty() {
            return Ok(knowledge.blacklist().clone());
        }
        let mean_c = window.iter().map(|r| r.c).sum::<f64>() / window.len() as f64;
        let low_c = knowledge.rules_for(model)?.entry(cluster, model, Kpi::C)?.low;
        let streak = self.streaks.entry(model.to_string()).or_default();
        if mean_c < low_c - cfg.margin {
            *streak += 1;
        } else {
            *streak = 0;
        }
        if *streak >= cfg.consecutive.max(1) && knowledge.blacklist_model(model) {
            knowledge.log_event(
                now,
                EventKind::Blacklist,
                format!("{model}: window c {mean_c:.4} below {low_c:.4} - {}", cfg.margin),
            );
        }
        Ok(knowledge.blacklist().clone())
    }
}
