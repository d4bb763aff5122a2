//! Baseline policies: fixed arrival-rate thresholds, and a single static model.

use serde::{Deserialize, Serialize};

use crate::controller::knowledge::Knowledge;
use crate::controller::monitor::SystemState;
use crate::controller::planner::AdaptationPlan;
use crate::controller::SwitchingPolicy;
use crate::kpi::Kpi;
use crate::profiles::ModelProfile;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateThreshold {
    /// Inclusive upper bound on the arrival rate, requests/second.
    pub max_rate: f64,
    pub model: String,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NaivePolicyConfig {
    pub thresholds: Vec<RateThreshold>,
}

impl NaivePolicyConfig {
    pub fn new(thresholds: impl IntoIterator<Item = (f64, &'static str)>) -> Result<Self> {
        let cfg = NaivePolicyConfig {
            thresholds: thresholds
                .into_iter()
                .map(|(max_rate, model)| RateThreshold {
                    max_rate,
                    model: model.to_string(),
                })
                .collect(),
        };
        cfg.validate()?;
        Ok(cfg)
    }

    /// One threshold per model at its mean service capacity
    /// (`1 / mean tau_system`), slowest model first, the fastest unbounded.
    pub fn from_capacities(profiles: &[ModelProfile]) -> Result<Self> {
        if profiles.is_empty() {
            return Err(Error::Config("no profiles to derive naive thresholds from".into()));
        }
        let mut by_speed: Vec<(f64, &str)> = profiles
            .iter()
            .map(|p| (p.mean(Kpi::TauSystem), p.model_id()))
            .collect();
        by_speed.sort_by(|a, b| b.0.total_cmp(&a.0).then_with(|| a.1.cmp(b.1)));
        let last = by_speed.len() - 1;
        let thresholds = by_speed
            .into_iter()
            .enumerate()
            .map(|(i, (tau, model))| RateThreshold {
                max_rate: if i == last { f64::INFINITY } else { 1.0 / tau },
                model: model.to_string(),
            })
            .collect();
        let cfg = NaivePolicyConfig { thresholds };
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn validate(&self) -> Result<()> {
        let Some(last) = self.thresholds.last() else {
            return Err(Error::Config("naive policy needs at least one threshold".into()));
        };
        if last.max_rate != f64::INFINITY {
            return Err(Error::Config("last naive threshold must be unbounded (inf)".into()));
        }
        if self.thresholds.windows(2).any(|w| !(w[0].max_rate < w[1].max_rate)) {
            return Err(Error::Config("naive thresholds must be strictly increasing".into()));
        }
        Ok(())
    }

    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.thresholds.iter().map(|t| t.model.as_str())
    }
}

/// Model of the first threshold whose bound admits `v`.
pub fn naive_policy(v: f64, config: &NaivePolicyConfig) -> &str {
    config
        .thresholds
        .iter()
        .find(|t| v <= t.max_rate)
        .or(config.thresholds.last())
        .map(|t| t.model.as_str())
        .expect("validated config is non-empty")
}

#[derive(Debug, Clone)]
pub struct NaivePolicy {
    config: NaivePolicyConfig,
}

impl NaivePolicy {
    pub fn new(config: NaivePolicyConfig) -> Result<Self> {
        config.validate()?;
        Ok(NaivePolicy { config })
    }
}

impl SwitchingPolicy for NaivePolicy {
    fn name(&self) -> String {
        "naive".into()
    }

    fn initial_model(&self) -> String {
        naive_policy(0.0, &self.config).to_string()
    }

    fn decide(&mut self, state: &SystemState, _knowledge: &mut Knowledge) -> Result<Option<AdaptationPlan>> {
        let target = naive_policy(state.v, &self.config);
        Ok((target != state.m_prime)
            .then(|| AdaptationPlan::switch_to(target, format!("v={} crossed a threshold", state.v))))
    }
}

#[derive(Debug, Clone)]
pub struct StaticPolicy {
    model: String,
}

impl StaticPolicy {
    pub fn new(model: impl Into<String>) -> Self {
        StaticPolicy { model: model.into() }
    }
}

impl SwitchingPolicy for StaticPolicy {
    fn name(&self) -> String {
        format!("static:{}", self.model)
    }

    fn initial_model(&self) -> String {
        self.model.clone()
    }

    fn decide(&mut self, _state: &SystemState, _knowledge: &mut Knowledge) -> Result<Option<AdaptationPlan>> {
        Ok(None)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn three() -> NaivePolicyConfig {
        NaivePolicyConfig::new([(5.0, "E"), (15.0, "C"), (f64::INFINITY, "A")]).unwrap()
    }

    #[test]
    fn table_lookup() {
        let cfg = three();
        assert_eq!(naive_policy(10.0, &cfg), "C");
        assert_eq!(naive_policy(0.0, &cfg), "E");
        assert_eq!(naive_policy(5.0, &cfg), "E");
        assert_eq!(naive_policy(1e6, &cfg), "A");
    }

    #[test]
    fn validation() {
        assert!(NaivePolicyConfig::new([(5.0, "E"), (15.0, "C")]).is_err());
        assert!(NaivePolicyConfig::new([(5.0, "E"), (5.0, "C"), (f64::INFINITY, "A")]).is_err());
        assert!(NaivePolicyConfig::new([]).is_err());
    }
}
