//! Offline learning engine: clusters each model's system processing times,
//! joins every model's KPIs per image and summarises each cluster with
//! confidence intervals. The resulting [`CiMatrix`] per model is the
//! adaptation-rule knowledge the controller plans with.

pub mod elbow;
pub mod kmeans;
pub mod matrix;

use std::collections::BTreeMap;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

pub use elbow::{elbow_from_wcss, select_k_elbow, ElbowChoice};
pub use kmeans::{kmeans_1d, Clustering};
pub use matrix::{
    build_ci_matrix, build_performance_matrix, load_ci_matrices, read_ci_matrices, save_ci_matrix, write_ci_matrices,
    CiMatrix, ClusteredProfile, KpiIntervals, PerfMatrix, PerfRow,
};

use crate::kpi::Kpi;
use crate::profiles::ModelProfile;
use crate::seed;
use crate::stats::{CiMethod, DEFAULT_LEVEL};
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct LearningParams {
    pub k_max: usize,
    pub ci_level: f64,
    pub ci_method: CiMethod,
    pub restarts: usize,
}

impl Default for LearningParams {
    fn default() -> Self {
        LearningParams {
            k_max: 8,
            ci_level: DEFAULT_LEVEL,
            ci_method: CiMethod::NormalMean,
            restarts: kmeans::DEFAULT_RESTARTS,
        }
    }
}

/// Everything the engine learned about one anchor model.
#[derive(Debug, Clone, PartialEq)]
pub struct LearnedModel {
    /// k chosen by the elbow rule.
    pub selected_k: usize,
    /// WCSS for k = 1..=k_max.
    pub wcss: Vec<f64>,
    pub clustered: ClusteredProfile,
    pub rules: CiMatrix,
}

pub fn cluster_profile(
    profile: &ModelProfile,
    params: &LearningParams,
    seed: u64,
) -> Result<(ElbowChoice<f64>, ClusteredProfile)> {
    let taus = profile.column(Kpi::TauSystem);
    let k_max = params.k_max.min(taus.len()).max(2);
    let choice = if taus.len() >= 2 {
        select_k_elbow(&taus, k_max, seed, params.restarts)?
    } else {
        ElbowChoice { k: 1, wcss: vec![0.0] }
    };
    let k = choice.k.min(kmeans::distinct_count(&taus));
    let clustering = kmeans_1d(&taus, k, seed, params.restarts)?;
    let labels = profile
        .records()
        .iter()
        .zip(&clustering.labels)
        .map(|(r, &l)| (r.image_id.clone(), l))
        .collect();
    Ok((
        choice,
        ClusteredProfile {
            anchor_model_id: profile.model_id().to_string(),
            labels,
            centroids: clustering.centroids,
        },
    ))
}

/// Runs the full pipeline for every model. Each model's pipeline draws from a
/// seed derived from `seed` and its id, so results do not depend on the order
/// of `profiles`.
pub fn run_learning_engine(
    profiles: &[ModelProfile],
    params: &LearningParams,
    seed: u64,
) -> Result<BTreeMap<String, LearnedModel>> {
    if profiles.is_empty() {
        return Err(Error::InvalidSpec("no profiles to learn from".into()));
    }
    if params.k_max < 2 {
        return Err(Error::Clustering(format!(
            "k_max = {} must be at least 2",
            params.k_max
        )));
    }
    profiles
        .par_iter()
        .map(|profile| {
            let id = profile.model_id();
            let (choice, clustered) = cluster_profile(profile, params, seed::derive(seed, id))?;
            let perf = build_performance_matrix(id, profiles, &clustered)?;
            let rules = build_ci_matrix(id, &perf, params.ci_level, params.ci_method)?;
            Ok((
                id.to_string(),
                LearnedModel {
                    selected_k: choice.k,
                    wcss: choice.wcss,
                    clustered,
                    rules,
                },
            ))
        })
        .collect::<Result<Vec<_>>>()
        .map(|v| v.into_iter().collect())
}
