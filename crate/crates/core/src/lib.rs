//! QoS-aware switching between interchangeable ML models.
//!
//! The crate has two halves. The offline half turns per-model KPI profiles
//! into adaptation rules: every model's per-image system processing times are
//! clustered in one dimension, KPIs of all models are joined per image, and a
//! confidence interval is computed for every (cluster, model, KPI) cell. The
//! online half is a MAPE-K controller that watches a simulated serving system,
//! maps the recent window to one of those clusters and switches to the most
//! accurate model that can sustain the observed load.
//!
//! Numeric kernels ([`stats`], [`learning::kmeans`], [`metrics`] utility terms,
//! [`controller::analyzer::rate_range`]) are generic over the scalar type. The
//! aliases below fix the concrete `f64` instantiation used by the rest of the
//! crate.

// `!(x > 0.0)` style checks are meant to reject NaN as well.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod config;
pub mod controller;
pub mod error;
pub mod experiment;
pub mod kpi;
pub mod learning;
pub mod metrics;
pub mod profiles;
pub mod scalar;
pub mod scenario;
pub mod seed;
pub mod simulator;
pub mod stats;

pub use error::{Error, Result};
pub use kpi::{Kpi, KpiValues};
pub use scalar::Scalar;

/// Scalar used for simulated time, KPI records and rule matrices.
pub type Real = f64;

pub type Interval = stats::ConfidenceInterval<Real>;
pub type Utility = metrics::UtilityParams<Real>;
pub type Clustering = learning::kmeans::Clustering<Real>;
pub type Kpis = KpiValues<Real>;
