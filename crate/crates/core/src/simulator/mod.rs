//! Discrete-event simulation of a request-serving system whose active model
//! is chosen by a [`crate::controller::SwitchingPolicy`].

pub mod engine;
pub mod workload;

use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

pub use engine::{
    models_used, run_simulation, run_with_arrivals, sample_kpis, Boundary, PolicySpec, SimConfig, SimOutput,
};
pub use workload::{generate_workload, ArrivalProcess, RateSegment, WorkloadSpec};

use crate::kpi::Kpi;
use crate::{Error, Result};

pub const RESULTS_HEADER: [&str; 11] = [
    "request_id",
    "arrival_t",
    "start_t",
    "finish_t",
    "model",
    "c",
    "tau_model",
    "tau_system",
    "s_cpu",
    "b",
    "r",
];

/// One served request.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CompletionRecord {
    pub request_id: u64,
    pub arrival_t: f64,
    pub start_t: f64,
    pub finish_t: f64,
    #[serde(rename = "model")]
    pub model_id: String,
    pub c: f64,
    pub tau_model: f64,
    pub tau_system: f64,
    pub s_cpu: f64,
    pub b: u32,
    /// Response time: `finish_t - arrival_t` plus any configured network delay.
    pub r: f64,
}

impl CompletionRecord {
    pub fn kpi(&self, kpi: Kpi) -> f64 {
        match kpi {
            Kpi::C => self.c,
            Kpi::TauModel => self.tau_model,
            Kpi::TauSystem => self.tau_system,
            Kpi::SCpu => self.s_cpu,
            Kpi::B => f64::from(self.b),
        }
    }
}

pub fn write_results<W: Write>(writer: W, records: &[CompletionRecord]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    if records.is_empty() {
        w.write_record(RESULTS_HEADER)?;
    }
    for r in records {
        w.serialize(r)?;
    }
    w.flush().map_err(|e| Error::io("<results writer>", e))?;
    Ok(())
}

pub fn save_results(path: &Path, records: &[CompletionRecord]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_results(file, records)
}

pub fn read_results<R: Read>(reader: R) -> Result<Vec<CompletionRecord>> {
    csv::Reader::from_reader(reader)
        .deserialize()
        .map(|r| r.map_err(Error::from))
        .collect()
}
