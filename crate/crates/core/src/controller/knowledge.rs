//! The shared Knowledge of the MAPE-K loop: completion log, adaptation rules,
//! system metrics and the controller's event log.

use std::collections::{BTreeMap, BTreeSet};
use std::fmt;
use std::io::{Read, Write};
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::learning::CiMatrix;
use crate::simulator::CompletionRecord;
use crate::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum EventKind {
    Monitor,
    AnalyzeTrigger,
    Plan,
    Switch,
    NoOp,
    Blacklist,
}

impl EventKind {
    pub fn name(self) -> &'static str {
        match self {
            EventKind::Monitor => "MONITOR",
            EventKind::AnalyzeTrigger => "ANALYZE_TRIGGER",
            EventKind::Plan => "PLAN",
            EventKind::Switch => "SWITCH",
            EventKind::NoOp => "NOOP",
            EventKind::Blacklist => "BLACKLIST",
        }
    }
}

impl fmt::Display for EventKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for EventKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        [
            EventKind::Monitor,
            EventKind::AnalyzeTrigger,
            EventKind::Plan,
            EventKind::Switch,
            EventKind::NoOp,
            EventKind::Blacklist,
        ]
        .into_iter()
        .find(|k| k.name() == s)
        .ok_or_else(|| Error::InvalidSpec(format!("unknown event kind `{s}`")))
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Event {
    pub time: f64,
    pub kind: EventKind,
    pub detail: String,
}

/// One row of the system metrics repository.
#[derive(Debug, Clone, PartialEq)]
pub struct MetricsSample {
    pub time: f64,
    pub v: f64,
    pub pending: usize,
    pub active_model: String,
}

#[derive(Debug, Clone, Default)]
pub struct Knowledge {
    log: Vec<CompletionRecord>,
    rules: BTreeMap<String, CiMatrix>,
    rules_generation: u64,
    metrics: Vec<MetricsSample>,
    events: Vec<Event>,
    blacklist: BTreeSet<String>,
}

impl Knowledge {
    pub fn new(rules: BTreeMap<String, CiMatrix>) -> Self {
        Knowledge {
            rules,
            ..Knowledge::default()
        }
    }

    /// Replaces the rule repository with a fresh learning batch. Clears the
    /// degraded-model blacklist.
    pub fn install_rules(&mut self, rules: BTreeMap<String, CiMatrix>) {
        self.rules = rules;
        self.rules_generation += 1;
        self.blacklist.clear();
    }

    pub fn rules(&self) -> &BTreeMap<String, CiMatrix> {
        &self.rules
    }

    pub fn rules_generation(&self) -> u64 {
        self.rules_generation
    }

    pub fn rules_for(&self, model: &str) -> Result<&CiMatrix> {
        self.rules
            .get(model)
            .ok_or_else(|| Error::RuleCorruption(format!("no adaptation rules anchored at `{model}`")))
    }

    /// Appends to the log; records must arrive in finish-time order.
    pub fn append_completion(&mut self, record: CompletionRecord) -> Result<()> {
        if let Some(last) = self.log.last() {
            if record.finish_t < last.finish_t {
                return Err(Error::Execution(format!(
                    "completion of request {} at {} precedes logged finish {}",
                    record.request_id, record.finish_t, last.finish_t
                )));
            }
        }
        self.log.push(record);
        Ok(())
    }

    pub fn log(&self) -> &[CompletionRecord] {
        &self.log
    }

    pub fn record_metrics(&mut self, sample: MetricsSample) {
        self.metrics.push(sample);
    }

    pub fn metrics(&self) -> &[MetricsSample] {
        &self.metrics
    }

    pub fn log_event(&mut self, time: f64, kind: EventKind, detail: impl Into<String>) {
        self.events.push(Event {
            time,
            kind,
            detail: detail.into(),
        });
    }

    pub fn events(&self) -> &[Event] {
        &self.events
    }

    pub fn blacklist(&self) -> &BTreeSet<String> {
        &self.blacklist
    }

    pub(crate) fn blacklist_model(&mut self, model: &str) -> bool {
        self.blacklist.insert(model.to_string())
    }

    pub fn into_parts(self) -> (Vec<CompletionRecord>, Vec<Event>, Vec<MetricsSample>) {
        (self.log, self.events, self.metrics)
    }
}

#[derive(Debug, Serialize, Deserialize)]
struct EventRow {
    sim_time: f64,
    event: String,
    detail: String,
}

/// Writes `sim_time,event,detail`.
pub fn write_events<W: Write>(writer: W, events: &[Event]) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(["sim_time", "event", "detail"])?;
    for e in events {
        w.serialize(EventRow {
            sim_time: e.time,
            event: e.kind.name().to_string(),
            detail: e.detail.clone(),
        })?;
    }
    w.flush().map_err(|e| Error::io("<event writer>", e))?;
    Ok(())
}

pub fn read_events<R: Read>(reader: R) -> Result<Vec<Event>> {
    let mut rdr = csv::Reader::from_reader(reader);
    rdr.deserialize::<EventRow>()
        .map(|row| {
            let row = row?;
            Ok(Event {
                time: row.sim_time,
                kind: row.event.parse()?,
                detail: row.detail,
            })
        })
        .collect()
}
