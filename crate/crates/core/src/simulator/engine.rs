//! Event loop: arrivals join a FIFO queue, free workers take the head of the
//! queue and serve it with a KPI record drawn from the active model's
//! profile, and the control loop runs after every completion and on a fixed
//! tick.
//!
//! Simultaneous events are ordered completion < switch-done < arrival < tick,
//! then by scheduling sequence.

use std::cmp::Ordering;
use std::collections::{BinaryHeap, HashMap, VecDeque};

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::workload::{generate_workload, WorkloadSpec};
use super::CompletionRecord;
use crate::controller::{
    AdaptiveConfig, AdaptiveController, ControlLoop, DegradationConfig, Event, Knowledge, MetricsSample, NaivePolicy,
    NaivePolicyConfig, ServingSystem, StaticPolicy, SwitchingPolicy,
};
use crate::kpi::Kpi;
use crate::profiles::{KpiRecord, ModelProfile};
use crate::seed;
use crate::stats::CiMethod;
use crate::{Error, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "kebab-case")]
pub enum PolicySpec {
    Adamls,
    Naive(NaivePolicyConfig),
    Static { model: String },
}

impl PolicySpec {
    pub fn name(&self) -> String {
        match self {
            PolicySpec::Adamls => "adamls".into(),
            PolicySpec::Naive(_) => "naive".into(),
            PolicySpec::Static { model } => format!("static:{model}"),
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SimConfig {
    pub workload: WorkloadSpec,
    pub policy: PolicySpec,
    pub workers: usize,
    pub switch_latency: f64,
    /// Monitor window k'.
    pub window: usize,
    pub t_wait: f64,
    pub tick_interval: f64,
    /// Constant delay added to every response time, seconds.
    pub network_delay: f64,
    pub sample_seed: u64,
    pub ci_level: f64,
    pub ci_method: CiMethod,
    pub degradation: Option<DegradationConfig>,
    /// Starting model for the adaptive policy; the fastest model when unset.
    pub initial_model: Option<String>,
    /// Record arrival/completion counts after every event.
    pub trace_boundaries: bool,
}

impl SimConfig {
    pub fn new(workload: WorkloadSpec, policy: PolicySpec) -> Self {
        SimConfig {
            workload,
            policy,
            workers: 1,
            switch_latency: crate::controller::DEFAULT_SWITCH_LATENCY,
            window: crate::controller::monitor::DEFAULT_WINDOW,
            t_wait: crate::controller::analyzer::DEFAULT_T_WAIT,
            tick_interval: 0.1,
            network_delay: 0.0,
            sample_seed: 0,
            ci_level: crate::stats::DEFAULT_LEVEL,
            ci_method: CiMethod::NormalMean,
            degradation: None,
            initial_model: None,
            trace_boundaries: false,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.workload.validate()?;
        if self.workers == 0 {
            return Err(Error::Config("worker count must be at least 1".into()));
        }
        if !(self.tick_interval.is_finite() && self.tick_interval > 0.0) {
            return Err(Error::Config("tick interval must be > 0".into()));
        }
        let non_negative = [self.switch_latency, self.t_wait, self.network_delay];
        if non_negative.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::Config(
                "switch latency, t_wait and network delay must be finite and >= 0".into(),
            ));
        }
        if self.window == 0 {
            return Err(Error::Config("monitor window must be at least 1".into()));
        }
        Ok(())
    }
}

/// Counts after one processed event.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Boundary {
    pub time: f64,
    pub arrived: usize,
    pub completed: usize,
    pub in_flight: usize,
}

#[derive(Debug, Clone)]
pub struct SimOutput {
    pub policy: String,
    /// Sorted by finish time.
    pub completions: Vec<CompletionRecord>,
    pub events: Vec<Event>,
    pub metrics: Vec<MetricsSample>,
    pub boundaries: Vec<Boundary>,
}

/// Uniform draw of one record from `model`'s profile.
pub fn sample_kpis<'a>(model: &str, profiles: &'a [ModelProfile], rng: &mut impl Rng) -> Result<&'a KpiRecord> {
    let profile = profiles
        .iter()
        .find(|p| p.model_id() == model)
        .ok_or_else(|| Error::Config(format!("no profile for model `{model}`")))?;
    if profile.is_empty() {
        return Err(Error::InvalidSpec(format!("profile `{model}` is empty")));
    }
    Ok(&profile.records()[rng.random_range(0..profile.len())])
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord)]
enum Class {
    Completion,
    SwitchDone,
    Arrival,
    Tick,
}

#[derive(Debug, Clone, Copy)]
enum Kind {
    Arrival(usize),
    Completion(usize),
    SwitchDone,
    Tick(u64),
}

#[derive(Debug)]
struct Scheduled {
    time: f64,
    class: Class,
    seq: u64,
    kind: Kind,
}

impl PartialEq for Scheduled {
    fn eq(&self, other: &Self) -> bool {
        self.cmp(other) == Ordering::Equal
    }
}

impl Eq for Scheduled {}

impl PartialOrd for Scheduled {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl Ord for Scheduled {
    // Reversed: BinaryHeap pops the earliest event.
    fn cmp(&self, other: &Self) -> Ordering {
        other
            .time
            .total_cmp(&self.time)
            .then_with(|| other.class.cmp(&self.class))
            .then_with(|| other.seq.cmp(&self.seq))
    }
}

struct InService {
    request: usize,
    start: f64,
    record: KpiRecord,
}

/// Serving-side state visible to the executor.
struct Server {
    active: String,
    models: Vec<String>,
    pending_switch: Option<(String, f64)>,
    switch_scheduled: bool,
}

impl ServingSystem for Server {
    fn active_model(&self) -> &str {
        &self.active
    }

    fn has_model(&self, model: &str) -> bool {
        self.models.iter().any(|m| m == model)
    }

    fn switching(&self) -> bool {
        self.pending_switch.is_some()
    }

    fn begin_switch(&mut self, model: &str, now: f64, latency: f64) {
        self.pending_switch = Some((model.to_string(), now + latency));
        self.switch_scheduled = false;
    }
}

struct Sim<'a> {
    cfg: &'a SimConfig,
    profiles: &'a [ModelProfile],
    arrivals: Vec<f64>,
    heap: BinaryHeap<Scheduled>,
    seq: u64,
    queue: VecDeque<usize>,
    workers: Vec<Option<InService>>,
    server: Server,
    control: ControlLoop,
    rng: ChaCha8Rng,
    arrived: usize,
    completed: usize,
    boundaries: Vec<Boundary>,
}

impl Sim<'_> {
    fn schedule(&mut self, time: f64, class: Class, kind: Kind) {
        self.seq += 1;
        self.heap.push(Scheduled {
            time,
            class,
            seq: self.seq,
            kind,
        });
    }

    fn busy(&self) -> usize {
        self.workers.iter().filter(|w| w.is_some()).count()
    }

    fn pending(&self) -> usize {
        self.queue.len() + self.busy()
    }

    fn finished(&self) -> bool {
        self.arrived == self.arrivals.len() && self.pending() == 0
    }

    fn dispatch(&mut self, now: f64) -> Result<()> {
        if self.server.switching() {
            return Ok(());
        }
        while let Some(free) = self.workers.iter().position(Option::is_none) {
            let Some(request) = self.queue.pop_front() else {
                break;
            };
            let record = sample_kpis(&self.server.active, self.profiles, &mut self.rng)?.clone();
            self.schedule(now + record.tau_system, Class::Completion, Kind::Completion(free));
            self.workers[free] = Some(InService {
                request,
                start: now,
                record,
            });
        }
        Ok(())
    }

    fn control_step(&mut self, now: f64, periodic: bool) -> Result<()> {
        let pending = self.pending();
        self.control.step(now, pending, &mut self.server, periodic)?;
        if let Some((_, at)) = &self.server.pending_switch {
            if !self.server.switch_scheduled {
                let at = *at;
                self.server.switch_scheduled = true;
                self.schedule(at, Class::SwitchDone, Kind::SwitchDone);
            }
        }
        Ok(())
    }

    fn handle(&mut self, now: f64, kind: Kind) -> Result<()> {
        match kind {
            Kind::Arrival(i) => {
                self.arrived += 1;
                self.queue.push_back(i);
                self.control.on_arrival(now);
                if i + 1 < self.arrivals.len() {
                    self.schedule(self.arrivals[i + 1], Class::Arrival, Kind::Arrival(i + 1));
                }
                self.dispatch(now)?;
            }
            Kind::Completion(w) => {
                let job = self.workers[w]
                    .take()
                    .ok_or_else(|| Error::Execution(format!("worker {w} completed while idle")))?;
                self.completed += 1;
                let arrival_t = self.arrivals[job.request];
                let rec = job.record;
                self.control.on_completion(CompletionRecord {
                    request_id: job.request as u64,
                    arrival_t,
                    start_t: job.start,
                    finish_t: now,
                    model_id: rec.model_id,
                    c: rec.c,
                    tau_model: rec.tau_model,
                    tau_system: rec.tau_system,
                    s_cpu: rec.s_cpu,
                    b: rec.b,
                    r: now - arrival_t + self.cfg.network_delay,
                })?;
                self.control_step(now, false)?;
                self.dispatch(now)?;
            }
            Kind::SwitchDone => {
                if let Some((model, _)) = self.server.pending_switch.take() {
                    self.server.active = model;
                }
                self.server.switch_scheduled = false;
                self.dispatch(now)?;
            }
            Kind::Tick(n) => {
                self.control_step(now, true)?;
                self.dispatch(now)?;
                if !self.finished() {
                    self.schedule((n + 1) as f64 * self.cfg.tick_interval, Class::Tick, Kind::Tick(n + 1));
                }
            }
        }
        if self.cfg.trace_boundaries {
            self.boundaries.push(Boundary {
                time: now,
                arrived: self.arrived,
                completed: self.completed,
                in_flight: self.pending(),
            });
        }
        Ok(())
    }
}

fn fastest_model(profiles: &[ModelProfile], knowledge: &Knowledge) -> Option<String> {
    profiles
        .iter()
        .filter(|p| knowledge.rules().contains_key(p.model_id()))
        .min_by(|a, b| {
            a.mean(Kpi::TauSystem)
                .total_cmp(&b.mean(Kpi::TauSystem))
                .then_with(|| a.model_id().cmp(b.model_id()))
        })
        .map(|p| p.model_id().to_string())
}

fn build_policy(cfg: &SimConfig, profiles: &[ModelProfile], knowledge: &Knowledge) -> Result<Box<dyn SwitchingPolicy>> {
    let known = |m: &str| profiles.iter().any(|p| p.model_id() == m);
    match &cfg.policy {
        PolicySpec::Static { model } => {
            if !known(model) {
                return Err(Error::Config(format!("static policy names unknown model `{model}`")));
            }
            Ok(Box::new(StaticPolicy::new(model.clone())))
        }
        PolicySpec::Naive(naive) => {
            if let Some(m) = naive.models().find(|m| !known(m)) {
                return Err(Error::Config(format!("naive policy names unknown model `{m}`")));
            }
            Ok(Box::new(NaivePolicy::new(naive.clone())?))
        }
        PolicySpec::Adamls => {
            if knowledge.rules().is_empty() {
                return Err(Error::Config("adaptive policy needs adaptation rules".into()));
            }
            for (anchor, ci) in knowledge.rules() {
                for m in std::iter::once(anchor.as_str()).chain(ci.models()) {
                    if !known(m) {
                        return Err(Error::Config(format!("rules reference model `{m}` without a profile")));
                    }
                    if !knowledge.rules().contains_key(m) {
                        return Err(Error::Config(format!("no rules anchored at model `{m}`")));
                    }
                }
            }
            let initial = match &cfg.initial_model {
                Some(m) if knowledge.rules().contains_key(m) => m.clone(),
                Some(m) => return Err(Error::Config(format!("initial model `{m}` has no rules"))),
                None => fastest_model(profiles, knowledge)
                    .ok_or_else(|| Error::Config("no model has both a profile and rules".into()))?,
            };
            let adaptive = AdaptiveConfig {
                t_wait: cfg.t_wait,
                ci_level: cfg.ci_level,
                ci_method: cfg.ci_method,
                degradation: cfg.degradation,
            };
            Ok(Box::new(AdaptiveController::new(adaptive, initial)))
        }
    }
}

/// Runs one simulation to completion of every arrival.
pub fn run_simulation(cfg: &SimConfig, profiles: &[ModelProfile], knowledge: Knowledge) -> Result<SimOutput> {
    cfg.validate()?;
    let arrivals = generate_workload(&cfg.workload)?;
    run_with_arrivals(cfg, profiles, knowledge, arrivals)
}

/// Like [`run_simulation`] with an explicit arrival trace (strictly
/// non-decreasing timestamps).
pub fn run_with_arrivals(
    cfg: &SimConfig,
    profiles: &[ModelProfile],
    knowledge: Knowledge,
    arrivals: Vec<f64>,
) -> Result<SimOutput> {
    cfg.validate()?;
    if arrivals.is_empty() {
        return Err(Error::Workload("no arrivals".into()));
    }
    if arrivals.windows(2).any(|w| w[1] < w[0]) || arrivals.iter().any(|t| !t.is_finite() || *t < 0.0) {
        return Err(Error::Workload(
            "arrival times must be finite, non-negative and sorted".into(),
        ));
    }
    let policy = build_policy(cfg, profiles, &knowledge)?;
    let initial = policy.initial_model();
    let models: Vec<String> = profiles.iter().map(|p| p.model_id().to_string()).collect();
    if !models.contains(&initial) {
        return Err(Error::Config(format!("initial model `{initial}` has no profile")));
    }
    let control = ControlLoop::new(policy, knowledge, cfg.window, cfg.switch_latency);
    let policy_name = control.policy_name();

    let mut sim = Sim {
        cfg,
        profiles,
        heap: BinaryHeap::new(),
        seq: 0,
        queue: VecDeque::new(),
        workers: (0..cfg.workers).map(|_| None).collect(),
        server: Server {
            active: initial,
            models,
            pending_switch: None,
            switch_scheduled: false,
        },
        control,
        rng: seed::rng(cfg.sample_seed),
        arrived: 0,
        completed: 0,
        boundaries: Vec::new(),
        arrivals,
    };
    sim.schedule(sim.arrivals[0], Class::Arrival, Kind::Arrival(0));
    sim.schedule(cfg.tick_interval, Class::Tick, Kind::Tick(1));
    while let Some(ev) = sim.heap.pop() {
        sim.handle(ev.time, ev.kind)?;
    }
    if !sim.finished() {
        return Err(Error::Execution("simulation stopped with requests outstanding".into()));
    }

    let boundaries = std::mem::take(&mut sim.boundaries);
    let (completions, events, metrics) = sim.control.into_knowledge().into_parts();
    Ok(SimOutput {
        policy: policy_name,
        completions,
        events,
        metrics,
        boundaries,
    })
}

/// Distinct model ids by first use.
pub fn models_used(records: &[CompletionRecord]) -> Vec<String> {
    let mut seen: HashMap<&str, ()> = HashMap::new();
    records
        .iter()
        .filter(|r| seen.insert(r.model_id.as_str(), ()).is_none())
        .map(|r| r.model_id.clone())
        .collect()
}
