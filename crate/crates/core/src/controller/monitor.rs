//! Monitor phase: the window of recent completions served by the active
//! model, the trailing one-second arrival rate and the pending-request count.

use std::collections::{HashMap, VecDeque};

use crate::kpi::{Kpi, KpiValues};
use crate::simulator::CompletionRecord;

pub const DEFAULT_WINDOW: usize = 50;

/// Width of the arrival-rate window, seconds.
pub const RATE_WINDOW: f64 = 1.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct WindowMeans {
    pub kpis: KpiValues<f64>,
    pub r: f64,
}

pub fn window_means(window: &[CompletionRecord]) -> Option<WindowMeans> {
    if window.is_empty() {
        return None;
    }
    let n = window.len() as f64;
    let kpis = KpiValues::from_fn(|k| window.iter().map(|r| r.kpi(k)).sum::<f64>() / n);
    let r = window.iter().map(|rec| rec.r).sum::<f64>() / n;
    Some(WindowMeans { kpis, r })
}

#[derive(Debug, Clone, PartialEq)]
pub struct SystemState {
    pub time: f64,
    pub m_prime: String,
    /// Latest completions served by `m_prime`, oldest first.
    pub window: Vec<CompletionRecord>,
    /// `None` when the window is empty; analysis is skipped then.
    pub window_means: Option<WindowMeans>,
    /// Arrivals in `(time - 1 s, time]`.
    pub v: f64,
    /// Queued plus in-service requests.
    pub i_w: usize,
}

impl SystemState {
    pub fn window_column(&self, kpi: Kpi) -> Vec<f64> {
        self.window.iter().map(|r| r.kpi(kpi)).collect()
    }
}

/// Stateless snapshot over full histories.
pub fn monitor_snapshot(
    sim_time: f64,
    completions: &[CompletionRecord],
    arrival_times: &[f64],
    queue_depth: usize,
    active_model: &str,
    window_len: usize,
) -> SystemState {
    let mut window: Vec<CompletionRecord> = completions
        .iter()
        .rev()
        .filter(|r| r.model_id == active_model)
        .take(window_len)
        .cloned()
        .collect();
    window.reverse();
    let v = arrival_times
        .iter()
        .filter(|&&t| t > sim_time - RATE_WINDOW && t <= sim_time)
        .count() as f64;
    SystemState {
        time: sim_time,
        m_prime: active_model.to_string(),
        window_means: window_means(&window),
        window,
        v,
        i_w: queue_depth,
    }
}

/// Incremental monitor fed by the serving loop.
#[derive(Debug, Clone)]
pub struct Monitor {
    window_len: usize,
    recent_arrivals: VecDeque<f64>,
    windows: HashMap<String, VecDeque<CompletionRecord>>,
}

impl Monitor {
    pub fn new(window_len: usize) -> Self {
        Monitor {
            window_len: window_len.max(1),
            recent_arrivals: VecDeque::new(),
            windows: HashMap::new(),
        }
    }

    pub fn window_len(&self) -> usize {
        self.window_len
    }

    pub fn observe_arrival(&mut self, t: f64) {
        self.recent_arrivals.push_back(t);
    }

    pub fn observe_completion(&mut self, record: &CompletionRecord) {
        let w = self.windows.entry(record.model_id.clone()).or_default();
        if w.len() == self.window_len {
            w.pop_front();
        }
        w.push_back(record.clone());
    }

    pub fn snapshot(&mut self, now: f64, queue_depth: usize, active_model: &str) -> SystemState {
        while self.recent_arrivals.front().is_some_and(|&t| t <= now - RATE_WINDOW) {
            self.recent_arrivals.pop_front();
        }
        let v = self.recent_arrivals.iter().filter(|&&t| t <= now).count() as f64;
        let window: Vec<CompletionRecord> = self
            .windows
            .get(active_model)
            .map(|w| w.iter().cloned().collect())
            .unwrap_or_default();
        SystemState {
            time: now,
            m_prime: active_model.to_string(),
            window_means: window_means(&window),
            window,
            v,
            i_w: queue_depth,
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn done(id: u64, model: &str, finish: f64) -> CompletionRecord {
        CompletionRecord {
            request_id: id,
            arrival_t: finish - 0.2,
            start_t: finish - 0.1,
            finish_t: finish,
            model_id: model.into(),
            c: 0.6,
            tau_model: 0.095,
            tau_system: 0.1,
            s_cpu: 50.0,
            b: 3,
            r: 0.2,
        }
    }

    #[test]
    fn window_keeps_latest_k() {
        let completions: Vec<_> = (0..60).map(|i| done(i, "a", i as f64)).collect();
        let s = monitor_snapshot(60.0, &completions, &[], 0, "a", 50);
        assert_eq!(s.window.len(), 50);
        assert_eq!(s.window[0].request_id, 10);
        assert_eq!(s.window[49].request_id, 59);

        let mut m = Monitor::new(50);
        completions.iter().for_each(|c| m.observe_completion(c));
        assert_eq!(m.snapshot(60.0, 0, "a"), s);
    }

    #[test]
    fn empty_window_has_no_means() {
        let s = monitor_snapshot(1.0, &[], &[], 3, "a", 50);
        assert!(s.window_means.is_none());
        assert_eq!(s.i_w, 3);
        let other = monitor_snapshot(1.0, &[done(0, "b", 0.5)], &[], 0, "a", 50);
        assert!(other.window_means.is_none());
    }

    #[test]
    fn rate_counts_trailing_second() {
        let arrivals = [0.5, 1.0, 1.1, 1.2, 1.3, 1.5, 1.7, 1.9, 2.0];
        let s = monitor_snapshot(2.0, &[], &arrivals, 0, "a", 50);
        assert_eq!(s.v, 7.0);

        let mut m = Monitor::new(50);
        arrivals.iter().for_each(|&t| m.observe_arrival(t));
        assert_eq!(m.snapshot(2.0, 0, "a").v, 7.0);
    }
}
