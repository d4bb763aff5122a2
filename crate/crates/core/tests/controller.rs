mod common;

use std::collections::{BTreeMap, BTreeSet};

use common::{interval, matrix, record, ClusterSpec};
use mlswitch_core::controller::{
    assess, execute, find_closest_cluster, monitor_snapshot, naive_policy, plan, rate_range, select_best,
    AdaptationPlan, AdaptiveConfig, AdaptiveController, Candidate, ControlLoop, Debounce, EventKind, ExecutionEffect,
    Knowledge, Monitor, NaivePolicyConfig, PlanAction, PlannerInput, ServingSystem,
};
use mlswitch_core::simulator::CompletionRecord;
use mlswitch_core::stats::CiMethod;
use mlswitch_core::KpiValues;
use proptest::prelude::*;

struct Stub {
    active: String,
    pending: Option<(String, f64)>,
}

impl Stub {
    fn new(model: &str) -> Self {
        Stub {
            active: model.into(),
            pending: None,
        }
    }

    fn finish_switch(&mut self) {
        if let Some((m, _)) = self.pending.take() {
            self.active = m;
        }
    }
}

impl ServingSystem for Stub {
    fn active_model(&self) -> &str {
        &self.active
    }
    fn has_model(&self, model: &str) -> bool {
        matches!(model, "a" | "b")
    }
    fn switching(&self) -> bool {
        self.pending.is_some()
    }
    fn begin_switch(&mut self, model: &str, now: f64, latency: f64) {
        self.pending = Some((model.to_string(), now + latency));
    }
}

fn done(id: u64, model: &str, tau: f64, c: f64, finish: f64) -> CompletionRecord {
    let rec = record(id as usize, model, c, tau);
    CompletionRecord {
        request_id: id,
        arrival_t: finish - tau,
        start_t: finish - tau,
        finish_t: finish,
        model_id: model.into(),
        c,
        tau_model: rec.tau_model,
        tau_system: tau,
        s_cpu: rec.s_cpu,
        b: rec.b,
        r: tau,
    }
}

/// Fast model `a` (about 20 rps) and accurate model `b` (about 2 rps), one
/// cluster, rules anchored at each.
fn two_model_rules() -> BTreeMap<String, mlswitch_core::learning::CiMatrix> {
    let cluster: ClusterSpec = vec![[
        ("a".to_string(), (interval(0.045, 0.055), interval(0.45, 0.55))),
        ("b".to_string(), (interval(0.45, 0.55), interval(0.75, 0.85))),
    ]
    .into()];
    ["a", "b"]
        .iter()
        .map(|&m| (m.to_string(), matrix(m, &cluster)))
        .collect()
}

#[test]
fn rate_range_is_reciprocal_of_interval() {
    let (lo, hi) = rate_range(&interval(0.045, 0.055)).unwrap();
    assert_eq!((lo, hi), (1.0 / 0.055, 1.0 / 0.045));
    let (lo, hi) = rate_range(&interval(0.72, 0.81)).unwrap();
    assert!((lo - 1.2346).abs() < 1e-4 && (hi - 1.3889).abs() < 1e-4);
    assert!(rate_range(&interval(-0.1, 0.1)).is_err());
    assert!(rate_range(&interval(0.2, 0.1)).is_err());
}

#[test]
fn closest_cluster_on_two_cluster_fixture() {
    let clusters: ClusterSpec = vec![
        [("a".to_string(), (interval(0.04, 0.06), interval(0.55, 0.65)))].into(),
        [("a".to_string(), (interval(0.09, 0.11), interval(0.35, 0.45)))].into(),
    ];
    let ci = matrix("a", &clusters);
    let at = |tau: f64, c: f64| {
        let mut m = KpiValues::splat(0.5);
        m[mlswitch_core::Kpi::TauModel] = tau;
        m[mlswitch_core::Kpi::TauSystem] = tau + 0.005;
        m[mlswitch_core::Kpi::C] = c;
        m
    };
    assert_eq!(find_closest_cluster(&at(0.052, 0.58), &ci).unwrap(), 0);
    assert_eq!(find_closest_cluster(&at(0.097, 0.41), &ci).unwrap(), 1);
    let single = matrix("a", &vec![clusters[0].clone()]);
    assert_eq!(find_closest_cluster(&at(5.0, 0.0), &single).unwrap(), 0);
}

#[test]
fn debounce_scenarios() {
    let mut d = Debounce::new(0.25);
    let fired: Vec<bool> = [1.00, 1.10, 1.20, 1.30].iter().map(|&t| d.update(true, t)).collect();
    assert_eq!(fired, [false, false, false, true]);

    let mut d = Debounce::new(0.25);
    assert!(!d.update(true, 1.00));
    assert!(!d.update(false, 1.10));
    assert!(!d.update(true, 1.25));
    assert_eq!(d.armed_at(), Some(1.25));
}

#[test]
fn naive_lookup_uses_first_admitting_threshold() {
    let cfg = NaivePolicyConfig::new([(5.0, "E"), (15.0, "C"), (f64::INFINITY, "A")]).unwrap();
    assert_eq!(naive_policy(10.0, &cfg), "C");
    assert_eq!(naive_policy(5.0, &cfg), "E");
    assert_eq!(naive_policy(0.0, &cfg), "E");
    assert_eq!(naive_policy(1e6, &cfg), "A");
    assert!(NaivePolicyConfig::new([(5.0, "E"), (15.0, "C")]).is_err());
    assert!(NaivePolicyConfig::new([(15.0, "E"), (5.0, "C"), (f64::INFINITY, "A")]).is_err());
}

#[test]
fn monitor_examples() {
    let completions: Vec<_> = (0..60).map(|i| done(i, "a", 0.05, 0.6, i as f64)).collect();
    let arrivals = [0.5, 1.0, 1.1, 1.2, 1.3, 1.5, 1.7, 1.9, 2.0, 2.05];
    let s = monitor_snapshot(2.0, &completions, &arrivals, 4, "a", 50);
    assert_eq!(s.window.len(), 50);
    assert_eq!(s.window.first().unwrap().request_id, 10);
    assert_eq!(s.v, 7.0);
    assert_eq!(s.i_w, 4);
    let means = s.window_means.unwrap();
    assert!((means.kpis[mlswitch_core::Kpi::C] - 0.6).abs() < 1e-12);

    let mut m = Monitor::new(50);
    arrivals[..9].iter().for_each(|&t| m.observe_arrival(t));
    completions.iter().for_each(|c| m.observe_completion(c));
    assert_eq!(m.snapshot(2.0, 4, "a"), s);
    assert!(m.snapshot(2.0, 0, "b").window.is_empty());
}

#[test]
fn assessment_uses_adjusted_rate() {
    let rules = two_model_rules();
    let window: Vec<_> = (0..10).map(|i| done(i, "a", 0.05, 0.5, i as f64 * 0.05)).collect();
    let mut state = monitor_snapshot(1.0, &window, &[0.5; 16], 3, "a", 50);
    let a = assess(&state, &rules["a"]).unwrap().unwrap();
    assert_eq!(a.v_adj, 19.0);
    assert!(a.in_range());
    state.i_w = 10;
    assert!(!assess(&state, &rules["a"]).unwrap().unwrap().in_range());
}

#[test]
fn executor_switches_and_logs() {
    let mut k = Knowledge::new(BTreeMap::new());
    let mut sys = Stub::new("a");
    let effect = execute(&AdaptationPlan::switch_to("b", "load"), &mut sys, &mut k, 2.0, 0.005).unwrap();
    assert_eq!(
        effect,
        ExecutionEffect::Switching {
            from: "a".into(),
            to: "b".into(),
            effective_at: 2.005
        }
    );
    assert_eq!(sys.active, "a");
    assert_eq!(k.events().last().unwrap().kind, EventKind::Switch);
    sys.finish_switch();
    let same = execute(&AdaptationPlan::switch_to("b", "again"), &mut sys, &mut k, 3.0, 0.005).unwrap();
    assert_eq!(same, ExecutionEffect::Unchanged);
    assert_eq!(k.events().last().unwrap().kind, EventKind::NoOp);
    assert!(execute(&AdaptationPlan::switch_to("zzz", ""), &mut sys, &mut k, 4.0, 0.005).is_err());
}

#[test]
fn planner_prefers_accuracy_within_capacity() {
    let k = Knowledge::new(two_model_rules());
    let low = PlannerInput {
        v_adj: 1.5,
        m_prime: "a".into(),
        cluster: 0,
    };
    assert_eq!(
        plan(&low, &k, &[], 0.9, CiMethod::NormalMean).unwrap().action,
        PlanAction::SwitchTo("b".into())
    );
    let high = PlannerInput {
        v_adj: 12.0,
        m_prime: "b".into(),
        cluster: 0,
    };
    assert_eq!(
        plan(&high, &k, &[], 0.9, CiMethod::NormalMean).unwrap().action,
        PlanAction::SwitchTo("a".into())
    );
    let overload = PlannerInput { v_adj: 40.0, ..high };
    assert_eq!(
        plan(&overload, &k, &[], 0.9, CiMethod::NormalMean).unwrap().action,
        PlanAction::NoOp
    );
    let bad_cluster = PlannerInput { cluster: 3, ..low };
    assert!(plan(&bad_cluster, &k, &[], 0.9, CiMethod::NormalMean).is_err());
}

#[test]
fn control_loop_moves_to_fast_model_under_load() {
    let policy = AdaptiveController::new(AdaptiveConfig::default(), "b");
    let mut cl = ControlLoop::new(Box::new(policy), Knowledge::new(two_model_rules()), 50, 0.005);
    let mut sys = Stub::new("b");
    for i in 0..20 {
        cl.on_completion(done(i, "b", 0.5, 0.8, i as f64 * 0.05)).unwrap();
    }
    let mut switched_at = None;
    for tick in 10..30 {
        let now = tick as f64 * 0.1;
        cl.on_arrival(now);
        cl.step(now, 0, &mut sys, true).unwrap();
        if sys.switching() && switched_at.is_none() {
            switched_at = Some(now);
            sys.finish_switch();
        }
    }
    // Ten arrivals per second needs the fast model; the debounce holds the
    // switch back for at least the wait time after the first violation.
    assert_eq!(sys.active, "a");
    let first_violation = 1.0;
    assert!(switched_at.unwrap() >= first_violation + 0.25 - 1e-9);
    let kinds: Vec<_> = cl.knowledge().events().iter().map(|e| e.kind).collect();
    assert!(kinds.contains(&EventKind::AnalyzeTrigger));
    assert!(kinds.contains(&EventKind::Switch));
    assert!(cl.knowledge().events().windows(2).all(|w| w[0].time <= w[1].time));
}

#[test]
fn knowledge_log_must_be_ordered() {
    let mut k = Knowledge::new(BTreeMap::new());
    k.append_completion(done(0, "a", 0.1, 0.5, 1.0)).unwrap();
    k.append_completion(done(1, "a", 0.1, 0.5, 1.0)).unwrap();
    assert!(k.append_completion(done(2, "a", 0.1, 0.5, 0.9)).is_err());
    assert_eq!(k.log().len(), 2);
    assert!(k.rules_for("a").is_err());
}

fn arb_candidates() -> impl Strategy<Value = Vec<Candidate>> {
    prop::collection::vec((1.0..60.0f64, 0u8..4, 0u8..3), 1..6).prop_map(|v| {
        v.into_iter()
            .enumerate()
            .map(|(i, (rate, c, t))| Candidate {
                model_id: format!("m{i}"),
                tau_low: 1.0 / rate,
                tau_high: 1.0 / rate + f64::from(t) * 0.01,
                // Coarse accuracy levels so ties occur.
                c_low: f64::from(c) * 0.1 + 0.4,
            })
            .collect()
    })
}

/// Exhaustive pick: highest c_low, then incumbent, then lowest tau_high,
/// then lexicographic id.
fn oracle<'a>(cs: &'a [Candidate], v: f64, incumbent: &str, excluded: &BTreeSet<String>) -> Option<&'a Candidate> {
    let ok: Vec<&Candidate> = cs
        .iter()
        .filter(|c| !excluded.contains(&c.model_id) && v <= 1.0 / c.tau_low)
        .collect();
    let best_c = ok.iter().map(|c| c.c_low).fold(f64::NEG_INFINITY, f64::max);
    let top: Vec<&Candidate> = ok.into_iter().filter(|c| c.c_low == best_c).collect();
    if let Some(inc) = top.iter().find(|c| c.model_id == incumbent) {
        return Some(inc);
    }
    let best_t = top.iter().map(|c| c.tau_high).fold(f64::INFINITY, f64::min);
    top.into_iter()
        .filter(|c| c.tau_high == best_t)
        .min_by(|a, b| a.model_id.cmp(&b.model_id))
}

proptest! {
    #[test]
    fn planner_matches_exhaustive_oracle(
        cs in arb_candidates(),
        v in 0.0..70.0f64,
        inc in 0usize..7,
        banned in prop::collection::btree_set(0usize..6, 0..3),
    ) {
        let incumbent = format!("m{inc}");
        let excluded: BTreeSet<String> = banned.iter().map(|i| format!("m{i}")).collect();
        let got = select_best(&cs, v, &incumbent, &excluded).map(|c| c.model_id.clone());
        let want = oracle(&cs, v, &incumbent, &excluded).map(|c| c.model_id.clone());
        prop_assert_eq!(got.clone(), want);
        if let Some(id) = got {
            prop_assert!(!excluded.contains(&id));
        }
    }

    #[test]
    fn decisions_invariant_under_time_rescaling(cs in arb_candidates(), v in 0.0..70.0f64, scale in 0.1..10.0f64) {
        let scaled: Vec<Candidate> = cs
            .iter()
            .map(|c| Candidate { tau_low: c.tau_low * scale, tau_high: c.tau_high * scale, ..c.clone() })
            .collect();
        let none = BTreeSet::new();
        // Keep away from the capacity boundary where rounding decides.
        prop_assume!(cs.iter().all(|c| ((v * c.tau_low) - 1.0).abs() > 1e-9));
        let a = select_best(&cs, v, "m0", &none).map(|c| c.model_id.clone());
        let b = select_best(&scaled, v / scale, "m0", &none).map(|c| c.model_id.clone());
        prop_assert_eq!(a, b);
    }

    #[test]
    fn rate_range_bounds(low in 1e-3..5.0f64, width in 0.0..5.0f64) {
        let (vmin, vmax) = rate_range(&interval(low, low + width)).unwrap();
        prop_assert_eq!(vmin, 1.0 / (low + width));
        prop_assert_eq!(vmax, 1.0 / low);
        prop_assert!(vmin <= vmax);
    }
}
