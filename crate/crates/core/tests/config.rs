use std::path::Path;

use mlswitch_core::config::ExperimentConfig;
use mlswitch_core::experiment::{learn, load_rules, profiles_for_run, report, simulate};
use mlswitch_core::scenario;
use mlswitch_core::simulator::PolicySpec;

fn repo_config(name: &str) -> std::path::PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../configs").join(name)
}

#[test]
fn shipped_comparison_config_matches_scenario() {
    let cfg = ExperimentConfig::load(&repo_config("comparison.toml")).unwrap();
    assert_eq!(cfg, scenario::comparison_config(42));
}

#[test]
fn shipped_minimal_config_loads() {
    let cfg = ExperimentConfig::load(&repo_config("minimal.toml")).unwrap();
    assert_eq!(cfg.seed, 7);
    assert_eq!(cfg.profiles.image_count, 200);
    assert_eq!(cfg.workload.max_requests, 300);
}

#[test]
fn unknown_keys_and_bad_values_rejected() {
    assert!(ExperimentConfig::from_toml("sed = 1").is_err());
    assert!(ExperimentConfig::from_toml("[simulation]\nworkers = 0").is_err());
    assert!(ExperimentConfig::from_toml("[naive]\nthresholds = [{ max_rate = 5.0, model = \"v5n\" }]").is_err());
    assert!(ExperimentConfig::from_toml("weight_grid = [[0.5, -0.1]]").is_err());
}

#[test]
fn policy_names_resolve() {
    let cfg = scenario::comparison_config(1);
    let profiles = cfg.resolve_profiles().unwrap();
    assert_eq!(cfg.policy_spec("adamls", &profiles).unwrap(), PolicySpec::Adamls);
    assert_eq!(
        cfg.policy_spec("static:v5x", &profiles).unwrap(),
        PolicySpec::Static { model: "v5x".into() }
    );
    assert!(matches!(
        cfg.policy_spec("naive", &profiles).unwrap(),
        PolicySpec::Naive(_)
    ));
    assert!(cfg.policy_spec("static:nope", &profiles).is_err());
    assert!(cfg.policy_spec("greedy", &profiles).is_err());
    // Each policy samples service times from its own stream.
    let a = cfg.sim_config(PolicySpec::Adamls).sample_seed;
    let b = cfg.sim_config(PolicySpec::Static { model: "v5n".into() }).sample_seed;
    assert_ne!(a, b);
}

#[test]
fn learn_then_simulate_round_trips_through_files() {
    let dir = tempfile::tempdir().unwrap();
    let mut cfg = ExperimentConfig::load(&repo_config("minimal.toml")).unwrap();
    cfg.workload.max_requests = 150;
    assert!(load_rules(dir.path(), &cfg.resolve_profiles().unwrap()).is_err());
    let learned = learn(&cfg, dir.path()).unwrap();
    assert_eq!(learned.rule_files.len(), 5);
    let profiles = profiles_for_run(&cfg, dir.path()).unwrap();
    let records =
        |ps: &[mlswitch_core::profiles::ModelProfile]| ps.iter().map(|p| p.records().to_vec()).collect::<Vec<_>>();
    assert_eq!(records(&profiles), records(&learned.profiles));
    let rules = load_rules(dir.path(), &profiles).unwrap();
    assert_eq!(rules.len(), 5);
    let run = simulate(&cfg, "adamls", dir.path()).unwrap();
    assert_eq!(run.output.completions.len(), 150);
    assert!(run.dir.join("results.csv").exists());
    assert!(report(&dir.path().join("compare")).is_err());
}
