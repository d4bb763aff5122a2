//! The four experiment commands: `learn`, `simulate`, `compare` and `report`.
//!
//! Output layout under the output directory:
//!
//! ```text
//! profiles.csv
//! rules/<model>.csv            rules/clustering.csv
//! simulate/<policy>/results.csv, events.csv
//! compare/<policy>/results.csv, events.csv, utility_series.csv
//! compare/summary.csv          compare/utility_sweep.csv
//! ```
//!
//! Policy directories replace `:` with `-` (`static:v5n` → `static-v5n`).

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::fs::{self, File};
use std::io::{BufWriter, Write};
use std::path::{Path, PathBuf};

use rayon::prelude::*;
use serde::Serialize;

use crate::config::ExperimentConfig;
use crate::controller::knowledge::write_events;
use crate::controller::Knowledge;
use crate::learning::{load_ci_matrices, run_learning_engine, save_ci_matrix, CiMatrix, LearnedModel};
use crate::metrics::{
    summarize, utility_per_request, write_summaries, write_sweep, RunSummary, SummaryRow, SweepRow, WeightPair,
};
use crate::profiles::{self, ModelProfile};
use crate::simulator::{run_simulation, write_results, SimOutput};
use crate::{Error, Result};

pub const PROFILES_FILE: &str = "profiles.csv";
pub const RULES_DIR: &str = "rules";
pub const CLUSTERING_FILE: &str = "clustering.csv";
pub const SUMMARY_FILE: &str = "summary.csv";
pub const SWEEP_FILE: &str = "utility_sweep.csv";

fn create(path: &Path) -> Result<BufWriter<File>> {
    if let Some(dir) = path.parent() {
        fs::create_dir_all(dir).map_err(|e| Error::io(dir, e))?;
    }
    File::create(path).map(BufWriter::new).map_err(|e| Error::io(path, e))
}

pub fn policy_dir_name(policy: &str) -> String {
    policy.replace(':', "-")
}

#[derive(Debug, Serialize)]
struct ClusteringRow<'a> {
    model: &'a str,
    selected_k: usize,
    k: usize,
    centroids: String,
    wcss: String,
}

fn join(values: &[f64]) -> String {
    values.iter().map(f64::to_string).collect::<Vec<_>>().join(";")
}

#[derive(Debug, Clone)]
pub struct LearnOutput {
    pub profiles: Vec<ModelProfile>,
    pub learned: BTreeMap<String, LearnedModel>,
    pub rule_files: Vec<PathBuf>,
}

/// Profiles → clustering → rule matrices, written under `out`.
pub fn learn(cfg: &ExperimentConfig, out: &Path) -> Result<LearnOutput> {
    let profiles = cfg.resolve_profiles()?;
    let learned = run_learning_engine(&profiles, &cfg.learning, cfg.learning_seed())?;

    let profiles_path = out.join(PROFILES_FILE);
    let mut w = create(&profiles_path)?;
    profiles::write_profiles(&mut w, &profiles)?;
    w.flush().map_err(|e| Error::io(&profiles_path, e))?;

    let rules_dir = out.join(RULES_DIR);
    fs::create_dir_all(&rules_dir).map_err(|e| Error::io(&rules_dir, e))?;
    let mut rule_files = Vec::new();
    for (id, model) in &learned {
        let path = rules_dir.join(format!("{id}.csv"));
        save_ci_matrix(&path, &model.rules)?;
        rule_files.push(path);
    }

    let report_path = rules_dir.join(CLUSTERING_FILE);
    let mut w = csv::Writer::from_writer(create(&report_path)?);
    for (id, model) in &learned {
        w.serialize(ClusteringRow {
            model: id,
            selected_k: model.selected_k,
            k: model.clustered.k(),
            centroids: join(&model.clustered.centroids),
            wcss: join(&model.wcss),
        })?;
    }
    w.flush().map_err(|e| Error::io(&report_path, e))?;

    Ok(LearnOutput {
        profiles,
        learned,
        rule_files,
    })
}

/// Profiles saved by `learn` when present, otherwise the configured source.
pub fn profiles_for_run(cfg: &ExperimentConfig, out: &Path) -> Result<Vec<ModelProfile>> {
    let saved = out.join(PROFILES_FILE);
    if saved.is_file() {
        profiles::load_profiles(&saved)
    } else {
        cfg.resolve_profiles()
    }
}

/// Reads `rules/<model>.csv` for every profiled model and attaches the KPI
/// scales from the profiles.
pub fn load_rules(out: &Path, profiles: &[ModelProfile]) -> Result<BTreeMap<String, CiMatrix>> {
    let dir = out.join(RULES_DIR);
    let mut rules = BTreeMap::new();
    for p in profiles {
        let path = dir.join(format!("{}.csv", p.model_id()));
        if !path.is_file() {
            return Err(Error::Config(format!(
                "no adaptation rules at {}; run `learn` first",
                path.display()
            )));
        }
        for mut matrix in load_ci_matrices(&path)? {
            if matrix.anchor_model_id == p.model_id() {
                matrix.attach_scale(p);
            }
            rules.insert(matrix.anchor_model_id.clone(), matrix);
        }
    }
    Ok(rules)
}

pub fn rules_from_learned(learned: &BTreeMap<String, LearnedModel>) -> BTreeMap<String, CiMatrix> {
    learned.iter().map(|(id, m)| (id.clone(), m.rules.clone())).collect()
}

/// Runs one named policy in memory.
pub fn run_policy(
    cfg: &ExperimentConfig,
    policy: &str,
    profiles: &[ModelProfile],
    rules: &BTreeMap<String, CiMatrix>,
) -> Result<SimOutput> {
    let spec = cfg.policy_spec(policy, profiles)?;
    let knowledge = match spec {
        crate::simulator::PolicySpec::Adamls => Knowledge::new(rules.clone()),
        _ => Knowledge::default(),
    };
    run_simulation(&cfg.sim_config(spec), profiles, knowledge)
}

fn write_run(dir: &Path, output: &SimOutput) -> Result<()> {
    let path = dir.join("results.csv");
    let mut w = create(&path)?;
    write_results(&mut w, &output.completions)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    let path = dir.join("events.csv");
    let mut w = create(&path)?;
    write_events(&mut w, &output.events)?;
    w.flush().map_err(|e| Error::io(&path, e))
}

#[derive(Debug, Clone)]
pub struct SimulateOutput {
    pub output: SimOutput,
    pub summary: RunSummary,
    pub dir: PathBuf,
}

pub fn simulate(cfg: &ExperimentConfig, policy: &str, out: &Path) -> Result<SimulateOutput> {
    let profiles = profiles_for_run(cfg, out)?;
    let rules = if policy == "adamls" {
        load_rules(out, &profiles)?
    } else {
        BTreeMap::new()
    };
    let output = run_policy(cfg, policy, &profiles, &rules)?;
    let summary = summarize(
        &output.policy,
        &output.completions,
        &output.events,
        &cfg.weight_pairs(),
        &cfg.utility,
    )?;
    let dir = out.join("simulate").join(policy_dir_name(&output.policy));
    write_run(&dir, &output)?;
    Ok(SimulateOutput { output, summary, dir })
}

/// Policies compared by default: adamls, naive, then every model statically.
pub fn comparison_policies(profiles: &[ModelProfile]) -> Vec<String> {
    ["adamls".to_string(), "naive".to_string()]
        .into_iter()
        .chain(profiles.iter().map(|p| format!("static:{}", p.model_id())))
        .collect()
}

#[derive(Debug, Clone)]
pub struct Comparison {
    pub outputs: Vec<SimOutput>,
    pub summaries: Vec<RunSummary>,
}

impl Comparison {
    pub fn summary(&self, policy: &str) -> Option<&RunSummary> {
        self.summaries.iter().find(|s| s.policy == policy)
    }
}

/// Runs every policy on the shared workload, in parallel.
pub fn compare_policies(
    cfg: &ExperimentConfig,
    profiles: &[ModelProfile],
    rules: &BTreeMap<String, CiMatrix>,
) -> Result<Comparison> {
    let grid = cfg.weight_pairs();
    let runs = comparison_policies(profiles)
        .par_iter()
        .map(|policy| {
            let output = run_policy(cfg, policy, profiles, rules)?;
            let summary = summarize(&output.policy, &output.completions, &output.events, &grid, &cfg.utility)?;
            Ok((output, summary))
        })
        .collect::<Result<Vec<_>>>()?;
    let (outputs, summaries) = runs.into_iter().unzip();
    Ok(Comparison { outputs, summaries })
}

/// Learns in memory and compares every policy; nothing is written.
pub fn run_comparison(cfg: &ExperimentConfig) -> Result<Comparison> {
    let profiles = cfg.resolve_profiles()?;
    let learned = run_learning_engine(&profiles, &cfg.learning, cfg.learning_seed())?;
    compare_policies(cfg, &profiles, &rules_from_learned(&learned))
}

#[derive(Debug, Serialize)]
struct SeriesRow {
    request_index: usize,
    finish_t: f64,
    w_e: f64,
    w_d: f64,
    utility: f64,
    cumulative_utility: f64,
}

fn write_series(path: &Path, output: &SimOutput, grid: &[WeightPair], cfg: &ExperimentConfig) -> Result<()> {
    let mut w = csv::Writer::from_writer(create(path)?);
    for pair in grid {
        let params = cfg.utility.with_weights(pair.w_e, pair.w_d);
        let mut total = 0.0;
        for (i, rec) in output.completions.iter().enumerate() {
            let u = utility_per_request(rec.c, rec.r, &params);
            total += u;
            w.serialize(SeriesRow {
                request_index: i + 1,
                finish_t: rec.finish_t,
                w_e: pair.w_e,
                w_d: pair.w_d,
                utility: u,
                cumulative_utility: total,
            })?;
        }
    }
    w.flush().map_err(|e| Error::io(path, e))
}

pub fn compare(cfg: &ExperimentConfig, out: &Path) -> Result<Comparison> {
    let profiles = profiles_for_run(cfg, out)?;
    let rules = load_rules(out, &profiles)?;
    let comparison = compare_policies(cfg, &profiles, &rules)?;
    let grid = cfg.weight_pairs();
    let root = out.join("compare");
    comparison.outputs.par_iter().try_for_each(|output| {
        let dir = root.join(policy_dir_name(&output.policy));
        write_run(&dir, output)?;
        write_series(&dir.join("utility_series.csv"), output, &grid, cfg)
    })?;

    let path = root.join(SUMMARY_FILE);
    let mut w = create(&path)?;
    write_summaries(&mut w, &comparison.summaries)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    let path = root.join(SWEEP_FILE);
    let mut w = create(&path)?;
    write_sweep(&mut w, &comparison.summaries, &grid)?;
    w.flush().map_err(|e| Error::io(&path, e))?;
    Ok(comparison)
}

/// Plain-text table of one or more summaries.
pub fn format_summaries(summaries: &[RunSummary]) -> String {
    let mut s = String::new();
    let _ = writeln!(
        s,
        "{:<12} {:>8} {:>8} {:>7} {:>8} {:>7} {:>6} {:>6}",
        "policy", "requests", "switches", "avg_c", "avg_r", "avg_cpu", "pen_r", "pen_c"
    );
    for r in summaries {
        let _ = writeln!(
            s,
            "{:<12} {:>8} {:>8} {:>7.4} {:>8.4} {:>7.2} {:>6} {:>6}",
            r.policy, r.requests, r.switch_count, r.avg_c, r.avg_r, r.avg_s_cpu, r.r_penalties, r.c_penalties
        );
    }
    if let Some(first) = summaries.first() {
        for (pair, _) in &first.utilities {
            let _ = write!(s, "\nU(w_e={}, w_d={}):", pair.w_e, pair.w_d);
            for r in summaries {
                if let Some(u) = r.utility_at(*pair) {
                    let _ = write!(s, " {}={u:.3}", r.policy);
                }
            }
        }
        s.push('\n');
    }
    s
}

/// Ranks the policies of a `compare` directory per weight pair.
pub fn report(dir: &Path) -> Result<String> {
    let summary_path = dir.join(SUMMARY_FILE);
    let sweep_path = dir.join(SWEEP_FILE);
    for p in [&summary_path, &sweep_path] {
        if !p.is_file() {
            return Err(Error::Config(format!("{} not found; run `compare` first", p.display())));
        }
    }
    let summaries: Vec<SummaryRow> = csv::Reader::from_path(&summary_path)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    let sweep: Vec<SweepRow> = csv::Reader::from_path(&sweep_path)?
        .deserialize()
        .collect::<std::result::Result<_, _>>()?;
    if summaries.is_empty() || sweep.is_empty() {
        return Err(Error::Config(format!("{} holds no results", dir.display())));
    }

    let mut pairs: Vec<(f64, f64)> = Vec::new();
    for row in &sweep {
        if !pairs.contains(&(row.w_e, row.w_d)) {
            pairs.push((row.w_e, row.w_d));
        }
    }
    let mut s = String::from("Ranking by total utility\n");
    for (w_e, w_d) in pairs {
        let mut rows: Vec<&SweepRow> = sweep.iter().filter(|r| (r.w_e, r.w_d) == (w_e, w_d)).collect();
        rows.sort_by(|a, b| {
            b.total_utility
                .total_cmp(&a.total_utility)
                .then_with(|| a.policy.cmp(&b.policy))
        });
        let _ = writeln!(s, "(w_e, w_d) = ({w_e}, {w_d})");
        for (rank, r) in rows.iter().enumerate() {
            let _ = writeln!(s, "  {}. {:<12} {:>12.3}", rank + 1, r.policy, r.total_utility);
        }
    }
    let _ = writeln!(s, "\nSwitches and penalties");
    let _ = writeln!(
        s,
        "  {:<12} {:>8} {:>8} {:>6} {:>6}",
        "policy", "requests", "switches", "pen_r", "pen_c"
    );
    for r in &summaries {
        let _ = writeln!(
            s,
            "  {:<12} {:>8} {:>8} {:>6} {:>6}",
            r.policy, r.requests, r.switch_count, r.r_penalties, r.c_penalties
        );
    }
    Ok(s)
}
