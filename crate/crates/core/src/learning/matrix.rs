//! Per-anchor performance matrices and their confidence-interval summaries.

use std::collections::{BTreeMap, HashMap};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::kpi::{Kpi, KpiValues};
use crate::profiles::ModelProfile;
use crate::stats::{compute_ci, sample_sd, CiMethod, ConfidenceInterval};
use crate::{Error, Result};

/// Cluster assignment of every image of one model, clustered on its system
/// processing time.
#[derive(Debug, Clone, PartialEq)]
pub struct ClusteredProfile {
    pub anchor_model_id: String,
    pub labels: BTreeMap<String, usize>,
    /// Ascending cluster centres, seconds.
    pub centroids: Vec<f64>,
}

impl ClusteredProfile {
    pub fn k(&self) -> usize {
        self.centroids.len()
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct PerfRow {
    pub image_id: String,
    pub cluster: usize,
    /// KPIs of every model for this image, aligned with [`PerfMatrix::models`].
    pub values: Vec<KpiValues<f64>>,
}

/// All models' KPIs joined per image and tagged with the anchor's cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct PerfMatrix {
    pub anchor_model_id: String,
    /// Model ids, sorted.
    pub models: Vec<String>,
    /// Rows sorted by image id.
    pub rows: Vec<PerfRow>,
}

impl PerfMatrix {
    pub fn model_index(&self, model_id: &str) -> Option<usize> {
        self.models.iter().position(|m| m == model_id)
    }

    pub fn cluster_count(&self) -> usize {
        self.rows.iter().map(|r| r.cluster + 1).max().unwrap_or(0)
    }
}

pub fn build_performance_matrix(
    anchor: &str,
    profiles: &[ModelProfile],
    clustered: &ClusteredProfile,
) -> Result<PerfMatrix> {
    let anchor_profile = profiles
        .iter()
        .find(|p| p.model_id() == anchor)
        .ok_or_else(|| Error::InvalidSpec(format!("anchor model `{anchor}` has no profile")))?;

    let mut by_model: BTreeMap<&str, HashMap<&str, KpiValues<f64>>> = BTreeMap::new();
    for p in profiles {
        let index = p.records().iter().map(|r| (r.image_id.as_str(), r.kpis())).collect();
        if by_model.insert(p.model_id(), index).is_some() {
            return Err(Error::InvalidSpec(format!("duplicate profile `{}`", p.model_id())));
        }
    }

    let mut image_ids: Vec<&str> = anchor_profile.records().iter().map(|r| r.image_id.as_str()).collect();
    image_ids.sort_unstable();

    // Every model must cover exactly the anchor's image set.
    for (model, index) in &by_model {
        if index.len() != image_ids.len() {
            let missing = index.keys().find(|id| image_ids.binary_search(id).is_err()).copied();
            if let Some(image_id) = missing {
                return Err(Error::Join {
                    image_id: image_id.to_string(),
                    model_id: anchor.to_string(),
                });
            }
        }
        if let Some(image_id) = image_ids.iter().find(|id| !index.contains_key(*id)) {
            return Err(Error::Join {
                image_id: image_id.to_string(),
                model_id: model.to_string(),
            });
        }
    }

    let models: Vec<String> = by_model.keys().map(|m| m.to_string()).collect();
    let rows = image_ids
        .into_iter()
        .map(|image_id| {
            let cluster = *clustered.labels.get(image_id).ok_or_else(|| Error::Join {
                image_id: image_id.to_string(),
                model_id: format!("{anchor} (cluster labels)"),
            })?;
            let values = by_model.values().map(|index| index[image_id]).collect();
            Ok(PerfRow {
                image_id: image_id.to_string(),
                cluster,
                values,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PerfMatrix {
        anchor_model_id: anchor.to_string(),
        models,
        rows,
    })
}

pub type KpiIntervals = KpiValues<ConfidenceInterval<f64>>;

/// Adaptation rules anchored at one model: for every cluster of the anchor,
/// the interval of every KPI of every model over the images in that cluster.
#[derive(Debug, Clone, PartialEq)]
pub struct CiMatrix {
    pub anchor_model_id: String,
    /// Indexed by cluster; model id → per-KPI interval.
    pub clusters: Vec<BTreeMap<String, KpiIntervals>>,
    /// Standard deviation of each anchor KPI over the whole anchor profile.
    /// Absent when the matrix was read back from CSV without its profile.
    pub kpi_scale: Option<KpiValues<f64>>,
}

impl CiMatrix {
    pub fn cluster_count(&self) -> usize {
        self.clusters.len()
    }

    pub fn models(&self) -> impl Iterator<Item = &str> {
        self.clusters
            .first()
            .into_iter()
            .flat_map(|c| c.keys().map(String::as_str))
    }

    pub fn entry(&self, cluster: usize, model: &str, kpi: Kpi) -> Result<&ConfidenceInterval<f64>> {
        self.clusters
            .get(cluster)
            .and_then(|c| c.get(model))
            .map(|cis| &cis[kpi])
            .ok_or_else(|| {
                Error::RuleCorruption(format!(
                    "no entry for cluster {cluster}, model `{model}` in rules anchored at `{}`",
                    self.anchor_model_id
                ))
            })
    }

    /// Offline mean of every anchor KPI within `cluster`.
    pub fn anchor_means(&self, cluster: usize) -> Result<KpiValues<f64>> {
        let cis = self
            .clusters
            .get(cluster)
            .and_then(|c| c.get(&self.anchor_model_id))
            .ok_or_else(|| {
                Error::RuleCorruption(format!(
                    "anchor `{}` missing from cluster {cluster}",
                    self.anchor_model_id
                ))
            })?;
        Ok(KpiValues::from_fn(|k| cis[k].mean))
    }

    /// Fills [`CiMatrix::kpi_scale`] from the anchor's profile.
    pub fn attach_scale(&mut self, anchor: &ModelProfile) {
        self.kpi_scale = Some(profile_scale(anchor));
    }
}

pub fn profile_scale(profile: &ModelProfile) -> KpiValues<f64> {
    KpiValues::from_fn(|k| sample_sd(&profile.column(k)).unwrap_or(0.0))
}

pub fn build_ci_matrix(anchor: &str, perf: &PerfMatrix, level: f64, method: CiMethod) -> Result<CiMatrix> {
    let k = perf.cluster_count();
    let anchor_idx = perf
        .model_index(anchor)
        .ok_or_else(|| Error::InvalidSpec(format!("anchor `{anchor}` not in performance matrix")))?;

    let mut clusters = Vec::with_capacity(k);
    for l in 0..k {
        let members: Vec<&PerfRow> = perf.rows.iter().filter(|r| r.cluster == l).collect();
        if members.is_empty() {
            return Err(Error::Clustering(format!("cluster {l} of `{anchor}` is empty")));
        }
        let mut per_model = BTreeMap::new();
        for (mi, model) in perf.models.iter().enumerate() {
            let mut cis = [ConfidenceInterval::point(0.0); 5];
            for kpi in Kpi::ALL {
                let column: Vec<f64> = members.iter().map(|r| r.values[mi][kpi]).collect();
                cis[kpi.index()] = compute_ci(&column, level, method)?;
            }
            per_model.insert(model.clone(), KpiValues(cis));
        }
        clusters.push(per_model);
    }
    let scale = KpiValues::from_fn(|kpi| {
        let column: Vec<f64> = perf.rows.iter().map(|r| r.values[anchor_idx][kpi]).collect();
        sample_sd(&column).unwrap_or(0.0)
    });
    Ok(CiMatrix {
        anchor_model_id: anchor.to_string(),
        clusters,
        kpi_scale: Some(scale),
    })
}

pub const CI_HEADER: [&str; 8] = ["anchor_model", "cluster", "model", "kpi", "low", "high", "n", "mean"];

#[derive(Debug, Serialize, Deserialize)]
struct CiRow {
    anchor_model: String,
    cluster: usize,
    model: String,
    kpi: String,
    low: f64,
    high: f64,
    n: usize,
    mean: f64,
}

pub fn write_ci_matrices<'a, W: Write>(writer: W, matrices: impl IntoIterator<Item = &'a CiMatrix>) -> Result<()> {
    let mut w = csv::WriterBuilder::new().has_headers(false).from_writer(writer);
    w.write_record(CI_HEADER)?;
    for m in matrices {
        for (l, per_model) in m.clusters.iter().enumerate() {
            for (model, cis) in per_model {
                for (kpi, ci) in cis.iter() {
                    w.serialize(CiRow {
                        anchor_model: m.anchor_model_id.clone(),
                        cluster: l,
                        model: model.clone(),
                        kpi: kpi.name().to_string(),
                        low: ci.low,
                        high: ci.high,
                        n: ci.n,
                        mean: ci.mean,
                    })?;
                }
            }
        }
    }
    w.flush().map_err(|e| Error::io("<rule writer>", e))?;
    Ok(())
}

pub fn save_ci_matrix(path: &Path, matrix: &CiMatrix) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_ci_matrices(file, [matrix])
}

/// Reads rule CSV, grouping rows by anchor model. Clusters must be dense from
/// 0, and every (cluster, model) pair must carry all five KPIs.
pub fn read_ci_matrices<R: Read>(reader: R) -> Result<Vec<CiMatrix>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    if headers.iter().ne(CI_HEADER) {
        return Err(Error::RuleRow {
            row: 0,
            reason: format!("expected header `{}`", CI_HEADER.join(",")),
        });
    }
    type Partial = BTreeMap<usize, BTreeMap<String, [Option<ConfidenceInterval<f64>>; 5]>>;
    let mut order: Vec<String> = Vec::new();
    let mut partial: BTreeMap<String, Partial> = BTreeMap::new();
    for (i, row) in rdr.deserialize::<CiRow>().enumerate() {
        let row_no = i as u64 + 1;
        let row = row.map_err(|e| Error::RuleRow {
            row: row_no,
            reason: e.to_string(),
        })?;
        let kpi: Kpi = row.kpi.parse().map_err(|e: Error| Error::RuleRow {
            row: row_no,
            reason: e.to_string(),
        })?;
        let ci = ConfidenceInterval {
            low: row.low,
            high: row.high,
            n: row.n,
            mean: row.mean,
        };
        if !(ci.low <= ci.mean && ci.mean <= ci.high) || ci.n == 0 {
            return Err(Error::RuleRow {
                row: row_no,
                reason: format!("interval violates low <= mean <= high or n > 0: {ci:?}"),
            });
        }
        if !partial.contains_key(&row.anchor_model) {
            order.push(row.anchor_model.clone());
        }
        let slot = &mut partial
            .entry(row.anchor_model)
            .or_default()
            .entry(row.cluster)
            .or_default()
            .entry(row.model)
            .or_default()[kpi.index()];
        if slot.replace(ci).is_some() {
            return Err(Error::RuleRow {
                row: row_no,
                reason: "duplicate entry".into(),
            });
        }
    }

    order
        .into_iter()
        .map(|anchor| {
            let clusters_in = partial.remove(&anchor).unwrap_or_default();
            let mut clusters = Vec::with_capacity(clusters_in.len());
            for (expected, (l, per_model)) in clusters_in.into_iter().enumerate() {
                if l != expected {
                    return Err(Error::RuleCorruption(format!(
                        "rules for `{anchor}` skip cluster {expected}"
                    )));
                }
                let mut out = BTreeMap::new();
                for (model, slots) in per_model {
                    let mut cis = [ConfidenceInterval::point(0.0); 5];
                    for kpi in Kpi::ALL {
                        cis[kpi.index()] = slots[kpi.index()].ok_or_else(|| {
                            Error::RuleCorruption(format!(
                                "rules for `{anchor}` cluster {l} model `{model}` lack KPI `{kpi}`"
                            ))
                        })?;
                    }
                    out.insert(model, KpiValues(cis));
                }
                if !out.contains_key(&anchor) {
                    return Err(Error::RuleCorruption(format!(
                        "rules for `{anchor}` cluster {l} omit the anchor itself"
                    )));
                }
                clusters.push(out);
            }
            Ok(CiMatrix {
                anchor_model_id: anchor,
                clusters,
                kpi_scale: None,
            })
        })
        .collect()
}

pub fn load_ci_matrices(path: &Path) -> Result<Vec<CiMatrix>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_ci_matrices(file)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::profiles::KpiRecord;

    fn rec(image: &str, model: &str, c: f64, tau: f64) -> KpiRecord {
        KpiRecord {
            image_id: image.into(),
            model_id: model.into(),
            c,
            tau_model: tau - 0.005,
            tau_system: tau,
            s_cpu: 50.0,
            b: 2,
        }
    }

    fn two_models() -> Vec<ModelProfile> {
        let a = ModelProfile::new(
            "a",
            "a",
            vec![
                rec("i2", "a", 0.5, 0.05),
                rec("i1", "a", 0.4, 0.04),
                rec("i3", "a", 0.6, 0.20),
            ],
        )
        .unwrap();
        let b = ModelProfile::new(
            "b",
            "b",
            vec![
                rec("i1", "b", 0.7, 0.7),
                rec("i2", "b", 0.8, 0.8),
                rec("i3", "b", 0.9, 0.9),
            ],
        )
        .unwrap();
        vec![a, b]
    }

    fn labels(pairs: &[(&str, usize)]) -> ClusteredProfile {
        ClusteredProfile {
            anchor_model_id: "a".into(),
            labels: pairs.iter().map(|(i, l)| (i.to_string(), *l)).collect(),
            centroids: vec![0.045, 0.2],
        }
    }

    #[test]
    fn matrix_shape_and_labels() {
        let clustered = labels(&[("i1", 0), ("i2", 0), ("i3", 1)]);
        let perf = build_performance_matrix("a", &two_models(), &clustered).unwrap();
        assert_eq!(perf.models, vec!["a", "b"]);
        assert_eq!(perf.rows.len(), 3);
        assert!(perf.rows.iter().all(|r| r.values.len() == 2));
        let tags: Vec<usize> = perf.rows.iter().map(|r| r.cluster).collect();
        assert_eq!(tags, vec![0, 0, 1]);
        assert_eq!(perf.rows[0].image_id, "i1");
        assert_eq!(perf.rows[0].values[1][Kpi::C], 0.7);
    }

    #[test]
    fn missing_image_is_join_error() {
        let mut profiles = two_models();
        profiles[1] = ModelProfile::new("b", "b", vec![rec("i1", "b", 0.7, 0.7), rec("i2", "b", 0.8, 0.8)]).unwrap();
        let clustered = labels(&[("i1", 0), ("i2", 0), ("i3", 1)]);
        match build_performance_matrix("a", &profiles, &clustered) {
            Err(Error::Join { image_id, model_id }) => {
                assert_eq!(image_id, "i3");
                assert_eq!(model_id, "b");
            }
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn ci_matrix_counts_cluster_members() {
        let clustered = labels(&[("i1", 0), ("i2", 0), ("i3", 1)]);
        let perf = build_performance_matrix("a", &two_models(), &clustered).unwrap();
        let ci = build_ci_matrix("a", &perf, 0.9, CiMethod::NormalMean).unwrap();
        assert_eq!(ci.cluster_count(), 2);
        let e = ci.entry(0, "b", Kpi::C).unwrap();
        assert_eq!((e.n, e.low, e.high), (2, 0.7, 0.8));
        assert!((e.mean - 0.75).abs() < 1e-12);
        assert_eq!(ci.entry(1, "a", Kpi::TauSystem).unwrap().n, 1);
        assert!(ci.entry(2, "a", Kpi::C).is_err());
    }

    #[test]
    fn csv_round_trip() {
        let clustered = labels(&[("i1", 0), ("i2", 0), ("i3", 1)]);
        let perf = build_performance_matrix("a", &two_models(), &clustered).unwrap();
        let ci = build_ci_matrix("a", &perf, 0.9, CiMethod::NormalMean).unwrap();
        let mut buf = Vec::new();
        write_ci_matrices(&mut buf, [&ci]).unwrap();
        let text = String::from_utf8(buf.clone()).unwrap();
        assert!(text.starts_with("anchor_model,cluster,model,kpi,low,high,n,mean\n"));
        let back = read_ci_matrices(buf.as_slice()).unwrap();
        assert_eq!(back.len(), 1);
        assert_eq!(back[0].clusters, ci.clusters);
        assert_eq!(back[0].kpi_scale, None);
    }

    #[test]
    fn csv_rejects_gaps() {
        let text = "anchor_model,cluster,model,kpi,low,high,n,mean\na,1,a,c,0.1,0.2,3,0.15\n";
        assert!(read_ci_matrices(text.as_bytes()).is_err());
        let text = "anchor_model,cluster,model,kpi,low,high,n,mean\na,0,a,c,0.3,0.2,3,0.25\n";
        assert!(matches!(
            read_ci_matrices(text.as_bytes()),
            Err(Error::RuleRow { row: 1, .. })
        ));
    }
}
