//! Per-model KPI profiles: the offline evaluation datasets the learning engine
//! consumes and the simulator samples service behaviour from.
//!
//! Profiles are either synthesized from a [`ProfileFamilySpec`] or read from a
//! CSV file with header `image_id,model_id,c,tau_model,tau_system,s_cpu,b`.

use std::collections::{BTreeMap, HashSet};
use std::fs::File;
use std::io::{Read, Write};
use std::path::Path;

use rand::Rng;
use rand_distr::StandardNormal;
use serde::{Deserialize, Serialize};

use crate::kpi::{Kpi, KpiValues};
use crate::seed;
use crate::{Error, Result};

pub const PROFILE_HEADER: [&str; 7] = ["image_id", "model_id", "c", "tau_model", "tau_system", "s_cpu", "b"];

/// Smallest model processing time a generated record may carry, seconds.
const MIN_TAU_MODEL: f64 = 1e-4;

/// KPIs of one image processed by one model.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct KpiRecord {
    pub image_id: String,
    pub model_id: String,
    pub c: f64,
    pub tau_model: f64,
    pub tau_system: f64,
    pub s_cpu: f64,
    pub b: u32,
}

impl KpiRecord {
    /// Checks the record invariants, returning a description of the first
    /// violated constraint.
    pub fn validate(&self) -> Result<(), String> {
        let finite = [self.c, self.tau_model, self.tau_system, self.s_cpu];
        if finite.iter().any(|v| !v.is_finite()) {
            return Err("non-finite KPI value".into());
        }
        if !(0.0..=1.0).contains(&self.c) {
            return Err(format!("c = {} outside [0, 1]", self.c));
        }
        if self.tau_model <= 0.0 {
            return Err(format!("tau_model = {} must be > 0", self.tau_model));
        }
        if self.tau_system < self.tau_model {
            return Err(format!(
                "tau_system = {} below tau_model = {}",
                self.tau_system, self.tau_model
            ));
        }
        if !(0.0..=100.0).contains(&self.s_cpu) {
            return Err(format!("s_cpu = {} outside [0, 100]", self.s_cpu));
        }
        Ok(())
    }

    pub fn kpi(&self, kpi: Kpi) -> f64 {
        match kpi {
            Kpi::C => self.c,
            Kpi::TauModel => self.tau_model,
            Kpi::TauSystem => self.tau_system,
            Kpi::SCpu => self.s_cpu,
            Kpi::B => f64::from(self.b),
        }
    }

    pub fn kpis(&self) -> KpiValues<f64> {
        KpiValues::from_fn(|k| self.kpi(k))
    }
}

/// The evaluation dataset of one model.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelProfile {
    model_id: String,
    label: String,
    records: Vec<KpiRecord>,
}

impl ModelProfile {
    pub fn new(model_id: impl Into<String>, label: impl Into<String>, records: Vec<KpiRecord>) -> Result<Self> {
        let model_id = model_id.into();
        if records.is_empty() {
            return Err(Error::InvalidSpec(format!("profile `{model_id}` has no records")));
        }
        let mut seen = HashSet::with_capacity(records.len());
        for r in &records {
            if r.model_id != model_id {
                return Err(Error::InvalidSpec(format!(
                    "record for image `{}` carries model `{}` inside profile `{model_id}`",
                    r.image_id, r.model_id
                )));
            }
            if !seen.insert(r.image_id.as_str()) {
                return Err(Error::InvalidSpec(format!(
                    "duplicate image `{}` in profile `{model_id}`",
                    r.image_id
                )));
            }
            r.validate().map_err(Error::InvalidSpec)?;
        }
        Ok(ModelProfile {
            model_id,
            label: label.into(),
            records,
        })
    }

    pub fn model_id(&self) -> &str {
        &self.model_id
    }

    pub fn label(&self) -> &str {
        &self.label
    }

    pub fn records(&self) -> &[KpiRecord] {
        &self.records
    }

    pub fn len(&self) -> usize {
        self.records.len()
    }

    pub fn is_empty(&self) -> bool {
        self.records.is_empty()
    }

    pub fn column(&self, kpi: Kpi) -> Vec<f64> {
        self.records.iter().map(|r| r.kpi(kpi)).collect()
    }

    pub fn mean(&self, kpi: Kpi) -> f64 {
        self.records.iter().map(|r| r.kpi(kpi)).sum::<f64>() / self.records.len() as f64
    }
}

/// Generation parameters for one model of a synthetic family.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelSpec {
    pub model_id: String,
    #[serde(default)]
    pub label: String,
    pub tau_system_mean: f64,
    pub tau_system_sd: f64,
    /// Fixed gap `tau_system - tau_model`, seconds.
    #[serde(default = "default_overhead")]
    pub overhead: f64,
    pub c_mean: f64,
    pub c_sd: f64,
    pub s_cpu_mean: f64,
    #[serde(default)]
    pub s_cpu_sd: f64,
    pub b_mean: f64,
    #[serde(default)]
    pub b_sd: f64,
}

fn default_overhead() -> f64 {
    0.005
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProfileFamilySpec {
    pub models: Vec<ModelSpec>,
    pub image_count: usize,
    pub seed: u64,
}

impl ProfileFamilySpec {
    pub fn validate(&self) -> Result<()> {
        let bad = |msg: String| Err(Error::InvalidSpec(msg));
        if self.image_count == 0 {
            return bad("image count must be at least 1".into());
        }
        if self.models.is_empty() {
            return bad("profile family has no models".into());
        }
        let mut ids = HashSet::new();
        for m in &self.models {
            let id = &m.model_id;
            if id.is_empty() {
                return bad("empty model id".into());
            }
            if !ids.insert(id.as_str()) {
                return bad(format!("duplicate model id `{id}`"));
            }
            let sds = [m.tau_system_sd, m.c_sd, m.s_cpu_sd, m.b_sd];
            if sds.iter().any(|s| !s.is_finite() || *s < 0.0) {
                return bad(format!("model `{id}`: standard deviations must be finite and >= 0"));
            }
            if !(m.tau_system_mean.is_finite() && m.tau_system_mean > 0.0) {
                return bad(format!("model `{id}`: tau_system_mean must be > 0"));
            }
            if !(m.overhead.is_finite() && m.overhead >= 0.0 && m.overhead < m.tau_system_mean) {
                return bad(format!("model `{id}`: overhead must lie in [0, tau_system_mean)"));
            }
            if !(0.0..=1.0).contains(&m.c_mean) {
                return bad(format!("model `{id}`: c_mean must lie in [0, 1]"));
            }
            if !(0.0..=100.0).contains(&m.s_cpu_mean) {
                return bad(format!("model `{id}`: s_cpu_mean must lie in [0, 100]"));
            }
            if !(m.b_mean.is_finite() && m.b_mean >= 0.0) {
                return bad(format!("model `{id}`: b_mean must be >= 0"));
            }
        }
        Ok(())
    }
}

pub fn image_id(index: usize) -> String {
    format!("img-{index:06}")
}

fn draw(rng: &mut impl Rng, mean: f64, sd: f64) -> f64 {
    let z: f64 = rng.sample(StandardNormal);
    mean + sd * z
}

/// Synthesizes one profile per model over a shared image set.
///
/// Each field is an independent normal draw truncated by clamping into its
/// valid range. Every model draws from its own stream derived from the family
/// seed and its id, so adding a model leaves the others untouched.
pub fn generate_profiles(spec: &ProfileFamilySpec) -> Result<Vec<ModelProfile>> {
    spec.validate()?;
    spec.models
        .iter()
        .map(|m| {
            let mut rng = seed::derived_rng(spec.seed, &m.model_id);
            let records = (0..spec.image_count)
                .map(|i| {
                    let tau_system = draw(&mut rng, m.tau_system_mean, m.tau_system_sd).max(m.overhead + MIN_TAU_MODEL);
                    let c = draw(&mut rng, m.c_mean, m.c_sd).clamp(0.0, 1.0);
                    let s_cpu = draw(&mut rng, m.s_cpu_mean, m.s_cpu_sd).clamp(0.0, 100.0);
                    let b = draw(&mut rng, m.b_mean, m.b_sd).max(0.0).round() as u32;
                    KpiRecord {
                        image_id: image_id(i),
                        model_id: m.model_id.clone(),
                        c,
                        tau_model: tau_system - m.overhead,
                        tau_system,
                        s_cpu,
                        b,
                    }
                })
                .collect();
            let label = if m.label.is_empty() {
                m.model_id.clone()
            } else {
                m.label.clone()
            };
            ModelProfile::new(m.model_id.clone(), label, records)
        })
        .collect()
}

pub fn write_profiles<W: Write>(writer: W, profiles: &[ModelProfile]) -> Result<()> {
    let mut w = csv::Writer::from_writer(writer);
    for p in profiles {
        for r in p.records() {
            w.serialize(r)?;
        }
    }
    w.flush().map_err(|e| Error::io("<profile writer>", e))?;
    Ok(())
}

pub fn save_profiles(path: &Path, profiles: &[ModelProfile]) -> Result<()> {
    let file = File::create(path).map_err(|e| Error::io(path, e))?;
    write_profiles(file, profiles)
}

pub fn load_profiles(path: &Path) -> Result<Vec<ModelProfile>> {
    let file = File::open(path).map_err(|e| Error::io(path, e))?;
    read_profiles(file)
}

/// Parses profile CSV. Row numbers in errors count data rows from 1; the
/// header is row 0.
pub fn read_profiles<R: Read>(reader: R) -> Result<Vec<ModelProfile>> {
    let mut rdr = csv::ReaderBuilder::new().trim(csv::Trim::All).from_reader(reader);
    let headers = rdr.headers()?.clone();
    let mut cols = [0usize; 7];
    for (slot, name) in cols.iter_mut().zip(PROFILE_HEADER) {
        *slot = headers
            .iter()
            .position(|h| h == name)
            .ok_or_else(|| Error::ProfileRow {
                row: 0,
                reason: format!("missing column `{name}`"),
            })?;
    }

    let mut order: Vec<String> = Vec::new();
    let mut grouped: BTreeMap<String, Vec<KpiRecord>> = BTreeMap::new();
    for (i, row) in rdr.records().enumerate() {
        let row_no = i as u64 + 1;
        let row = row?;
        let field = |col: usize| row.get(cols[col]).unwrap_or("");
        let num = |col: usize| -> Result<f64> {
            field(col).parse::<f64>().map_err(|_| Error::ProfileRow {
                row: row_no,
                reason: format!("unparsable `{}` value `{}`", PROFILE_HEADER[col], field(col)),
            })
        };
        let b = field(6).parse::<u32>().map_err(|_| Error::ProfileRow {
            row: row_no,
            reason: format!("unparsable `b` value `{}`", field(6)),
        })?;
        let rec = KpiRecord {
            image_id: field(0).to_string(),
            model_id: field(1).to_string(),
            c: num(2)?,
            tau_model: num(3)?,
            tau_system: num(4)?,
            s_cpu: num(5)?,
            b,
        };
        if rec.image_id.is_empty() || rec.model_id.is_empty() {
            return Err(Error::ProfileRow {
                row: row_no,
                reason: "empty identifier".into(),
            });
        }
        rec.validate()
            .map_err(|reason| Error::ProfileRow { row: row_no, reason })?;
        if !grouped.contains_key(&rec.model_id) {
            order.push(rec.model_id.clone());
        }
        grouped.entry(rec.model_id.clone()).or_default().push(rec);
    }

    order
        .into_iter()
        .map(|id| {
            let records = grouped.remove(&id).unwrap_or_default();
            ModelProfile::new(id.clone(), id, records)
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    fn model(id: &str, tau: f64, sd: f64) -> ModelSpec {
        ModelSpec {
            model_id: id.into(),
            label: String::new(),
            tau_system_mean: tau,
            tau_system_sd: sd,
            overhead: 0.005,
            c_mean: 0.6,
            c_sd: sd,
            s_cpu_mean: 50.0,
            s_cpu_sd: sd,
            b_mean: 4.0,
            b_sd: sd,
        }
    }

    #[test]
    fn zero_stddev_reproduces_means() {
        let spec = ProfileFamilySpec {
            models: vec![model("a", 0.1, 0.0)],
            image_count: 20,
            seed: 3,
        };
        let profiles = generate_profiles(&spec).unwrap();
        for r in profiles[0].records() {
            assert_eq!(r.tau_system, 0.1);
            assert_eq!(r.tau_model, 0.1 - 0.005);
            assert_eq!(r.c, 0.6);
            assert_eq!(r.s_cpu, 50.0);
            assert_eq!(r.b, 4);
        }
    }

    #[test]
    fn same_seed_same_records() {
        let spec = ProfileFamilySpec {
            models: vec![model("a", 0.1, 0.02), model("b", 0.3, 0.05)],
            image_count: 50,
            seed: 11,
        };
        assert_eq!(generate_profiles(&spec).unwrap(), generate_profiles(&spec).unwrap());
    }

    #[test]
    fn adding_a_model_keeps_existing_streams() {
        let one = ProfileFamilySpec {
            models: vec![model("a", 0.1, 0.02)],
            image_count: 30,
            seed: 5,
        };
        let mut two = one.clone();
        two.models.push(model("b", 0.3, 0.05));
        assert_eq!(generate_profiles(&one).unwrap()[0], generate_profiles(&two).unwrap()[0]);
    }

    #[test]
    fn rejects_invalid_specs() {
        let mut spec = ProfileFamilySpec {
            models: vec![model("a", 0.1, 0.02)],
            image_count: 0,
            seed: 1,
        };
        assert!(matches!(generate_profiles(&spec), Err(Error::InvalidSpec(_))));
        spec.image_count = 10;
        spec.models[0].c_sd = -0.1;
        assert!(matches!(generate_profiles(&spec), Err(Error::InvalidSpec(_))));
    }

    #[test]
    fn two_row_csv_gives_two_profiles() {
        let csv = "image_id,model_id,c,tau_model,tau_system,s_cpu,b\n\
                   i1,a,0.5,0.04,0.045,40,3\n\
                   i1,b,0.7,0.7,0.705,80,5\n";
        let profiles = read_profiles(csv.as_bytes()).unwrap();
        assert_eq!(profiles.len(), 2);
        assert_eq!(profiles[0].model_id(), "a");
        assert_eq!(profiles[1].model_id(), "b");
        assert_eq!(profiles[0].len(), 1);
        assert_eq!(profiles[1].records()[0].b, 5);
    }

    #[test]
    fn out_of_range_confidence_names_row() {
        let csv = "image_id,model_id,c,tau_model,tau_system,s_cpu,b\n\
                   i1,a,0.5,0.04,0.045,40,3\n\
                   i2,a,1.3,0.04,0.045,40,3\n";
        match read_profiles(csv.as_bytes()) {
            Err(Error::ProfileRow { row, reason }) => {
                assert_eq!(row, 2);
                assert!(reason.contains("c = 1.3"), "{reason}");
            }
            other => panic!("expected row error, got {other:?}"),
        }
    }

    #[test]
    fn missing_column_and_bad_number() {
        let csv = "image_id,model_id,c,tau_model,s_cpu,b\ni1,a,0.5,0.04,40,3\n";
        let err = read_profiles(csv.as_bytes()).unwrap_err();
        assert!(err.to_string().contains("tau_system"), "{err}");

        let csv = "image_id,model_id,c,tau_model,tau_system,s_cpu,b\ni1,a,x,0.04,0.05,40,3\n";
        let err = read_profiles(csv.as_bytes()).unwrap_err();
        assert!(matches!(err, Error::ProfileRow { row: 1, .. }), "{err}");
    }

    #[test]
    fn duplicate_image_rejected() {
        let csv = "image_id,model_id,c,tau_model,tau_system,s_cpu,b\n\
                   i1,a,0.5,0.04,0.045,40,3\n\
                   i1,a,0.5,0.04,0.045,40,3\n";
        assert!(read_profiles(csv.as_bytes()).is_err());
    }
}
