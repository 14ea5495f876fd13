//! Audit configuration and its resolution into a neighbouring pair.

use std::path::{Path, PathBuf};
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::attacks::{AttackKind, CanarySpec, MetaKind};
use crate::data::{Dataset, NeighborVariant, RawTable, Record, Schema, io};
use crate::error::{AuditError, Result};
use crate::estimator::Method;
use crate::mechanisms::{Family, MechanismConfig};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AuditConfig {
    pub mechanism: MechanismConfig,
    pub attack: AttackKind,
    #[serde(default)]
    pub attack_options: AttackOptions,
    pub pair: PairSource,
    #[serde(default = "default_variant")]
    pub variant: NeighborVariant,
    pub n_models: usize,
    #[serde(default)]
    pub split: SplitFractions,
    /// Records per synthetic dataset.
    pub synth_size: usize,
    pub delta: f64,
    #[serde(default = "default_confidence")]
    pub confidence: f64,
    pub method: Method,
    #[serde(default = "default_folds")]
    pub folds: usize,
    pub master_seed: u64,
}

fn default_variant() -> NeighborVariant {
    NeighborVariant::AddRemove
}

fn default_confidence() -> f64 {
    0.95
}

fn default_folds() -> usize {
    5
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct AttackOptions {
    pub meta: MetaKind,
    pub canary: CanarySpec,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SplitFractions {
    pub shadow: f64,
    pub threshold: f64,
    pub test: f64,
}

impl Default for SplitFractions {
    fn default() -> Self {
        SplitFractions {
            shadow: 0.6,
            threshold: 0.2,
            test: 0.2,
        }
    }
}

/// Run counts of the canonical split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct SplitSizes {
    pub shadow: usize,
    pub threshold: usize,
    pub test: usize,
}

impl SplitFractions {
    pub fn sizes(&self, n: usize) -> SplitSizes {
        let shadow = ((n as f64 * self.shadow).round() as usize).min(n);
        let threshold = ((n as f64 * self.threshold).round() as usize).min(n - shadow);
        SplitSizes {
            shadow,
            threshold,
            test: n - shadow - threshold,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(untagged)]
pub enum SchemaSource {
    Path(PathBuf),
    Inline(Schema),
}

impl SchemaSource {
    pub fn load(&self, base: &Path) -> Result<Schema> {
        match self {
            SchemaSource::Path(p) => io::read_schema(&base.join(p)),
            SchemaSource::Inline(s) => Ok(s.clone()),
        }
    }
}

/// A dataset given by CSV path or inline string rows, with its schema.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataRef {
    pub schema: SchemaSource,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub rows: Option<Vec<Vec<String>>>,
}

impl DataRef {
    pub fn load(&self, base: &Path) -> Result<Dataset> {
        let schema = Arc::new(self.schema.load(base)?);
        match (&self.csv, &self.rows) {
            (Some(p), None) => io::read_dataset(&base.join(p), schema),
            (None, Some(rows)) => {
                let table = RawTable {
                    header: schema.attributes().iter().map(|a| a.name.clone()).collect(),
                    rows: rows.clone(),
                };
                Dataset::from_raw(&table, schema)
            }
            _ => Err(AuditError::config("pair.data", "give exactly one of `csv` or `rows`")),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TargetChoice {
    /// Row index of the target within the dataset.
    Row(usize),
    /// Category strings of the target; it must occur in the dataset.
    Values(Vec<String>),
    /// The row ranked first by the rarity proxy.
    Rarest,
    /// Rarity ranking followed by per-candidate mini-audits.
    SelectVulnerable {
        #[serde(default = "default_candidates")]
        candidates: usize,
        #[serde(default = "default_reps")]
        reps: usize,
    },
}

fn default_candidates() -> usize {
    100
}

fn default_reps() -> usize {
    64
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", deny_unknown_fields)]
pub enum PairSource {
    /// Average case: a real dataset and a target record taken from it.
    Dataset {
        data: DataRef,
        target: TargetChoice,
        /// Category strings of y for edit neighbours; the modal record by default.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        replacement: Option<Vec<String>>,
    },
    /// Crafted worst case.
    WorstCase {
        schema: SchemaSource,
        #[serde(default)]
        small: bool,
        #[serde(default)]
        narrow: bool,
        #[serde(default)]
        repeat: bool,
        /// |D⁻| when `small`; 2 by default and 4 for the GAN.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        min_size: Option<usize>,
        /// |D⁻| when not `small`.
        #[serde(default = "default_size")]
        size: usize,
        /// Data whose frequencies decide modal and rarest categories.
        #[serde(default, skip_serializing_if = "Option::is_none")]
        reference: Option<DataRef>,
        #[serde(default)]
        seed: u64,
    },
}

fn default_size() -> usize {
    100
}

pub fn default_min_size(family: Family) -> usize {
    if family == Family::Gan { 4 } else { 2 }
}

impl AuditConfig {
    pub fn from_json(text: &str) -> Result<Self> {
        let de = &mut serde_json::Deserializer::from_str(text);
        let cfg: AuditConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            AuditError::config(if path.is_empty() { "<root>".into() } else { path }, e.into_inner().to_string())
        })?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AuditError::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        AuditConfig::from_json(&text)
    }

    pub fn theoretical_eps(&self) -> f64 {
        self.mechanism.epsilon
    }

    pub fn validate(&self) -> Result<()> {
        self.mechanism.validate()?;
        self.attack
            .check(self.mechanism.family)
            .map_err(|e| AuditError::config("attack", e.to_string()))?;
        if self.method == Method::GdpConvert && self.mechanism.family.is_laplace() {
            return Err(AuditError::config(
                "method",
                "GdpConvert is unsound for a Laplace-based mechanism; use EpsDeltaRegion",
            ));
        }
        let ok_delta = match self.method {
            Method::EpsDeltaRegion => (0.0..1.0).contains(&self.delta),
            Method::GdpConvert => self.delta > 0.0 && self.delta < 1.0,
        };
        if !ok_delta {
            return Err(AuditError::config("delta", format!("{} not admissible for {:?}", self.delta, self.method)));
        }
        if !(self.confidence > 0.0 && self.confidence < 1.0) {
            return Err(AuditError::config("confidence", "must lie in (0,1)"));
        }
        let s = self.split;
        if [s.shadow, s.threshold, s.test].iter().any(|v| !(*v >= 0.0)) || ((s.shadow + s.threshold + s.test) - 1.0).abs() > 1e-9 {
            return Err(AuditError::config("split", "fractions must be non-negative and sum to 1"));
        }
        let sizes = s.sizes(self.n_models);
        if sizes.threshold == 0 || sizes.test == 0 {
            return Err(AuditError::config("n_models", "threshold and test splits must be non-empty"));
        }
        if self.attack.needs_meta() && sizes.shadow == 0 {
            return Err(AuditError::config("split.shadow", format!("{:?} trains a meta-classifier on shadow runs", self.attack)));
        }
        if self.folds == 0 || self.folds > self.n_models {
            return Err(AuditError::config("folds", "must be between 1 and n_models"));
        }
        if self.synth_size == 0 {
            return Err(AuditError::config("synth_size", "must be positive"));
        }
        if let PairSource::Dataset {
            target: TargetChoice::SelectVulnerable { candidates, reps },
            ..
        } = &self.pair
        {
            let min_reps = if self.attack.needs_meta() { 4 } else { 2 };
            if *candidates == 0 || *reps < min_reps || reps % 2 == 1 {
                return Err(AuditError::config(
                    "pair.dataset.target",
                    format!("need candidates ≥ 1 and an even reps ≥ {min_reps}"),
                ));
            }
        }
        Ok(())
    }
}

/// Parse category strings into a record of `schema`.
pub fn record_from_strings(values: &[String], schema: &Schema, field: &str) -> Result<Record> {
    if values.len() != schema.len() {
        return Err(AuditError::config(field, format!("expected {} values, got {}", schema.len(), values.len())));
    }
    values
        .iter()
        .enumerate()
        .map(|(a, v)| {
            schema
                .category_index(a, v)
                .ok_or_else(|| AuditError::config(field, format!("`{v}` is not a category of `{}`", schema.attributes()[a].name)))
        })
        .collect::<Result<Vec<_>>>()
        .map(Record::new)
}

pub fn record_to_strings(record: &Record, schema: &Schema) -> Vec<String> {
    record
        .values()
        .iter()
        .enumerate()
        .map(|(a, &v)| schema.category(a, v).to_string())
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;

    pub(crate) fn minimal() -> &'static str {
        r#"{
            "mechanism": {"family": "privbayes", "epsilon": 1.0},
            "attack": "Dcr",
            "pair": {"worst_case": {"schema": {"attributes": [
                {"name": "a", "categories": ["x", "y"]},
                {"name": "b", "categories": ["x", "y", "z"]}]}, "small": true}},
            "n_models": 10,
            "synth_size": 20,
            "delta": 0.0,
            "method": "EpsDeltaRegion",
            "folds": 2,
            "master_seed": 1
        }"#
    }

    #[test]
    fn parses_minimal_config() {
        let c = AuditConfig::from_json(minimal()).unwrap();
        assert_eq!(c.split, SplitFractions::default());
        assert_eq!(c.confidence, 0.95);
        let again: AuditConfig = serde_json::from_str(&serde_json::to_string(&c).unwrap()).unwrap();
        assert_eq!(again, c);
    }

    #[test]
    fn errors_name_the_field() {
        let bad = minimal().replace("privbayes", "foo");
        match AuditConfig::from_json(&bad) {
            Err(AuditError::Config { field, .. }) => assert_eq!(field, "mechanism.family"),
            other => panic!("{other:?}"),
        }
        let gdp = minimal().replace("EpsDeltaRegion", "GdpConvert").replace("\"delta\": 0.0", "\"delta\": 1e-5");
        assert!(matches!(AuditConfig::from_json(&gdp), Err(AuditError::Config { field, .. }) if field == "method"));
        let canary = minimal().replace("\"Dcr\"", "\"Canary\"");
        assert!(matches!(AuditConfig::from_json(&canary), Err(AuditError::Config { field, .. }) if field == "attack"));
        let split = minimal().replace("\"folds\": 2", "\"folds\": 2, \"split\": {\"shadow\": 0.5, \"threshold\": 0.5, \"test\": 0.5}");
        assert!(AuditConfig::from_json(&split).is_err());
    }

    #[test]
    fn split_sizes() {
        let s = SplitFractions::default().sizes(10_000);
        assert_eq!((s.shadow, s.threshold, s.test), (6000, 2000, 2000));
        let s = SplitFractions::default().sizes(10);
        assert_eq!(s.shadow + s.threshold + s.test, 10);
    }
}
