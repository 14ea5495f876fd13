//! The audited generators and the bug-injection layer.

pub mod gan;
pub mod mst;
pub mod privbayes;

use std::path::Path;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Schema, infer_metadata};
use crate::error::{AuditError, Result};

pub use gan::{GanHyper, GanModel, TrainingObserver, gan_fit, gan_sample};
pub use mst::{MstModel, mst_fit, mst_sample};
pub use privbayes::{BnNode, PbModel, pb_fit, pb_sample};

/// Seed every fit and sample uses under [`BugSpec::PrngReuse`] by default.
pub const REUSED_SEED: u64 = 0x5eed;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Family {
    #[serde(rename = "privbayes", alias = "pb")]
    PrivBayes,
    Mst,
    Gan,
}

impl Family {
    /// Whether the mechanism is pure ε-DP through the Laplace mechanism.
    pub fn is_laplace(self) -> bool {
        self == Family::PrivBayes
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", deny_unknown_fields)]
pub enum BugSpec {
    /// Fitting re-derives the schema from the data instead of using the given one.
    MetadataInference,
    /// All randomness uses one fixed seed.
    PrngReuse {
        #[serde(default = "default_reused_seed")]
        seed: u64,
    },
    /// Noise scale multiplied by 0.5.
    NoiseScaleHalved,
    /// GAN iteration count becomes `ceil(iterations_per_record · |d|)`.
    EarlyStopDataDependent {
        #[serde(default = "default_iterations_per_record")]
        iterations_per_record: f64,
    },
}

fn default_reused_seed() -> u64 {
    REUSED_SEED
}

fn default_iterations_per_record() -> f64 {
    10.0
}

impl BugSpec {
    pub fn applies_to(&self, family: Family) -> bool {
        !matches!(self, BugSpec::EarlyStopDataDependent { .. }) || family == Family::Gan
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MechanismConfig {
    pub family: Family,
    pub epsilon: f64,
    /// Ignored by the pure ε-DP family.
    #[serde(default)]
    pub delta: f64,
    /// PrivBayes network; defaults to a chain over the schema.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub structure: Option<Vec<BnNode>>,
    /// MST clique tree; defaults to the chain of adjacent pairs.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub cliques: Option<Vec<Vec<usize>>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub gan: Option<GanHyper>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub bug: Option<BugSpec>,
}

impl MechanismConfig {
    pub fn new(family: Family, epsilon: f64, delta: f64) -> Self {
        MechanismConfig {
            family,
            epsilon,
            delta,
            structure: None,
            cliques: None,
            gan: None,
            bug: None,
        }
    }

    pub fn gan_hyper(&self) -> GanHyper {
        self.gan.clone().unwrap_or_default()
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.epsilon > 0.0) || !self.epsilon.is_finite() {
            return Err(AuditError::config("mechanism.epsilon", "must be positive and finite"));
        }
        if self.family != Family::PrivBayes && !(self.delta > 0.0 && self.delta < 1.0) {
            return Err(AuditError::config("mechanism.delta", "must lie in (0,1)"));
        }
        if let Some(b) = &self.bug {
            if !b.applies_to(self.family) {
                return Err(AuditError::config(
                    "mechanism.bug",
                    format!("{b:?} does not apply to {:?}", self.family),
                ));
            }
        }
        if let Some(h) = &self.gan {
            h.validate()
                .map_err(|e| AuditError::config("mechanism.gan", e.to_string()))?;
        }
        Ok(())
    }

    fn noise_multiplier(&self) -> f64 {
        match self.bug {
            Some(BugSpec::NoiseScaleHalved) => 0.5,
            _ => 1.0,
        }
    }

    fn effective_seed(&self, seed: u64) -> u64 {
        match self.bug {
            Some(BugSpec::PrngReuse { seed: s }) => s,
            _ => seed,
        }
    }
}

/// Returns the configuration with `bug` planted.
pub fn inject_bug(config: &MechanismConfig, bug: BugSpec) -> Result<MechanismConfig> {
    if !bug.applies_to(config.family) {
        return Err(AuditError::Incompatible(format!(
            "{bug:?} cannot be planted in {:?}",
            config.family
        )));
    }
    Ok(MechanismConfig {
        bug: Some(bug),
        ..config.clone()
    })
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(tag = "family", rename_all = "snake_case")]
pub enum GenModel {
    #[serde(rename = "privbayes")]
    PrivBayes(PbModel),
    Mst(MstModel),
    Gan(GanModel),
}

impl GenModel {
    pub fn schema(&self) -> &Arc<Schema> {
        match self {
            GenModel::PrivBayes(m) => &m.schema,
            GenModel::Mst(m) => &m.schema,
            GenModel::Gan(m) => &m.schema,
        }
    }

    pub fn family(&self) -> Family {
        match self {
            GenModel::PrivBayes(_) => Family::PrivBayes,
            GenModel::Mst(_) => Family::Mst,
            GenModel::Gan(_) => Family::Gan,
        }
    }
}

/// Fits the configured mechanism, applying any planted bug.
pub fn fit(
    config: &MechanismConfig,
    d: &Dataset,
    seed: u64,
    observer: Option<&mut dyn TrainingObserver>,
) -> Result<GenModel> {
    let seed = config.effective_seed(seed);
    let inferred;
    let d = if matches!(config.bug, Some(BugSpec::MetadataInference)) {
        let schema = Arc::new(infer_metadata(&d.to_raw())?);
        inferred = d.reencode(schema)?;
        &inferred
    } else {
        d
    };
    let mult = config.noise_multiplier();
    Ok(match config.family {
        Family::PrivBayes => {
            let structure = config
                .structure
                .clone()
                .unwrap_or_else(|| privbayes::chain_structure(d.schema()));
            GenModel::PrivBayes(pb_fit(d, config.epsilon, &structure, mult, seed)?)
        }
        Family::Mst => {
            let cliques = config
                .cliques
                .clone()
                .unwrap_or_else(|| mst::chain_cliques(d.schema()));
            GenModel::Mst(mst_fit(d, config.epsilon, config.delta, &cliques, mult, seed)?)
        }
        Family::Gan => {
            let iterations = match config.bug {
                Some(BugSpec::EarlyStopDataDependent {
                    iterations_per_record,
                }) => Some(((iterations_per_record * d.len() as f64).ceil() as usize).max(1)),
                _ => None,
            };
            GenModel::Gan(gan_fit(
                d,
                config.epsilon,
                config.delta,
                &config.gan_hyper(),
                seed,
                observer,
                iterations,
                mult,
            )?)
        }
    })
}

/// Samples `n_out` synthetic records, honouring a planted seed reuse.
pub fn sample(config: &MechanismConfig, model: &GenModel, n_out: usize, seed: u64) -> Dataset {
    let seed = config.effective_seed(seed);
    match model {
        GenModel::PrivBayes(m) => pb_sample(m, n_out, seed),
        GenModel::Mst(m) => mst_sample(m, n_out, seed),
        GenModel::Gan(m) => gan_sample(m, n_out, seed),
    }
}

pub fn save_model(model: &GenModel, path: &Path) -> Result<()> {
    let f = std::fs::File::create(path).map_err(|e| AuditError::io(path, e))?;
    serde_json::to_writer(std::io::BufWriter::new(f), model)?;
    Ok(())
}

pub fn load_model(path: &Path) -> Result<GenModel> {
    let f = std::fs::File::open(path).map_err(|e| AuditError::io(path, e))?;
    Ok(serde_json::from_reader(std::io::BufReader::new(f))?)
}
