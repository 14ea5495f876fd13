//! Bayesian-network generator with Laplace-noised conditional tables.
//!
//! Each of the k network nodes measures the joint counts of (parents, node)
//! with Laplace noise of scale 2k/ε: under edit neighbours one record moves
//! one unit of mass between two cells of every table, so each table has L1
//! sensitivity 2 and receives ε/k of the budget.

use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Record, Schema};
use crate::error::{AuditError, Result};
use crate::rng::{rng_from_seed, sample_categorical, sample_laplace};

/// One node of the network: an attribute and its parents, which must appear
/// earlier in the structure.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct BnNode {
    pub attribute: usize,
    #[serde(default)]
    pub parents: Vec<usize>,
}

/// Conditional table of a node: `rows` parent configurations by `cols`
/// categories, row-major.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CondTable {
    pub attribute: usize,
    pub parents: Vec<usize>,
    pub shape: [usize; 2],
    pub values: Vec<f64>,
}

impl CondTable {
    /// Attributes of the underlying joint measurement, parents first.
    pub fn scope(&self) -> Vec<usize> {
        let mut s = self.parents.clone();
        s.push(self.attribute);
        s
    }

    pub fn row(&self, r: usize) -> &[f64] {
        &self.values[r * self.shape[1]..(r + 1) * self.shape[1]]
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PbModel {
    pub schema: Arc<Schema>,
    pub structure: Vec<BnNode>,
    pub tables: Vec<CondTable>,
    pub epsilon: f64,
    pub noise_scale: f64,
    pub seed: u64,
}

/// A chain network `a0 → a1 → … → a(n-1)`.
pub fn chain_structure(schema: &Schema) -> Vec<BnNode> {
    (0..schema.len())
        .map(|a| BnNode {
            attribute: a,
            parents: if a == 0 { vec![] } else { vec![a - 1] },
        })
        .collect()
}

pub fn validate_structure(structure: &[BnNode], schema: &Schema) -> Result<()> {
    let mut placed = vec![false; schema.len()];
    for node in structure {
        if node.attribute >= schema.len() {
            return Err(AuditError::Argument(format!(
                "structure references attribute {} but the schema has {}",
                node.attribute,
                schema.len()
            )));
        }
        if placed[node.attribute] {
            return Err(AuditError::Argument(format!(
                "attribute {} appears twice in the structure",
                node.attribute
            )));
        }
        for &p in &node.parents {
            if p >= schema.len() || !placed[p] {
                return Err(AuditError::Argument(format!(
                    "parent {p} of attribute {} is unknown or not placed earlier",
                    node.attribute
                )));
            }
        }
        placed[node.attribute] = true;
    }
    if let Some(missing) = placed.iter().position(|p| !p) {
        return Err(AuditError::Argument(format!(
            "structure does not cover attribute {missing}"
        )));
    }
    Ok(())
}

/// Laplace scale applied to every count cell.
pub fn pb_noise_scale(epsilon: f64, tables: usize, noise_multiplier: f64) -> f64 {
    2.0 * tables as f64 / epsilon * noise_multiplier
}

/// Noisy joint counts for each node, before clamping and normalisation.
pub fn pb_measure<R: Rng + ?Sized>(
    d: &Dataset,
    structure: &[BnNode],
    scale: f64,
    rng: &mut R,
) -> Vec<Vec<f64>> {
    structure
        .iter()
        .map(|node| {
            let mut scope = node.parents.clone();
            scope.push(node.attribute);
            let mut counts = d.joint_counts(&scope);
            for c in &mut counts {
                *c += sample_laplace(rng, scale);
            }
            counts
        })
        .collect()
}

/// Clamp negatives and normalise each row; an all-zero row becomes uniform.
pub(crate) fn normalise_rows(values: &mut [f64], cols: usize) {
    for row in values.chunks_mut(cols) {
        for v in row.iter_mut() {
            if *v < 0.0 {
                *v = 0.0;
            }
        }
        let s: f64 = row.iter().sum();
        if s > 0.0 {
            row.iter_mut().for_each(|v| *v /= s);
        } else {
            row.iter_mut().for_each(|v| *v = 1.0 / cols as f64);
        }
    }
}

/// Exact conditional tables of `d` for `structure` (uniform rows where the
/// parent configuration is unobserved).
pub fn exact_tables(d: &Dataset, structure: &[BnNode]) -> Vec<CondTable> {
    let schema = d.schema();
    structure
        .iter()
        .map(|node| {
            let mut scope = node.parents.clone();
            scope.push(node.attribute);
            let mut values = d.joint_counts(&scope);
            let cols = schema.domain_size(node.attribute);
            normalise_rows(&mut values, cols);
            CondTable {
                attribute: node.attribute,
                parents: node.parents.clone(),
                shape: [schema.joint_size(&node.parents), cols],
                values,
            }
        })
        .collect()
}

pub fn pb_fit(
    d: &Dataset,
    epsilon: f64,
    structure: &[BnNode],
    noise_multiplier: f64,
    seed: u64,
) -> Result<PbModel> {
    if !(epsilon > 0.0) {
        return Err(AuditError::Argument(format!("ε must be positive, got {epsilon}")));
    }
    let schema = d.schema_arc().clone();
    validate_structure(structure, &schema)?;
    let scale = pb_noise_scale(epsilon, structure.len(), noise_multiplier);
    let mut rng = rng_from_seed(seed);
    let measured = pb_measure(d, structure, scale, &mut rng);
    let tables = structure
        .iter()
        .zip(measured)
        .map(|(node, mut values)| {
            let cols = schema.domain_size(node.attribute);
            normalise_rows(&mut values, cols);
            CondTable {
                attribute: node.attribute,
                parents: node.parents.clone(),
                shape: [schema.joint_size(&node.parents), cols],
                values,
            }
        })
        .collect();
    Ok(PbModel {
        schema,
        structure: structure.to_vec(),
        tables,
        epsilon,
        noise_scale: scale,
        seed,
    })
}

/// Ancestral sampling in structure order.
pub fn pb_sample(model: &PbModel, n_out: usize, seed: u64) -> Dataset {
    let schema = &model.schema;
    let mut rng = rng_from_seed(seed);
    let mut rows = Vec::with_capacity(n_out);
    let mut values = vec![0usize; schema.len()];
    for _ in 0..n_out {
        for t in &model.tables {
            let r = t
                .parents
                .iter()
                .fold(0, |acc, &p| acc * schema.domain_size(p) + values[p]);
            values[t.attribute] = sample_categorical(&mut rng, t.row(r));
        }
        rows.push(Record::new(values.clone()));
    }
    Dataset::from_valid(schema.clone(), rows)
}
