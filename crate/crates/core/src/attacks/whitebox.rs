//! Passive white-box features read from fitted marginal-based models.
//!
//! Model tables are re-indexed into the coordinates of the audited pair's
//! schema so that models fitted on differently inferred domains still yield
//! vectors of the same length. Cells the model does not know read as 0.

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Schema};
use crate::error::{AuditError, Result};
use crate::mechanisms::GenModel;
use crate::mechanisms::privbayes::exact_tables;

use super::{AttackKind, FeatureVector, category_map};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum WbVariant {
    Naive,
    Error,
}

/// (scope, values) of each measurement table of the model.
fn model_tables(model: &GenModel) -> Result<Vec<(Vec<usize>, &[f64])>> {
    match model {
        GenModel::PrivBayes(m) => Ok(m.tables.iter().map(|t| (t.scope(), t.values.as_slice())).collect()),
        GenModel::Mst(m) => Ok(m
            .cliques
            .iter()
            .zip(&m.noisy_marginals)
            .map(|(c, v)| (c.clone(), v.as_slice()))
            .collect()),
        GenModel::Gan(_) => Err(AuditError::Incompatible("white-box features need a PB or MST model".into())),
    }
}

/// Values of a model table at every cell of the same scope in `target`.
fn reindex(scope: &[usize], values: &[f64], model: &Schema, target: &Schema, map: &[Vec<Option<usize>>]) -> Vec<f64> {
    let size = target.joint_size(scope);
    let mut out = vec![0.0; size];
    let mut digits = vec![0usize; scope.len()];
    for cell in out.iter_mut() {
        let mut idx = Some(0usize);
        for (&a, &v) in scope.iter().zip(&digits) {
            idx = idx.zip(map[a][v]).map(|(acc, mv)| acc * model.domain_size(a) + mv);
        }
        if let Some(i) = idx {
            *cell = values[i];
        }
        // Advance the mixed-radix counter, last attribute fastest.
        for k in (0..scope.len()).rev() {
            digits[k] += 1;
            if digits[k] < target.domain_size(scope[k]) {
                break;
            }
            digits[k] = 0;
        }
    }
    out
}

/// `Naive`: all table cells flattened in table order. `Error`: one signed
/// sum of (model − exact on `d_ref`) per table.
pub fn wb_features(model: &GenModel, variant: WbVariant, target_schema: &Schema, d_ref: Option<&Dataset>) -> Result<FeatureVector> {
    let map = category_map(target_schema, model.schema())?;
    let tables = model_tables(model)?;
    let mapped: Vec<(Vec<usize>, Vec<f64>)> = tables
        .iter()
        .map(|(scope, v)| (scope.clone(), reindex(scope, v, model.schema(), target_schema, &map)))
        .collect();
    let values = match variant {
        WbVariant::Naive => mapped.into_iter().flat_map(|(_, v)| v).collect(),
        WbVariant::Error => {
            let d_ref = d_ref.ok_or_else(|| AuditError::Argument("WhiteboxError needs a reference dataset".into()))?;
            if d_ref.schema() != target_schema {
                return Err(AuditError::Incompatible("reference dataset uses a different schema".into()));
            }
            let exact: Vec<Vec<f64>> = match model {
                GenModel::PrivBayes(m) => exact_tables(d_ref, &m.structure).into_iter().map(|t| t.values).collect(),
                _ => mapped.iter().map(|(scope, _)| d_ref.joint_counts(scope)).collect(),
            };
            mapped
                .iter()
                .zip(&exact)
                .map(|((_, m), e)| m.iter().zip(e).map(|(a, b)| a - b).sum())
                .collect()
        }
    };
    Ok(FeatureVector {
        values,
        provenance: match variant {
            WbVariant::Naive => AttackKind::WhiteboxNaive,
            WbVariant::Error => AttackKind::WhiteboxError,
        },
    })
}
