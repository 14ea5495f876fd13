//! Active white-box attack planting a Dirac canary gradient.

use serde::{Deserialize, Serialize};

use crate::data::{Record, Schema};
use crate::error::{AuditError, Result};
use crate::mechanisms::TrainingObserver;

use super::category_map;

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct CanarySpec {
    /// Critic parameter index; the output bias (last index) when unset.
    pub index: Option<usize>,
    /// Canary norm; the gradient clip bound when unset.
    pub norm: Option<f64>,
}

/// Replaces the per-example gradient of every copy of the target with the
/// canary and accumulates `⟨w_after − w_start, g'⟩` over critic steps.
pub struct CanaryObserver {
    spec: CanarySpec,
    target: Record,
    target_schema: Schema,
    translated: Option<Record>,
    index: usize,
    norm: f64,
    score: f64,
}

impl CanaryObserver {
    pub fn new(spec: CanarySpec, target: Record, target_schema: Schema, grad_bound: f64) -> Self {
        let norm = spec.norm.unwrap_or(grad_bound);
        CanaryObserver {
            spec,
            target,
            target_schema,
            translated: None,
            index: 0,
            norm,
            score: 0.0,
        }
    }

    pub fn score(&self) -> f64 {
        self.score
    }
}

impl TrainingObserver for CanaryObserver {
    fn start(&mut self, schema: &Schema, critic_dim: usize) -> Result<()> {
        self.index = self.spec.index.unwrap_or(critic_dim - 1);
        if self.index >= critic_dim {
            return Err(AuditError::Argument(format!(
                "canary index {} outside the {critic_dim} critic parameters",
                self.index
            )));
        }
        let map = category_map(&self.target_schema, schema)?;
        // A target value missing from the model's domain never occurs in training.
        self.translated = self
            .target
            .values()
            .iter()
            .enumerate()
            .map(|(a, &v)| map[a][v])
            .collect::<Option<Vec<_>>>()
            .map(Record::new);
        self.score = 0.0;
        Ok(())
    }

    fn real_gradient(&mut self, record: &Record, grad: &mut [f64]) {
        if self.translated.as_ref() == Some(record) {
            grad.iter_mut().for_each(|g| *g = 0.0);
            grad[self.index] = self.norm;
        }
    }

    fn critic_step(&mut self, w_start: &[f64], w_after: &[f64]) {
        self.score += (w_after[self.index] - w_start[self.index]) * self.norm;
    }
}
