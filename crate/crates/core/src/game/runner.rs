//! One run of the distinguishing game, and batches of runs.

use std::sync::Arc;

use rand::Rng;
use rayon::prelude::*;

use crate::attacks::{
    AttackKind, CanaryObserver, FeatureVector, WbVariant, dcr_score, logan_score, qb_features, train_meta, wb_features,
};
use crate::data::{Dataset, NeighborPair, Record, Schema};
use crate::error::Result;
use crate::mechanisms::{self, GenModel, MechanismConfig};
use crate::rng::{derive_named, rng_from_seed};

use super::config::AttackOptions;

/// What an attack produced for a run: a final score, or features that a
/// meta-classifier turns into one.
#[derive(Clone, Debug, PartialEq)]
pub enum Observation {
    Score(f64),
    Features(FeatureVector),
}

#[derive(Clone, Debug, PartialEq)]
pub struct RunOutput {
    pub index: usize,
    pub run_seed: u64,
    pub b: bool,
    pub observation: Observation,
}

/// Fair world bit of a run.
pub fn world_bit(run_seed: u64) -> bool {
    rng_from_seed(derive_named(run_seed, "world")).random::<bool>()
}

/// Attacks that see only the synthetic data.
fn observe_black_box(kind: AttackKind, synth: &Dataset, target: &Record, schema: &Schema, query_seed: u64) -> Result<Observation> {
    Ok(match kind {
        AttackKind::Dcr => Observation::Score(dcr_score(target, schema, synth)?),
        _ => Observation::Features(qb_features(synth, target, schema, query_seed)?),
    })
}

/// Attacks that also see the fitted model.
fn observe_white_box(kind: AttackKind, model: &GenModel, target: &Record, schema: &Schema, d_ref: &Dataset) -> Result<Observation> {
    Ok(match kind {
        AttackKind::Logan => Observation::Score(logan_score(model, target, schema)?),
        AttackKind::WhiteboxNaive => Observation::Features(wb_features(model, WbVariant::Naive, schema, None)?),
        _ => Observation::Features(wb_features(model, WbVariant::Error, schema, Some(d_ref))?),
    })
}

pub struct Runner<'a> {
    pub mechanism: &'a MechanismConfig,
    pub attack: AttackKind,
    pub options: &'a AttackOptions,
    pub synth_size: usize,
    pub pair: &'a NeighborPair,
    pub schema: &'a Arc<Schema>,
    pub query_seed: u64,
}

impl Runner<'_> {
    /// Plays one round in world `b`.
    pub fn run(&self, index: usize, run_seed: u64, b: bool) -> Result<RunOutput> {
        let data = self.pair.world(b);
        let fit_seed = derive_named(run_seed, "fit");
        let target = &self.pair.target;
        let observation = match self.attack {
            AttackKind::Dcr | AttackKind::Querybased => {
                let model = mechanisms::fit(self.mechanism, data, fit_seed, None)?;
                let synth = mechanisms::sample(self.mechanism, &model, self.synth_size, derive_named(run_seed, "sample"));
                observe_black_box(self.attack, &synth, target, self.schema, self.query_seed)?
            }
            AttackKind::WhiteboxNaive | AttackKind::WhiteboxError | AttackKind::Logan => {
                let model = mechanisms::fit(self.mechanism, data, fit_seed, None)?;
                observe_white_box(self.attack, &model, target, self.schema, &self.pair.d0)?
            }
            AttackKind::Canary => {
                let mut obs = CanaryObserver::new(
                    self.options.canary.clone(),
                    target.clone(),
                    (**self.schema).clone(),
                    self.mechanism.gan_hyper().grad_bound,
                );
                mechanisms::fit(self.mechanism, data, fit_seed, Some(&mut obs))?;
                Observation::Score(obs.score())
            }
        };
        Ok(RunOutput {
            index,
            run_seed,
            b,
            observation,
        })
    }

    /// Runs `seeds.len()` rounds in parallel, in index order.
    pub fn run_all(&self, seeds: &[(u64, bool)]) -> Result<Vec<RunOutput>> {
        seeds
            .par_iter()
            .enumerate()
            .map(|(i, &(seed, b))| self.run(i, seed, b))
            .collect()
    }
}

/// Final scores for `outputs`. Feature observations are scored by a
/// meta-classifier trained on the runs listed in `train`.
pub fn finalize_scores(outputs: &[RunOutput], train: &[usize], options: &AttackOptions, seed: u64) -> Result<Vec<f64>> {
    if outputs.iter().all(|o| matches!(o.observation, Observation::Score(_))) {
        return Ok(outputs
            .iter()
            .map(|o| match o.observation {
                Observation::Score(s) => s,
                Observation::Features(_) => unreachable!(),
            })
            .collect());
    }
    let features = |o: &RunOutput| match &o.observation {
        Observation::Features(f) => f.clone(),
        Observation::Score(s) => FeatureVector {
            values: vec![*s],
            provenance: AttackKind::Dcr,
        },
    };
    let (mut f0, mut f1) = (Vec::new(), Vec::new());
    for &i in train {
        let o = &outputs[i];
        if o.b { f1.push(features(o)) } else { f0.push(features(o)) }
    }
    let meta = train_meta(&f0, &f1, options.meta, seed)?;
    outputs.iter().map(|o| meta.score(&features(o))).collect()
}
