//! Small differentially private Wasserstein GAN over one-hot records.
//!
//! Critic: one-hot `x` → `tanh(W1 x + b1)` → `w2·h + b2`. Parameters are laid
//! out flat as `[W1 (row-major), b1, w2, b2]`, so the last index is the output
//! bias. Generator: latent `z` → `tanh(V1 z + c1)` → `V2 u + c2` followed by a
//! softmax per attribute block, laid out as `[V1, c1, V2, c2]`.
//!
//! A critic step draws a batch of L records without replacement, clips every
//! per-example gradient to `grad_bound`, adds `N(0, σ² c_p² I)` to the real
//! sum only, subtracts the clipped mean over L generator samples, applies the
//! optimiser and clips every weight to `[-c, c]`.

use std::sync::Arc;

use rand::Rng;
use rand::seq::index::sample as sample_indices;
use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Record, Schema, encode_one_hot};
use crate::error::{AuditError, Result};
use crate::estimator::gdp_mu_for_eps;
use crate::rng::{AuditRng, rng_from_seed, sample_gaussian};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Optimizer {
    RmsProp,
    /// Plain gradient ascent; only allowed in test mode.
    PlainSgd,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct GanHyper {
    pub latent_dim: usize,
    pub gen_hidden: usize,
    pub critic_hidden: usize,
    pub learning_rate: f64,
    pub weight_clip: f64,
    pub batch_size: usize,
    pub n_critic: usize,
    pub grad_bound: f64,
    pub iterations: usize,
    pub rmsprop_decay: f64,
    pub rmsprop_eps: f64,
    pub init_scale: f64,
    /// Fitting fails when the calibrated σ exceeds this.
    pub sigma_cap: f64,
    pub record_transcript: bool,
    /// Enables the knobs below, which break the privacy guarantee.
    pub test_mode: bool,
    pub optimizer: Optimizer,
    pub zero_fake_gradients: bool,
    pub sigma_override: Option<f64>,
}

impl Default for GanHyper {
    fn default() -> Self {
        GanHyper {
            latent_dim: 8,
            gen_hidden: 16,
            critic_hidden: 16,
            learning_rate: 0.002,
            weight_clip: 0.1,
            batch_size: 4,
            n_critic: 5,
            grad_bound: 1.0,
            iterations: 50,
            rmsprop_decay: 0.9,
            rmsprop_eps: 1e-8,
            init_scale: 0.05,
            sigma_cap: 1e4,
            record_transcript: false,
            test_mode: false,
            optimizer: Optimizer::RmsProp,
            zero_fake_gradients: false,
            sigma_override: None,
        }
    }
}

impl GanHyper {
    pub fn critic_dim(&self, one_hot_dim: usize) -> usize {
        self.critic_hidden * one_hot_dim + 2 * self.critic_hidden + 1
    }

    pub fn gen_dim(&self, one_hot_dim: usize) -> usize {
        self.gen_hidden * self.latent_dim + self.gen_hidden + one_hot_dim * self.gen_hidden + one_hot_dim
    }

    /// Critic steps of a full run.
    pub fn critic_steps(&self) -> usize {
        self.iterations * self.n_critic
    }

    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(AuditError::Argument(format!("GAN hyper-parameters: {m}")));
        if self.latent_dim == 0 || self.gen_hidden == 0 || self.critic_hidden == 0 {
            return bad("layer sizes must be positive");
        }
        if self.batch_size == 0 || self.n_critic == 0 || self.iterations == 0 {
            return bad("batch_size, n_critic and iterations must be positive");
        }
        if !(self.learning_rate > 0.0 && self.weight_clip > 0.0 && self.grad_bound > 0.0) {
            return bad("learning_rate, weight_clip and grad_bound must be positive");
        }
        if !self.test_mode
            && (self.optimizer != Optimizer::RmsProp
                || self.zero_fake_gradients
                || self.sigma_override.is_some())
        {
            return bad("optimizer, zero_fake_gradients and sigma_override need test_mode");
        }
        Ok(())
    }
}

/// One critic step of the transcript.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CriticStep {
    pub w_start: Vec<f64>,
    pub w_after: Vec<f64>,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GanModel {
    pub schema: Arc<Schema>,
    pub hyper: GanHyper,
    pub epsilon: f64,
    pub delta: f64,
    pub sigma: f64,
    pub gen_params: Vec<f64>,
    pub critic_params: Vec<f64>,
    pub critic_steps: usize,
    pub accountant_mu: f64,
    pub transcript: Vec<CriticStep>,
    pub seed: u64,
}

/// Hook into critic training. Attacks use it to plant canary gradients and
/// to read parameter differences.
pub trait TrainingObserver {
    /// Called once before training with the schema records are encoded in.
    fn start(&mut self, _schema: &Schema, _critic_dim: usize) -> Result<()> {
        Ok(())
    }
    /// May overwrite the clipped per-example gradient of a real record.
    fn real_gradient(&mut self, _record: &Record, _grad: &mut [f64]) {}
    fn critic_step(&mut self, _w_start: &[f64], _w_after: &[f64]) {}
}

/// Critic output and hidden activations for a one-hot input.
pub fn critic_forward(params: &[f64], hidden: usize, x: &[f64]) -> (f64, Vec<f64>) {
    let d = x.len();
    let (w1, rest) = params.split_at(hidden * d);
    let (b1, rest) = rest.split_at(hidden);
    let (w2, b2) = rest.split_at(hidden);
    let h: Vec<f64> = (0..hidden)
        .map(|j| {
            let pre: f64 = b1[j] + w1[j * d..(j + 1) * d].iter().zip(x).map(|(a, b)| a * b).sum::<f64>();
            pre.tanh()
        })
        .collect();
    let f = b2[0] + w2.iter().zip(&h).map(|(a, b)| a * b).sum::<f64>();
    (f, h)
}

/// Writes ∂f/∂params into `grad` and returns f.
fn critic_param_grad(params: &[f64], hidden: usize, x: &[f64], grad: &mut [f64]) -> f64 {
    let d = x.len();
    let (f, h) = critic_forward(params, hidden, x);
    let w2 = &params[hidden * d + hidden..hidden * d + 2 * hidden];
    for j in 0..hidden {
        let back = w2[j] * (1.0 - h[j] * h[j]);
        for k in 0..d {
            grad[j * d + k] = back * x[k];
        }
        grad[hidden * d + j] = back;
        grad[hidden * d + hidden + j] = h[j];
    }
    grad[hidden * d + 2 * hidden] = 1.0;
    f
}

/// ∂f/∂x for the generator update.
fn critic_input_grad(params: &[f64], hidden: usize, x: &[f64]) -> Vec<f64> {
    let d = x.len();
    let (_, h) = critic_forward(params, hidden, x);
    let w2 = &params[hidden * d + hidden..hidden * d + 2 * hidden];
    let mut g = vec![0.0; d];
    for j in 0..hidden {
        let back = w2[j] * (1.0 - h[j] * h[j]);
        for k in 0..d {
            g[k] += back * params[j * d + k];
        }
    }
    g
}

struct Generator<'a> {
    params: &'a [f64],
    latent: usize,
    hidden: usize,
    blocks: &'a [(usize, usize)],
    out: usize,
}

impl Generator<'_> {
    fn split(&self) -> (&[f64], &[f64], &[f64], &[f64]) {
        let (v1, rest) = self.params.split_at(self.hidden * self.latent);
        let (c1, rest) = rest.split_at(self.hidden);
        let (v2, c2) = rest.split_at(self.out * self.hidden);
        (v1, c1, v2, c2)
    }

    /// Hidden activations and per-block softmax output.
    fn forward(&self, z: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let (v1, c1, v2, c2) = self.split();
        let u: Vec<f64> = (0..self.hidden)
            .map(|j| {
                (c1[j] + v1[j * self.latent..(j + 1) * self.latent].iter().zip(z).map(|(a, b)| a * b).sum::<f64>())
                    .tanh()
            })
            .collect();
        let mut o: Vec<f64> = (0..self.out)
            .map(|i| c2[i] + v2[i * self.hidden..(i + 1) * self.hidden].iter().zip(&u).map(|(a, b)| a * b).sum::<f64>())
            .collect();
        for &(start, len) in self.blocks {
            let block = &mut o[start..start + len];
            let m = block.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
            block.iter_mut().for_each(|v| *v = (*v - m).exp());
            let s: f64 = block.iter().sum();
            block.iter_mut().for_each(|v| *v /= s);
        }
        (u, o)
    }

    /// Accumulates ∂L/∂params given ∂L/∂x̂ into `grad`.
    fn backward(&self, z: &[f64], u: &[f64], xh: &[f64], gx: &[f64], grad: &mut [f64]) {
        let (_, _, v2, _) = self.split();
        let mut go = vec![0.0; self.out];
        for &(start, len) in self.blocks {
            let dot: f64 = (start..start + len).map(|i| xh[i] * gx[i]).sum();
            for i in start..start + len {
                go[i] = xh[i] * (gx[i] - dot);
            }
        }
        let (hl, hh) = (self.hidden * self.latent, self.hidden);
        let v2_off = hl + hh;
        let c2_off = v2_off + self.out * hh;
        let mut gu = vec![0.0; hh];
        for i in 0..self.out {
            for j in 0..hh {
                grad[v2_off + i * hh + j] += go[i] * u[j];
                gu[j] += go[i] * v2[i * hh + j];
            }
            grad[c2_off + i] += go[i];
        }
        for j in 0..hh {
            let gp = gu[j] * (1.0 - u[j] * u[j]);
            for k in 0..self.latent {
                grad[j * self.latent + k] += gp * z[k];
            }
            grad[hl + j] += gp;
        }
    }
}

struct RmsProp {
    v: Vec<f64>,
    decay: f64,
    eps: f64,
}

impl RmsProp {
    fn new(n: usize, decay: f64, eps: f64) -> Self {
        RmsProp {
            v: vec![0.0; n],
            decay,
            eps,
        }
    }

    /// Ascent step `w += lr · g / (√v + eps)`.
    fn ascend(&mut self, w: &mut [f64], g: &[f64], lr: f64) {
        for ((wi, gi), vi) in w.iter_mut().zip(g).zip(self.v.iter_mut()) {
            *vi = self.decay * *vi + (1.0 - self.decay) * gi * gi;
            *wi += lr * gi / (vi.sqrt() + self.eps);
        }
    }
}

fn clip_norm(g: &mut [f64], bound: f64) {
    let n = g.iter().map(|v| v * v).sum::<f64>().sqrt();
    if n > bound {
        let s = bound / n;
        g.iter_mut().for_each(|v| *v *= s);
    }
}

fn blocks(schema: &Schema) -> Vec<(usize, usize)> {
    (0..schema.len())
        .map(|a| (schema.offset(a), schema.domain_size(a)))
        .collect()
}

/// Noise multiplier that makes `steps` Gaussian steps μ-GDP for `(ε, δ)`.
pub fn gan_sigma(hyper: &GanHyper, epsilon: f64, delta: f64) -> Result<f64> {
    let mu = gdp_mu_for_eps(epsilon, delta)?;
    Ok((hyper.critic_steps() as f64).sqrt() / mu)
}

/// Fits the GAN. `iterations` overrides `hyper.iterations` for the step
/// count while σ stays calibrated on the nominal count; `noise_multiplier`
/// scales σ. Both exist for bug injection.
#[allow(clippy::too_many_arguments)]
pub fn gan_fit(
    d: &Dataset,
    epsilon: f64,
    delta: f64,
    hyper: &GanHyper,
    seed: u64,
    observer: Option<&mut dyn TrainingObserver>,
    iterations: Option<usize>,
    noise_multiplier: f64,
) -> Result<GanModel> {
    hyper.validate()?;
    if !(epsilon > 0.0) {
        return Err(AuditError::Argument(format!("ε must be positive, got {epsilon}")));
    }
    if hyper.batch_size > d.len() {
        return Err(AuditError::Argument(format!(
            "batch size {} exceeds the {} training records",
            hyper.batch_size,
            d.len()
        )));
    }
    let sigma = match hyper.sigma_override {
        Some(s) => s,
        None => gan_sigma(hyper, epsilon, delta)? * noise_multiplier,
    };
    if !(sigma >= 0.0) || sigma > hyper.sigma_cap {
        return Err(AuditError::Argument(format!(
            "budget ε={epsilon} needs noise σ={sigma:.4} above the cap {}",
            hyper.sigma_cap
        )));
    }
    let schema = d.schema_arc().clone();
    let dim = schema.one_hot_dim();
    let pc = hyper.critic_dim(dim);
    let pg = hyper.gen_dim(dim);
    let mut observer = observer;
    if let Some(o) = observer.as_deref_mut() {
        o.start(&schema, pc)?;
    }

    let mut rng = rng_from_seed(seed);
    let clip_w = hyper.weight_clip;
    let init_c = hyper.init_scale.min(clip_w);
    let mut w: Vec<f64> = (0..pc).map(|_| rng.random_range(-init_c..=init_c)).collect();
    let gen_scale = 1.0 / (hyper.latent_dim as f64).sqrt();
    let mut theta: Vec<f64> = (0..pg).map(|_| rng.random_range(-gen_scale..=gen_scale)).collect();
    let blk = blocks(&schema);
    let encoded: Vec<Vec<f64>> = d
        .rows()
        .iter()
        .map(|r| encode_one_hot(r, &schema))
        .collect::<Result<_>>()?;

    let mut opt_w = RmsProp::new(pc, hyper.rmsprop_decay, hyper.rmsprop_eps);
    let mut opt_g = RmsProp::new(pg, hyper.rmsprop_decay, hyper.rmsprop_eps);
    let l = hyper.batch_size;
    let lf = l as f64;
    let cp = hyper.grad_bound;
    let iters = iterations.unwrap_or(hyper.iterations);
    let mut transcript = Vec::new();
    let mut steps = 0usize;
    let mut g_tilde = vec![0.0; pc];
    let mut g_one = vec![0.0; pc];

    let sample_fake = |theta: &[f64], rng: &mut AuditRng| {
        let z: Vec<f64> = (0..hyper.latent_dim).map(|_| sample_gaussian(rng, 1.0)).collect();
        let g = Generator {
            params: theta,
            latent: hyper.latent_dim,
            hidden: hyper.gen_hidden,
            blocks: &blk,
            out: dim,
        };
        let (u, xh) = g.forward(&z);
        (z, u, xh)
    };

    for _ in 0..iters {
        for _ in 0..hyper.n_critic {
            g_tilde.iter_mut().for_each(|v| *v = 0.0);
            for i in sample_indices(&mut rng, d.len(), l) {
                critic_param_grad(&w, hyper.critic_hidden, &encoded[i], &mut g_one);
                clip_norm(&mut g_one, cp);
                if let Some(o) = observer.as_deref_mut() {
                    o.real_gradient(&d.rows()[i], &mut g_one);
                }
                g_tilde.iter_mut().zip(&g_one).for_each(|(a, b)| *a += b);
            }
            for v in g_tilde.iter_mut() {
                *v = (*v + sample_gaussian(&mut rng, sigma * cp)) / lf;
            }
            for _ in 0..l {
                let (_, _, xh) = sample_fake(&theta, &mut rng);
                if hyper.zero_fake_gradients {
                    continue;
                }
                critic_param_grad(&w, hyper.critic_hidden, &xh, &mut g_one);
                clip_norm(&mut g_one, cp);
                g_tilde.iter_mut().zip(&g_one).for_each(|(a, b)| *a -= b / lf);
            }
            let w_start = w.clone();
            match hyper.optimizer {
                Optimizer::RmsProp => opt_w.ascend(&mut w, &g_tilde, hyper.learning_rate),
                Optimizer::PlainSgd => w
                    .iter_mut()
                    .zip(&g_tilde)
                    .for_each(|(a, b)| *a += hyper.learning_rate * b),
            }
            w.iter_mut().for_each(|v| *v = v.clamp(-clip_w, clip_w));
            steps += 1;
            if let Some(o) = observer.as_deref_mut() {
                o.critic_step(&w_start, &w);
            }
            if hyper.record_transcript {
                transcript.push(CriticStep {
                    w_start,
                    w_after: w.clone(),
                });
            }
        }
        // Generator ascent on the mean critic score of its samples.
        let mut g_theta = vec![0.0; pg];
        for _ in 0..l {
            let (z, u, xh) = sample_fake(&theta, &mut rng);
            let gx: Vec<f64> = critic_input_grad(&w, hyper.critic_hidden, &xh)
                .into_iter()
                .map(|v| v / lf)
                .collect();
            Generator {
                params: &theta,
                latent: hyper.latent_dim,
                hidden: hyper.gen_hidden,
                blocks: &blk,
                out: dim,
            }
            .backward(&z, &u, &xh, &gx, &mut g_theta);
        }
        match hyper.optimizer {
            Optimizer::RmsProp => opt_g.ascend(&mut theta, &g_theta, hyper.learning_rate),
            Optimizer::PlainSgd => theta
                .iter_mut()
                .zip(&g_theta)
                .for_each(|(a, b)| *a += hyper.learning_rate * b),
        }
    }

    let accountant_mu = if sigma > 0.0 {
        (steps as f64).sqrt() / sigma
    } else {
        f64::INFINITY
    };
    Ok(GanModel {
        schema,
        hyper: hyper.clone(),
        epsilon,
        delta,
        sigma,
        gen_params: theta,
        critic_params: w,
        critic_steps: steps,
        accountant_mu,
        transcript,
        seed,
    })
}

/// Critic score of a record (the LOGAN statistic).
pub fn critic_score(model: &GanModel, x: &[f64]) -> f64 {
    critic_forward(&model.critic_params, model.hyper.critic_hidden, x).0
}

pub fn gan_sample(model: &GanModel, n_out: usize, seed: u64) -> Dataset {
    let schema = &model.schema;
    let blk = blocks(schema);
    let g = Generator {
        params: &model.gen_params,
        latent: model.hyper.latent_dim,
        hidden: model.hyper.gen_hidden,
        blocks: &blk,
        out: schema.one_hot_dim(),
    };
    let mut rng = rng_from_seed(seed);
    let rows = (0..n_out)
        .map(|_| {
            let z: Vec<f64> = (0..g.latent).map(|_| sample_gaussian(&mut rng, 1.0)).collect();
            let (_, xh) = g.forward(&z);
            Record::new(
                blk.iter()
                    .map(|&(s, len)| {
                        let block = &xh[s..s + len];
                        (0..len).fold(0, |best, i| if block[i] > block[best] { i } else { best })
                    })
                    .collect(),
            )
        })
        .collect();
    Dataset::from_valid(schema.clone(), rows)
}
