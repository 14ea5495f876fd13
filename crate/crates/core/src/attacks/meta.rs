//! Shadow-model meta-classifiers mapping feature vectors to scores in [0,1].

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::rng::rng_from_seed;

use super::FeatureVector;

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub enum MetaKind {
    /// Gradient-boosted decision stumps on the logistic loss.
    #[default]
    Boosted,
    /// L2-regularised logistic regression on standardised features.
    Logistic,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
struct Stump {
    feature: usize,
    threshold: f64,
    left: f64,
    right: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
enum Model {
    Boosted { bias: f64, stumps: Vec<Stump> },
    Logistic { mean: Vec<f64>, scale: Vec<f64>, weights: Vec<f64>, bias: f64 },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MetaClassifier {
    dim: usize,
    model: Model,
    pub seed: u64,
}

const ROUNDS: usize = 100;
const SHRINKAGE: f64 = 0.1;
const SUBSAMPLE: f64 = 0.8;
const LAMBDA: f64 = 1.0;
const MAX_THRESHOLDS: usize = 32;

fn sigmoid(x: f64) -> f64 {
    1.0 / (1.0 + (-x).exp())
}

impl MetaClassifier {
    /// Predicted probability that the run was in world b = 1.
    pub fn score(&self, f: &FeatureVector) -> Result<f64> {
        if f.values.len() != self.dim {
            return Err(AuditError::Argument(format!(
                "feature length {} but classifier expects {}",
                f.values.len(),
                self.dim
            )));
        }
        let x = &f.values;
        let logit = match &self.model {
            Model::Boosted { bias, stumps } => {
                bias + stumps
                    .iter()
                    .map(|s| if x[s.feature] < s.threshold { s.left } else { s.right })
                    .sum::<f64>()
            }
            Model::Logistic { mean, scale, weights, bias } => {
                bias + (0..self.dim).map(|j| weights[j] * (x[j] - mean[j]) / scale[j]).sum::<f64>()
            }
        };
        Ok(sigmoid(logit))
    }
}

pub fn train_meta(b0: &[FeatureVector], b1: &[FeatureVector], kind: MetaKind, seed: u64) -> Result<MetaClassifier> {
    if b0.is_empty() || b1.is_empty() {
        return Err(AuditError::Empty("meta-classifier needs examples of both worlds".into()));
    }
    let dim = b0[0].values.len();
    if b0.iter().chain(b1).any(|f| f.values.len() != dim) {
        return Err(AuditError::Argument("feature vectors differ in length".into()));
    }
    let xs: Vec<&[f64]> = b0.iter().chain(b1).map(|f| f.values.as_slice()).collect();
    let ys: Vec<f64> = std::iter::repeat_n(0.0, b0.len()).chain(std::iter::repeat_n(1.0, b1.len())).collect();
    let model = match kind {
        MetaKind::Boosted => boost(&xs, &ys, dim, seed),
        MetaKind::Logistic => logistic(&xs, &ys, dim),
    };
    Ok(MetaClassifier { dim, model, seed })
}

/// Candidate split points: midpoints between distinct values, thinned to
/// evenly spaced quantiles when there are many.
fn thresholds(column: &mut [f64]) -> Vec<f64> {
    column.sort_by(f64::total_cmp);
    let mut distinct: Vec<f64> = column.to_vec();
    distinct.dedup();
    let mids: Vec<f64> = distinct.windows(2).map(|w| 0.5 * (w[0] + w[1])).collect();
    if mids.len() <= MAX_THRESHOLDS {
        return mids;
    }
    (0..MAX_THRESHOLDS)
        .map(|i| mids[(i * (mids.len() - 1)) / (MAX_THRESHOLDS - 1)])
        .collect()
}

fn boost(xs: &[&[f64]], ys: &[f64], dim: usize, seed: u64) -> Model {
    let n = xs.len();
    let prior = ys.iter().sum::<f64>() / n as f64;
    let bias = (prior / (1.0 - prior)).ln();
    let cands: Vec<Vec<f64>> = (0..dim)
        .map(|j| thresholds(&mut xs.iter().map(|x| x[j]).collect::<Vec<_>>()))
        .collect();
    // Bin index of every value against its feature's thresholds.
    let bins: Vec<Vec<usize>> = (0..dim)
        .map(|j| xs.iter().map(|x| cands[j].partition_point(|&t| t <= x[j])).collect())
        .collect();
    let mut f = vec![bias; n];
    let mut rng = rng_from_seed(seed);
    let mut stumps = Vec::with_capacity(ROUNDS);
    for _ in 0..ROUNDS {
        let keep: Vec<bool> = (0..n).map(|_| rng.random::<f64>() < SUBSAMPLE).collect();
        let (g, h): (Vec<f64>, Vec<f64>) = (0..n)
            .map(|i| {
                let p = sigmoid(f[i]);
                if keep[i] { (ys[i] - p, p * (1.0 - p)) } else { (0.0, 0.0) }
            })
            .unzip();
        let (gt, ht) = (g.iter().sum::<f64>(), h.iter().sum::<f64>());
        let mut best: Option<(f64, Stump)> = None;
        for j in 0..dim {
            let nb = cands[j].len() + 1;
            let (mut gb, mut hb) = (vec![0.0; nb], vec![0.0; nb]);
            for i in 0..n {
                gb[bins[j][i]] += g[i];
                hb[bins[j][i]] += h[i];
            }
            let (mut gl, mut hl) = (0.0, 0.0);
            for k in 0..cands[j].len() {
                gl += gb[k];
                hl += hb[k];
                let (gr, hr) = (gt - gl, ht - hl);
                let gain = gl * gl / (hl + LAMBDA) + gr * gr / (hr + LAMBDA);
                if best.as_ref().is_none_or(|(b, _)| gain > *b) {
                    best = Some((
                        gain,
                        Stump {
                            feature: j,
                            threshold: cands[j][k],
                            left: SHRINKAGE * gl / (hl + LAMBDA),
                            right: SHRINKAGE * gr / (hr + LAMBDA),
                        },
                    ));
                }
            }
        }
        let Some((_, stump)) = best else { break };
        for i in 0..n {
            f[i] += if xs[i][stump.feature] < stump.threshold { stump.left } else { stump.right };
        }
        stumps.push(stump);
    }
    Model::Boosted { bias, stumps }
}

/// Solves `a x = b` for symmetric positive definite `a` by Cholesky.
fn cholesky_solve(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut l = vec![0.0; n * n];
    for i in 0..n {
        for j in 0..=i {
            let s: f64 = a[i * n + j] - (0..j).map(|k| l[i * n + k] * l[j * n + k]).sum::<f64>();
            l[i * n + j] = if i == j { s.max(1e-300).sqrt() } else { s / l[j * n + j] };
        }
    }
    let mut y = vec![0.0; n];
    for i in 0..n {
        y[i] = (b[i] - (0..i).map(|k| l[i * n + k] * y[k]).sum::<f64>()) / l[i * n + i];
    }
    let mut x = vec![0.0; n];
    for i in (0..n).rev() {
        x[i] = (y[i] - (i + 1..n).map(|k| l[k * n + i] * x[k]).sum::<f64>()) / l[i * n + i];
    }
    x
}

fn logistic(xs: &[&[f64]], ys: &[f64], dim: usize) -> Model {
    let n = xs.len() as f64;
    let mean: Vec<f64> = (0..dim).map(|j| xs.iter().map(|x| x[j]).sum::<f64>() / n).collect();
    let scale: Vec<f64> = (0..dim)
        .map(|j| {
            let v = xs.iter().map(|x| (x[j] - mean[j]).powi(2)).sum::<f64>() / n;
            if v > 1e-24 { v.sqrt() } else { 1.0 }
        })
        .collect();
    let z: Vec<Vec<f64>> = xs
        .iter()
        .map(|x| {
            let mut r: Vec<f64> = (0..dim).map(|j| (x[j] - mean[j]) / scale[j]).collect();
            r.push(1.0);
            r
        })
        .collect();
    let p = dim + 1;
    let lambda = 1.0;
    let mut w = vec![0.0; p];
    // Newton iterations on the penalised log-likelihood (bias unpenalised).
    for _ in 0..25 {
        let mut grad = vec![0.0; p];
        let mut hess = vec![0.0; p * p];
        for (zi, &yi) in z.iter().zip(ys) {
            let pi = sigmoid(zi.iter().zip(&w).map(|(a, b)| a * b).sum());
            let wgt = pi * (1.0 - pi);
            for a in 0..p {
                grad[a] += (yi - pi) * zi[a];
                for b in 0..=a {
                    hess[a * p + b] += wgt * zi[a] * zi[b];
                }
            }
        }
        for a in 0..p {
            for b in 0..a {
                hess[b * p + a] = hess[a * p + b];
            }
            if a < dim {
                grad[a] -= lambda * w[a];
                hess[a * p + a] += lambda;
            } else {
                hess[a * p + a] += 1e-9;
            }
        }
        let step = cholesky_solve(&hess, &grad, p);
        let norm: f64 = step.iter().map(|v| v * v).sum::<f64>().sqrt();
        w.iter_mut().zip(&step).for_each(|(a, b)| *a += b);
        if norm < 1e-10 {
            break;
        }
    }
    let bias = w.pop().unwrap();
    Model::Logistic { mean, scale, weights: w, bias }
}
