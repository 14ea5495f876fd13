//! Marginal-tree generator with Gaussian-noised clique counts.
//!
//! The clique tree is a fixed input. Each of the k clique count tables has
//! add/remove L2 sensitivity 1, so Gaussian noise σ = √k/μ makes the
//! composition μ-GDP for the target μ(ε, δ).

use std::collections::VecDeque;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::data::{Dataset, Record, Schema};
use crate::error::{AuditError, Result};
use crate::estimator::gdp_mu_for_eps;
use crate::rng::{rng_from_seed, sample_categorical, sample_gaussian};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MstModel {
    pub schema: Arc<Schema>,
    pub cliques: Vec<Vec<usize>>,
    /// Raw noisy counts per clique, row-major over the clique attributes.
    pub noisy_marginals: Vec<Vec<f64>>,
    pub sigma: f64,
    pub epsilon: f64,
    pub delta: f64,
    pub seed: u64,
}

/// Pairs `(a0,a1), (a1,a2), …`; a single attribute gets a singleton clique.
pub fn chain_cliques(schema: &Schema) -> Vec<Vec<usize>> {
    if schema.len() == 1 {
        return vec![vec![0]];
    }
    (1..schema.len()).map(|a| vec![a - 1, a]).collect()
}

fn find(parent: &mut [usize], mut x: usize) -> usize {
    while parent[x] != x {
        parent[x] = parent[parent[x]];
        x = parent[x];
    }
    x
}

/// Cliques must be singletons or pairs whose pair edges form a tree over
/// every attribute they mention.
pub fn validate_cliques(cliques: &[Vec<usize>], schema: &Schema) -> Result<()> {
    if cliques.is_empty() {
        return Err(AuditError::Argument("no cliques given".into()));
    }
    let n = schema.len();
    let mut parent: Vec<usize> = (0..n).collect();
    let mut used = vec![false; n];
    for c in cliques {
        if c.is_empty() || c.len() > 2 {
            return Err(AuditError::Argument(format!(
                "clique {c:?} must be a singleton or a pair"
            )));
        }
        if let Some(&bad) = c.iter().find(|&&a| a >= n) {
            return Err(AuditError::Argument(format!(
                "clique references attribute {bad} but the schema has {n}"
            )));
        }
        c.iter().for_each(|&a| used[a] = true);
        if let [a, b] = c[..] {
            let (ra, rb) = (find(&mut parent, a), find(&mut parent, b));
            if ra == rb {
                return Err(AuditError::Argument(format!(
                    "clique ({a},{b}) closes a cycle"
                )));
            }
            parent[ra] = rb;
        }
    }
    let mut roots: Vec<usize> = (0..n)
        .filter(|&a| used[a])
        .map(|a| find(&mut parent, a))
        .collect();
    roots.sort_unstable();
    roots.dedup();
    if roots.len() > 1 {
        return Err(AuditError::Argument(
            "cliques do not connect the attributes they use".into(),
        ));
    }
    Ok(())
}

pub fn mst_sigma(epsilon: f64, delta: f64, cliques: usize, noise_multiplier: f64) -> Result<f64> {
    let mu = gdp_mu_for_eps(epsilon, delta)?;
    Ok((cliques as f64).sqrt() / mu * noise_multiplier)
}

pub fn mst_fit(
    d: &Dataset,
    epsilon: f64,
    delta: f64,
    cliques: &[Vec<usize>],
    noise_multiplier: f64,
    seed: u64,
) -> Result<MstModel> {
    if !(epsilon > 0.0) {
        return Err(AuditError::Argument(format!("ε must be positive, got {epsilon}")));
    }
    if !(delta > 0.0 && delta < 1.0) {
        return Err(AuditError::Argument(format!("δ must lie in (0,1), got {delta}")));
    }
    let schema = d.schema_arc().clone();
    validate_cliques(cliques, &schema)?;
    let sigma = mst_sigma(epsilon, delta, cliques.len(), noise_multiplier)?;
    let mut rng = rng_from_seed(seed);
    let noisy_marginals = cliques
        .iter()
        .map(|c| {
            let mut t = d.joint_counts(c);
            t.iter_mut().for_each(|v| *v += sample_gaussian(&mut rng, sigma));
            t
        })
        .collect();
    Ok(MstModel {
        schema,
        cliques: cliques.to_vec(),
        noisy_marginals,
        sigma,
        epsilon,
        delta,
        seed,
    })
}

/// Clamp negatives and normalise to a distribution; all-zero becomes uniform.
pub fn project(table: &[f64]) -> Vec<f64> {
    let mut p: Vec<f64> = table.iter().map(|&v| v.max(0.0)).collect();
    let s: f64 = p.iter().sum();
    if s > 0.0 {
        p.iter_mut().for_each(|v| *v /= s);
    } else {
        p.iter_mut().for_each(|v| *v = 1.0 / table.len() as f64);
    }
    p
}

enum Step {
    Root { attr: usize, dist: Vec<f64> },
    /// `table` is the projected joint over (parent, child).
    Child { parent: usize, child: usize, table: Vec<f64>, child_size: usize },
    Uniform { attr: usize, size: usize },
}

fn sampling_plan(m: &MstModel) -> Vec<Step> {
    let schema = &m.schema;
    let n = schema.len();
    let projected: Vec<Vec<f64>> = m.noisy_marginals.iter().map(|t| project(t)).collect();
    let root = m.cliques[0][0];
    let root_dist = m
        .cliques
        .iter()
        .position(|c| c[..] == [root])
        .map(|i| projected[i].clone())
        .unwrap_or_else(|| {
            // Marginalise the first pair containing the root.
            let i = m.cliques.iter().position(|c| c.contains(&root)).unwrap();
            let c = &m.cliques[i];
            let (ka, kb) = (schema.domain_size(c[0]), schema.domain_size(c[1]));
            let mut out = vec![0.0; schema.domain_size(root)];
            for a in 0..ka {
                for b in 0..kb {
                    let v = projected[i][a * kb + b];
                    out[if c[0] == root { a } else { b }] += v;
                }
            }
            out
        });
    let mut plan = vec![Step::Root {
        attr: root,
        dist: root_dist,
    }];
    let mut seen = vec![false; n];
    seen[root] = true;
    let mut queue = VecDeque::from([root]);
    while let Some(p) = queue.pop_front() {
        for (i, c) in m.cliques.iter().enumerate() {
            let [a, b] = c[..] else { continue };
            let child = if a == p { b } else if b == p { a } else { continue };
            if seen[child] {
                continue;
            }
            seen[child] = true;
            let (ka, kb) = (schema.domain_size(a), schema.domain_size(b));
            // Reorient to (parent, child).
            let table = if a == p {
                projected[i].clone()
            } else {
                let mut t = vec![0.0; ka * kb];
                for x in 0..ka {
                    for y in 0..kb {
                        t[y * ka + x] = projected[i][x * kb + y];
                    }
                }
                t
            };
            plan.push(Step::Child {
                parent: p,
                child,
                table,
                child_size: schema.domain_size(child),
            });
            queue.push_back(child);
        }
    }
    for (a, s) in seen.iter().enumerate() {
        if !s {
            plan.push(Step::Uniform {
                attr: a,
                size: schema.domain_size(a),
            });
        }
    }
    plan
}

pub fn mst_sample(m: &MstModel, n_out: usize, seed: u64) -> Dataset {
    let plan = sampling_plan(m);
    let mut rng = rng_from_seed(seed);
    let mut values = vec![0usize; m.schema.len()];
    let mut rows = Vec::with_capacity(n_out);
    for _ in 0..n_out {
        for step in &plan {
            match step {
                Step::Root { attr, dist } => values[*attr] = sample_categorical(&mut rng, dist),
                Step::Child {
                    parent,
                    child,
                    table,
                    child_size,
                } => {
                    let r = values[*parent];
                    values[*child] =
                        sample_categorical(&mut rng, &table[r * child_size..(r + 1) * child_size]);
                }
                Step::Uniform { attr, size } => {
                    values[*attr] = sample_categorical(&mut rng, &vec![1.0; *size])
                }
            }
        }
        rows.push(Record::new(values.clone()));
    }
    Dataset::from_valid(m.schema.clone(), rows)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::Rng;

    fn data(n: usize) -> Dataset {
        let s = Arc::new(Schema::with_sizes(&[2, 3, 2]).unwrap());
        let mut rng = rng_from_seed(17);
        let rows = (0..n)
            .map(|_| {
                let a = rng.random_range(0..2);
                let b = if a == 0 { rng.random_range(0..2) } else { 2 };
                let c = if b == 2 { 1 } else { rng.random_range(0..2) };
                Record::new(vec![a, b, c])
            })
            .collect();
        Dataset::new(s, rows).unwrap()
    }

    #[test]
    fn sigma_from_budget() {
        let mu = gdp_mu_for_eps(1.0, 1e-5).unwrap();
        assert!((mst_sigma(1.0, 1e-5, 4, 1.0).unwrap() - 2.0 / mu).abs() < 1e-12);
        assert!((mu - 0.27).abs() < 0.01);
        // Single clique at μ = 1 gives σ = 1.
        let eps1 = crate::estimator::mu_to_eps(1.0, 1e-5);
        assert!((mst_sigma(eps1, 1e-5, 1, 1.0).unwrap() - 1.0).abs() < 1e-6);
    }

    #[test]
    fn clique_validation() {
        let s = Schema::with_sizes(&[2, 2, 2]).unwrap();
        assert!(validate_cliques(&[vec![0, 1], vec![1, 2]], &s).is_ok());
        assert!(validate_cliques(&[vec![0, 1], vec![1, 2], vec![2, 0]], &s).is_err());
        assert!(validate_cliques(&[vec![0], vec![2]], &s).is_err());
        assert!(validate_cliques(&[vec![0, 1, 2]], &s).is_err());
        assert!(validate_cliques(&[vec![0, 5]], &s).is_err());
    }

    #[test]
    fn fit_errors() {
        let d = data(10);
        let c = chain_cliques(d.schema());
        assert!(mst_fit(&d, 0.0, 1e-5, &c, 1.0, 1).is_err());
        assert!(mst_fit(&d, 1.0, 0.0, &c, 1.0, 1).is_err());
        let cyclic = vec![vec![0, 1], vec![1, 2], vec![0, 2]];
        assert!(mst_fit(&d, 1.0, 1e-5, &cyclic, 1.0, 1).is_err());
    }

    #[test]
    fn vanishing_noise_matches_pairwise_marginals() {
        let d = data(2000);
        let c = chain_cliques(d.schema());
        let m = mst_fit(&d, 1e6, 1e-5, &c, 1.0, 3).unwrap();
        assert!(m.sigma < 0.01);
        let out = mst_sample(&m, 100_000, 4);
        for clique in &c {
            let p = project(&d.joint_counts(clique));
            let q = project(&out.joint_counts(clique));
            let tv: f64 = p.iter().zip(&q).map(|(a, b)| (a - b).abs()).sum::<f64>() / 2.0;
            assert!(tv < 0.01, "{clique:?}: tv {tv}");
        }
    }

    #[test]
    fn sampling_contracts() {
        let d = data(100);
        // Non-default orientation and ordering.
        let c = vec![vec![2, 1], vec![0, 1], vec![1]];
        let m = mst_fit(&d, 1.0, 1e-5, &c, 1.0, 3).unwrap();
        let before = m.clone();
        assert!(mst_sample(&m, 0, 1).is_empty());
        let a = mst_sample(&m, 300, 9);
        assert_eq!(a, mst_sample(&m, 300, 9));
        assert_eq!(m, before);
        for r in a.rows() {
            d.schema().validate_record(r).unwrap();
        }
    }
}
