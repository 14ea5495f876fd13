//! Crafted worst-case neighbouring datasets and vulnerable-target selection.

use std::io::Write;
use std::path::Path;
use std::sync::Arc;

use rand::Rng;
use serde::{Deserialize, Serialize};

use crate::attacks::AttackKind;
use crate::data::{Dataset, NeighborVariant, Record, Schema, make_neighbors};
use crate::error::{AuditError, Result};
use crate::estimator::{LabeledScore, auc};
use crate::game::AttackOptions;
use crate::game::runner::{Runner, finalize_scores};
use crate::mechanisms::MechanismConfig;
use crate::rng::{derive_named, derive_seed, rng_from_seed};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct WorstCaseKind {
    pub small: bool,
    pub narrow: bool,
    pub repeat: bool,
}

#[derive(Clone, Debug)]
pub struct WorstCase {
    /// Shared by every dataset derived from this worst case.
    pub schema: Arc<Schema>,
    pub d_minus: Dataset,
    pub target: Record,
    pub replacement: Option<Record>,
}

/// Per-attribute (modal, rarest) categories; without reference data the
/// first and last categories.
fn extremes(schema: &Schema, reference: Option<&Dataset>) -> (Vec<usize>, Vec<usize>) {
    (0..schema.len())
        .map(|a| match reference {
            None => (0, schema.domain_size(a) - 1),
            Some(d) => {
                let counts = d.value_counts(a);
                let modal = (0..counts.len()).fold(0, |b, i| if counts[i] > counts[b] { i } else { b });
                let rarest = (0..counts.len()).rev().fold(counts.len() - 1, |b, i| if counts[i] < counts[b] { i } else { b });
                (modal, rarest)
            }
        })
        .unzip()
}

/// Builds `D⁻`, the target and (for edit neighbours) the replacement.
///
/// Small datasets hold `min_size` copies of the modal record, which differs
/// from the target (rarest category everywhere) in every attribute. Larger
/// ones hold `size` uniformly drawn records other than the target.
pub fn craft_worstcase(
    schema: &Schema,
    kind: WorstCaseKind,
    variant: NeighborVariant,
    min_size: usize,
    size: usize,
    reference: Option<&Dataset>,
    seed: u64,
) -> Result<WorstCase> {
    let schema = Arc::new(if kind.narrow {
        if schema.len() < 3 {
            return Err(AuditError::Argument(format!(
                "narrow worst case needs at least 3 attributes, schema has {}",
                schema.len()
            )));
        }
        schema.truncate(3)?
    } else {
        schema.clone()
    });
    let reference = reference.map(|d| d.truncated(schema.len())).transpose()?;
    let (modal, rarest) = extremes(&schema, reference.as_ref());
    let target = Record::new(rarest);
    let modal = Record::new(modal);
    let n = if kind.small { min_size } else { size };
    if n == 0 {
        return Err(AuditError::Argument("worst-case dataset size must be positive".into()));
    }
    let mut rows: Vec<Record> = if kind.small {
        vec![modal.clone(); n]
    } else {
        let mut rng = rng_from_seed(seed);
        let sizes = schema.domain_sizes();
        let mut out = Vec::with_capacity(n);
        while out.len() < n {
            let r = Record::new(sizes.iter().map(|&k| rng.random_range(0..k)).collect());
            if r != target || sizes.iter().all(|&k| k == 1) {
                out.push(r);
            }
        }
        out
    };
    if kind.repeat {
        *rows.last_mut().unwrap() = target.clone();
    }
    let replacement = match variant {
        NeighborVariant::AddRemove => None,
        NeighborVariant::Edit => Some(modal),
    };
    Ok(WorstCase {
        d_minus: Dataset::new(schema.clone(), rows)?,
        schema,
        target,
        replacement,
    })
}

/// Σ over attributes of −ln(empirical frequency of the row's value).
pub fn rarity_scores(d: &Dataset) -> Vec<f64> {
    let n = d.len() as f64;
    let counts: Vec<Vec<usize>> = (0..d.schema().len()).map(|a| d.value_counts(a)).collect();
    d.rows()
        .iter()
        .map(|r| {
            r.values()
                .iter()
                .enumerate()
                .map(|(a, &v)| -(counts[a][v] as f64 / n).ln())
                .sum()
        })
        .collect()
}

/// Row indices of the `v` rarest distinct records, rarest first.
pub fn rank_candidates(d: &Dataset, v: usize) -> Vec<usize> {
    let rarity = rarity_scores(d);
    let mut order: Vec<usize> = (0..d.len()).collect();
    order.sort_by(|&a, &b| rarity[b].total_cmp(&rarity[a]).then(a.cmp(&b)));
    let mut seen = std::collections::HashSet::new();
    order
        .into_iter()
        .filter(|&i| seen.insert(d.rows()[i].clone()))
        .take(v)
        .collect()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CandidateAuc {
    pub row: usize,
    pub rarity: f64,
    pub auc: f64,
}

pub fn write_candidate_csv(rows: &[CandidateAuc], path: &Path) -> Result<()> {
    let mut f = std::fs::File::create(path).map_err(|e| AuditError::io(path, e))?;
    let mut text = String::from("row,rarity,auc\n");
    for c in rows {
        text.push_str(&format!("{},{},{}\n", c.row, c.rarity, c.auc));
    }
    f.write_all(text.as_bytes()).map_err(|e| AuditError::io(path, e))
}

/// AUC of the attack against each of the `v` rarest candidates, from `reps`
/// fits split evenly between `D` without and with the candidate. Returns the
/// row of the best candidate and the per-candidate table.
#[allow(clippy::too_many_arguments)]
pub fn select_vulnerable(
    d: &Dataset,
    mechanism: &MechanismConfig,
    attack: AttackKind,
    options: &AttackOptions,
    synth_size: usize,
    v: usize,
    reps: usize,
    seed: u64,
) -> Result<(usize, Vec<CandidateAuc>)> {
    if v == 0 || reps < 2 || reps % 2 == 1 {
        return Err(AuditError::Argument(format!(
            "vulnerable-record search needs V ≥ 1 and an even reps ≥ 2, got V={v}, reps={reps}"
        )));
    }
    if attack.needs_meta() && reps < 4 {
        return Err(AuditError::Argument("meta-classifier attacks need reps ≥ 4".into()));
    }
    if v > d.len() {
        return Err(AuditError::Argument(format!("V={v} exceeds the {} records", d.len())));
    }
    let rarity = rarity_scores(d);
    let table = rank_candidates(d, v)
        .into_iter()
        .map(|row| {
            let target = d.rows()[row].clone();
            let rest: Vec<Record> = d.rows().iter().enumerate().filter(|&(i, _)| i != row).map(|(_, r)| r.clone()).collect();
            let d_minus = Dataset::new(d.schema_arc().clone(), rest)?;
            let pair = make_neighbors(&d_minus, &target, NeighborVariant::AddRemove, None)?;
            let cand_seed = derive_seed(seed, row as u64);
            let runner = Runner {
                mechanism,
                attack,
                options,
                synth_size,
                pair: &pair,
                schema: d.schema_arc(),
                query_seed: derive_named(cand_seed, "queries"),
            };
            let plan: Vec<(u64, bool)> = (0..reps).map(|i| (derive_seed(cand_seed, i as u64), i % 2 == 1)).collect();
            let outputs = runner.run_all(&plan)?;
            // Two-fold cross-fitting for meta-classifier attacks.
            let halves: [Vec<usize>; 2] = [
                (0..reps).filter(|i| (i / 2) % 2 == 0).collect(),
                (0..reps).filter(|i| (i / 2) % 2 == 1).collect(),
            ];
            let mut scored = Vec::with_capacity(reps);
            for (h, train) in halves.iter().enumerate() {
                let scores = finalize_scores(&outputs, train, options, derive_seed(cand_seed, 1 << 32 | h as u64))?;
                let eval = if attack.needs_meta() { &halves[1 - h] } else { train };
                scored.extend(eval.iter().map(|&i| LabeledScore {
                    member: outputs[i].b,
                    score: scores[i],
                }));
            }
            Ok(CandidateAuc {
                row,
                rarity: rarity[row],
                auc: auc(&scored).unwrap_or(0.5),
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let best = table
        .iter()
        .fold(&table[0], |b, c| if c.auc > b.auc { c } else { b })
        .row;
    Ok((best, table))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::mechanisms::Family;

    #[test]
    fn crafted_shapes() {
        let s = Schema::with_sizes(&[3, 2, 4, 2]).unwrap();
        let wc = craft_worstcase(&s, WorstCaseKind { small: true, ..Default::default() }, NeighborVariant::AddRemove, 2, 100, None, 0).unwrap();
        let p = make_neighbors(&wc.d_minus, &wc.target, NeighborVariant::AddRemove, None).unwrap();
        assert_eq!((p.d0.len(), p.d1.len()), (2, 3));
        assert!(Arc::ptr_eq(p.d0.schema_arc(), p.d1.schema_arc()));

        let wc = craft_worstcase(&s, WorstCaseKind { small: true, narrow: true, repeat: false }, NeighborVariant::AddRemove, 2, 100, None, 0).unwrap();
        assert_eq!(wc.schema.len(), 3);

        let wc = craft_worstcase(&s, WorstCaseKind { small: true, repeat: true, narrow: false }, NeighborVariant::AddRemove, 2, 100, None, 0).unwrap();
        let p = make_neighbors(&wc.d_minus, &wc.target, NeighborVariant::AddRemove, None).unwrap();
        assert_eq!(p.d0.multiplicity(&wc.target), 1);
        assert_eq!(p.d1.multiplicity(&wc.target), 2);

        assert!(craft_worstcase(&Schema::with_sizes(&[2, 2]).unwrap(), WorstCaseKind { narrow: true, ..Default::default() }, NeighborVariant::AddRemove, 2, 100, None, 0).is_err());
    }

    #[test]
    fn edit_uses_modal_replacement_and_fillers_are_far() {
        let s = Schema::with_sizes(&[3, 3]).unwrap();
        let wc = craft_worstcase(&s, WorstCaseKind { small: true, ..Default::default() }, NeighborVariant::Edit, 2, 100, None, 0).unwrap();
        assert_eq!(wc.target, Record::new(vec![2, 2]));
        assert_eq!(wc.replacement, Some(Record::new(vec![0, 0])));
        let p = make_neighbors(&wc.d_minus, &wc.target, NeighborVariant::Edit, wc.replacement.as_ref()).unwrap();
        assert_eq!(p.d0.len(), p.d1.len());
        for r in wc.d_minus.rows() {
            assert!(r.values().iter().zip(wc.target.values()).all(|(a, b)| a != b));
        }
    }

    #[test]
    fn reference_data_decides_extremes() {
        let s = Arc::new(Schema::with_sizes(&[3]).unwrap());
        let d = Dataset::new(s.clone(), [1, 1, 1, 0, 0, 2, 2, 2, 2].iter().map(|&v| Record::new(vec![v])).collect()).unwrap();
        let wc = craft_worstcase(&s, WorstCaseKind { small: true, ..Default::default() }, NeighborVariant::Edit, 2, 100, Some(&d), 0).unwrap();
        assert_eq!(wc.target, Record::new(vec![0]));
        assert_eq!(wc.replacement, Some(Record::new(vec![2])));
    }

    #[test]
    fn large_worst_case_excludes_target() {
        let s = Schema::with_sizes(&[2, 2]).unwrap();
        let wc = craft_worstcase(&s, WorstCaseKind::default(), NeighborVariant::AddRemove, 2, 50, None, 3).unwrap();
        assert_eq!(wc.d_minus.len(), 50);
        assert_eq!(wc.d_minus.multiplicity(&wc.target), 0);
    }

    #[test]
    fn planted_outlier_ranks_first() {
        let s = Arc::new(Schema::with_sizes(&[5, 3]).unwrap());
        let mut rows: Vec<Record> = (0..40).map(|i| Record::new(vec![i % 4, i % 3])).collect();
        rows.insert(17, Record::new(vec![4, 0]));
        let d = Dataset::new(s, rows).unwrap();
        let ranked = rank_candidates(&d, 5);
        assert_eq!(ranked[0], 17);
        assert_eq!(ranked.len(), 5);
    }

    #[test]
    fn select_vulnerable_contracts() {
        let s = Arc::new(Schema::with_sizes(&[5, 3]).unwrap());
        let mut rows: Vec<Record> = (0..30).map(|i| Record::new(vec![i % 2, i % 3])).collect();
        rows.push(Record::new(vec![4, 2]));
        let d = Dataset::new(s, rows).unwrap();
        let mech = MechanismConfig::new(Family::PrivBayes, 1.0, 0.0);
        let opts = AttackOptions::default();
        let a = select_vulnerable(&d, &mech, AttackKind::Dcr, &opts, 30, 3, 8, 5).unwrap();
        assert_eq!(a, select_vulnerable(&d, &mech, AttackKind::Dcr, &opts, 30, 3, 8, 5).unwrap());
        assert_eq!(a.1.len(), 3);
        assert_eq!(a.1[0].row, 30);
        assert!(a.1.iter().all(|c| (0.0..=1.0).contains(&c.auc)));
        let q = select_vulnerable(&d, &mech, AttackKind::Querybased, &opts, 30, 2, 8, 5).unwrap();
        assert_eq!(q.1.len(), 2);
        assert!(select_vulnerable(&d, &mech, AttackKind::Dcr, &opts, 30, 0, 8, 5).is_err());
        assert!(select_vulnerable(&d, &mech, AttackKind::Dcr, &opts, 30, 3, 1, 5).is_err());
        let dir = tempfile::tempdir().unwrap();
        write_candidate_csv(&a.1, &dir.path().join("c.csv")).unwrap();
    }

    #[test]
    fn equal_worlds_give_chance_auc() {
        // Worlds identical up to a record with no effect on noise-free output.
        let s = Arc::new(Schema::with_sizes(&[2]).unwrap());
        let d = Dataset::new(s, vec![Record::new(vec![0]); 6]).unwrap();
        let mech = MechanismConfig::new(Family::PrivBayes, 1e9, 0.0);
        let (_, t) = select_vulnerable(&d, &mech, AttackKind::Dcr, &AttackOptions::default(), 20, 1, 400, 2).unwrap();
        assert!((t[0].auc - 0.5).abs() <= 0.05, "{}", t[0].auc);
    }
}
