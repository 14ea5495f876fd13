//! Counting queries targeted at the record.

use crate::data::{Dataset, Record, Schema};
use crate::error::Result;
use crate::rng::rng_from_seed;

use super::{AttackKind, FeatureVector, category_map};

pub const N_CONJUNCTIONS: usize = 16;

/// Attribute triples for the conjunction queries. With fewer than three
/// attributes every query uses all of them.
pub fn conjunctions(n_attributes: usize, query_seed: u64) -> Vec<Vec<usize>> {
    let mut rng = rng_from_seed(query_seed);
    (0..N_CONJUNCTIONS)
        .map(|_| {
            let mut attrs = rand::seq::index::sample(&mut rng, n_attributes, n_attributes.min(3)).into_vec();
            attrs.sort_unstable();
            attrs
        })
        .collect()
}

/// Single-attribute match counts, then 16 seeded 3-way conjunction counts,
/// then the exact-match count.
pub fn qb_features(synth: &Dataset, target: &Record, target_schema: &Schema, query_seed: u64) -> Result<FeatureVector> {
    let map = category_map(synth.schema(), target_schema)?;
    let n = target_schema.len();
    let conj = conjunctions(n, query_seed);
    let mut values = vec![0.0; n + N_CONJUNCTIONS + 1];
    let mut matches = vec![false; n];
    for r in synth.rows() {
        for (a, m) in matches.iter_mut().enumerate() {
            *m = map[a][r.get(a)] == Some(target.get(a));
            if *m {
                values[a] += 1.0;
            }
        }
        for (q, attrs) in conj.iter().enumerate() {
            if attrs.iter().all(|&a| matches[a]) {
                values[n + q] += 1.0;
            }
        }
        if matches.iter().all(|&m| m) {
            values[n + N_CONJUNCTIONS] += 1.0;
        }
    }
    Ok(FeatureVector {
        values,
        provenance: AttackKind::Querybased,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn schema() -> Arc<Schema> {
        Arc::new(Schema::with_sizes(&[3, 2, 2, 4]).unwrap())
    }

    #[test]
    fn examples() {
        let s = schema();
        let t = Record::new(vec![1, 0, 1, 3]);
        let rows: Vec<Record> = (0..10).map(|i| Record::new(vec![if i < 4 { 1 } else { 0 }, 1, 0, 0])).collect();
        let d = Dataset::new(s.clone(), rows).unwrap();
        let f = qb_features(&d, &t, &s, 9).unwrap();
        assert_eq!(f.values.len(), 4 + 16 + 1);
        assert_eq!(f.values[0], 4.0);
        assert_eq!(f.values[20], 0.0);
        assert!(f.values.iter().all(|&v| v <= 10.0 && v.fract() == 0.0));
        assert_eq!(conjunctions(4, 9), conjunctions(4, 9));
        assert!(conjunctions(4, 9).iter().all(|c| c.len() == 3));
    }

    proptest! {
        #[test]
        fn permutation_invariant_and_duplication_equivariant(
            rows in prop::collection::vec((0usize..3, 0usize..2, 0usize..2, 0usize..4), 1..15),
            seed in any::<u64>(),
        ) {
            let s = schema();
            let recs: Vec<Record> = rows.iter().map(|&(a, b, c, e)| Record::new(vec![a, b, c, e])).collect();
            let t = recs[0].clone();
            let base = qb_features(&Dataset::new(s.clone(), recs.clone()).unwrap(), &t, &s, seed).unwrap();
            let mut rev = recs.clone();
            rev.reverse();
            let perm = qb_features(&Dataset::new(s.clone(), rev).unwrap(), &t, &s, seed).unwrap();
            prop_assert_eq!(&base, &perm);
            let doubled: Vec<Record> = recs.iter().chain(recs.iter()).cloned().collect();
            let dbl = qb_features(&Dataset::new(s.clone(), doubled).unwrap(), &t, &s, seed).unwrap();
            for (a, b) in base.values.iter().zip(&dbl.values) {
                prop_assert_eq!(2.0 * a, *b);
            }
        }
    }
}
