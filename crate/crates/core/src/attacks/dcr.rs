//! Distance to closest record.

use crate::data::{Dataset, Record, Schema};
use crate::error::{AuditError, Result};

use super::category_map;

/// `−min_{x∈S} ‖onehot(x) − onehot(x_T)‖₂`. Synthetic rows may live in a
/// different schema; a value that does not exist in the target's schema
/// counts as a mismatch, which is still √2 in one-hot space.
pub fn dcr_score(target: &Record, target_schema: &Schema, synth: &Dataset) -> Result<f64> {
    if synth.is_empty() {
        return Err(AuditError::Empty("DCR needs a non-empty synthetic dataset".into()));
    }
    let map = category_map(synth.schema(), target_schema)?;
    let best = synth
        .rows()
        .iter()
        .map(|r| {
            r.values()
                .iter()
                .enumerate()
                .filter(|&(a, &v)| map[a][v] != Some(target.get(a)))
                .count()
        })
        .min()
        .unwrap_or(0);
    Ok(-((2 * best) as f64).sqrt())
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;
    use std::sync::Arc;

    fn schema() -> Arc<Schema> {
        Arc::new(Schema::with_sizes(&[3, 3, 2]).unwrap())
    }

    #[test]
    fn examples() {
        let s = schema();
        let t = Record::new(vec![2, 1, 0]);
        let with = Dataset::new(s.clone(), vec![Record::new(vec![0, 0, 0]), t.clone()]).unwrap();
        assert_eq!(dcr_score(&t, &s, &with).unwrap(), 0.0);
        let near = Dataset::new(s.clone(), vec![Record::new(vec![2, 0, 0]), Record::new(vec![0, 0, 1])]).unwrap();
        assert!((dcr_score(&t, &s, &near).unwrap() + 2f64.sqrt()).abs() < 1e-12);
        assert!(dcr_score(&t, &s, &Dataset::empty(s.clone())).is_err());
    }

    proptest! {
        #[test]
        fn zero_iff_member_and_permutation_invariant(
            rows in prop::collection::vec((0usize..3, 0usize..3, 0usize..2), 1..12),
            t in (0usize..3, 0usize..3, 0usize..2),
        ) {
            let s = schema();
            let recs: Vec<Record> = rows.iter().map(|&(a, b, c)| Record::new(vec![a, b, c])).collect();
            let target = Record::new(vec![t.0, t.1, t.2]);
            let d = Dataset::new(s.clone(), recs.clone()).unwrap();
            let score = dcr_score(&target, &s, &d).unwrap();
            prop_assert!(score <= 0.0);
            prop_assert_eq!(score == 0.0, recs.contains(&target));
            let mut rev = recs;
            rev.reverse();
            let d2 = Dataset::new(s.clone(), rev).unwrap();
            prop_assert_eq!(score, dcr_score(&target, &s, &d2).unwrap());
        }
    }
}
