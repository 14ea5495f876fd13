use serde::{Deserialize, Serialize};

use super::{Dataset, Record};
use crate::error::{AuditError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum NeighborVariant {
    /// `d1 = d0 ∪ {x_T}`.
    AddRemove,
    /// `d0 = D⁻ ∪ {y}`, `d1 = D⁻ ∪ {x_T}`.
    Edit,
}

/// The two worlds of the distinguishing game.
#[derive(Clone, Debug)]
pub struct NeighborPair {
    pub d0: Dataset,
    pub d1: Dataset,
    pub variant: NeighborVariant,
    pub target: Record,
    pub replacement: Option<Record>,
}

impl NeighborPair {
    pub fn world(&self, b: bool) -> &Dataset {
        if b {
            &self.d1
        } else {
            &self.d0
        }
    }
}

pub fn make_neighbors(
    d_minus: &Dataset,
    target: &Record,
    variant: NeighborVariant,
    replacement: Option<&Record>,
) -> Result<NeighborPair> {
    d_minus.schema().validate_record(target)?;
    let mut d1 = d_minus.clone();
    d1.push(target.clone())?;
    let (d0, replacement) = match variant {
        NeighborVariant::AddRemove => (d_minus.clone(), None),
        NeighborVariant::Edit => {
            let y = replacement.ok_or_else(|| {
                AuditError::Argument("edit neighbours need a replacement record y".into())
            })?;
            if y == target {
                return Err(AuditError::DegeneratePair(
                    "replacement record equals the target; worlds are identical".into(),
                ));
            }
            let mut d0 = d_minus.clone();
            d0.push(y.clone())?;
            (d0, Some(y.clone()))
        }
    };
    Ok(NeighborPair {
        d0,
        d1,
        variant,
        target: target.clone(),
        replacement,
    })
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use proptest::prelude::*;

    use super::*;
    use crate::data::Schema;

    fn d_minus(rows: Vec<Vec<usize>>) -> Dataset {
        let s = Arc::new(Schema::with_sizes(&[3, 2, 4]).unwrap());
        Dataset::new(s, rows.into_iter().map(Record::new).collect()).unwrap()
    }

    #[test]
    fn add_remove_sizes() {
        let d = d_minus(vec![vec![0, 0, 0], vec![1, 1, 1]]);
        let p = make_neighbors(&d, &Record::new(vec![2, 1, 3]), NeighborVariant::AddRemove, None)
            .unwrap();
        assert_eq!(p.d0.len(), 2);
        assert_eq!(p.d1.len(), 3);
        assert!(Arc::ptr_eq(p.d0.schema_arc(), p.d1.schema_arc()));
    }

    #[test]
    fn edit_sizes_match() {
        let d = d_minus(vec![vec![0, 0, 0], vec![1, 1, 1]]);
        let x = Record::new(vec![2, 1, 3]);
        let y = Record::new(vec![0, 0, 0]);
        let p = make_neighbors(&d, &x, NeighborVariant::Edit, Some(&y)).unwrap();
        assert_eq!(p.d0.len(), 3);
        assert_eq!(p.d1.len(), 3);
        assert_eq!(p.d0.multiplicity(&y), 2);
        assert_eq!(p.d1.multiplicity(&x), 1);
    }

    #[test]
    fn edit_errors() {
        let d = d_minus(vec![vec![0, 0, 0]]);
        let x = Record::new(vec![2, 1, 3]);
        assert!(matches!(
            make_neighbors(&d, &x, NeighborVariant::Edit, Some(&x)),
            Err(AuditError::DegeneratePair(_))
        ));
        assert!(matches!(
            make_neighbors(&d, &x, NeighborVariant::Edit, None),
            Err(AuditError::Argument(_))
        ));
    }

    proptest! {
        #[test]
        fn removing_target_recovers_d0(
            rows in prop::collection::vec((0usize..3, 0usize..2, 0usize..4), 0..12),
            x in (0usize..3, 0usize..2, 0usize..4),
        ) {
            let d = d_minus(rows.into_iter().map(|(a, b, c)| vec![a, b, c]).collect());
            let x = Record::new(vec![x.0, x.1, x.2]);
            let p = make_neighbors(&d, &x, NeighborVariant::AddRemove, None).unwrap();
            let mut d1 = p.d1.clone();
            prop_assert!(d1.remove_one(&x));
            let mut a = d1.rows().to_vec();
            let mut b = p.d0.rows().to_vec();
            a.sort();
            b.sort();
            prop_assert_eq!(a, b);
        }
    }
}
