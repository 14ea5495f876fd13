//! Membership-inference attacks and the shadow-model meta-classifier.
//!
//! Black-box attacks (`dcr`, `querybased`) only ever receive the synthetic
//! dataset. Passive white-box attacks (`whitebox`, `logan`) also receive the
//! fitted model. The active canary attack installs a training observer.

pub mod canary;
pub mod dcr;
pub mod logan;
pub mod meta;
pub mod querybased;
pub mod whitebox;

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::data::Schema;
use crate::error::{AuditError, Result};
use crate::mechanisms::Family;

pub use canary::{CanaryObserver, CanarySpec};
pub use dcr::dcr_score;
pub use logan::logan_score;
pub use meta::{MetaClassifier, MetaKind, train_meta};
pub use querybased::{N_CONJUNCTIONS, qb_features};
pub use whitebox::{WbVariant, wb_features};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum AttackKind {
    Dcr,
    Querybased,
    WhiteboxNaive,
    WhiteboxError,
    Logan,
    Canary,
}

impl AttackKind {
    pub const ALL: [AttackKind; 6] = [
        AttackKind::Dcr,
        AttackKind::Querybased,
        AttackKind::WhiteboxNaive,
        AttackKind::WhiteboxError,
        AttackKind::Logan,
        AttackKind::Canary,
    ];

    /// Whether scores come from a meta-classifier trained on shadow runs.
    pub fn needs_meta(self) -> bool {
        matches!(
            self,
            AttackKind::Querybased | AttackKind::WhiteboxNaive | AttackKind::WhiteboxError
        )
    }

    pub fn supports(self, family: Family) -> bool {
        match self {
            AttackKind::Dcr | AttackKind::Querybased => true,
            AttackKind::WhiteboxNaive | AttackKind::WhiteboxError => family != Family::Gan,
            AttackKind::Logan | AttackKind::Canary => family == Family::Gan,
        }
    }

    pub fn check(self, family: Family) -> Result<()> {
        if self.supports(family) {
            Ok(())
        } else {
            Err(AuditError::Incompatible(format!(
                "attack {self:?} cannot target the {family:?} mechanism"
            )))
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FeatureVector {
    pub values: Vec<f64>,
    pub provenance: AttackKind,
}

/// Per-attribute map from category indices of `from` to those of `to`,
/// matching attributes positionally by name and categories by string.
pub fn category_map(from: &Schema, to: &Schema) -> Result<Vec<Vec<Option<usize>>>> {
    if from.len() != to.len() {
        return Err(AuditError::Incompatible(format!(
            "schemas have {} and {} attributes",
            from.len(),
            to.len()
        )));
    }
    from.attributes()
        .iter()
        .zip(to.attributes())
        .enumerate()
        .map(|(a, (fa, ta))| {
            if fa.name != ta.name {
                return Err(AuditError::Incompatible(format!(
                    "attribute {a} is `{}` in one schema and `{}` in the other",
                    fa.name, ta.name
                )));
            }
            Ok(fa.categories.iter().map(|c| to.category_index(a, c)).collect())
        })
        .collect()
}

/// One row of an exported feature matrix.
#[derive(Clone, Debug, PartialEq)]
pub struct FeatureRow {
    pub run_index: usize,
    pub b: u8,
    pub split: String,
    pub features: FeatureVector,
}

pub fn write_feature_csv(rows: &[FeatureRow], path: &Path) -> Result<()> {
    let width = rows.first().map_or(0, |r| r.features.values.len());
    let mut w = csv::Writer::from_path(path)?;
    let mut header = vec!["run".to_string(), "b".into(), "split".into(), "attack".into()];
    header.extend((0..width).map(|i| format!("f{i}")));
    w.write_record(&header)?;
    for r in rows {
        if r.features.values.len() != width {
            return Err(AuditError::Argument("ragged feature matrix".into()));
        }
        let mut rec = vec![
            r.run_index.to_string(),
            r.b.to_string(),
            r.split.clone(),
            format!("{:?}", r.features.provenance),
        ];
        rec.extend(r.features.values.iter().map(|v| v.to_string()));
        w.write_record(&rec)?;
    }
    w.flush().map_err(|e| AuditError::io(path, e))?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn compatibility_table() {
        assert!(AttackKind::Canary.check(Family::PrivBayes).is_err());
        assert!(AttackKind::WhiteboxError.check(Family::Gan).is_err());
        assert!(AttackKind::Logan.check(Family::Gan).is_ok());
        assert!(AttackKind::Dcr.check(Family::Mst).is_ok());
    }

    #[test]
    fn category_map_by_string() {
        let a = Schema::with_sizes(&[3, 2]).unwrap();
        let b = crate::data::infer_metadata(&crate::data::RawTable {
            header: vec!["a0".into(), "a1".into()],
            rows: vec![vec!["2".into(), "0".into()]],
        })
        .unwrap();
        let m = category_map(&a, &b).unwrap();
        assert_eq!(m[0], vec![None, None, Some(0)]);
        assert_eq!(m[1], vec![Some(0), None]);
        let c = Schema::with_sizes(&[3]).unwrap();
        assert!(category_map(&a, &c).is_err());
    }

    #[test]
    fn feature_csv_shape() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.csv");
        let rows = vec![FeatureRow {
            run_index: 0,
            b: 1,
            split: "shadow".into(),
            features: FeatureVector {
                values: vec![1.0, 2.5],
                provenance: AttackKind::Querybased,
            },
        }];
        write_feature_csv(&rows, &p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert_eq!(text, "run,b,split,attack,f0,f1\n0,1,shadow,Querybased,1,2.5\n");
    }
}
