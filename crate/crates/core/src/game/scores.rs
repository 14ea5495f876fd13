//! Persisted game outcomes.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{AuditError, Result};
use crate::estimator::{EpsilonEstimate, LabeledScore, Method, audit, select_threshold};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Split {
    Shadow,
    Threshold,
    Test,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ScoreEntry {
    pub b: u8,
    pub score: f64,
    pub split: Split,
    pub run_seed: u64,
}

/// Scores of every run, in run-index order.
#[derive(Clone, Debug, Default, PartialEq)]
pub struct ScoreSet {
    pub entries: Vec<ScoreEntry>,
}

impl ScoreSet {
    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    pub fn labeled(&self, split: Split) -> Vec<LabeledScore> {
        self.entries
            .iter()
            .filter(|e| e.split == split)
            .map(|e| LabeledScore {
                member: e.b == 1,
                score: e.score,
            })
            .collect()
    }

    pub fn count(&self, split: Split) -> usize {
        self.entries.iter().filter(|e| e.split == split).count()
    }

    pub fn write_csv(&self, path: &Path) -> Result<()> {
        let mut w = csv::Writer::from_path(path)?;
        for e in &self.entries {
            w.serialize(e)?;
        }
        w.flush().map_err(|e| AuditError::io(path, e))?;
        Ok(())
    }

    pub fn read_csv(path: &Path) -> Result<Self> {
        let mut r = csv::Reader::from_path(path)?;
        let entries = r.deserialize().collect::<std::result::Result<Vec<ScoreEntry>, _>>()?;
        if let Some(e) = entries.iter().find(|e| e.b > 1) {
            return Err(AuditError::Argument(format!("world bit {} is not 0 or 1", e.b)));
        }
        Ok(ScoreSet { entries })
    }

    /// Threshold on the threshold split, estimate on the test split.
    pub fn estimate(&self, delta: f64, confidence: f64, method: Method) -> Result<EpsilonEstimate> {
        let choice = select_threshold(&self.labeled(Split::Threshold), delta, confidence, method)?;
        audit(&self.labeled(Split::Test), choice.tau, delta, confidence, method)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn csv_round_trip() {
        let s = ScoreSet {
            entries: vec![
                ScoreEntry { b: 0, score: -std::f64::consts::SQRT_2, split: Split::Threshold, run_seed: 7 },
                ScoreEntry { b: 1, score: 0.0, split: Split::Test, run_seed: u64::MAX },
            ],
        };
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("s.csv");
        s.write_csv(&p).unwrap();
        let text = std::fs::read_to_string(&p).unwrap();
        assert!(text.starts_with("b,score,split,run_seed\n"));
        assert_eq!(ScoreSet::read_csv(&p).unwrap(), s);
    }
}
