//! Critic output on the target record.

use crate::data::{Record, Schema};
use crate::error::{AuditError, Result};
use crate::mechanisms::GenModel;
use crate::mechanisms::gan::critic_score;

use super::category_map;

/// Critic value at the one-hot encoding of `target`, expressed in the
/// model's own schema. Values the model's domain lacks encode as zeros.
pub fn logan_score(model: &GenModel, target: &Record, target_schema: &Schema) -> Result<f64> {
    let GenModel::Gan(m) = model else {
        return Err(AuditError::Incompatible("LOGAN needs a GAN model".into()));
    };
    let map = category_map(target_schema, &m.schema)?;
    let mut x = vec![0.0; m.schema.one_hot_dim()];
    for (a, &v) in target.values().iter().enumerate() {
        if let Some(c) = map[a][v] {
            x[m.schema.offset(a) + c] = 1.0;
        }
    }
    Ok(critic_score(m, &x))
}

#[cfg(test)]
mod tests {
    use std::sync::Arc;

    use super::*;
    use crate::data::Dataset;
    use crate::mechanisms::{Family, GanHyper, MechanismConfig, fit};

    #[test]
    fn zero_critic_scores_zero() {
        let s = Arc::new(Schema::with_sizes(&[2, 3]).unwrap());
        let d = Dataset::new(s.clone(), vec![Record::new(vec![0, 1]); 4]).unwrap();
        let mut m = fit(&MechanismConfig::new(Family::Gan, 1.0, 1e-5), &d, 1, None).unwrap();
        let GenModel::Gan(g) = &mut m else { unreachable!() };
        g.critic_params.iter_mut().for_each(|v| *v = 0.0);
        assert_eq!(logan_score(&m, &Record::new(vec![1, 2]), &s).unwrap(), 0.0);
    }

    #[test]
    fn noiseless_training_ranks_member_high() {
        // Data concentrated on one record; the critic learns to score it high.
        let s = Arc::new(Schema::with_sizes(&[4, 4, 4]).unwrap());
        let target = Record::new(vec![3, 3, 3]);
        let d = Dataset::new(s.clone(), vec![target.clone(); 8]).unwrap();
        let mut cfg = MechanismConfig::new(Family::Gan, 1.0, 1e-5);
        cfg.gan = Some(GanHyper {
            test_mode: true,
            sigma_override: Some(0.0),
            iterations: 200,
            learning_rate: 0.01,
            ..GanHyper::default()
        });
        let m = fit(&cfg, &d, 4, None).unwrap();
        let t = logan_score(&m, &target, &s).unwrap();
        assert!(t.is_finite());
        let mut others: Vec<f64> = (0..100)
            .map(|i| logan_score(&m, &Record::new(vec![i % 4, (i / 4) % 4, (i / 16) % 4]), &s).unwrap())
            .collect();
        others.sort_by(f64::total_cmp);
        assert!(t > others[50]);
    }
}
