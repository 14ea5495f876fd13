//! Kolmogorov-Smirnov checks of the measurement noise over many fits.

use std::sync::Arc;

use synthaudit::data::{Dataset, Record, Schema};
use synthaudit::estimator::norm_cdf;
use synthaudit::mechanisms::privbayes::{chain_structure, pb_measure};
use synthaudit::mechanisms::{fit, BugSpec, Family, GenModel, MechanismConfig};
use synthaudit::rng::{derive_seed, rng_from_seed};

const FITS: u64 = 5000;
// Critical value of the one-sample KS statistic at significance 0.01.
const KS_01: f64 = 1.628;

fn ks_statistic(mut xs: Vec<f64>, cdf: impl Fn(f64) -> f64) -> f64 {
    xs.sort_by(f64::total_cmp);
    let n = xs.len() as f64;
    xs.iter()
        .enumerate()
        .map(|(i, &x)| {
            let f = cdf(x);
            (f - i as f64 / n).abs().max(((i + 1) as f64 / n - f).abs())
        })
        .fold(0.0, f64::max)
}

fn laplace_cdf(scale: f64) -> impl Fn(f64) -> f64 {
    move |x| {
        if x < 0.0 {
            0.5 * (x / scale).exp()
        } else {
            1.0 - 0.5 * (-x / scale).exp()
        }
    }
}

fn toy() -> Dataset {
    let schema = Arc::new(Schema::with_sizes(&[2, 3, 2]).unwrap());
    let rows = [[0, 1, 1], [1, 2, 0], [0, 0, 1], [1, 1, 1]]
        .iter()
        .map(|r| Record::new(r.to_vec()))
        .collect();
    Dataset::new(schema, rows).unwrap()
}

fn assert_ks(label: &str, xs: Vec<f64>, cdf: impl Fn(f64) -> f64) {
    let n = xs.len() as f64;
    let d = ks_statistic(xs, cdf);
    assert!(d * n.sqrt() < KS_01, "{label}: KS statistic {d} rejects at 0.01");
}

/// Noise of cell 0 of the last table, one draw per fit, for the scale the fit declares.
fn pb_noise(bug: Option<BugSpec>) -> (f64, Vec<f64>) {
    let d = toy();
    let mut cfg = MechanismConfig::new(Family::PrivBayes, 1.0, 0.0);
    cfg.bug = bug;
    let structure = chain_structure(d.schema());
    let exact: Vec<Vec<f64>> = structure
        .iter()
        .map(|n| {
            let mut scope = n.parents.clone();
            scope.push(n.attribute);
            d.joint_counts(&scope)
        })
        .collect();
    let mut scale = 0.0;
    let xs = (0..FITS)
        .map(|i| {
            let seed = derive_seed(11, i);
            let GenModel::PrivBayes(m) = fit(&cfg, &d, seed, None).unwrap() else {
                unreachable!()
            };
            scale = m.noise_scale;
            let noisy = pb_measure(&d, &structure, m.noise_scale, &mut rng_from_seed(seed));
            noisy[2][0] - exact[2][0]
        })
        .collect();
    (scale, xs)
}

#[test]
fn privbayes_noise_is_laplace_2k_over_eps() {
    let (scale, xs) = pb_noise(None);
    assert_eq!(scale, 6.0);
    assert_ks("pb", xs, laplace_cdf(6.0));
}

#[test]
fn halved_noise_is_laplace_k() {
    let (scale, xs) = pb_noise(Some(BugSpec::NoiseScaleHalved));
    assert_eq!(scale, 3.0);
    assert_ks("pb halved", xs.clone(), laplace_cdf(3.0));
    // And the nominal law is rejected.
    let d = ks_statistic(xs, laplace_cdf(6.0));
    assert!(d * (FITS as f64).sqrt() > KS_01);
}

#[test]
fn mst_noise_is_gaussian() {
    let d = toy();
    let cfg = MechanismConfig::new(Family::Mst, 1.0, 1e-5);
    let exact = d.joint_counts(&[1, 2]);
    let mut sigma = 0.0;
    let xs = (0..FITS)
        .map(|i| {
            let GenModel::Mst(m) = fit(&cfg, &d, derive_seed(12, i), None).unwrap() else {
                unreachable!()
            };
            sigma = m.sigma;
            assert_eq!(m.cliques[1], vec![1, 2]);
            m.noisy_marginals[1][3] - exact[3]
        })
        .collect();
    // Two cliques at μ(1, 1e-5).
    assert!((sigma - 2f64.sqrt() / 0.2680511232112942).abs() < 1e-6);
    assert_ks("mst", xs, |x| norm_cdf(x / sigma));
}
