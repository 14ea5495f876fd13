//! Seed derivation and the few samplers not provided by `rand_distr`.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha12Rng;

pub type AuditRng = ChaCha12Rng;

pub fn rng_from_seed(seed: u64) -> AuditRng {
    AuditRng::seed_from_u64(seed)
}

fn splitmix64(mut z: u64) -> u64 {
    z = z.wrapping_add(0x9E37_79B9_7F4A_7C15);
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// Stable 64-bit mix of a parent seed and a stream index. Independent of
/// platform and of the order in which streams are requested.
pub fn derive_seed(parent: u64, index: u64) -> u64 {
    splitmix64(splitmix64(parent) ^ splitmix64(index.wrapping_add(0x0005_DEEC_E66D)))
}

/// Named sub-streams so that, for example, fitting and sampling never share
/// randomness within one run.
pub fn derive_named(parent: u64, name: &str) -> u64 {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    for b in name.bytes() {
        h ^= b as u64;
        h = h.wrapping_mul(0x0100_0000_01b3);
    }
    derive_seed(parent, h)
}

/// Laplace(0, scale) by inversion.
pub fn sample_laplace<R: Rng + ?Sized>(rng: &mut R, scale: f64) -> f64 {
    if scale == 0.0 {
        return 0.0;
    }
    // u in (-1/2, 1/2), excluding the endpoint that maps to infinity.
    let u: f64 = loop {
        let v = rng.random::<f64>() - 0.5;
        if v > -0.5 {
            break v;
        }
    };
    -scale * u.signum() * (1.0 - 2.0 * u.abs()).ln()
}

pub fn sample_gaussian<R: Rng + ?Sized>(rng: &mut R, sd: f64) -> f64 {
    if sd == 0.0 {
        return 0.0;
    }
    let z: f64 = rng.sample(rand_distr::StandardNormal);
    sd * z
}

/// Draw an index from unnormalised non-negative weights. Falls back to a
/// uniform draw when the weights sum to zero.
pub fn sample_categorical<R: Rng + ?Sized>(rng: &mut R, weights: &[f64]) -> usize {
    let total: f64 = weights.iter().sum();
    if !(total > 0.0) {
        return rng.random_range(0..weights.len());
    }
    let mut u = rng.random::<f64>() * total;
    for (i, &w) in weights.iter().enumerate() {
        if u < w {
            return i;
        }
        u -= w;
    }
    // Rounding can leave u marginally above the last bucket.
    weights.iter().rposition(|&w| w > 0.0).unwrap_or(0)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn derived_seeds_are_stable_and_distinct() {
        assert_eq!(derive_seed(7, 3), derive_seed(7, 3));
        assert_ne!(derive_seed(7, 3), derive_seed(7, 4));
        assert_ne!(derive_seed(7, 3), derive_seed(8, 3));
        assert_ne!(derive_named(7, "fit"), derive_named(7, "sample"));
    }

    #[test]
    fn laplace_has_expected_moments() {
        let mut rng = rng_from_seed(1);
        let n = 200_000;
        let xs: Vec<f64> = (0..n).map(|_| sample_laplace(&mut rng, 2.0)).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let mad = xs.iter().map(|x| x.abs()).sum::<f64>() / n as f64;
        assert!(mean.abs() < 0.03, "mean {mean}");
        assert!((mad - 2.0).abs() < 0.03, "E|X| {mad}");
    }

    #[test]
    fn categorical_respects_zero_weights() {
        let mut rng = rng_from_seed(2);
        for _ in 0..1000 {
            assert_eq!(sample_categorical(&mut rng, &[0.0, 3.0, 0.0]), 1);
        }
        let i = sample_categorical(&mut rng, &[0.0, 0.0]);
        assert!(i < 2);
    }
}
