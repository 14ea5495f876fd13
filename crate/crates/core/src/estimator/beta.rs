//! Regularised incomplete beta function and the Clopper-Pearson bound.

use crate::error::{AuditError, Result};

/// Continued fraction for I_x(a, b) (modified Lentz).
fn beta_cf(a: f64, b: f64, x: f64) -> f64 {
    const TINY: f64 = 1e-300;
    const EPS: f64 = 1e-16;
    let qab = a + b;
    let qap = a + 1.0;
    let qam = a - 1.0;
    let mut c = 1.0;
    let mut d = 1.0 - qab * x / qap;
    if d.abs() < TINY {
        d = TINY;
    }
    d = 1.0 / d;
    let mut h = d;
    for m in 1..20_000 {
        let m = m as f64;
        let m2 = 2.0 * m;
        let aa = m * (b - m) * x / ((qam + m2) * (a + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        h *= d * c;
        let aa = -(a + m) * (qab + m) * x / ((a + m2) * (qap + m2));
        d = 1.0 + aa * d;
        if d.abs() < TINY {
            d = TINY;
        }
        c = 1.0 + aa / c;
        if c.abs() < TINY {
            c = TINY;
        }
        d = 1.0 / d;
        let del = d * c;
        h *= del;
        if (del - 1.0).abs() < EPS {
            break;
        }
    }
    h
}

/// Regularised incomplete beta I_x(a, b) for a, b > 0.
pub fn reg_inc_beta(a: f64, b: f64, x: f64) -> f64 {
    if x <= 0.0 {
        return 0.0;
    }
    if x >= 1.0 {
        return 1.0;
    }
    let ln_front =
        libm::lgamma(a + b) - libm::lgamma(a) - libm::lgamma(b) + a * x.ln() + b * (1.0 - x).ln();
    let front = ln_front.exp();
    if x < (a + 1.0) / (a + b + 2.0) {
        front * beta_cf(a, b, x) / a
    } else {
        1.0 - front * beta_cf(b, a, 1.0 - x) / b
    }
}

/// Quantile of Beta(a, b) at `level` by bisection on the CDF.
pub fn beta_quantile(a: f64, b: f64, level: f64) -> f64 {
    let (mut lo, mut hi) = (0.0_f64, 1.0_f64);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if mid <= lo || mid >= hi {
            break;
        }
        if reg_inc_beta(a, b, mid) < level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// One-sided Clopper-Pearson upper bound on a binomial proportion: the
/// smallest p with Pr[Bin(n, p) ≤ k] ≤ 1 − level.
pub fn clopper_pearson_upper(k: u64, n: u64, level: f64) -> Result<f64> {
    if n == 0 {
        return Err(AuditError::Empty(
            "Clopper-Pearson bound needs at least one trial".into(),
        ));
    }
    if k > n {
        return Err(AuditError::Argument(format!("k={k} exceeds n={n}")));
    }
    if !(level > 0.0 && level < 1.0) {
        return Err(AuditError::Argument(format!(
            "confidence level {level} outside (0, 1)"
        )));
    }
    if k == n {
        return Ok(1.0);
    }
    if k == 0 {
        // Closed form of the Beta(1, n) quantile.
        return Ok(-libm::expm1(libm::log1p(-level) / n as f64));
    }
    Ok(beta_quantile((k + 1) as f64, (n - k) as f64, level))
}
