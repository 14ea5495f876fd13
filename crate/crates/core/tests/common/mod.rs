//! Independent numerical oracles shared by the estimator tests and the
//! acceptance harness. Nothing here calls into the library.
#![allow(dead_code)]

pub fn pdf(x: f64) -> f64 {
    (-0.5 * x * x).exp() / (2.0 * std::f64::consts::PI).sqrt()
}

pub fn simpson(f: impl Fn(f64) -> f64, a: f64, b: f64, n: usize) -> f64 {
    let n = n + n % 2;
    let h = (b - a) / n as f64;
    let mut s = f(a) + f(b);
    for i in 1..n {
        let w = if i % 2 == 1 { 4.0 } else { 2.0 };
        s += w * f(a + i as f64 * h);
    }
    s * h / 3.0
}

/// Upper tail ∫_x^∞ φ, accurate in relative terms for large x.
pub fn upper_tail(x: f64) -> f64 {
    if x < 0.0 {
        return 1.0 - upper_tail(-x);
    }
    simpson(pdf, x, x + 40.0, 8_000)
}

pub fn phi(x: f64) -> f64 {
    upper_tail(-x)
}

pub fn phi_inv(p: f64) -> f64 {
    let (mut lo, mut hi) = (-40.0, 40.0);
    for _ in 0..64 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < p {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn delta_oracle(mu: f64, eps: f64) -> f64 {
    let a = -eps / mu + mu / 2.0;
    let b = -eps / mu - mu / 2.0;
    (phi(a) - eps.exp() * phi(b)).max(0.0)
}

pub fn eps_oracle(mu: f64, delta: f64) -> f64 {
    if delta_oracle(mu, 0.0) <= delta {
        return 0.0;
    }
    let (mut lo, mut hi) = (0.0, 200.0);
    for _ in 0..50 {
        let mid = 0.5 * (lo + hi);
        if delta_oracle(mu, mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn binom_cdf(k: u64, n: u64, p: f64) -> f64 {
    if p <= 0.0 {
        return 1.0;
    }
    if p >= 1.0 {
        return if k >= n { 1.0 } else { 0.0 };
    }
    let (lp, lq) = (p.ln(), (1.0 - p).ln());
    let mut log_c = 0.0;
    let mut total = 0.0;
    for i in 0..=k {
        if i > 0 {
            log_c += ((n - i + 1) as f64).ln() - (i as f64).ln();
        }
        total += (log_c + i as f64 * lp + (n - i) as f64 * lq).exp();
    }
    total
}

pub fn cp_oracle(k: u64, n: u64, level: f64) -> f64 {
    if k >= n {
        return 1.0;
    }
    let (mut lo, mut hi) = (0.0, 1.0);
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if binom_cdf(k, n, mid) > 1.0 - level {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

pub fn eps_rates_oracle(a: f64, b: f64, d: f64) -> f64 {
    let mut best: f64 = 0.0;
    if 1.0 - a - d > 0.0 && b > 0.0 {
        best = best.max(((1.0 - a - d) / b).ln());
    }
    if 1.0 - b - d > 0.0 && a > 0.0 {
        best = best.max(((1.0 - b - d) / a).ln());
    }
    best
}
