//! From attack error counts to a lower bound on epsilon.
//!
//! Two conversion routes are supported: the generic (ε, δ) privacy region,
//! and the Gaussian-DP route which first bounds μ and then maps μ to ε at a
//! fixed δ. Both start from one-sided Clopper-Pearson upper bounds on the
//! false-positive and false-negative rates.

mod beta;
mod normal;

use serde::{Deserialize, Serialize};

pub use beta::{beta_quantile, clopper_pearson_upper, reg_inc_beta};
pub use normal::{ln_norm_cdf, norm_cdf, norm_pdf, norm_quantile};

use crate::error::{AuditError, Result};

#[derive(Clone, Copy, Debug, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub enum Method {
    /// Privacy-region conversion, valid for any (ε, δ)-DP mechanism.
    EpsDeltaRegion,
    /// μ-GDP conversion; only for mechanisms that are Gaussian-DP.
    GdpConvert,
}

/// Errors of the decision rule `b̂ = 1 ⇔ s ≥ τ` on one split.
#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ErrorCounts {
    /// b̂ = 1 when b = 0.
    pub fp: u64,
    /// b̂ = 0 when b = 1.
    pub fn_: u64,
    pub n0: u64,
    pub n1: u64,
}

impl ErrorCounts {
    pub fn new(fp: u64, fn_: u64, n0: u64, n1: u64) -> Result<Self> {
        if fp > n0 || fn_ > n1 {
            return Err(AuditError::Argument(format!(
                "error counts fp={fp}/{n0}, fn={fn_}/{n1} exceed trial counts"
            )));
        }
        Ok(ErrorCounts { fp, fn_, n0, n1 })
    }

    pub fn at_threshold(scores: &[LabeledScore], tau: f64) -> Self {
        let mut c = ErrorCounts {
            fp: 0,
            fn_: 0,
            n0: 0,
            n1: 0,
        };
        for s in scores {
            let guess = s.score >= tau;
            if s.member {
                c.n1 += 1;
                c.fn_ += u64::from(!guess);
            } else {
                c.n0 += 1;
                c.fp += u64::from(guess);
            }
        }
        c
    }
}

/// One observation of the game: the hidden world bit and the attack score.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct LabeledScore {
    pub member: bool,
    pub score: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpsilonEstimate {
    pub eps_emp: f64,
    pub mu_emp: Option<f64>,
    pub alpha_bar: f64,
    pub beta_bar: f64,
    #[serde(with = "extended_f64")]
    pub tau: f64,
    pub delta: f64,
    pub confidence: f64,
    pub max_auditable_eps: f64,
    pub method: Method,
    pub counts: ErrorCounts,
}

/// JSON has no infinities; thresholds may be ±∞, written as strings.
pub mod extended_f64 {
    use serde::{Deserialize, Deserializer, Serialize, Serializer};

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Text(String),
    }

    pub fn serialize<S: Serializer>(v: &f64, s: S) -> Result<S::Ok, S::Error> {
        if v.is_finite() {
            s.serialize_f64(*v)
        } else if v.is_nan() {
            s.serialize_str("nan")
        } else if *v > 0.0 {
            s.serialize_str("inf")
        } else {
            s.serialize_str("-inf")
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<f64, D::Error> {
        match Repr::deserialize(d)? {
            Repr::Num(v) => Ok(v),
            Repr::Text(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("not a number: {other}"))),
            },
        }
    }
}

/// Empirical ε from upper bounds on the error rates via the (ε, δ) privacy
/// region. Terms with a non-positive numerator contribute zero.
pub fn eps_from_rates(alpha_bar: f64, beta_bar: f64, delta: f64) -> f64 {
    let term = |num: f64, den: f64| {
        if num <= 0.0 || den <= 0.0 {
            0.0
        } else {
            (num / den).ln()
        }
    };
    term(1.0 - alpha_bar - delta, beta_bar)
        .max(term(1.0 - beta_bar - delta, alpha_bar))
        .max(0.0)
}

/// μ lower bound from error-rate upper bounds: Φ⁻¹(1 − ᾱ) − Φ⁻¹(β̄),
/// clamped at zero.
pub fn mu_from_rates(alpha_bar: f64, beta_bar: f64) -> Result<f64> {
    let open = |v: f64| v > 0.0 && v < 1.0;
    if !open(alpha_bar) || !open(beta_bar) {
        return Err(AuditError::Numeric(format!(
            "μ conversion needs rates in (0, 1), got ᾱ={alpha_bar}, β̄={beta_bar}"
        )));
    }
    Ok((norm_quantile(1.0 - alpha_bar) - norm_quantile(beta_bar)).max(0.0))
}

/// δ(ε) of a μ-GDP mechanism.
pub fn gdp_delta_of_eps(mu: f64, eps: f64) -> f64 {
    if mu <= 0.0 {
        return 0.0;
    }
    let a = -eps / mu + mu / 2.0;
    let b = -eps / mu - mu / 2.0;
    let d = norm_cdf(a) - (eps + ln_norm_cdf(b)).exp();
    d.clamp(0.0, 1.0)
}

const BISECT_TOL: f64 = 1e-9;

/// Smallest ε ≥ 0 at which a μ-GDP mechanism is (ε, δ)-DP.
pub fn mu_to_eps(mu: f64, delta: f64) -> f64 {
    if mu <= 0.0 || gdp_delta_of_eps(mu, 0.0) <= delta {
        return 0.0;
    }
    let mut hi = 1.0;
    while gdp_delta_of_eps(mu, hi) > delta {
        hi *= 2.0;
        if hi > 1e6 {
            return f64::INFINITY;
        }
    }
    let mut lo = 0.0;
    while hi - lo > BISECT_TOL {
        let mid = 0.5 * (lo + hi);
        if gdp_delta_of_eps(mu, mid) > delta {
            lo = mid;
        } else {
            hi = mid;
        }
    }
    0.5 * (lo + hi)
}

/// The μ for which a μ-GDP mechanism is exactly (ε, δ)-DP. Used to
/// calibrate Gaussian noise to an (ε, δ) target.
pub fn gdp_mu_for_eps(eps: f64, delta: f64) -> Result<f64> {
    if !(eps > 0.0) || !(delta > 0.0 && delta < 1.0) {
        return Err(AuditError::Argument(format!(
            "μ calibration needs ε > 0 and δ in (0, 1), got ε={eps}, δ={delta}"
        )));
    }
    let mut hi = 1.0;
    while gdp_delta_of_eps(hi, eps) < delta {
        hi *= 2.0;
        if hi > 1e6 {
            return Err(AuditError::Numeric("μ calibration diverged".into()));
        }
    }
    let mut lo = 0.0;
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if gdp_delta_of_eps(mid, eps) < delta {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo < 1e-13 {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

fn one_sided_level(confidence: f64) -> Result<f64> {
    if !(confidence > 0.0 && confidence < 1.0) {
        return Err(AuditError::Argument(format!(
            "confidence {confidence} outside (0, 1)"
        )));
    }
    Ok(1.0 - (1.0 - confidence) / 2.0)
}

fn check_delta(delta: f64, method: Method) -> Result<()> {
    let ok = match method {
        Method::EpsDeltaRegion => (0.0..1.0).contains(&delta),
        Method::GdpConvert => delta > 0.0 && delta < 1.0,
    };
    if ok {
        Ok(())
    } else {
        Err(AuditError::Argument(format!(
            "δ={delta} not admissible for {method:?}"
        )))
    }
}

/// ε (and μ for the GDP route) at given rate upper bounds.
fn convert(alpha_bar: f64, beta_bar: f64, delta: f64, method: Method) -> (f64, Option<f64>) {
    match method {
        Method::EpsDeltaRegion => (eps_from_rates(alpha_bar, beta_bar, delta), None),
        Method::GdpConvert => {
            let mu = mu_from_rates(alpha_bar, beta_bar).unwrap_or(0.0);
            (mu_to_eps(mu, delta), Some(mu))
        }
    }
}

/// ε_emp of a zero-error attack with `n0`/`n1` trials per world.
pub fn max_auditable_eps(
    n0: u64,
    n1: u64,
    delta: f64,
    confidence: f64,
    method: Method,
) -> Result<f64> {
    check_delta(delta, method)?;
    let level = one_sided_level(confidence)?;
    let a = clopper_pearson_upper(0, n0, level)?;
    let b = clopper_pearson_upper(0, n1, level)?;
    Ok(convert(a, b, delta, method).0)
}

/// Full estimate from error counts.
pub fn estimate_from_counts(
    counts: ErrorCounts,
    tau: f64,
    delta: f64,
    confidence: f64,
    method: Method,
) -> Result<EpsilonEstimate> {
    check_delta(delta, method)?;
    let level = one_sided_level(confidence)?;
    let alpha_bar = clopper_pearson_upper(counts.fp, counts.n0, level)?;
    let beta_bar = clopper_pearson_upper(counts.fn_, counts.n1, level)?;
    let max_eps = max_auditable_eps(counts.n0, counts.n1, delta, confidence, method)?;
    let (eps, mu) = convert(alpha_bar, beta_bar, delta, method);
    Ok(EpsilonEstimate {
        eps_emp: eps.clamp(0.0, max_eps),
        mu_emp: mu,
        alpha_bar,
        beta_bar,
        tau,
        delta,
        confidence,
        max_auditable_eps: max_eps,
        method,
        counts,
    })
}

/// Audit a test split at a fixed threshold.
pub fn audit(
    test: &[LabeledScore],
    tau: f64,
    delta: f64,
    confidence: f64,
    method: Method,
) -> Result<EpsilonEstimate> {
    if test.is_empty() {
        return Err(AuditError::Empty("test split has no scores".into()));
    }
    estimate_from_counts(
        ErrorCounts::at_threshold(test, tau),
        tau,
        delta,
        confidence,
        method,
    )
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct ThresholdChoice {
    #[serde(with = "extended_f64")]
    pub tau: f64,
    /// Audited ε_emp on the holdout at `tau`.
    pub holdout_eps: f64,
}

/// Pick τ among score midpoints (plus ±∞) maximising the audited ε_emp on
/// the holdout. Ties go to the smallest τ.
pub fn select_threshold(
    holdout: &[LabeledScore],
    delta: f64,
    confidence: f64,
    method: Method,
) -> Result<ThresholdChoice> {
    check_delta(delta, method)?;
    let level = one_sided_level(confidence)?;
    if holdout.iter().any(|s| !s.score.is_finite()) {
        return Err(AuditError::Numeric("holdout contains a non-finite score".into()));
    }
    let n1 = holdout.iter().filter(|s| s.member).count();
    let n0 = holdout.len() - n1;
    if n0 == 0 || n1 == 0 {
        return Err(AuditError::Empty(
            "threshold holdout must contain both worlds".into(),
        ));
    }
    let cp = |n: usize| -> Result<Vec<f64>> {
        (0..=n as u64)
            .map(|k| clopper_pearson_upper(k, n as u64, level))
            .collect()
    };
    let cp0 = cp(n0)?;
    let cp1 = cp(n1)?;

    let mut sorted: Vec<LabeledScore> = holdout.to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));

    // Sweep τ upward. At τ = -∞ every score is called a member.
    let mut fp = n0;
    let mut fn_ = 0usize;
    // For the GDP route the final ε is a non-decreasing function of μ, so the
    // sweep maximises μ and converts once.
    let objective = |fp: usize, fn_: usize| -> f64 {
        let (a, b) = (cp0[fp], cp1[fn_]);
        match method {
            Method::EpsDeltaRegion => eps_from_rates(a, b, delta),
            Method::GdpConvert => mu_from_rates(a, b).unwrap_or(0.0),
        }
    };
    let mut best_tau = f64::NEG_INFINITY;
    let mut best = objective(fp, fn_);
    let mut i = 0;
    while i < sorted.len() {
        let v = sorted[i].score;
        while i < sorted.len() && sorted[i].score == v {
            if sorted[i].member {
                fn_ += 1;
            } else {
                fp -= 1;
            }
            i += 1;
        }
        let tau = if i < sorted.len() {
            v + (sorted[i].score - v) / 2.0
        } else {
            f64::INFINITY
        };
        let obj = objective(fp, fn_);
        if obj > best {
            best = obj;
            best_tau = tau;
        }
    }
    let holdout_eps = match method {
        Method::EpsDeltaRegion => best,
        Method::GdpConvert => mu_to_eps(best, delta),
    };
    if holdout_eps == 0.0 {
        best_tau = f64::NEG_INFINITY;
    }
    Ok(ThresholdChoice {
        tau: best_tau,
        holdout_eps,
    })
}

/// Area under the ROC curve with ties counted half (Mann-Whitney).
pub fn auc(scores: &[LabeledScore]) -> Option<f64> {
    let mut sorted: Vec<LabeledScore> = scores.to_vec();
    sorted.sort_by(|a, b| a.score.total_cmp(&b.score));
    let n1 = sorted.iter().filter(|s| s.member).count() as f64;
    let n0 = sorted.len() as f64 - n1;
    if n0 == 0.0 || n1 == 0.0 {
        return None;
    }
    let mut rank_sum = 0.0;
    let mut i = 0;
    while i < sorted.len() {
        let mut j = i;
        while j < sorted.len() && sorted[j].score == sorted[i].score {
            j += 1;
        }
        let avg_rank = (i + 1 + j) as f64 / 2.0;
        rank_sum += avg_rank * sorted[i..j].iter().filter(|s| s.member).count() as f64;
        i = j;
    }
    Some((rank_sum - n1 * (n1 + 1.0) / 2.0) / (n0 * n1))
}
