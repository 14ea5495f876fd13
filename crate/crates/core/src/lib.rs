//! Empirical privacy auditing for differentially private synthetic data
//! generators.
//!
//! The crate plays the membership distinguishing game against in-repo
//! generators (a Bayesian-network model, a marginal-tree model and a small
//! DP-WGAN), scores each fitted model with a membership-inference attack and
//! turns the attack's error rates into a confidence lower bound on epsilon.
//!
//! Module map:
//! - [`data`]: schemas, categorical records, datasets and neighbouring pairs.
//! - [`estimator`]: Clopper-Pearson bounds, the (ε,δ) privacy region, μ-GDP
//!   conversion and threshold selection.
//! - [`mechanisms`]: the audited generators and the bug-injection layer.
//! - [`attacks`]: DCR, query-based, white-box, LOGAN and canary attacks.
//! - [`worstcase`]: crafted neighbouring datasets and target selection.
//! - [`game`]: the orchestrated game, cross-validation and reports.
//! - [`cli`]: config-driven batch commands and verdicts.

pub mod attacks;
pub mod cli;
pub mod data;
pub mod error;
pub mod estimator;
pub mod game;
pub mod mechanisms;
pub mod rng;
pub mod worstcase;

pub use error::{AuditError, Result};
