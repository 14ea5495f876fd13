//! Batch commands: run audits from JSON configs and persist their evidence.

use std::path::{Path, PathBuf};
use std::time::Instant;

use serde::{Deserialize, Serialize};

use crate::attacks::write_feature_csv;
use crate::error::{AuditError, Result};
use crate::game::{self, AuditConfig, AuditOutcome, AuditReport};
use crate::worstcase::write_candidate_csv;

pub const EXIT_OK: i32 = 0;
pub const EXIT_CONFIG: i32 = 2;
pub const EXIT_RUNTIME: i32 = 3;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Verdict {
    NoViolationDetected,
    ViolationDetected,
    Inconclusive,
}

impl std::fmt::Display for Verdict {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{self:?}")
    }
}

/// Violation iff the fold-mean ε_emp minus the fold standard deviation
/// exceeds the claimed ε. Inconclusive when any fold lacked a world.
pub fn verdict(report: &AuditReport) -> Verdict {
    let f = &report.folds;
    if f.completed < f.estimates.len() || f.completed == 0 {
        Verdict::Inconclusive
    } else if f.mean - f.stddev > report.theoretical_eps {
        Verdict::ViolationDetected
    } else {
        Verdict::NoViolationDetected
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct RunManifest {
    pub config_path: PathBuf,
    pub output_dir: PathBuf,
    pub report_json: PathBuf,
    pub scores_csv: PathBuf,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub features_csv: Option<PathBuf>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub candidates_csv: Option<PathBuf>,
    pub verdict: Verdict,
    pub theoretical_eps: f64,
    pub eps_emp: f64,
    pub fold_mean: f64,
    pub fold_stddev: f64,
    pub max_auditable_eps: f64,
    pub wall_clock_seconds: f64,
}

fn write_text(path: &Path, text: &str) -> Result<()> {
    std::fs::write(path, text).map_err(|e| AuditError::io(path, e))
}

fn base_dir(config_path: &Path) -> PathBuf {
    config_path.parent().map(Path::to_path_buf).unwrap_or_default()
}

/// Serialises a report exactly as it is written to disk.
pub fn report_json(report: &AuditReport) -> Result<String> {
    let mut s = serde_json::to_string_pretty(report)?;
    s.push('\n');
    Ok(s)
}

fn persist(config_path: &Path, out: &Path, outcome: &AuditOutcome, started: Instant) -> Result<RunManifest> {
    std::fs::create_dir_all(out).map_err(|e| AuditError::io(out, e))?;
    let report_path = out.join("report.json");
    write_text(&report_path, &report_json(&outcome.report)?)?;
    let scores_path = out.join("scores.csv");
    outcome.scores.write_csv(&scores_path)?;
    let features_csv = if outcome.features.is_empty() {
        None
    } else {
        let p = out.join("features.csv");
        write_feature_csv(&outcome.features, &p)?;
        Some(p)
    };
    let candidates_csv = if outcome.candidates.is_empty() {
        None
    } else {
        let p = out.join("candidates.csv");
        write_candidate_csv(&outcome.candidates, &p)?;
        Some(p)
    };
    let r = &outcome.report;
    let manifest = RunManifest {
        config_path: config_path.to_path_buf(),
        output_dir: out.to_path_buf(),
        report_json: report_path,
        scores_csv: scores_path,
        features_csv,
        candidates_csv,
        verdict: verdict(r),
        theoretical_eps: r.theoretical_eps,
        eps_emp: r.estimate.eps_emp,
        fold_mean: r.folds.mean,
        fold_stddev: r.folds.stddev,
        max_auditable_eps: r.estimate.max_auditable_eps,
        wall_clock_seconds: started.elapsed().as_secs_f64(),
    };
    write_text(&out.join("manifest.json"), &(serde_json::to_string_pretty(&manifest)? + "\n"))?;
    Ok(manifest)
}

pub fn cmd_audit(config_path: &Path, out: &Path, workers: Option<usize>) -> Result<RunManifest> {
    let started = Instant::now();
    let cfg = AuditConfig::from_file(config_path)?;
    let outcome = game::run_audit(&cfg, &base_dir(config_path), workers)?;
    persist(config_path, out, &outcome, started)
}

/// An audit configuration run once per ε.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SweepConfig {
    pub eps: Vec<f64>,
    pub audit: AuditConfig,
}

impl SweepConfig {
    pub fn from_file(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| AuditError::config("<file>", format!("cannot read {}: {e}", path.display())))?;
        let de = &mut serde_json::Deserializer::from_str(&text);
        let cfg: SweepConfig = serde_path_to_error::deserialize(de).map_err(|e| {
            let path = e.path().to_string();
            AuditError::config(path, e.into_inner().to_string())
        })?;
        if cfg.eps.is_empty() {
            return Err(AuditError::config("eps", "the sweep needs at least one ε"));
        }
        for &e in &cfg.eps {
            cfg.with_eps(e).validate()?;
        }
        Ok(cfg)
    }

    pub fn with_eps(&self, eps: f64) -> AuditConfig {
        let mut c = self.audit.clone();
        c.mechanism.epsilon = eps;
        c
    }
}

/// Audits every ε in turn on one resolved pair and writes `summary.csv`.
pub fn cmd_sweep(config_path: &Path, out: &Path, workers: Option<usize>) -> Result<Vec<RunManifest>> {
    let sweep = SweepConfig::from_file(config_path)?;
    let base = base_dir(config_path);
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers.unwrap_or(0))
        .build()
        .map_err(|e| AuditError::Argument(format!("cannot start worker pool: {e}")))?;
    let resolved = pool.install(|| game::resolve_pair(&sweep.with_eps(sweep.eps[0]), &base))?;
    let mut manifests = Vec::new();
    let mut summary = String::from("eps,eps_emp,stddev,verdict\n");
    for &eps in &sweep.eps {
        let started = Instant::now();
        let cfg = sweep.with_eps(eps);
        let outcome = pool.install(|| game::audit_execution(&cfg, game::execute_on(&cfg, resolved.clone())?))?;
        let m = persist(config_path, &out.join(format!("eps_{eps}")), &outcome, started)?;
        summary.push_str(&format!("{eps},{},{},{}\n", m.fold_mean, m.fold_stddev, m.verdict));
        manifests.push(m);
    }
    std::fs::create_dir_all(out).map_err(|e| AuditError::io(out, e))?;
    write_text(&out.join("summary.csv"), &summary)?;
    Ok(manifests)
}

/// Exit status for a failed command.
pub fn exit_code(err: &AuditError) -> i32 {
    if err.is_config_error() { EXIT_CONFIG } else { EXIT_RUNTIME }
}
