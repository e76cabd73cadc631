//! Report documents: a stable JSON schema mirroring the in-memory report,
//! plus the plain-text rendering. Identical config and seed produce
//! byte-identical JSON except for the `generated-at` field.

use crate::config::RunConfig;
use crate::scenario::Findings;
use igroup_core::report::Report;
use serde::{Deserialize, Serialize};
use std::time::{SystemTime, UNIX_EPOCH};

pub const SCHEMA_ID: &str = "igroup-report/1";

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct CheckDoc {
    pub id: String,
    pub law: String,
    pub passed: bool,
    pub residual: f64,
    pub threshold: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case", deny_unknown_fields)]
pub struct ReportDoc {
    pub schema: String,
    pub scenario: String,
    pub title: String,
    pub passed: bool,
    /// Seconds since the Unix epoch; the only field excluded from the
    /// byte-identical determinism guarantee.
    pub generated_at: u64,
    pub seed: u64,
    pub tol: f64,
    pub checks: Vec<CheckDoc>,
    pub findings: Findings,
    pub config_echo: RunConfig,
}

impl ReportDoc {
    pub fn build(config: &RunConfig, report: &Report, findings: Findings) -> ReportDoc {
        let checks = report
            .checks
            .iter()
            .map(|c| CheckDoc {
                id: c.id.clone(),
                law: c.law.clone(),
                passed: c.passed,
                // JSON has no non-finite numbers; a non-finite residual is
                // already a failure, so clamp and keep the record parseable.
                residual: if c.residual.is_finite() {
                    c.residual
                } else {
                    f64::MAX
                },
                threshold: c.threshold,
                witness: c.witness.clone(),
            })
            .collect();
        ReportDoc {
            schema: SCHEMA_ID.into(),
            scenario: config.scenario.name().into(),
            title: report.title.clone(),
            passed: report.passed(),
            generated_at: SystemTime::now()
                .duration_since(UNIX_EPOCH)
                .map(|d| d.as_secs())
                .unwrap_or(0),
            seed: config.effective_seed(),
            tol: config.effective_tol(),
            checks,
            findings,
            config_echo: config.clone(),
        }
    }

    pub fn to_json(&self) -> String {
        let mut text = serde_json::to_string_pretty(self).expect("report serializes");
        text.push('\n');
        text
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        out.push_str(&format!(
            "{} [{}]: {}\n",
            self.title,
            self.scenario,
            if self.passed { "PASS" } else { "FAIL" }
        ));
        let failed = self.checks.iter().filter(|c| !c.passed).count();
        out.push_str(&format!(
            "{} checks, {} failed, seed {}, tol {:.1e}\n",
            self.checks.len(),
            failed,
            self.seed,
            self.tol
        ));
        for c in &self.checks {
            out.push_str(&format!(
                "  [{}] {:<40} residual {:.3e} (limit {:.3e}) {}\n",
                if c.passed { "ok" } else { "FAIL" },
                c.id,
                c.residual,
                c.threshold,
                c.witness.as_deref().unwrap_or("")
            ));
        }
        if !self.findings.is_empty() {
            out.push_str("findings:\n");
            for (key, value) in &self.findings {
                out.push_str(&format!("  {key}: {value}\n"));
            }
        }
        out
    }
}
