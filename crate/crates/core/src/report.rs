//! Structured verification reports. Every numerical claim made by a
//! verification routine lands in a [`Check`]: a stable id, the mathematical
//! law being tested, the measured residual against its threshold, and an
//! optional witness describing where the worst case occurred.

use serde::Serialize;

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    /// Stable machine-readable id, unique within a report.
    pub id: String,
    /// The identity or property this check verifies.
    pub law: String,
    pub passed: bool,
    /// Measured residual; boolean checks use 0.0 (holds) or 1.0 (fails).
    pub residual: f64,
    pub threshold: f64,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub witness: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub title: String,
    pub checks: Vec<Check>,
}

impl Report {
    pub fn new(title: impl Into<String>) -> Report {
        Report {
            title: title.into(),
            checks: Vec::new(),
        }
    }

    /// Record a residual check: passes iff residual <= threshold.
    pub fn check(
        &mut self,
        id: impl Into<String>,
        law: impl Into<String>,
        residual: f64,
        threshold: f64,
    ) -> bool {
        self.check_with(id, law, residual, threshold, None::<String>)
    }

    pub fn check_with(
        &mut self,
        id: impl Into<String>,
        law: impl Into<String>,
        residual: f64,
        threshold: f64,
        witness: Option<impl Into<String>>,
    ) -> bool {
        let id = id.into();
        let law = law.into();
        debug_assert!(
            !self.checks.iter().any(|c| c.id == id),
            "duplicate check id {id}"
        );
        let passed = residual.is_finite() && residual <= threshold;
        self.checks.push(Check {
            id,
            law,
            passed,
            residual,
            threshold,
            witness: if passed { None } else { witness.map(Into::into) },
        });
        passed
    }

    /// Record a yes/no check.
    pub fn flag(
        &mut self,
        id: impl Into<String>,
        law: impl Into<String>,
        ok: bool,
        witness: Option<impl Into<String>>,
    ) -> bool {
        self.check_with(
            id,
            law,
            if ok { 0.0 } else { 1.0 },
            0.0,
            witness,
        )
    }

    /// Fold another report in, prefixing its check ids.
    pub fn absorb(&mut self, prefix: &str, other: Report) {
        for mut c in other.checks {
            c.id = format!("{prefix}.{}", c.id);
            debug_assert!(
                !self.checks.iter().any(|d| d.id == c.id),
                "duplicate check id {}",
                c.id
            );
            self.checks.push(c);
        }
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.passed)
    }

    pub fn failures(&self) -> Vec<&Check> {
        self.checks.iter().filter(|c| !c.passed).collect()
    }

    /// Largest residual among residual-valued checks.
    pub fn max_residual(&self) -> f64 {
        self.checks
            .iter()
            .map(|c| c.residual)
            .fold(0.0f64, f64::max)
    }

    pub fn get(&self, id: &str) -> Option<&Check> {
        self.checks.iter().find(|c| c.id == id)
    }

    pub fn summary(&self) -> String {
        let failed = self.checks.len() - self.checks.iter().filter(|c| c.passed).count();
        format!(
            "{}: {} checks, {} failed, max residual {:.3e}",
            self.title,
            self.checks.len(),
            failed,
            self.max_residual()
        )
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn residual_checks_respect_threshold() {
        let mut r = Report::new("demo");
        assert!(r.check("a", "law a", 1e-12, 1e-10));
        assert!(!r.check_with("b", "law b", 1e-3, 1e-10, Some("at g=1")));
        assert!(!r.passed());
        assert_eq!(r.failures().len(), 1);
        assert_eq!(r.get("b").unwrap().witness.as_deref(), Some("at g=1"));
        assert!(r.get("a").unwrap().witness.is_none());
    }

    #[test]
    fn nan_residual_fails() {
        let mut r = Report::new("demo");
        assert!(!r.check("nan", "law", f64::NAN, 1.0));
    }

    #[test]
    fn absorb_prefixes_ids() {
        let mut inner = Report::new("inner");
        inner.check("x", "law", 0.0, 1.0);
        let mut outer = Report::new("outer");
        outer.absorb("sub", inner);
        assert!(outer.get("sub.x").is_some());
    }
}
