//! Pass/fail bookkeeping shared by the function, mean and metric checks.

use std::collections::BTreeMap;

use serde::{Deserialize, Serialize};

/// Failing dumps kept per report; further failures are only counted.
pub const MAX_DUMPS: usize = 16;

/// Serialized failing instance.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct FailureDump {
    pub suite: String,
    pub trial: usize,
    #[serde(default)]
    pub margin: Option<f64>,
    #[serde(default)]
    pub error: Option<String>,
    pub instance: serde_json::Value,
}

/// Outcome of a randomized check.
///
/// A margin is the normalized slack of the tested inequality: non-negative
/// when the inequality holds exactly, and a trial passes while
/// `margin >= -tol`. Equality checks report `-|lhs - rhs| / scale`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Report {
    pub name: String,
    pub trials: usize,
    pub passed: usize,
    pub failed: usize,
    pub tol: f64,
    pub worst_margin: Option<f64>,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub values: BTreeMap<String, f64>,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub failures: Vec<FailureDump>,
}

pub type CheckReport = Report;
pub type SuiteReport = Report;

impl Report {
    pub fn new(name: impl Into<String>, tol: f64) -> Self {
        Self {
            name: name.into(),
            trials: 0,
            passed: 0,
            failed: 0,
            tol,
            worst_margin: None,
            values: BTreeMap::new(),
            failures: Vec::new(),
        }
    }

    /// Records one trial; `instance` is only built when the trial fails.
    pub fn record(
        &mut self,
        trial: usize,
        margin: crate::Result<f64>,
        instance: impl FnOnce() -> serde_json::Value,
    ) -> bool {
        self.trials += 1;
        let (ok, margin, error) = match margin {
            Ok(m) if m.is_nan() => (false, None, Some("margin is NaN".to_string())),
            Ok(m) => {
                self.worst_margin = Some(self.worst_margin.map_or(m, |w| w.min(m)));
                (m >= -self.tol, Some(m), None)
            }
            Err(e) => (false, None, Some(e.to_string())),
        };
        if ok {
            self.passed += 1;
        } else {
            self.failed += 1;
            if self.failures.len() < MAX_DUMPS {
                self.failures.push(FailureDump {
                    suite: self.name.clone(),
                    trial,
                    margin,
                    error,
                    instance: instance(),
                });
            }
        }
        ok
    }

    pub fn all_passed(&self) -> bool {
        self.trials > 0 && self.failed == 0
    }

    /// Sums counts and keeps the worst margin; associative and, up to the
    /// order of stored dumps, commutative.
    pub fn merge(mut self, other: Report) -> Report {
        self.trials += other.trials;
        self.passed += other.passed;
        self.failed += other.failed;
        self.worst_margin = match (self.worst_margin, other.worst_margin) {
            (Some(a), Some(b)) => Some(a.min(b)),
            (a, b) => a.or(b),
        };
        for f in other.failures {
            if self.failures.len() < MAX_DUMPS {
                self.failures.push(f);
            }
        }
        for (k, v) in other.values {
            self.values.entry(k).or_insert(v);
        }
        self
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn counts_and_margins() {
        let mut r = Report::new("x", 1e-8);
        r.record(0, Ok(0.5), || serde_json::Value::Null);
        r.record(1, Ok(-1.0), || serde_json::json!({"a": 1}));
        r.record(2, Err(crate::Error::DemoFailure("boom".into())), || {
            serde_json::Value::Null
        });
        assert_eq!((r.trials, r.passed, r.failed), (3, 1, 2));
        assert_eq!(r.worst_margin, Some(-1.0));
        assert_eq!(r.failures.len(), 2);
        assert!(!r.all_passed());

        let mut s = Report::new("x", 1e-8);
        s.record(0, Ok(1e-3), || serde_json::Value::Null);
        let m = s.merge(r);
        assert_eq!((m.trials, m.passed, m.failed), (4, 2, 2));
        assert_eq!(m.worst_margin, Some(-1.0));
    }
}
