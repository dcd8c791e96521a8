use std::collections::BTreeMap;

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use serde_json::Value;

/// One checked claim: two computed sides, their distance and the verdict.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub claim: String,
    pub params: BTreeMap<String, Value>,
    pub lhs: Complex64,
    pub rhs: Complex64,
    pub abs_err: f64,
    pub rel_err: f64,
    pub tolerance: f64,
    pub exact: bool,
    pub pass: bool,
    #[serde(default, skip_serializing_if = "BTreeMap::is_empty")]
    pub meta: BTreeMap<String, Value>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub wall_ms: Option<f64>,
}

fn rel(abs: f64, rhs: Complex64) -> f64 {
    if abs == 0.0 {
        0.0
    } else if rhs.norm() == 0.0 {
        abs
    } else {
        abs / rhs.norm()
    }
}

impl VerificationReport {
    /// Floating comparison; passes iff rel error ≤ tol.
    pub fn compare(claim: &str, lhs: Complex64, rhs: Complex64, tol: f64) -> VerificationReport {
        let abs = (lhs - rhs).norm();
        let rel_err = rel(abs, rhs);
        let pass = abs.is_finite() && rel_err <= tol;
        VerificationReport {
            claim: claim.to_string(),
            params: BTreeMap::new(),
            lhs,
            rhs,
            abs_err: abs,
            rel_err,
            tolerance: tol,
            exact: false,
            pass,
            meta: BTreeMap::new(),
            wall_ms: None,
        }
    }

    pub fn compare_real(claim: &str, lhs: f64, rhs: f64, tol: f64) -> VerificationReport {
        Self::compare(
            claim,
            Complex64::new(lhs, 0.0),
            Complex64::new(rhs, 0.0),
            tol,
        )
    }

    /// Exact claim decided elsewhere; the floats are informational.
    pub fn exact(claim: &str, equal: bool, lhs: f64, rhs: f64) -> VerificationReport {
        let mut r = Self::compare_real(claim, lhs, rhs, 0.0);
        r.exact = true;
        r.pass = equal;
        r
    }

    /// Boolean property check; lhs is 1 when it holds.
    pub fn flag(claim: &str, holds: bool) -> VerificationReport {
        let v = if holds { 1.0 } else { 0.0 };
        Self::exact(claim, holds, v, 1.0)
    }

    pub fn param<V: Into<Value>>(mut self, key: &str, v: V) -> Self {
        self.params.insert(key.to_string(), v.into());
        self
    }

    pub fn with_meta<V: Into<Value>>(mut self, key: &str, v: V) -> Self {
        self.meta.insert(key.to_string(), v.into());
        self
    }

    /// Flattened record for tabular output, same keys as the JSON form.
    pub fn csv_header() -> [&'static str; 12] {
        [
            "claim",
            "params",
            "lhs_re",
            "lhs_im",
            "rhs_re",
            "rhs_im",
            "abs_err",
            "rel_err",
            "tolerance",
            "exact",
            "pass",
            "meta",
        ]
    }

    pub fn csv_row(&self) -> Vec<String> {
        vec![
            self.claim.clone(),
            serde_json::to_string(&self.params).unwrap_or_default(),
            self.lhs.re.to_string(),
            self.lhs.im.to_string(),
            self.rhs.re.to_string(),
            self.rhs.im.to_string(),
            self.abs_err.to_string(),
            self.rel_err.to_string(),
            self.tolerance.to_string(),
            self.exact.to_string(),
            self.pass.to_string(),
            serde_json::to_string(&self.meta).unwrap_or_default(),
        ]
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn round_trip() {
        let r = VerificationReport::compare_real("beta-identity", 1.0, 1.0 + 1e-9, 1e-6)
            .param("n", 2)
            .with_meta("shells", vec![1.0, 0.5]);
        assert!(r.pass);
        let s = serde_json::to_string(&r).unwrap();
        let back: VerificationReport = serde_json::from_str(&s).unwrap();
        assert_eq!(back, r);
        assert!(!VerificationReport::compare_real("x", 1.0, 2.0, 1e-3).pass);
        assert!(!VerificationReport::compare_real("x", f64::NAN, 2.0, 1e-3).pass);
        assert!(VerificationReport::flag("y", true).pass);
        assert_eq!(r.csv_row().len(), VerificationReport::csv_header().len());
    }
}
