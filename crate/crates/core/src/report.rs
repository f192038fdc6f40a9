//! Verification reports and the CSV/JSON artifacts written by the CLI.
//!
//! CSV numbers are written with 17 significant digits in `.`-decimal
//! scientific notation and LF line endings, so that identical arithmetic
//! gives byte-identical files.

use std::io::Write;

use serde::{Deserialize, Serialize};

use crate::error::Result;
use crate::spectra::Spectrum;

/// Anchor used for checks that test the tooling rather than an identity.
pub const PLUMBING: &str = "plumbing";

/// How `computed` is compared with `reference`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `|computed − reference| ≤ tolerance`.
    Within,
    /// `computed ≤ reference + tolerance`.
    AtMost,
    /// `computed ≥ reference − tolerance`.
    AtLeast,
}

impl Comparison {
    pub fn holds(self, computed: f64, reference: f64, tolerance: f64) -> bool {
        match self {
            Self::Within => (computed - reference).abs() <= tolerance,
            Self::AtMost => computed <= reference + tolerance,
            Self::AtLeast => computed >= reference - tolerance,
        }
    }
}

/// One verified quantity.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Entry {
    pub check_id: String,
    /// The identity or bound being checked, or [`PLUMBING`].
    pub anchor: String,
    pub computed: f64,
    pub reference: f64,
    pub tolerance: f64,
    pub comparison: Comparison,
    pub pass: bool,
    pub runtime_seconds: f64,
}

impl Entry {
    pub fn new(
        check_id: impl Into<String>,
        anchor: impl Into<String>,
        comparison: Comparison,
        computed: f64,
        reference: f64,
        tolerance: f64,
    ) -> Self {
        let anchor = anchor.into();
        assert!(!anchor.is_empty(), "every check needs an anchor");
        Self {
            check_id: check_id.into(),
            anchor,
            computed,
            reference,
            tolerance,
            comparison,
            pass: computed.is_finite() && comparison.holds(computed, reference, tolerance),
            runtime_seconds: 0.0,
        }
    }

    /// `|computed − reference| ≤ tolerance`.
    pub fn within(id: impl Into<String>, anchor: impl Into<String>, computed: f64, reference: f64, tol: f64) -> Self {
        Self::new(id, anchor, Comparison::Within, computed, reference, tol)
    }

    /// `computed ≤ bound + slack`.
    pub fn at_most(id: impl Into<String>, anchor: impl Into<String>, computed: f64, bound: f64, slack: f64) -> Self {
        Self::new(id, anchor, Comparison::AtMost, computed, bound, slack)
    }

    /// `computed ≥ bound − slack`.
    pub fn at_least(id: impl Into<String>, anchor: impl Into<String>, computed: f64, bound: f64, slack: f64) -> Self {
        Self::new(id, anchor, Comparison::AtLeast, computed, bound, slack)
    }

    /// A yes/no property, stored as `computed = 1` (true) against `reference = 1`.
    pub fn holds(id: impl Into<String>, anchor: impl Into<String>, ok: bool) -> Self {
        Self::new(id, anchor, Comparison::Within, if ok { 1.0 } else { 0.0 }, 1.0, 0.0)
    }

    pub fn with_runtime(mut self, seconds: f64) -> Self {
        self.runtime_seconds = seconds;
        self
    }
}

/// Run parameters recorded with a report.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Metadata {
    pub panels: usize,
    pub order: usize,
    /// Number of quadrature nodes, `panels × order`.
    pub grid_size: usize,
    /// Named truncation parameters (series lengths, expansion sizes, …).
    pub truncations: Vec<(String, u64)>,
    /// Seed of the pseudo-random samples.
    pub seed: u64,
    pub tol_scale: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerificationReport {
    pub suite: String,
    pub entries: Vec<Entry>,
    pub metadata: Metadata,
}

impl VerificationReport {
    /// True iff every entry passes.
    pub fn passed(&self) -> bool {
        self.entries.iter().all(|e| e.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Entry> {
        self.entries.iter().filter(|e| !e.pass)
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string_pretty(self)?)
    }

    pub fn from_json(s: &str) -> Result<Self> {
        Ok(serde_json::from_str(s)?)
    }
}

/// `x` with 17 significant digits.
pub fn format_number(x: f64) -> String {
    format!("{x:.16e}")
}

fn csv_writer<W: Write>(out: W) -> csv::Writer<W> {
    csv::WriterBuilder::new().terminator(csv::Terminator::Any(b'\n')).from_writer(out)
}

/// Write the leading `count` eigenvalues as
/// `j,lambda,abs_lambda,sign,multiplicity_group`.
pub fn write_spectrum_csv<W: Write>(spectrum: &Spectrum, count: usize, out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["j", "lambda", "abs_lambda", "sign", "multiplicity_group"])?;
    for (j, (lambda, group)) in spectrum.eigenvalues.iter().zip(&spectrum.groups).take(count).enumerate() {
        let sign = if *lambda > 0.0 { "1" } else { "-1" };
        w.write_record([
            (j + 1).to_string(),
            format_number(*lambda),
            format_number(lambda.abs()),
            sign.to_string(),
            group.to_string(),
        ])?;
    }
    w.flush()?;
    Ok(())
}

/// One sample of an eigenfunction and its derived functions.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EigfunSample {
    pub x: f64,
    pub phi: f64,
    /// `None` where the derivative is undefined.
    pub dphi: Option<f64>,
    pub p: f64,
    pub q: Option<f64>,
}

/// Write samples as `x,phi,dphi,P,Q`; undefined values are left empty.
pub fn write_eigfun_csv<W: Write>(rows: &[EigfunSample], out: W) -> Result<()> {
    let mut w = csv_writer(out);
    w.write_record(["x", "phi", "dphi", "P", "Q"])?;
    let opt = |v: Option<f64>| v.map(format_number).unwrap_or_default();
    for r in rows {
        w.write_record([format_number(r.x), format_number(r.phi), opt(r.dphi), format_number(r.p), opt(r.q)])?;
    }
    w.flush()?;
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn seventeen_significant_digits_round_trip() {
        for x in [std::f64::consts::PI, -1e-300, 12.548798676990011, 0.1] {
            let s = format_number(x);
            assert_eq!(s.parse::<f64>().unwrap(), x);
            assert!(!s.contains(','));
        }
    }

    #[test]
    fn comparisons() {
        assert!(Entry::within("a", PLUMBING, 1.0, 1.05, 0.1).pass);
        assert!(!Entry::at_most("b", PLUMBING, 2.0, 1.0, 0.5).pass);
        assert!(Entry::at_least("c", PLUMBING, 2.0, 1.0, 0.0).pass);
        assert!(!Entry::holds("d", PLUMBING, false).pass);
    }
}
