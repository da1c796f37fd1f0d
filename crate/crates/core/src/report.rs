//! Experiment reports: estimates, reference values, verdicts, and their JSON
//! and CSV forms.
//!
//! Every float written to a report file is rounded to 12 significant digits
//! first, so reruns produce byte-identical files and diffs stay readable.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize, Serializer};

pub const REPORT_SCHEMA: &str = "srwlab.report.v1";

/// Significant digits kept in report files.
pub const SIGNIFICANT_DIGITS: usize = 12;

/// Rounds to [`SIGNIFICANT_DIGITS`] significant digits.
pub fn round_sig(x: f64) -> f64 {
    if x == 0.0 || !x.is_finite() {
        return x;
    }
    format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x)
        .parse()
        .unwrap_or(x)
}

/// Fixed 12-significant-digit decimal text; scientific notation only outside
/// `1e-5 ..= 1e15`.
pub fn fmt_sig(x: f64) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let x = round_sig(x);
    let exponent = x.abs().log10().floor() as i32;
    if !(-5..15).contains(&exponent) {
        return format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    }
    let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exponent).max(0) as usize;
    format!("{x:.decimals$}")
}

pub fn serialize_sig<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    s.serialize_f64(round_sig(*x))
}

pub fn serialize_sig_opt<S: Serializer>(x: &Option<f64>, s: S) -> Result<S::Ok, S::Error> {
    match x {
        Some(v) => s.serialize_some(&round_sig(*v)),
        None => s.serialize_none(),
    }
}

/// Where a reference value comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    /// Closed forms evaluated at the quadrature value of `gamma`.
    ConstantsOracle,
    /// An exact probability law evaluated at the quadrature constants.
    ExactLaw,
    /// An identity that holds on every run (conservation, counting).
    Identity,
}

impl Provenance {
    pub fn name(self) -> &'static str {
        match self {
            Provenance::ConstantsOracle => "constants_oracle",
            Provenance::ExactLaw => "exact_law",
            Provenance::Identity => "identity",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum VerdictClass {
    Pass,
    Fail,
    /// Reported for inspection; never affects the outcome.
    Diagnostic,
}

impl VerdictClass {
    pub fn name(self) -> &'static str {
        match self {
            VerdictClass::Pass => "pass",
            VerdictClass::Fail => "fail",
            VerdictClass::Diagnostic => "diagnostic",
        }
    }

    pub fn hard(passed: bool) -> Self {
        if passed {
            VerdictClass::Pass
        } else {
            VerdictClass::Fail
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Estimate {
    pub label: String,
    #[serde(serialize_with = "serialize_sig")]
    pub value: f64,
    #[serde(serialize_with = "serialize_sig_opt")]
    pub stderr: Option<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Reference {
    pub label: String,
    #[serde(serialize_with = "serialize_sig")]
    pub value: f64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Verdict {
    pub label: String,
    pub class: VerdictClass,
    /// Provenance of the reference the verdict was judged against.
    pub provenance: Option<Provenance>,
    /// Whether the rule held; for diagnostics this is informational only.
    pub met: Option<bool>,
    /// The acceptance rule, e.g. `|est - ref| <= 3 se + 0.0066`.
    pub rule: String,
}

/// Free-form parameters echoed into the report (all values pre-formatted).
pub type Metadata = std::collections::BTreeMap<String, String>;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ExperimentReport {
    pub schema: String,
    pub name: String,
    /// The plan and derived settings (cap, truncation bound, ...).
    pub metadata: Metadata,
    pub estimates: Vec<Estimate>,
    pub references: Vec<Reference>,
    pub verdicts: Vec<Verdict>,
    /// Set when the run is too small to judge; no pass/fail verdicts then.
    pub diagnostic_only: bool,
    pub notes: Vec<String>,
}

impl ExperimentReport {
    pub fn new(name: impl Into<String>, metadata: Metadata) -> Self {
        ExperimentReport {
            schema: REPORT_SCHEMA.to_string(),
            name: name.into(),
            metadata,
            estimates: Vec::new(),
            references: Vec::new(),
            verdicts: Vec::new(),
            diagnostic_only: false,
            notes: Vec::new(),
        }
    }

    pub fn estimate(&mut self, label: impl Into<String>, value: f64, stderr: Option<f64>) {
        self.estimates.push(Estimate {
            label: label.into(),
            value,
            stderr,
        });
    }

    pub fn reference(&mut self, label: impl Into<String>, value: f64, provenance: Provenance) {
        self.references.push(Reference {
            label: label.into(),
            value,
            provenance,
        });
    }

    pub fn verdict(
        &mut self,
        label: impl Into<String>,
        class: VerdictClass,
        provenance: Option<Provenance>,
        met: Option<bool>,
        rule: impl Into<String>,
    ) {
        self.verdicts.push(Verdict {
            label: label.into(),
            class,
            provenance,
            met,
            rule: rule.into(),
        });
    }

    /// Hard verdict with the rule outcome `passed`.
    pub fn judge(
        &mut self,
        label: impl Into<String>,
        passed: bool,
        provenance: Option<Provenance>,
        rule: impl Into<String>,
    ) -> bool {
        self.verdict(
            label,
            VerdictClass::hard(passed),
            provenance,
            Some(passed),
            rule,
        );
        passed
    }

    /// Diagnostic verdict recording whether the declared band held.
    pub fn note_band(
        &mut self,
        label: impl Into<String>,
        met: bool,
        provenance: Option<Provenance>,
        rule: impl Into<String>,
    ) {
        self.verdict(label, VerdictClass::Diagnostic, provenance, Some(met), rule);
    }

    /// Estimate, reference, and a hard verdict `|est - ref| <= band`.
    #[allow(clippy::too_many_arguments)]
    pub fn check_band(
        &mut self,
        label: &str,
        value: f64,
        stderr: Option<f64>,
        reference: f64,
        provenance: Provenance,
        band: f64,
        rule: String,
    ) -> bool {
        self.estimate(label, value, stderr);
        self.reference(label, reference, provenance);
        let ok = (value - reference).abs() <= band;
        self.judge(label, ok, Some(provenance), rule)
    }

    /// Estimate and reference with a diagnostic verdict: `met` records
    /// whether the declared band held.
    #[allow(clippy::too_many_arguments)]
    pub fn diagnose_band(
        &mut self,
        label: &str,
        value: f64,
        stderr: Option<f64>,
        reference: f64,
        provenance: Provenance,
        met: bool,
        rule: String,
    ) {
        self.estimate(label, value, stderr);
        self.reference(label, reference, provenance);
        self.note_band(label, met, Some(provenance), rule);
    }

    /// Drops every verdict and marks the report as too small to judge.
    pub fn demote_to_diagnostic(&mut self, why: impl Into<String>) {
        self.verdicts.clear();
        self.diagnostic_only = true;
        self.notes.push(why.into());
    }

    pub fn hard_failures(&self) -> impl Iterator<Item = &Verdict> {
        self.verdicts
            .iter()
            .filter(|v| v.class == VerdictClass::Fail)
    }

    pub fn passed(&self) -> bool {
        self.hard_failures().next().is_none()
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// One row per label: `label,value,stderr,reference,provenance,verdict,met,rule`.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("label,value,stderr,reference,provenance,verdict,met,rule\n");
        let mut labels: Vec<&str> = Vec::new();
        for l in self
            .estimates
            .iter()
            .map(|e| e.label.as_str())
            .chain(self.references.iter().map(|r| r.label.as_str()))
            .chain(self.verdicts.iter().map(|v| v.label.as_str()))
        {
            if !labels.contains(&l) {
                labels.push(l);
            }
        }
        for label in labels {
            let est = self.estimates.iter().find(|e| e.label == label);
            let reference = self.references.iter().find(|r| r.label == label);
            let verdict = self.verdicts.iter().find(|v| v.label == label);
            let _ = writeln!(
                out,
                "{},{},{},{},{},{},{},{}",
                csv_field(label),
                est.map(|e| fmt_sig(e.value)).unwrap_or_default(),
                est.and_then(|e| e.stderr).map(fmt_sig).unwrap_or_default(),
                reference.map(|r| fmt_sig(r.value)).unwrap_or_default(),
                reference.map(|r| r.provenance.name()).unwrap_or_default(),
                verdict
                    .map(|v| v.class.name())
                    .unwrap_or(if self.diagnostic_only {
                        "diagnostic"
                    } else {
                        ""
                    }),
                match verdict.and_then(|v| v.met) {
                    Some(true) => "yes",
                    Some(false) => "no",
                    None => "",
                },
                csv_field(verdict.map(|v| v.rule.as_str()).unwrap_or_default()),
            );
        }
        out
    }
}

/// Quotes a CSV field when it contains a separator or quote.
pub fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(fmt_sig(0.659_462_670_449_000_9), "0.659462670449");
        assert_eq!(fmt_sig(2.565_921_307_396_945_6), "2.56592130740");
        assert_eq!(fmt_sig(1234.5), "1234.50000000");
        assert_eq!(fmt_sig(-3e-7), "-3.00000000000e-7");
        assert_eq!(fmt_sig(0.0), "0");
        assert_eq!(round_sig(1.0 / 3.0), 0.333_333_333_333);
    }

    #[test]
    fn csv_joins_rows_by_label() {
        let mut r = ExperimentReport::new("t", Metadata::new());
        r.check_band(
            "x",
            1.0,
            Some(0.1),
            1.05,
            Provenance::ConstantsOracle,
            0.3,
            "|est - ref| <= 3 se".into(),
        );
        r.estimate("y, with comma", 2.0, None);
        let csv = r.to_csv();
        let rows: Vec<&str> = csv.lines().collect();
        assert_eq!(rows.len(), 3);
        assert_eq!(
            rows[1],
            "x,1.00000000000,0.100000000000,1.05000000000,constants_oracle,pass,yes,|est - ref| <= 3 se"
        );
        assert!(rows[2].starts_with("\"y, with comma\",2.00000000000,,"));
        assert!(r.passed());
    }

    #[test]
    fn json_rounds_floats() {
        let mut r = ExperimentReport::new("t", Metadata::new());
        r.estimate("x", 1.0 / 3.0, None);
        assert!(r.to_json().contains("0.333333333333"));
        assert!(!r.to_json().contains("0.3333333333333"));
    }
}
