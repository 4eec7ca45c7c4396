//! Machine-readable run reports.
//!
//! Floats are written with 17 significant digits and every map is ordered,
//! so identical runs produce byte-identical output.

use std::collections::{BTreeMap, BTreeSet};

use intertwine::intertwine::MatchedPair;
use intertwine::linalg::MatrixJson;
use intertwine::C64;
use serde::ser::Serializer;
use serde::Serialize;
use serde_json::value::RawValue;

/// Float written as `{:.16e}`; non-finite values become `null`.
#[derive(Clone, Copy, Debug, PartialEq)]
pub struct Num(pub f64);

impl Serialize for Num {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        if self.0.is_finite() {
            let raw = RawValue::from_string(format!("{:.16e}", self.0)).map_err(serde::ser::Error::custom)?;
            raw.serialize(s)
        } else {
            s.serialize_none()
        }
    }
}

pub fn nums(values: &[f64]) -> Vec<Num> {
    values.iter().copied().map(Num).collect()
}

pub fn complex_nums(values: &[C64]) -> Vec<[Num; 2]> {
    values.iter().map(|z| [Num(z.re), Num(z.im)]).collect()
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    fn holds(&self, value: f64, threshold: f64) -> bool {
        match self {
            Relation::AtMost => value <= threshold,
            Relation::AtLeast => value >= threshold,
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Check {
    pub check: String,
    pub value: Num,
    pub threshold: Num,
    pub relation: Relation,
    pub pass: bool,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub note: Option<String>,
}

#[derive(Clone, Debug, Serialize)]
pub struct Skipped {
    pub check: String,
    pub reason: String,
}

#[derive(Clone, Debug, Serialize)]
pub struct Pair {
    pub index: usize,
    pub epsilon: [Num; 2],
    pub lambda: [Num; 2],
    pub distance: Num,
}

impl From<&MatchedPair> for Pair {
    fn from(p: &MatchedPair) -> Self {
        Pair {
            index: p.index,
            epsilon: [Num(p.epsilon.re), Num(p.epsilon.im)],
            lambda: [Num(p.lambda.re), Num(p.lambda.im)],
            distance: Num(p.distance),
        }
    }
}

#[derive(Clone, Debug, Serialize)]
pub struct Parameters {
    pub dim: usize,
    pub q: Num,
    pub seed: u64,
    pub guard: usize,
    pub rank_tol: Num,
    pub residual_tol: Num,
    pub commute_tol: Num,
}

#[derive(Clone, Debug, Serialize)]
pub struct Report {
    pub command: String,
    pub model: String,
    pub parameters: Parameters,
    pub generator: &'static str,
    pub eigenvalues: BTreeMap<String, Vec<[Num; 2]>>,
    pub nu: BTreeMap<String, Vec<Num>>,
    pub matched_pairs: BTreeMap<String, Vec<Pair>>,
    pub kernel_sets: BTreeMap<String, Vec<usize>>,
    pub frame_bounds: BTreeMap<String, [Num; 2]>,
    pub diagnostics: BTreeMap<String, Num>,
    pub checks: Vec<Check>,
    pub residuals: BTreeMap<String, Num>,
    pub skipped: Vec<Skipped>,
    #[serde(skip_serializing_if = "Option::is_none")]
    pub theta2: Option<MatrixJson>,
    pub verdict: &'static str,
    #[serde(skip)]
    names: BTreeSet<String>,
}

impl Report {
    pub fn new(command: &str, model: &str, parameters: Parameters) -> Self {
        Report {
            command: command.to_string(),
            model: model.to_string(),
            parameters,
            generator: intertwine::random::GENERATOR_NAME,
            eigenvalues: BTreeMap::new(),
            nu: BTreeMap::new(),
            matched_pairs: BTreeMap::new(),
            kernel_sets: BTreeMap::new(),
            frame_bounds: BTreeMap::new(),
            diagnostics: BTreeMap::new(),
            checks: Vec::new(),
            residuals: BTreeMap::new(),
            skipped: Vec::new(),
            theta2: None,
            verdict: "pass",
            names: BTreeSet::new(),
        }
    }

    fn push(&mut self, name: String, value: f64, threshold: f64, relation: Relation, note: Option<String>) {
        assert!(self.names.insert(name.clone()), "check {name} recorded twice");
        let pass = relation.holds(value, threshold);
        if !pass {
            self.verdict = "fail";
        }
        self.residuals.insert(name.clone(), Num(value));
        self.checks.push(Check { check: name, value: Num(value), threshold: Num(threshold), relation, pass, note });
    }

    pub fn at_most(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.push(name.into(), value, threshold, Relation::AtMost, None);
    }

    pub fn at_least(&mut self, name: impl Into<String>, value: f64, threshold: f64) {
        self.push(name.into(), value, threshold, Relation::AtLeast, None);
    }

    /// Boolean check recorded as value 1 or 0 against threshold 1.
    pub fn holds(&mut self, name: impl Into<String>, ok: bool) {
        self.push(name.into(), if ok { 1.0 } else { 0.0 }, 1.0, Relation::AtLeast, None);
    }

    /// A check that could not be evaluated; recorded as failed.
    pub fn error(&mut self, name: impl Into<String>, err: impl std::fmt::Display) {
        self.push(name.into(), f64::NAN, 0.0, Relation::AtMost, Some(err.to_string()));
    }

    pub fn skip(&mut self, name: impl Into<String>, reason: impl Into<String>) {
        self.skipped.push(Skipped { check: name.into(), reason: reason.into() });
    }

    pub fn diagnostic(&mut self, name: impl Into<String>, value: f64) {
        self.diagnostics.insert(name.into(), Num(value));
    }

    pub fn passed(&self) -> bool {
        self.checks.iter().all(|c| c.pass)
    }

    pub fn failures(&self) -> impl Iterator<Item = &Check> {
        self.checks.iter().filter(|c| !c.pass)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("report serializes");
        s.push('\n');
        s
    }

    /// `check,value,threshold,verdict` rows.
    pub fn to_csv(&self) -> String {
        let mut out = String::from("check,value,threshold,verdict\n");
        for c in &self.checks {
            let value = if c.value.0.is_finite() { format!("{:.16e}", c.value.0) } else { String::new() };
            let threshold = format!("{}{:.16e}", if c.relation == Relation::AtLeast { ">=" } else { "" }, c.threshold.0);
            let verdict = if c.pass { "PASS" } else { "FAIL" };
            out.push_str(&format!("{},{},{},{}\n", csv_field(&c.check), value, threshold, verdict));
        }
        out
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}
