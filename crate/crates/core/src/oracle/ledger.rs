use std::fmt;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

/// Absolute-relative slack granted to theorem bounds for roundoff.
pub const BOUND_SLACK: f64 = 1e-8;

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub enum Relation {
    #[serde(rename = "<=")]
    AtMost,
    #[serde(rename = ">=")]
    AtLeast,
}

impl Relation {
    pub fn symbol(self) -> &'static str {
        match self {
            Relation::AtMost => "<=",
            Relation::AtLeast => ">=",
        }
    }
}

/// One checked inequality `actual <relation> bound`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct BoundEntry {
    pub name: String,
    #[serde(with = "maybe_infinite")]
    pub bound: f64,
    #[serde(with = "maybe_infinite")]
    pub actual: f64,
    pub relation: Relation,
    pub holds: bool,
}

impl BoundEntry {
    pub fn new(name: impl Into<String>, relation: Relation, bound: f64, actual: f64, slack: f64) -> Self {
        let holds = check(relation, bound, actual, slack);
        BoundEntry {
            name: name.into(),
            bound,
            actual,
            relation,
            holds,
        }
    }
}

fn check(relation: Relation, bound: f64, actual: f64, slack: f64) -> bool {
    if bound.is_nan() || actual.is_nan() {
        return false;
    }
    let tol = slack * bound.abs().max(1.0);
    match relation {
        Relation::AtMost => bound == f64::INFINITY || actual <= bound + tol,
        Relation::AtLeast => bound == f64::NEG_INFINITY || actual >= bound - tol,
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
#[serde(transparent)]
pub struct BoundLedger {
    entries: Vec<BoundEntry>,
}

impl BoundLedger {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn upper(&mut self, name: impl Into<String>, bound: f64, actual: f64) -> &mut Self {
        self.push(BoundEntry::new(name, Relation::AtMost, bound, actual, BOUND_SLACK))
    }

    pub fn lower(&mut self, name: impl Into<String>, bound: f64, actual: f64) -> &mut Self {
        self.push(BoundEntry::new(name, Relation::AtLeast, bound, actual, BOUND_SLACK))
    }

    pub fn push(&mut self, entry: BoundEntry) -> &mut Self {
        self.entries.push(entry);
        self
    }

    pub fn extend(&mut self, other: BoundLedger) {
        self.entries.extend(other.entries);
    }

    pub fn entries(&self) -> &[BoundEntry] {
        &self.entries
    }

    pub fn get(&self, name: &str) -> Option<&BoundEntry> {
        self.entries.iter().find(|e| e.name == name)
    }

    pub fn failures(&self) -> impl Iterator<Item = &BoundEntry> {
        self.entries.iter().filter(|e| !e.holds)
    }

    pub fn all_hold(&self) -> bool {
        self.entries.iter().all(|e| e.holds)
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// `Ok(self)` when every entry holds, otherwise a theorem-violation error.
    pub fn into_result(self) -> crate::Result<Self> {
        if self.all_hold() {
            Ok(self)
        } else {
            Err(crate::Error::TheoremViolation(Box::new(self)))
        }
    }
}

impl fmt::Display for BoundLedger {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let width = self.entries.iter().map(|e| e.name.len()).max().unwrap_or(4).max(4);
        writeln!(f, "{:<width$}  {:>14}     {:>14}  status", "name", "actual", "bound")?;
        for e in &self.entries {
            writeln!(
                f,
                "{:<width$}  {:>14.6e}  {}  {:>14.6e}  {}",
                e.name,
                e.actual,
                e.relation.symbol(),
                e.bound,
                if e.holds { "ok" } else { "FAIL" }
            )?;
        }
        Ok(())
    }
}

/// JSON has no infinity; non-finite values travel as the strings
/// `"inf"`, `"-inf"` and `"nan"`.
pub mod maybe_infinite {
    use super::*;

    #[derive(Serialize, Deserialize)]
    #[serde(untagged)]
    enum Repr {
        Num(f64),
        Tag(String),
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
            Repr::Tag(t) => match t.as_str() {
                "inf" => Ok(f64::INFINITY),
                "-inf" => Ok(f64::NEG_INFINITY),
                "nan" => Ok(f64::NAN),
                other => Err(serde::de::Error::custom(format!("expected a number, got {other:?}"))),
            },
        }
    }
}
