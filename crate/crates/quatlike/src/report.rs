//! Check tallies and the deterministic JSON report.

use serde_json::{Map, Number, Value};

pub const SCHEMA: u32 = 1;

/// Direction of a check: residuals must stay below the bound, detection
/// values (broken inputs) must exceed it.
#[derive(Clone, Copy, Debug, PartialEq, Eq)]
pub enum Expect {
    Below,
    Above,
}

/// One aggregated check.
#[derive(Clone, Debug)]
pub struct Check {
    pub name: String,
    pub relation: String,
    pub expect: Expect,
    pub bound: f64,
    /// Worst value seen: largest for `Below`, smallest for `Above`. NaN
    /// when any evaluation failed.
    pub worst: f64,
    pub samples: usize,
}

impl Check {
    pub fn pass(&self) -> bool {
        match self.expect {
            Expect::Below => self.worst <= self.bound,
            Expect::Above => self.worst >= self.bound,
        }
    }
}

fn worse(e: Expect, a: f64, b: f64) -> f64 {
    if a.is_nan() || b.is_nan() {
        return f64::NAN;
    }
    match e {
        Expect::Below => a.max(b),
        Expect::Above => a.min(b),
    }
}

/// Ordered collection of checks, merged point by point.
#[derive(Clone, Debug, Default)]
pub struct Tally {
    pub checks: Vec<Check>,
    pub errors: Vec<String>,
}

impl Tally {
    pub fn new() -> Self {
        Self::default()
    }

    fn put(&mut self, name: &str, relation: &str, expect: Expect, bound: f64, v: f64) {
        if let Some(c) = self.checks.iter_mut().find(|c| c.name == name) {
            c.worst = worse(expect, c.worst, v);
            c.samples += 1;
        } else {
            self.checks.push(Check {
                name: name.to_string(),
                relation: relation.to_string(),
                expect,
                bound,
                worst: v,
                samples: 1,
            });
        }
    }

    /// Residual that must not exceed `bound`.
    pub fn below(&mut self, name: &str, relation: &str, bound: f64, v: f64) {
        self.put(name, relation, Expect::Below, bound, v);
    }

    /// Detection value that must reach `bound`.
    pub fn above(&mut self, name: &str, relation: &str, bound: f64, v: f64) {
        self.put(name, relation, Expect::Above, bound, v);
    }

    /// Records a failed evaluation against `name`.
    pub fn fail(&mut self, name: &str, relation: &str, err: &crate::Error) {
        self.put(name, relation, Expect::Below, 0.0, f64::NAN);
        if self.errors.len() < 8 {
            self.errors.push(format!("{name}: {err}"));
        }
    }

    /// Merges `o` into `self`, keeping first-seen order.
    pub fn merge(&mut self, o: Tally) {
        for c in o.checks {
            if let Some(s) = self.checks.iter_mut().find(|s| s.name == c.name) {
                s.worst = worse(s.expect, s.worst, c.worst);
                s.samples += c.samples;
            } else {
                self.checks.push(c);
            }
        }
        for e in o.errors {
            if self.errors.len() < 8 {
                self.errors.push(e);
            }
        }
    }

    pub fn pass(&self) -> bool {
        !self.checks.is_empty() && self.checks.iter().all(Check::pass)
    }
}

/// Float with 17 significant digits; non-finite values become `null`.
pub fn num(x: f64) -> Value {
    if !x.is_finite() {
        return Value::Null;
    }
    let s = format!("{:.16e}", x);
    Value::Number(s.parse::<Number>().expect("formatted float parses"))
}

/// Report header fields.
#[derive(Clone, Debug)]
pub struct Header {
    pub subcommand: String,
    pub manifold: String,
    pub params: Value,
    pub seed: u64,
    pub tolerance: f64,
    pub points: usize,
    pub order: u8,
}

pub fn to_json(h: &Header, t: &Tally) -> Value {
    let mut m = Map::new();
    m.insert("schema".into(), Value::from(SCHEMA));
    m.insert("subcommand".into(), Value::from(h.subcommand.clone()));
    let mut man = Map::new();
    man.insert("name".into(), Value::from(h.manifold.clone()));
    man.insert("params".into(), normalize(&h.params));
    m.insert("manifold".into(), Value::Object(man));
    m.insert("seed".into(), Value::from(h.seed));
    m.insert("tolerance".into(), num(h.tolerance));
    m.insert("points".into(), Value::from(h.points));
    m.insert("order".into(), Value::from(h.order));
    let checks = t
        .checks
        .iter()
        .map(|c| {
            let mut o = Map::new();
            o.insert("name".into(), Value::from(c.name.clone()));
            o.insert("relation".into(), Value::from(c.relation.clone()));
            o.insert(
                "expect".into(),
                Value::from(match c.expect {
                    Expect::Below => "below",
                    Expect::Above => "above",
                }),
            );
            o.insert("bound".into(), num(c.bound));
            o.insert("max_residual".into(), num(c.worst));
            o.insert("samples".into(), Value::from(c.samples));
            o.insert("pass".into(), Value::from(c.pass()));
            Value::Object(o)
        })
        .collect();
    m.insert("checks".into(), Value::Array(checks));
    m.insert("errors".into(), Value::from(t.errors.clone()));
    m.insert("pass".into(), Value::from(t.pass()));
    Value::Object(m)
}

/// Re-emits floats inside `v` with the fixed formatting.
fn normalize(v: &Value) -> Value {
    match v {
        Value::Number(n) if !(n.is_i64() || n.is_u64()) => num(n.as_f64().unwrap_or(f64::NAN)),
        Value::Array(a) => Value::Array(a.iter().map(normalize).collect()),
        Value::Object(o) => Value::Object(o.iter().map(|(k, v)| (k.clone(), normalize(v))).collect()),
        other => other.clone(),
    }
}

pub fn to_string(h: &Header, t: &Tally) -> String {
    let mut s = serde_json::to_string_pretty(&to_json(h, t)).expect("report serializes");
    s.push('\n');
    s
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn floats_keep_seventeen_digits() {
        assert_eq!(num(0.1).to_string(), "1.0000000000000001e-1");
        assert_eq!(num(1e-8).to_string(), "1.0000000000000000e-8");
        assert_eq!(num(f64::NAN), Value::Null);
    }

    #[test]
    fn tally_keeps_worst_and_order() {
        let mut a = Tally::new();
        a.below("b", "", 1.0, 0.5);
        a.above("a", "", 1.0, 3.0);
        let mut b = Tally::new();
        b.above("a", "", 1.0, 2.0);
        b.below("b", "", 1.0, 0.7);
        a.merge(b);
        assert_eq!(a.checks[0].name, "b");
        assert_eq!(a.checks[0].worst, 0.7);
        assert_eq!(a.checks[1].worst, 2.0);
        assert!(a.pass());
    }

    #[test]
    fn failed_evaluation_fails_the_check() {
        let mut a = Tally::new();
        a.below("x", "", 1.0, 0.0);
        a.fail("x", "", &crate::Error::Domain);
        assert!(!a.pass());
        assert_eq!(a.errors.len(), 1);
    }
}
