//! Serializable check results.

use serde::{Serialize, Serializer};
use serde_json::{Map, Value};

/// Rounds to 12 significant digits so reports are stable across platforms.
pub fn round12(x: f64) -> f64 {
    if !x.is_finite() || x == 0.0 {
        return x;
    }
    format!("{x:.11e}").parse().unwrap_or(x)
}

fn ser_round<S: Serializer>(x: &f64, s: S) -> Result<S::Ok, S::Error> {
    round12(*x).serialize(s)
}

/// Rounds every float inside a JSON value.
pub fn round_value(v: &mut Value) {
    match v {
        Value::Number(n) => {
            if n.is_f64() {
                if let Some(x) = n.as_f64().map(round12).and_then(serde_json::Number::from_f64) {
                    *n = x;
                }
            }
        }
        Value::Array(items) => items.iter_mut().for_each(round_value),
        Value::Object(map) => map.values_mut().for_each(round_value),
        _ => {}
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct CheckReport {
    pub check: String,
    pub inputs: Value,
    #[serde(serialize_with = "ser_round")]
    pub residual: f64,
    pub tolerance: f64,
    pub pass: bool,
    #[serde(skip_serializing_if = "Map::is_empty")]
    pub details: Map<String, Value>,
}

impl CheckReport {
    pub fn new(check: impl Into<String>, inputs: Value, residual: f64, tolerance: f64) -> Self {
        let mut inputs = inputs;
        round_value(&mut inputs);
        Self {
            check: check.into(),
            inputs,
            residual,
            tolerance,
            pass: residual.abs() <= tolerance,
            details: Map::new(),
        }
    }

    pub fn detail(mut self, key: &str, value: impl Serialize) -> Self {
        let mut v = serde_json::to_value(value).unwrap_or(Value::Null);
        round_value(&mut v);
        self.details.insert(key.to_string(), v);
        self
    }

    pub fn with_pass(mut self, pass: bool) -> Self {
        self.pass = pass;
        self
    }
}
