use std::collections::BTreeMap;

use anyhow::{bail, Result};

use crate::input::InputError;

/// Named tolerances, overridable with `--tol name=value`.
#[derive(Debug, Clone)]
pub struct Tolerances(BTreeMap<&'static str, f64>);

const DEFAULTS: [(&str, f64); 7] = [
    ("continuity", 1e-5),
    ("pythagoras", 1e-8),
    ("pythagoras_interior", 1e-9),
    ("identity", 1e-9),
    ("kl", 1e-12),
    ("additivity", 1e-10),
    ("product", 1e-9),
];

impl Default for Tolerances {
    fn default() -> Self {
        Tolerances(DEFAULTS.into_iter().collect())
    }
}

impl Tolerances {
    pub fn with_overrides(overrides: &[String]) -> Result<Self> {
        let mut t = Self::default();
        for item in overrides {
            let Some((name, value)) = item.split_once('=') else {
                bail!(InputError(format!("--tol expects name=value, got {item:?}")));
            };
            let value: f64 = value
                .trim()
                .parse()
                .map_err(|_| InputError(format!("bad tolerance value in {item:?}")))?;
            if !(value >= 0.0) || !value.is_finite() {
                bail!(InputError(format!("tolerance must be a nonnegative number, got {value}")));
            }
            let Some(key) = DEFAULTS.iter().map(|(k, _)| *k).find(|k| *k == name.trim()) else {
                let known: Vec<&str> = DEFAULTS.iter().map(|(k, _)| *k).collect();
                bail!(InputError(format!("unknown tolerance {name:?}; known: {}", known.join(", "))));
            };
            t.0.insert(key, value);
        }
        Ok(t)
    }

    pub fn get(&self, name: &str) -> f64 {
        self.0[name]
    }
}
