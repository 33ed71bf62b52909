use std::path::Path;

use anyhow::{bail, Context, Result};
use delzant_core::polytope::Polytope;
use delzant_core::potential::{PotentialSpec, SymplecticPotential, GUILLEMIN_SCALE};
use serde::de::DeserializeOwned;
use serde::Deserialize;
use serde_json::Value;

/// Failure to read or parse input. Maps to exit code 2.
#[derive(Debug)]
pub struct InputError(pub String);

impl std::fmt::Display for InputError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(&self.0)
    }
}

impl std::error::Error for InputError {}

pub fn read_json(path: &Path) -> Result<Value> {
    let text = std::fs::read_to_string(path)
        .map_err(|e| InputError(format!("cannot read {}: {e}", path.display())))?;
    serde_json::from_str(&text)
        .map_err(|e| InputError(format!("malformed JSON in {}: {e}", path.display())).into())
}

pub fn parse<T: DeserializeOwned>(value: Value, what: &str) -> Result<T> {
    serde_json::from_value(value).map_err(|e| InputError(format!("invalid {what}: {e}")).into())
}

/// A polytope with the potential used on it. The file holds either a bare
/// polytope or `{"polytope": .., "potential": .., "scale": ..}`; without a
/// potential the Guillemin potential is used.
pub struct Problem {
    pub polytope: Polytope,
    pub potential: SymplecticPotential,
}

#[derive(Deserialize)]
#[serde(deny_unknown_fields)]
struct ProblemRepr {
    polytope: Polytope,
    #[serde(default)]
    potential: Option<PotentialSpec>,
    #[serde(default)]
    scale: Option<f64>,
}

pub fn problem_from_value(value: Value) -> Result<Problem> {
    let repr: ProblemRepr = if value.get("polytope").is_some() {
        parse(value, "problem")?
    } else {
        ProblemRepr { polytope: parse(value, "polytope")?, potential: None, scale: None }
    };
    let potential = match (&repr.potential, repr.scale) {
        (Some(_), Some(_)) => bail!(InputError("give either a potential or a scale, not both".into())),
        (Some(spec), None) => spec
            .build(repr.polytope.dim())
            .map_err(|e| InputError(format!("invalid potential: {e}")))?,
        (None, scale) => SymplecticPotential::guillemin(&repr.polytope, scale.unwrap_or(GUILLEMIN_SCALE)),
    };
    Ok(Problem { polytope: repr.polytope, potential })
}

pub fn load_problem(path: &Path) -> Result<Problem> {
    problem_from_value(read_json(path)?).with_context(|| format!("loading {}", path.display()))
}

/// `"1,3"` → `[0, 2]`.
pub fn parse_face(text: &str, facets: usize) -> Result<Vec<usize>> {
    let mut out = Vec::new();
    for part in text.split(',').map(str::trim).filter(|s| !s.is_empty()) {
        let r: usize = part
            .parse()
            .map_err(|_| InputError(format!("bad facet number {part:?}")))?;
        if r == 0 || r > facets {
            bail!(InputError(format!("facet numbers run from 1 to {facets}, got {r}")));
        }
        out.push(r - 1);
    }
    Ok(out)
}
