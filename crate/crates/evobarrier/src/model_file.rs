//! JSON model files.
//!
//! ```json
//! {
//!   "states": ["a", "b"],
//!   "mode": "diagonal",
//!   "edges": [
//!     {"from": "a", "to": "b", "cost": 1, "k": 1.0, "h": [0.1]},
//!     {"from": "b", "to": "a", "cost": "inf", "k": 1.0}
//!   ]
//! }
//! ```
//!
//! Edges with cost `"inf"` are accepted and dropped; undeclared pairs have
//! infinite cost anyway.

use std::fs;
use std::path::Path;

use evobarrier_core::{CompletionMode, EdgeSpec, EvolutionModel};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelFile {
    pub states: Vec<String>,
    pub mode: Mode,
    pub edges: Vec<EdgeRecord>,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Mode {
    Diagonal,
    Normalize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EdgeRecord {
    pub from: String,
    pub to: String,
    pub cost: Cost,
    pub k: f64,
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub h: Vec<f64>,
}

/// A finite nonnegative cost, or `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CostRepr", into = "CostRepr")]
pub struct Cost(pub f64);

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum CostRepr {
    Number(f64),
    Text(String),
}

impl TryFrom<CostRepr> for Cost {
    type Error = String;

    fn try_from(r: CostRepr) -> Result<Self, String> {
        match r {
            CostRepr::Number(c) => Ok(Cost(c)),
            CostRepr::Text(s) if s == "inf" => Ok(Cost(f64::INFINITY)),
            CostRepr::Text(s) => Err(format!("cost must be a number or \"inf\", got {s:?}")),
        }
    }
}

impl From<Cost> for CostRepr {
    fn from(c: Cost) -> Self {
        if c.0.is_infinite() {
            CostRepr::Text("inf".into())
        } else {
            CostRepr::Number(c.0)
        }
    }
}

impl ModelFile {
    pub fn from_model(model: &EvolutionModel) -> Self {
        let states = model.graph().states().to_vec();
        let edges = model
            .edges()
            .into_iter()
            .map(|e| EdgeRecord {
                from: states[e.from].clone(),
                to: states[e.to].clone(),
                cost: Cost(e.cost),
                k: e.k,
                h: e.h,
            })
            .collect();
        let mode = match model.mode() {
            CompletionMode::DiagonalComplement => Mode::Diagonal,
            CompletionMode::RowNormalize => Mode::Normalize,
        };
        ModelFile { states, mode, edges }
    }

    /// Resolves state names and builds the validated model.
    pub fn to_model(&self) -> Result<EvolutionModel> {
        let index = |name: &str| {
            self.states
                .iter()
                .position(|s| s == name)
                .ok_or_else(|| CliError::ModelFile(format!("edge refers to undeclared state {name:?}")))
        };
        let mut edges = Vec::with_capacity(self.edges.len());
        for e in &self.edges {
            let (from, to) = (index(&e.from)?, index(&e.to)?);
            if e.cost.0.is_infinite() && e.cost.0 > 0.0 {
                continue;
            }
            edges.push(EdgeSpec { from, to, cost: e.cost.0, k: e.k, h: e.h.clone() });
        }
        let mode = match self.mode {
            Mode::Diagonal => CompletionMode::DiagonalComplement,
            Mode::Normalize => CompletionMode::RowNormalize,
        };
        Ok(EvolutionModel::from_edges(self.states.clone(), mode, &edges)?)
    }

    pub fn to_json(&self) -> String {
        let mut s = serde_json::to_string_pretty(self).expect("model file serializes");
        s.push('\n');
        s
    }
}

/// Parses a model from JSON text; `origin` names the source in errors.
pub fn parse_model(text: &str, origin: &Path) -> Result<EvolutionModel> {
    let file: ModelFile =
        serde_json::from_str(text).map_err(|source| CliError::Json { path: origin.to_path_buf(), source })?;
    file.to_model()
}

pub fn load_model(path: &Path) -> Result<EvolutionModel> {
    let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
    parse_model(&text, path)
}

pub fn model_to_json(model: &EvolutionModel) -> String {
    ModelFile::from_model(model).to_json()
}

#[cfg(test)]
mod tests {
    use super::*;
    use evobarrier_core::builtin;

    #[test]
    fn builtins_round_trip() {
        let models = [
            builtin::example1(2.0, 1.0, 3).unwrap(),
            builtin::example1(0.7, 1.3, 1).unwrap(),
            builtin::example2(),
            builtin::example3(3, Some(&[0.0, 1.0, 2.0, 0.5, 0.0, 1.5, 1.0, 0.25, 0.0])).unwrap(),
        ];
        for m in models {
            let back = parse_model(&model_to_json(&m), Path::new("<mem>")).unwrap();
            assert_eq!(back, m);
        }
    }

    #[test]
    fn infinite_costs_and_perturbations() {
        let text = r#"{
            "states": ["a", "b"],
            "mode": "diagonal",
            "edges": [
                {"from": "a", "to": "b", "cost": 1, "k": 0.5, "h": [0.25]},
                {"from": "b", "to": "a", "cost": 2, "k": 1},
                {"from": "b", "to": "b", "cost": "inf", "k": 1}
            ]
        }"#;
        let m = parse_model(text, Path::new("t.json")).unwrap();
        let p = m.kernel(0.5).unwrap();
        assert!((p[(0, 1)] - 0.5 * 0.5 * (1.0 + 0.125)).abs() < 1e-15);
        assert!((p[(1, 0)] - 0.25).abs() < 1e-15);
    }

    #[test]
    fn rejects_bad_documents() {
        let cases = [
            r#"{"states": ["a"], "mode": "diagonal", "edges": [], "extra": 1}"#,
            r#"{"states": ["a"], "mode": "sideways", "edges": []}"#,
            r#"{"states": ["a", "b"], "mode": "diagonal", "edges": [{"from": "a", "to": "b", "cost": "big", "k": 1}]}"#,
            r#"{"states": ["a", "b"], "mode": "diagonal", "edges": [{"from": "a", "to": "b", "cost": 1, "k": 1, "w": 2}]}"#,
        ];
        for text in cases {
            assert!(matches!(parse_model(text, Path::new("x")), Err(CliError::Json { .. })), "{text}");
        }
        let undeclared =
            r#"{"states": ["a", "b"], "mode": "diagonal", "edges": [{"from": "a", "to": "c", "cost": 1, "k": 1}]}"#;
        assert!(matches!(parse_model(undeclared, Path::new("x")), Err(CliError::ModelFile(_))));
        let inadmissible =
            r#"{"states": ["a", "b"], "mode": "diagonal", "edges": [{"from": "a", "to": "b", "cost": 1, "k": 1}]}"#;
        assert!(matches!(parse_model(inadmissible, Path::new("x")), Err(CliError::Core(_))));
    }

    #[test]
    fn infinity_is_written_as_text() {
        let json = serde_json::to_string(&Cost(f64::INFINITY)).unwrap();
        assert_eq!(json, "\"inf\"");
        assert_eq!(serde_json::to_string(&Cost(2.0)).unwrap(), "2.0");
    }
}
