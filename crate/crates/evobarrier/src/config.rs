//! Experiment configuration: command-line flags merged over an optional JSON
//! file whose keys are the long flag names.

use std::fs;
use std::path::{Path, PathBuf};

use evobarrier_core::builtin::BuiltinExample;
use evobarrier_core::schedule::MutationSchedule;
use evobarrier_core::trees::DEFAULT_TREE_CAP;
use evobarrier_core::{EvolutionModel, StateId};
use serde::{Deserialize, Serialize};

use crate::error::{CliError, Result};
use crate::model_file::load_model;

pub const DEFAULT_SEED: u64 = 1;
pub const DEFAULT_HORIZON: u64 = 100_000;
pub const DEFAULT_REPS: usize = 200;

/// Every setting any subcommand reads. `None` means "not given".
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ExperimentConfig {
    pub model: Option<PathBuf>,
    pub example: Option<String>,
    pub a: Option<f64>,
    pub b: Option<f64>,
    #[serde(rename = "N")]
    pub n: Option<usize>,
    pub k: Option<Vec<f64>>,
    pub kappa: Option<f64>,
    pub out: Option<PathBuf>,
    pub seed: Option<u64>,
    pub cap: Option<u64>,
    pub workers: Option<usize>,
    #[serde(rename = "A")]
    pub schedule_exponent: Option<f64>,
    pub scale: Option<f64>,
    pub horizon: Option<u64>,
    pub reps: Option<usize>,
    pub initial: Option<String>,
    pub eps: Option<f64>,
    pub grid: Option<bool>,
    pub exact: Option<bool>,
    pub terms: Option<bool>,
}

macro_rules! merge_fields {
    ($cli:ident, $file:ident; $($f:ident),*) => {
        ExperimentConfig { $($f: $cli.$f.or($file.$f)),* }
    };
}

impl ExperimentConfig {
    pub fn load(path: &Path) -> Result<Self> {
        let text = fs::read_to_string(path).map_err(|e| CliError::read(path, e))?;
        serde_json::from_str(&text).map_err(|source| CliError::Json { path: path.to_path_buf(), source })
    }

    /// Values in `self` win; gaps are filled from `file`.
    pub fn merge(self, file: ExperimentConfig) -> Self {
        let cli = self;
        merge_fields!(cli, file; model, example, a, b, n, k, kappa, out, seed, cap, workers,
            schedule_exponent, scale, horizon, reps, initial, eps, grid, exact, terms)
    }

    pub fn seed(&self) -> u64 {
        self.seed.unwrap_or(DEFAULT_SEED)
    }

    pub fn cap(&self) -> u64 {
        self.cap.unwrap_or(DEFAULT_TREE_CAP)
    }

    pub fn workers(&self) -> usize {
        self.workers.unwrap_or(0)
    }

    pub fn horizon(&self) -> u64 {
        self.horizon.unwrap_or(DEFAULT_HORIZON)
    }

    pub fn reps(&self) -> usize {
        self.reps.unwrap_or(DEFAULT_REPS)
    }

    /// The builtin selected by `--example` and its parameter flags.
    pub fn builtin(&self) -> Result<Option<BuiltinExample>> {
        let Some(name) = self.example.as_deref() else { return Ok(None) };
        let example = match name {
            "example1" => {
                BuiltinExample::Example1 { a: self.a.unwrap_or(2.0), b: self.b.unwrap_or(1.0), n: self.n.unwrap_or(2) }
            }
            "example2" => BuiltinExample::Example2,
            "example3" => BuiltinExample::Example3 { n: self.n.unwrap_or(4), k: self.k.clone() },
            "cloez" => BuiltinExample::Cloez { n: self.n.unwrap_or(4), kappa: self.kappa.unwrap_or(0.5) },
            other => {
                return Err(CliError::Flags(format!(
                    "unknown example {other:?} (expected example1, example2, example3 or cloez)"
                )))
            }
        };
        Ok(Some(example))
    }

    /// The model from `--model` or `--example`, and the builtin if any.
    pub fn resolve_model(&self) -> Result<(EvolutionModel, Option<BuiltinExample>)> {
        match (&self.model, self.builtin()?) {
            (Some(_), Some(_)) => Err(CliError::Flags("--model and --example are mutually exclusive".into())),
            (Some(path), None) => Ok((load_model(path)?, None)),
            (None, Some(example)) => Ok((example.model()?, Some(example))),
            (None, None) => Err(CliError::Flags("one of --model or --example is required".into())),
        }
    }

    /// Schedule from `--A` and `--scale` (clipped to `eps_max`), with the
    /// builtin perturbation when the example carries one.
    pub fn schedule(&self, model: &EvolutionModel, example: Option<&BuiltinExample>) -> Result<MutationSchedule> {
        let a = self.schedule_exponent.ok_or_else(|| CliError::Flags("--A is required".into()))?;
        let schedule = MutationSchedule::for_model(model, a, self.scale.unwrap_or(1.0))?;
        Ok(match example.and_then(BuiltinExample::perturbation) {
            Some(kappa) => schedule.with_perturbation(model, kappa)?,
            None => schedule,
        })
    }

    /// `--initial` by state name; defaults to the first declared state.
    pub fn initial_state(&self, model: &EvolutionModel) -> Result<StateId> {
        match &self.initial {
            None => Ok(0),
            Some(name) => model
                .graph()
                .index_of(name)
                .ok_or_else(|| CliError::Flags(format!("--initial {name:?} is not a state of the model"))),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn command_line_overrides_file() {
        let file: ExperimentConfig =
            serde_json::from_str(r#"{"example": "example1", "a": 3, "N": 4, "A": 0.3, "seed": 9}"#).unwrap();
        let cli = ExperimentConfig { a: Some(1.5), seed: Some(2), ..Default::default() };
        let merged = cli.merge(file);
        assert_eq!(merged.a, Some(1.5));
        assert_eq!(merged.seed(), 2);
        assert_eq!(merged.n, Some(4));
        assert_eq!(merged.schedule_exponent, Some(0.3));
        assert_eq!(merged.builtin().unwrap(), Some(BuiltinExample::Example1 { a: 1.5, b: 1.0, n: 4 }));
    }

    #[test]
    fn unknown_keys_are_rejected() {
        assert!(serde_json::from_str::<ExperimentConfig>(r#"{"exampel": "example1"}"#).is_err());
    }

    #[test]
    fn model_source_must_be_unique() {
        let both =
            ExperimentConfig { model: Some("m.json".into()), example: Some("example2".into()), ..Default::default() };
        assert!(matches!(both.resolve_model(), Err(CliError::Flags(_))));
        assert!(matches!(ExperimentConfig::default().resolve_model(), Err(CliError::Flags(_))));
        let bad = ExperimentConfig { example: Some("example9".into()), ..Default::default() };
        assert!(matches!(bad.resolve_model(), Err(CliError::Flags(_))));
    }

    #[test]
    fn cloez_schedule_is_perturbed() {
        let cfg = ExperimentConfig {
            example: Some("cloez".into()),
            kappa: Some(0.25),
            schedule_exponent: Some(0.5),
            ..Default::default()
        };
        let (m, ex) = cfg.resolve_model().unwrap();
        let s = cfg.schedule(&m, ex.as_ref()).unwrap();
        assert_eq!(s.perturbation(), Some(0.25));
    }
}
