//! Replicated Monte Carlo runs on a rayon pool.
//!
//! Replication `r` always uses `replication_seed(seed, r)` and results are
//! collected in replication order, so every output is independent of the
//! worker count.

use evobarrier_core::diagnostics::noise_decomposition;
use evobarrier_core::rng::replication_seed;
use evobarrier_core::schedule::MutationSchedule;
use evobarrier_core::simulate::{aggregate_rate, checkpoints, simulate_chain, RateEstimate, MIN_REPLICATIONS};
use evobarrier_core::{EvolutionModel, StateId};
use rayon::prelude::*;

use crate::error::{CliError, Result};

/// Runs `job(r, seed_r)` for `r < reps` on `workers` threads (0 picks the
/// rayon default) and returns the results in replication order.
pub fn replicate<T, F>(workers: usize, reps: usize, seed: u64, job: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize, u64) -> Result<T> + Sync,
{
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(workers)
        .build()
        .map_err(|e| CliError::Flags(format!("cannot start {workers} workers: {e}")))?;
    pool.install(|| (0..reps).into_par_iter().map(|r| job(r, replication_seed(seed, r as u64))).collect())
}

/// Inputs shared by the replicated experiments.
#[derive(Debug, Clone, Copy)]
pub struct Experiment<'a> {
    pub model: &'a EvolutionModel,
    pub schedule: &'a MutationSchedule,
    pub horizon: u64,
    pub initial: StateId,
    pub target: &'a [f64],
}

/// Outcome of a replicated rate experiment.
#[derive(Debug, Clone, PartialEq)]
pub struct RateRun {
    pub estimate: RateEstimate,
    pub seeds: Vec<u64>,
    /// `||v_n - target||_inf` at every checkpoint, per replication.
    pub errors: Vec<Vec<f64>>,
    /// Mean `||U^k_n||_inf` per checkpoint (binned decomposition), if requested.
    pub terms: Option<Vec<[f64; 4]>>,
}

impl RateRun {
    pub fn final_errors(&self) -> Vec<f64> {
        self.errors.iter().map(|e| *e.last().expect("at least one checkpoint")).collect()
    }
}

/// Per-replication error series without the rate fit.
pub fn replicated_errors(
    exp: &Experiment<'_>,
    reps: usize,
    seed: u64,
    workers: usize,
) -> Result<(Vec<u64>, Vec<Vec<f64>>)> {
    let runs = replicate(workers, reps, seed, |_, s| {
        let series = simulate_chain(exp.model, exp.schedule, exp.horizon, s, exp.initial)?;
        Ok((s, series.errors(exp.target)))
    })?;
    Ok(runs.into_iter().unzip())
}

/// Mean error with standard errors, trailing-decade slope and optionally the
/// mean noise-term norms.
pub fn rate_experiment(exp: &Experiment<'_>, reps: usize, seed: u64, workers: usize, terms: bool) -> Result<RateRun> {
    if reps < MIN_REPLICATIONS {
        return Err(CliError::Flags(format!("--reps {reps} is below the minimum of {MIN_REPLICATIONS}")));
    }
    let cps = checkpoints(exp.horizon);
    let (seeds, errors) = replicated_errors(exp, reps, seed, workers)?;
    let estimate = aggregate_rate(&cps, &errors)?;
    let terms = if terms { Some(mean_terms(exp, &cps, &seeds, workers)?) } else { None };
    Ok(RateRun { estimate, seeds, errors, terms })
}

fn mean_terms(exp: &Experiment<'_>, cps: &[u64], seeds: &[u64], workers: usize) -> Result<Vec<[f64; 4]>> {
    let per_rep = replicate(workers, seeds.len(), 0, |r, _| {
        let d = noise_decomposition(exp.model, exp.schedule, exp.horizon, seeds[r], exp.initial, exp.target, false)?;
        Ok(d.rows)
    })?;
    let mut mean = vec![[0.0; 4]; cps.len()];
    for rows in &per_rep {
        for row in rows {
            // the decomposition starts at n = 2; all terms vanish at n = 1
            let i = cps.binary_search(&row.n).expect("decomposition rows sit on checkpoints");
            for k in 0..4 {
                mean[i][k] += row.u[k];
            }
        }
    }
    let m = seeds.len() as f64;
    for row in &mut mean {
        for v in row.iter_mut() {
            *v /= m;
        }
    }
    Ok(mean)
}

#[cfg(test)]
mod tests {
    use super::*;
    use evobarrier_core::builtin;

    #[test]
    fn results_do_not_depend_on_worker_count() {
        let m = builtin::example3(3, None).unwrap();
        let s = MutationSchedule::for_model(&m, 0.4, 1.0).unwrap();
        let target = [1.0 / 3.0; 3];
        let exp = Experiment { model: &m, schedule: &s, horizon: 5000, initial: 0, target: &target };
        let one = rate_experiment(&exp, 50, 11, 1, true).unwrap();
        let four = rate_experiment(&exp, 50, 11, 4, true).unwrap();
        assert_eq!(one, four);
        assert_eq!(one.seeds[3], replication_seed(11, 3));
        assert!(one.terms.as_ref().unwrap()[0].iter().all(|&u| u == 0.0));
    }

    #[test]
    fn too_few_replications() {
        let m = builtin::example2();
        let s = MutationSchedule::for_model(&m, 0.4, 1.0).unwrap();
        let target = [0.0, 0.5, 0.5, 0.0];
        let exp = Experiment { model: &m, schedule: &s, horizon: 1000, initial: 0, target: &target };
        assert!(matches!(rate_experiment(&exp, 10, 1, 1, false), Err(CliError::Flags(_))));
    }
}
