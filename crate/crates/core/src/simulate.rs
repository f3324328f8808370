//! Inhomogeneous chain simulation, occupation measures and Monte Carlo rate
//! estimates.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::graph::StateId;
use crate::model::EvolutionModel;
use crate::rng::{stream, uniform};
use crate::schedule::MutationSchedule;

/// Checkpoints per decade of the geometric grid.
pub const CHECKPOINTS_PER_DECADE: u32 = 8;

/// Minimum replications for a rate estimate.
pub const MIN_REPLICATIONS: usize = 50;

/// Minimum checkpoints in the fitting window.
pub const MIN_FIT_POINTS: usize = 5;

/// `ceil(10^{j/8})` for `j = 0, 1, ...` up to `horizon`, deduplicated, with
/// `horizon` appended if it is not on the grid.
pub fn checkpoints(horizon: u64) -> Vec<u64> {
    let mut out: Vec<u64> = Vec::new();
    for j in 0.. {
        let x = libm::pow(10.0, j as f64 / CHECKPOINTS_PER_DECADE as f64);
        // exact powers of ten come out a hair above the integer
        let r = libm::round(x);
        let n = if (x - r).abs() <= 1e-9 * r { r as u64 } else { libm::ceil(x) as u64 };
        if n > horizon {
            break;
        }
        if out.last() != Some(&n) {
            out.push(n);
        }
    }
    if out.last() != Some(&horizon) {
        out.push(horizon);
    }
    out
}

/// Occupation counts of one trajectory at the checkpoints.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct OccupationSeries {
    pub seed: u64,
    pub initial: StateId,
    pub checkpoints: Vec<u64>,
    /// Visit counts of `X_1, ..., X_n` at each checkpoint `n`.
    pub counts: Vec<Vec<u64>>,
}

impl OccupationSeries {
    /// Occupation measure `v_n` at checkpoint index `i`.
    pub fn occupation(&self, i: usize) -> Vec<f64> {
        let n = self.checkpoints[i] as f64;
        self.counts[i].iter().map(|&c| c as f64 / n).collect()
    }

    /// `||v_n - target||_inf` at every checkpoint.
    pub fn errors(&self, target: &[f64]) -> Vec<f64> {
        (0..self.checkpoints.len())
            .map(|i| {
                let n = self.checkpoints[i] as f64;
                self.counts[i].iter().zip(target).fold(0.0f64, |m, (&c, t)| m.max((c as f64 / n - t).abs()))
            })
            .collect()
    }
}

/// Samples the next state from `row` by inverse CDF in index order.
#[inline]
pub fn sample_row(row: &[f64], u: f64) -> StateId {
    let mut cum = 0.0;
    let mut last = 0;
    for (y, &p) in row.iter().enumerate() {
        if p > 0.0 {
            cum += p;
            last = y;
            if u < cum {
                return y;
            }
        }
    }
    // round-off left u just above the total mass
    last
}

/// Runs the chain `X_1 = initial`, `X_{i+1} ~ P_{eps_i}(X_i, .)` up to
/// `horizon`, calling `visit(i, X_i)` for every `i`.
pub fn run_chain(
    model: &EvolutionModel,
    schedule: &MutationSchedule,
    horizon: u64,
    seed: u64,
    initial: StateId,
    mut visit: impl FnMut(u64, StateId),
) {
    let mut rng = stream(seed);
    let mut row = vec![0.0; model.len()];
    let mut x = initial;
    visit(1, x);
    for i in 1..horizon {
        schedule.fill_row(model, i, x, &mut row);
        x = sample_row(&row, uniform(&mut rng));
        visit(i + 1, x);
    }
}

fn check_run(model: &EvolutionModel, schedule: &MutationSchedule, horizon: u64, initial: StateId) -> Result<()> {
    if horizon < 1 {
        return Err(Error::Horizon("horizon must be at least 1".into()));
    }
    if initial >= model.len() {
        return Err(Error::InvalidParameter("initial state out of range".into()));
    }
    schedule.validate(model, horizon)
}

/// Simulates one trajectory and records occupation counts at the checkpoints.
pub fn simulate_chain(
    model: &EvolutionModel,
    schedule: &MutationSchedule,
    horizon: u64,
    seed: u64,
    initial: StateId,
) -> Result<OccupationSeries> {
    check_run(model, schedule, horizon, initial)?;
    Ok(simulate_unchecked(model, schedule, horizon, seed, initial))
}

fn simulate_unchecked(
    model: &EvolutionModel,
    schedule: &MutationSchedule,
    horizon: u64,
    seed: u64,
    initial: StateId,
) -> OccupationSeries {
    let cps = checkpoints(horizon);
    let mut counts = vec![0u64; model.len()];
    let mut out = Vec::with_capacity(cps.len());
    let mut next = 0;
    run_chain(model, schedule, horizon, seed, initial, |i, x| {
        counts[x] += 1;
        if i == cps[next] {
            out.push(counts.clone());
            next += 1;
        }
    });
    OccupationSeries { seed, initial, checkpoints: cps, counts: out }
}

/// Errors `||v_n - pi*||_inf` of one replication at the checkpoints.
pub fn replication_errors(
    model: &EvolutionModel,
    schedule: &MutationSchedule,
    horizon: u64,
    seed: u64,
    initial: StateId,
    pi_star: &[f64],
) -> Result<Vec<f64>> {
    Ok(simulate_chain(model, schedule, horizon, seed, initial)?.errors(pi_star))
}

/// Monte Carlo summary of `||v_n - pi*||_inf` across replications.
#[derive(Debug, Clone, PartialEq)]
pub struct RateEstimate {
    pub checkpoints: Vec<u64>,
    pub mean: Vec<f64>,
    /// Standard error of the mean (sample deviation over `sqrt(M)`).
    pub stderr: Vec<f64>,
    pub replications: usize,
    /// Log-log fit over the trailing decade.
    pub fit: LineFit,
    /// Half-width of the 95% normal confidence interval of the slope.
    pub slope_half_width: f64,
}

/// Aggregates per-replication error series (in replication order) and fits
/// the slope of `ln mean` against `ln n` on checkpoints `n >= horizon / 10`.
pub fn aggregate_rate(checkpoints: &[u64], errors: &[Vec<f64>]) -> Result<RateEstimate> {
    let m = errors.len();
    if m < 2 {
        return Err(Error::InvalidParameter("need at least two replications".into()));
    }
    let k = checkpoints.len();
    let mut mean = vec![0.0; k];
    let mut stderr = vec![0.0; k];
    for i in 0..k {
        let mu = errors.iter().map(|e| e[i]).sum::<f64>() / m as f64;
        let var = errors.iter().map(|e| (e[i] - mu) * (e[i] - mu)).sum::<f64>() / (m - 1) as f64;
        mean[i] = mu;
        stderr[i] = libm::sqrt(var / m as f64);
    }
    let fit = fit_trailing_decade(checkpoints, &mean)?;
    Ok(RateEstimate {
        checkpoints: checkpoints.to_vec(),
        mean,
        stderr,
        replications: m,
        fit,
        slope_half_width: 1.96 * fit.slope_se,
    })
}

/// Log-log fit of `values` on checkpoints within the last decade.
pub fn fit_trailing_decade(checkpoints: &[u64], values: &[f64]) -> Result<LineFit> {
    let last = *checkpoints.last().ok_or(Error::Horizon("no checkpoints".into()))?;
    let (x, y): (Vec<f64>, Vec<f64>) = checkpoints
        .iter()
        .zip(values)
        .filter(|(&n, _)| n as f64 * 10.0 >= last as f64)
        .map(|(&n, &v)| (n as f64, v))
        .unzip();
    if x.len() < MIN_FIT_POINTS {
        return Err(Error::Horizon(alloc::format!(
            "horizon {last} gives {} checkpoints in the trailing decade, need {MIN_FIT_POINTS}",
            x.len()
        )));
    }
    loglog_fit(&x, &y, MIN_FIT_POINTS)
}

/// Sequential rate estimate; replication `r` uses `replication_seed(seed, r)`.
pub fn estimate_rate(
    model: &EvolutionModel,
    schedule: &MutationSchedule,
    horizon: u64,
    replications: usize,
    seed: u64,
    pi_star: &[f64],
) -> Result<RateEstimate> {
    if replications < MIN_REPLICATIONS {
        return Err(Error::InvalidParameter(alloc::format!(
            "{replications} replications requested, need at least {MIN_REPLICATIONS}"
        )));
    }
    check_run(model, schedule, horizon, 0)?;
    let cps = checkpoints(horizon);
    fit_trailing_decade(&cps, &vec![1.0; cps.len()])?;
    let errors: Vec<Vec<f64>> = (0..replications as u64)
        .map(|r| simulate_unchecked(model, schedule, horizon, crate::rng::replication_seed(seed, r), 0).errors(pi_star))
        .collect();
    aggregate_rate(&cps, &errors)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use crate::model::{CompletionMode, EvolutionModel};
    use alloc::string::String;

    #[test]
    fn checkpoint_grid() {
        assert_eq!(checkpoints(10), vec![1, 2, 3, 4, 5, 6, 8, 10]);
        let c = checkpoints(1_000_000);
        assert_eq!(*c.last().unwrap(), 1_000_000);
        assert!(c.contains(&100_000) && c.contains(&1000));
        assert!(c.windows(2).all(|w| w[0] < w[1]));
        // 6 decades at 8 per decade, minus duplicates in the first decade
        assert_eq!(c.iter().filter(|&&n| n >= 100_000).count(), 9);
        assert_eq!(checkpoints(7), vec![1, 2, 3, 4, 5, 6, 7]);
    }

    #[test]
    fn single_state_is_always_occupied() {
        let m =
            EvolutionModel::from_edges(vec![String::from("only")], CompletionMode::DiagonalComplement, &[]).unwrap();
        let s = MutationSchedule::new(0.5, 1.0).unwrap();
        let series = simulate_chain(&m, &s, 1000, 3, 0).unwrap();
        for i in 0..series.checkpoints.len() {
            assert_eq!(series.occupation(i), vec![1.0]);
        }
    }

    #[test]
    fn simulation_is_deterministic_and_counts_add_up() {
        let m = builtin::example2();
        let s = MutationSchedule::for_model(&m, 0.25, 1.0).unwrap();
        let a = simulate_chain(&m, &s, 20_000, 99, 0).unwrap();
        let b = simulate_chain(&m, &s, 20_000, 99, 0).unwrap();
        assert_eq!(a, b);
        let c = simulate_chain(&m, &s, 20_000, 100, 0).unwrap();
        assert_ne!(a, c);
        for (n, counts) in a.checkpoints.iter().zip(&a.counts) {
            assert_eq!(counts.iter().sum::<u64>(), *n);
        }
    }

    #[test]
    fn inverse_cdf_sampling() {
        let row = [0.0, 0.25, 0.0, 0.75];
        assert_eq!(sample_row(&row, 0.0), 1);
        assert_eq!(sample_row(&row, 0.2499), 1);
        assert_eq!(sample_row(&row, 0.25), 3);
        assert_eq!(sample_row(&row, 0.999_999_999), 3);
        assert_eq!(sample_row(&[0.3, 0.3, 0.3999999999], 0.99999999999), 2);
    }

    #[test]
    fn fitter_recovers_injected_power_law() {
        let cps = checkpoints(1_000_000);
        let reps: Vec<Vec<f64>> =
            (0..3).map(|_| cps.iter().map(|&n| 0.7 * libm::pow(n as f64, -0.5)).collect()).collect();
        let est = aggregate_rate(&cps, &reps).unwrap();
        assert!((est.fit.slope + 0.5).abs() < 1e-6);
        assert!(est.stderr.iter().all(|&s| s < 1e-15));
    }

    #[test]
    fn short_horizon_is_rejected() {
        let m = builtin::example3(2, None).unwrap();
        let s = MutationSchedule::for_model(&m, 0.3, 1.0).unwrap();
        assert!(matches!(estimate_rate(&m, &s, 3, 50, 1, &[0.5, 0.5]), Err(Error::Horizon(_))));
    }
}
