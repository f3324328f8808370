//! Vanishing mutation schedules `eps_n = c n^{-A}`.

use alloc::format;
use alloc::vec;

use crate::error::{Error, Result};
use crate::linalg::Matrix;
use crate::model::{CompletionMode, EvolutionModel};

/// `eps_n = scale * n^{-a}`, optionally with the alternating prefactor
/// perturbation `kappa (-1)^n / n` added to every off-diagonal entry.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct MutationSchedule {
    a: f64,
    scale: f64,
    kappa: Option<f64>,
}

impl MutationSchedule {
    /// Requires `a > 0` and `0 < scale <= 1`.
    pub fn new(a: f64, scale: f64) -> Result<Self> {
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::InvalidParameter(format!("schedule exponent A = {a} must be positive")));
        }
        if !(scale > 0.0 && scale <= 1.0) {
            return Err(Error::InvalidParameter(format!("schedule scale {scale} must lie in (0, 1]")));
        }
        Ok(MutationSchedule { a, scale, kappa: None })
    }

    /// Schedule for `model` with the scale clipped so that `eps_1 <= eps_max`.
    pub fn for_model(model: &EvolutionModel, a: f64, scale: f64) -> Result<Self> {
        MutationSchedule::new(a, scale.min(model.eps_max()))
    }

    /// Adds the alternating perturbation with amplitude `kappa`; diagonal
    /// completion only.
    pub fn with_perturbation(mut self, model: &EvolutionModel, kappa: f64) -> Result<Self> {
        if model.mode() != CompletionMode::DiagonalComplement {
            return Err(Error::InvalidParameter("schedule perturbation requires diagonal completion".into()));
        }
        if !kappa.is_finite() {
            return Err(Error::InvalidParameter(format!("perturbation amplitude {kappa} is not finite")));
        }
        self.kappa = Some(kappa);
        Ok(self)
    }

    pub fn exponent(&self) -> f64 {
        self.a
    }

    pub fn scale(&self) -> f64 {
        self.scale
    }

    pub fn perturbation(&self) -> Option<f64> {
        self.kappa
    }

    /// `eps_n` for `n >= 1`.
    #[inline]
    pub fn eps(&self, n: u64) -> f64 {
        self.scale * libm::pow(n as f64, -self.a)
    }

    /// Additive prefactor shift at step `n`.
    #[inline]
    pub fn shift(&self, n: u64) -> f64 {
        match self.kappa {
            Some(k) => {
                let sign = if n.is_multiple_of(2) { 1.0 } else { -1.0 };
                sign * k / n as f64
            }
            None => 0.0,
        }
    }

    /// Writes row `x` of `P_n` into `row`.
    #[inline]
    pub fn fill_row(&self, model: &EvolutionModel, n: u64, x: usize, row: &mut [f64]) {
        let eps = self.eps(n);
        match self.kappa {
            None => model.fill_row(eps, x, row),
            Some(_) => model.fill_row_shifted(eps, self.shift(n), x, row),
        }
    }

    /// The full kernel `P_n`.
    pub fn kernel(&self, model: &EvolutionModel, n: u64) -> Matrix {
        let len = model.len();
        let mut p = Matrix::zeros(len, len);
        for x in 0..len {
            self.fill_row(model, n, x, p.row_mut(x));
        }
        p
    }

    /// Checks that `P_n` is stochastic for every `n <= horizon`, reporting
    /// the first offending `n`.
    pub fn validate(&self, model: &EvolutionModel, horizon: u64) -> Result<()> {
        if self.kappa.is_none() {
            // nonincreasing, so eps_1 is the binding value
            let eps = self.eps(1);
            return if eps <= model.eps_max() { Ok(()) } else { Err(Error::ScheduleOutOfRange { n: 1, eps }) };
        }
        let mut row = vec![0.0; model.len()];
        for n in 1..=horizon {
            for x in 0..model.len() {
                self.fill_row(model, n, x, &mut row);
                if row.iter().any(|&p| p < 0.0) {
                    return Err(Error::ScheduleOutOfRange { n, eps: self.eps(n) });
                }
            }
        }
        Ok(())
    }

    /// `max_{n < horizon} |eps_{n+1} - eps_n| n^{1+A}`.
    pub fn increment_constant(&self, horizon: u64) -> f64 {
        (1..horizon)
            .map(|n| (self.eps(n + 1) - self.eps(n)).abs() * libm::pow(n as f64, 1.0 + self.a))
            .fold(0.0, f64::max)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn power_law_and_clipping() {
        let m = builtin::example3(4, None).unwrap();
        let s = MutationSchedule::for_model(&m, 0.3, 1.0).unwrap();
        assert!((s.scale() - m.eps_max()).abs() < 1e-15);
        assert!((s.eps(1000) - s.scale() * libm::pow(1000.0, -0.3)).abs() < 1e-18);
        assert!(s.validate(&m, 10).is_ok());
        assert!(MutationSchedule::new(0.0, 1.0).is_err());
        assert!(MutationSchedule::new(0.5, 1.5).is_err());
    }

    #[test]
    fn nonincreasing_with_bounded_increments() {
        let s = MutationSchedule::new(0.6, 1.0).unwrap();
        assert!((1..10_000).all(|n| s.eps(n + 1) < s.eps(n)));
        // |eps_{n+1} - eps_n| <= A n^{-(1+A)} by the mean value theorem
        assert!(s.increment_constant(1_000_000) <= 0.6 + 1e-12);
    }

    #[test]
    fn alternating_perturbation() {
        let m = builtin::example3(3, None).unwrap();
        let s = MutationSchedule::for_model(&m, 0.5, 1.0).unwrap().with_perturbation(&m, 0.4).unwrap();
        let p1 = s.kernel(&m, 1);
        let p2 = s.kernel(&m, 2);
        assert!((p1[(0, 1)] - s.eps(1) * (1.0 - 0.4)).abs() < 1e-15);
        assert!((p2[(0, 1)] - s.eps(2) * (1.0 + 0.2)).abs() < 1e-15);
        for p in [&p1, &p2] {
            for x in 0..3 {
                assert!((p.row(x).iter().sum::<f64>() - 1.0).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn perturbation_leaving_the_stochastic_range_names_the_step() {
        let m = builtin::example3(3, None).unwrap();
        // eps_1 = 1/2 is fine with the negative shift; n = 2 gives 2^{-0.05} (1 + 0.45) / 2 > 1/2
        let s = MutationSchedule::for_model(&m, 0.05, 1.0).unwrap().with_perturbation(&m, 0.9).unwrap();
        match s.validate(&m, 100) {
            Err(Error::ScheduleOutOfRange { n, .. }) => assert_eq!(n, 2),
            other => panic!("unexpected {other:?}"),
        }
    }
}
