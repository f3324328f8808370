//! Evolution models: a cost graph plus prefactors and perturbations that
//! define the kernel family `P_eps` for `eps` in `(0, eps_max]`.

use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{CostGraph, StateId};
use crate::linalg::Matrix;

/// Highest admissible degree of a perturbation polynomial.
pub const MAX_H_DEGREE: usize = 8;
/// Absolute precision of the `eps_max` bisection.
pub const EPS_MAX_PRECISION: f64 = 1e-10;

/// Polynomial in `eps` with zero constant term: `sum_i coeffs[i] * eps^(i+1)`.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct Polynomial {
    coeffs: Vec<f64>,
}

impl Polynomial {
    pub fn zero() -> Self {
        Polynomial { coeffs: Vec::new() }
    }

    /// Coefficients of `eps, eps^2, ...`. Trailing zeros are dropped.
    pub fn new(mut coeffs: Vec<f64>) -> Result<Self> {
        while coeffs.last() == Some(&0.0) {
            coeffs.pop();
        }
        if coeffs.len() > MAX_H_DEGREE {
            return Err(Error::InvalidModel(alloc::format!(
                "perturbation polynomial has degree {} > {MAX_H_DEGREE}",
                coeffs.len()
            )));
        }
        if coeffs.iter().any(|c| !c.is_finite()) {
            return Err(Error::InvalidModel("non-finite perturbation coefficient".into()));
        }
        let (lo, hi) = Polynomial::interval_on_unit(&coeffs);
        if lo < -0.5 || hi > 0.5 {
            return Err(Error::InvalidModel(alloc::format!(
                "perturbation polynomial range [{lo}, {hi}] on [0, 1] exceeds [-1/2, 1/2]"
            )));
        }
        Ok(Polynomial { coeffs })
    }

    // Interval evaluation over eps in [0, 1]: every eps^i lies in [0, 1].
    fn interval_on_unit(coeffs: &[f64]) -> (f64, f64) {
        coeffs.iter().fold((0.0, 0.0), |(lo, hi), &c| (lo + c.min(0.0), hi + c.max(0.0)))
    }

    pub fn coefficients(&self) -> &[f64] {
        &self.coeffs
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    #[inline]
    pub fn eval(&self, eps: f64) -> f64 {
        self.coeffs.iter().rev().fold(0.0, |acc, &c| (acc + c) * eps)
    }
}

/// How the diagonal/normalization completes a row into a probability vector.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum CompletionMode {
    /// `P(x,x) = 1 - sum_{y != x} P(x,y)`.
    DiagonalComplement,
    /// Each row of the weight table is divided by its sum.
    RowNormalize,
}

/// One declared transition of a model.
#[derive(Debug, Clone, PartialEq)]
pub struct EdgeSpec {
    pub from: StateId,
    pub to: StateId,
    pub cost: f64,
    pub k: f64,
    pub h: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq)]
struct Term {
    to: StateId,
    cost: f64,
    int_cost: Option<i32>,
    k: f64,
    h: Polynomial,
}

impl Term {
    #[inline]
    fn power(&self, eps: f64) -> f64 {
        match self.int_cost {
            Some(0) => 1.0,
            Some(1) => eps,
            Some(c) => libm::pow(eps, c as f64),
            None => libm::pow(eps, self.cost),
        }
    }

    #[inline]
    fn weight(&self, eps: f64) -> f64 {
        let h = if self.h.is_zero() { 0.0 } else { self.h.eval(eps) };
        self.k * self.power(eps) * (1.0 + h)
    }
}

/// Cost graph with prefactors `k`, perturbations `h` and a completion mode.
///
/// Immutable once built; `eps_max` is computed at construction.
#[derive(Debug, Clone, PartialEq)]
pub struct EvolutionModel {
    graph: CostGraph,
    mode: CompletionMode,
    // finite-cost transitions per row; diagonal terms only in row-normalize mode
    rows: Vec<Vec<Term>>,
    eps_max: f64,
}

impl EvolutionModel {
    /// Builds and validates a model from declared edges.
    ///
    /// Off-diagonal pairs not listed have infinite cost. The diagonal has cost 0
    /// unless a self-edge is declared, which is only allowed in row-normalize mode;
    /// there an undeclared self-edge defaults to cost 0, `k = 1`, `h = 0`.
    pub fn from_edges(states: Vec<String>, mode: CompletionMode, edges: &[EdgeSpec]) -> Result<Self> {
        let n = states.len();
        let mut cost = vec![f64::INFINITY; n * n];
        for x in 0..n {
            cost[x * n + x] = 0.0;
        }
        let mut declared = vec![false; n * n];
        let mut terms: Vec<Vec<Term>> = vec![Vec::new(); n];
        for e in edges {
            if e.from >= n || e.to >= n {
                return Err(Error::InvalidModel("edge endpoint out of range".into()));
            }
            let label = || alloc::format!("({}, {})", states[e.from], states[e.to]);
            if declared[e.from * n + e.to] {
                return Err(Error::InvalidModel(alloc::format!("duplicate edge {}", label())));
            }
            declared[e.from * n + e.to] = true;
            if e.from == e.to && mode == CompletionMode::DiagonalComplement {
                return Err(Error::InvalidModel(alloc::format!(
                    "self-edge {} not allowed in diagonal-complement mode",
                    label()
                )));
            }
            if !(e.k > 0.0 && e.k.is_finite()) {
                return Err(Error::InvalidModel(alloc::format!(
                    "prefactor k{} = {} must be strictly positive",
                    label(),
                    e.k
                )));
            }
            if e.cost.is_nan() || e.cost < 0.0 {
                return Err(Error::InvalidModel(alloc::format!("cost{} = {} is negative", label(), e.cost)));
            }
            if e.from == e.to && !e.cost.is_finite() {
                return Err(Error::InvalidModel(alloc::format!("self-edge cost{} must be finite", label())));
            }
            let h = Polynomial::new(e.h.clone())?;
            cost[e.from * n + e.to] = e.cost;
            if e.cost.is_finite() {
                terms[e.from].push(Term { to: e.to, cost: e.cost, int_cost: int_cost(e.cost), k: e.k, h });
            }
        }
        if mode == CompletionMode::RowNormalize {
            for (x, row) in terms.iter_mut().enumerate() {
                if !declared[x * n + x] {
                    row.push(Term { to: x, cost: 0.0, int_cost: Some(0), k: 1.0, h: Polynomial::zero() });
                }
            }
        }
        for row in terms.iter_mut() {
            row.sort_by_key(|t| t.to);
        }

        let graph = CostGraph::new(states, cost)?;
        graph.ensure_admissible()?;
        if mode == CompletionMode::RowNormalize {
            for (x, row) in terms.iter().enumerate() {
                if !row.iter().any(|t| t.cost == 0.0) {
                    return Err(Error::InvalidModel(alloc::format!(
                        "row {} has no zero-cost transition; normalization would shift its costs",
                        graph.name(x)
                    )));
                }
            }
        }

        let mut model = EvolutionModel { graph, mode, rows: terms, eps_max: 0.0 };
        model.eps_max = model.compute_eps_max()?;
        Ok(model)
    }

    pub fn graph(&self) -> &CostGraph {
        &self.graph
    }

    pub fn mode(&self) -> CompletionMode {
        self.mode
    }

    pub fn len(&self) -> usize {
        self.graph.len()
    }

    pub fn is_empty(&self) -> bool {
        self.graph.is_empty()
    }

    /// Largest `eps` in `(0, 1]` for which every kernel up to it is stochastic.
    pub fn eps_max(&self) -> f64 {
        self.eps_max
    }

    /// Declared edges in canonical order (row-major), including the implied
    /// self-edges of row-normalize mode.
    pub fn edges(&self) -> Vec<EdgeSpec> {
        self.rows
            .iter()
            .enumerate()
            .flat_map(|(x, row)| {
                row.iter().map(move |t| EdgeSpec {
                    from: x,
                    to: t.to,
                    cost: t.cost,
                    k: t.k,
                    h: t.h.coefficients().to_vec(),
                })
            })
            .collect()
    }

    /// Prefactor `k(x, y)`; zero where the cost is infinite.
    pub fn k(&self, x: StateId, y: StateId) -> f64 {
        self.rows[x].iter().find(|t| t.to == y).map_or(0.0, |t| t.k)
    }

    /// `lim_{eps -> 0} P_eps(x, y) / eps^c(x, y)` for an off-diagonal pair.
    ///
    /// Equal to `k(x, y)` in diagonal-complement mode; in row-normalize mode the
    /// row normalizer contributes its zero-cost mass.
    pub fn limit_prefactor(&self, x: StateId, y: StateId) -> f64 {
        match self.mode {
            CompletionMode::DiagonalComplement => self.k(x, y),
            CompletionMode::RowNormalize => {
                let z0: f64 = self.rows[x].iter().filter(|t| t.cost == 0.0).map(|t| t.k).sum();
                self.k(x, y) / z0
            }
        }
    }

    /// Writes row `x` of the kernel at `eps` into `row` (no range check).
    #[inline]
    pub fn fill_row(&self, eps: f64, x: StateId, row: &mut [f64]) {
        row.iter_mut().for_each(|v| *v = 0.0);
        let terms = &self.rows[x];
        match self.mode {
            CompletionMode::DiagonalComplement => {
                let mut off = 0.0;
                for t in terms {
                    let w = t.weight(eps);
                    row[t.to] = w;
                    off += w;
                }
                row[x] = 1.0 - off;
            }
            CompletionMode::RowNormalize => {
                let mut total = 0.0;
                for t in terms {
                    let w = t.weight(eps);
                    row[t.to] = w;
                    total += w;
                }
                for t in terms {
                    row[t.to] /= total;
                }
            }
        }
    }

    /// Like [`fill_row`](Self::fill_row) with an extra additive term
    /// `extra * eps^c(x,y)` on every finite-cost off-diagonal entry.
    /// Only meaningful in diagonal-complement mode.
    #[inline]
    pub(crate) fn fill_row_shifted(&self, eps: f64, extra: f64, x: StateId, row: &mut [f64]) {
        row.iter_mut().for_each(|v| *v = 0.0);
        let mut off = 0.0;
        for t in &self.rows[x] {
            let w = t.weight(eps) + extra * t.power(eps);
            row[t.to] = w;
            off += w;
        }
        row[x] = 1.0 - off;
    }

    /// Kernel `P_eps` without range check.
    pub fn kernel_unchecked(&self, eps: f64) -> Matrix {
        let n = self.len();
        let mut p = Matrix::zeros(n, n);
        for x in 0..n {
            self.fill_row(eps, x, p.row_mut(x));
        }
        p
    }

    /// Kernel `P_eps` for `0 < eps <= eps_max`.
    pub fn kernel(&self, eps: f64) -> Result<Matrix> {
        if !(eps > 0.0 && eps <= self.eps_max) {
            return Err(Error::EpsOutOfRange { eps, eps_max: self.eps_max });
        }
        Ok(self.kernel_unchecked(eps))
    }

    /// Limit kernel `P_0`: zero-cost weights, completed per mode.
    pub fn limit_kernel(&self) -> Matrix {
        self.kernel_unchecked(0.0)
    }

    fn row_is_stochastic(&self, eps: f64, x: StateId, buf: &mut [f64]) -> bool {
        self.fill_row(eps, x, buf);
        buf.iter().all(|&p| p >= 0.0)
    }

    fn is_stochastic(&self, eps: f64) -> bool {
        let mut buf = vec![0.0; self.len()];
        (0..self.len()).all(|x| self.row_is_stochastic(eps, x, &mut buf))
    }

    fn compute_eps_max(&self) -> Result<f64> {
        if self.mode == CompletionMode::RowNormalize || self.is_stochastic(1.0) {
            return self.confirm_range(1.0);
        }
        let (mut lo, mut hi) = (0.0, 1.0);
        while hi - lo > EPS_MAX_PRECISION {
            let mid = 0.5 * (lo + hi);
            if self.is_stochastic(mid) {
                lo = mid;
            } else {
                hi = mid;
            }
        }
        if lo <= 0.0 {
            return Err(Error::NoStochasticRange);
        }
        self.confirm_range(lo)
    }

    // Bisection assumes a single crossing; non-monotone perturbations could
    // break that, so the returned range is spot-checked on a geometric grid.
    fn confirm_range(&self, eps_max: f64) -> Result<f64> {
        let mut eps = eps_max;
        for _ in 0..64 {
            if !self.is_stochastic(eps) {
                return Err(Error::InvalidModel(alloc::format!(
                    "kernel is not stochastic at eps = {eps} below the bisected eps_max = {eps_max}"
                )));
            }
            eps *= 0.7;
        }
        Ok(eps_max)
    }
}

fn int_cost(c: f64) -> Option<i32> {
    (libm::floor(c) == c && c.abs() < 1e6).then_some(c as i32)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use alloc::string::ToString;

    fn names(n: usize) -> Vec<String> {
        (0..n).map(|i| i.to_string()).collect()
    }

    fn edge(from: usize, to: usize, cost: f64) -> EdgeSpec {
        EdgeSpec { from, to, cost, k: 1.0, h: Vec::new() }
    }

    // independent oracle: bisect the explicit row polynomial
    fn bisect(f: impl Fn(f64) -> f64) -> f64 {
        let (mut lo, mut hi) = (0.0, 1.0);
        for _ in 0..200 {
            let mid = 0.5 * (lo + hi);
            if f(mid) >= 0.0 {
                lo = mid
            } else {
                hi = mid
            }
        }
        lo
    }

    #[test]
    fn example1_single_site_eps_max() {
        // N = 1: state 0 loses 2 eps^2, the end states lose eps; binding row is 1 - 2 eps^2
        let m = builtin::example1(2.0, 1.0, 1).unwrap();
        let want = bisect(|e| 1.0 - 2.0 * e * e);
        assert!((m.eps_max() - want).abs() < 2e-10, "{} vs {want}", m.eps_max());
        assert!((want - libm::sqrt(0.5)).abs() < 1e-12);
    }

    #[test]
    fn example1_interior_row_eps_max() {
        // N >= 2: interior states lose eps^a + eps^b
        let m = builtin::example1(2.0, 1.0, 2).unwrap();
        let want = bisect(|e| 1.0 - e * e - e);
        assert!((m.eps_max() - want).abs() < 2e-10);
        assert!((want - 0.618_033_988_749_895).abs() < 1e-12);
    }

    #[test]
    fn example2_normalize_has_full_range() {
        assert_eq!(builtin::example2().eps_max(), 1.0);
    }

    #[test]
    fn example1_kernel_entries() {
        let m = builtin::example1(2.0, 1.0, 1).unwrap();
        let p = m.kernel(0.1).unwrap();
        let g = m.graph();
        let (z, one) = (g.index_of("0").unwrap(), g.index_of("1").unwrap());
        assert!((p[(z, one)] - 0.01).abs() < 1e-15);
        assert!((p[(one, z)] - 0.1).abs() < 1e-15);
        assert!((p[(z, z)] - 0.98).abs() < 1e-15);
    }

    #[test]
    fn example2_limit_kernel_is_displayed_pattern() {
        let p0 = builtin::example2().limit_kernel();
        #[rustfmt::skip]
        let want = [1.0, 0.0, 0.0, 0.0,
                    0.0, 0.0, 1.0, 0.0,
                    0.0, 1.0, 0.0, 0.0,
                    0.0, 0.0, 0.0, 1.0];
        assert_eq!(p0.as_slice(), &want);
    }

    #[test]
    fn example2_weights_match_displayed_matrix() {
        let e = 0.3_f64;
        let p = builtin::example2().kernel(e).unwrap();
        let weights = [
            [1.0, e, e * e, e.powi(3)],
            [e * e, e.powi(4), 1.0, e * e],
            [e * e, 1.0, e.powi(4), e * e],
            [e.powi(3), e * e, e, 1.0],
        ];
        for (x, w) in weights.iter().enumerate() {
            let z: f64 = w.iter().sum();
            for y in 0..4 {
                assert!((p[(x, y)] - w[y] / z).abs() < 1e-15);
            }
        }
    }

    #[test]
    fn eps_out_of_range_is_rejected() {
        let m = builtin::example1(2.0, 1.0, 2).unwrap();
        assert!(matches!(m.kernel(0.9), Err(Error::EpsOutOfRange { .. })));
        assert!(matches!(m.kernel(0.0), Err(Error::EpsOutOfRange { .. })));
        let p = m.kernel(m.eps_max()).unwrap();
        assert!((0..m.len()).all(|x| p[(x, x)] >= 0.0));
    }

    #[test]
    fn nonpositive_k_rejected() {
        let mut e = edge(0, 1, 1.0);
        e.k = 0.0;
        let r = EvolutionModel::from_edges(names(2), CompletionMode::DiagonalComplement, &[e, edge(1, 0, 1.0)]);
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn oversized_perturbation_rejected() {
        assert!(Polynomial::new(vec![0.3, 0.3]).is_err());
        assert!(Polynomial::new(vec![0.3, -0.4]).is_ok());
        assert!(Polynomial::new(vec![0.0; 9].into_iter().chain([0.1]).collect()).is_err());
    }

    #[test]
    fn self_edge_rejected_in_diagonal_mode() {
        let r = EvolutionModel::from_edges(
            names(2),
            CompletionMode::DiagonalComplement,
            &[edge(0, 1, 1.0), edge(1, 0, 1.0), edge(0, 0, 0.0)],
        );
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn inadmissible_graph_rejected() {
        let r = EvolutionModel::from_edges(
            names(3),
            CompletionMode::DiagonalComplement,
            &[edge(0, 1, 1.0), edge(1, 0, 1.0)],
        );
        assert!(matches!(r, Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn no_stochastic_range_rejected() {
        // two zero-cost exits with k = 1 each leave a diagonal of -1 at every eps
        let mut a = edge(0, 1, 0.0);
        a.k = 1.0;
        let r = EvolutionModel::from_edges(
            names(3),
            CompletionMode::DiagonalComplement,
            &[a, edge(0, 2, 0.0), edge(1, 0, 1.0), edge(2, 0, 1.0)],
        );
        assert_eq!(r.unwrap_err(), Error::NoStochasticRange);
    }

    #[test]
    fn normalize_row_without_zero_cost_rejected() {
        let r = EvolutionModel::from_edges(
            names(2),
            CompletionMode::RowNormalize,
            &[edge(0, 1, 1.0), edge(1, 0, 1.0), edge(0, 0, 2.0)],
        );
        assert!(matches!(r, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn perturbed_rows_stay_stochastic_on_range() {
        let mut e = edge(0, 1, 1.0);
        e.h = vec![0.5];
        let m =
            EvolutionModel::from_edges(names(2), CompletionMode::DiagonalComplement, &[e, edge(1, 0, 2.0)]).unwrap();
        for eps in [m.eps_max(), m.eps_max() / 2.0, m.eps_max() / 10.0] {
            let p = m.kernel(eps).unwrap();
            for x in 0..2 {
                let s: f64 = p.row(x).iter().sum();
                assert!((s - 1.0).abs() <= 1e-12);
                assert!(p.row(x).iter().all(|&v| v >= 0.0));
            }
        }
    }
}
