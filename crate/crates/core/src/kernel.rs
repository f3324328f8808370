//! Fixed-rate kernel analysis: stationary distributions, the limit
//! distribution, additive symmetrization, spectral gap, path-based Poincaré
//! bound and the Poisson pseudo-inverse.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::fit::{loglog_fit, LineFit};
use crate::graph::{CostGraph, StateId};
use crate::linalg::{symmetric_eigenvalues, vec_dist_inf, Lu, Matrix};
use crate::model::EvolutionModel;
use crate::potential::{quasi_potential, ElevationTable};
use crate::trees::{cost_tolerance, for_each_tree};

/// Solves `pi P = pi`, `sum pi = 1` by LU on `(I - P)^T` with the last
/// equation replaced by the normalization.
pub fn stationary_solve(p: &Matrix) -> Result<Vec<f64>> {
    let n = p.rows();
    let mut a = Matrix::zeros(n, n);
    for i in 0..n {
        for j in 0..n {
            // row i of (I - P)^T
            a[(i, j)] = if i == j { 1.0 } else { 0.0 } - p[(j, i)];
        }
    }
    for j in 0..n {
        a[(n - 1, j)] = 1.0;
    }
    let mut b = vec![0.0; n];
    b[n - 1] = 1.0;
    let mut pi = Lu::factor(&a)?.solve(&b);
    // tiny negative round-off for nearly absorbing states
    for v in pi.iter_mut() {
        if *v < 0.0 && *v > -1e-15 {
            *v = 0.0;
        }
    }
    Ok(pi)
}

/// Stationary distribution by the Markov chain tree formula: `pi(x)` is
/// proportional to the sum over `x`-trees of the product of `P` along edges.
pub fn stationary_tree_formula_matrix(graph: &CostGraph, p: &Matrix, cap: u64) -> Result<Vec<f64>> {
    let n = graph.len();
    let mut weight = vec![0.0; n];
    let mut budget = cap;
    for (root, w) in weight.iter_mut().enumerate() {
        for_each_tree(graph, root, cap, &mut budget, |succ, _| {
            *w += succ.iter().enumerate().filter_map(|(x, s)| s.map(|y| p[(x, y)])).product::<f64>();
        })?;
    }
    let total: f64 = weight.iter().sum();
    Ok(weight.into_iter().map(|w| w / total).collect())
}

pub fn stationary_tree_formula(model: &EvolutionModel, eps: f64, cap: u64) -> Result<Vec<f64>> {
    let p = model.kernel(eps)?;
    stationary_tree_formula_matrix(model.graph(), &p, cap)
}

/// Limit of the stationary distribution as `eps -> 0`: optimal trees
/// weighted by the products of their limiting prefactors, supported on `S0`.
pub fn limit_distribution(model: &EvolutionModel, cap: u64) -> Result<Vec<f64>> {
    let graph = model.graph();
    let n = graph.len();
    let c0 = quasi_potential(graph).c0;
    let tol = cost_tolerance(graph);
    let mut weight = vec![0.0; n];
    let mut budget = cap;
    for (root, w) in weight.iter_mut().enumerate() {
        for_each_tree(graph, root, cap, &mut budget, |succ, cost| {
            if cost - c0 <= tol {
                *w += succ
                    .iter()
                    .enumerate()
                    .filter_map(|(x, s)| s.map(|y| model.limit_prefactor(x, y)))
                    .product::<f64>();
            }
        })?;
    }
    let total: f64 = weight.iter().sum();
    Ok(weight.into_iter().map(|w| w / total).collect())
}

/// Adjoint in `L2(pi)`: `P*(x, y) = pi(y) P(y, x) / pi(x)`.
pub fn adjoint(p: &Matrix, pi: &[f64]) -> Matrix {
    let n = p.rows();
    let mut a = Matrix::zeros(n, n);
    for x in 0..n {
        for y in 0..n {
            a[(x, y)] = pi[y] * p[(y, x)] / pi[x];
        }
    }
    a
}

/// Dirichlet form `E(f, f) = 1/2 sum_{x != y} pi(x) P(x, y) (f(y) - f(x))^2`.
pub fn dirichlet_form(p: &Matrix, pi: &[f64], f: &[f64]) -> f64 {
    let n = p.rows();
    let mut s = 0.0;
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let d = f[y] - f[x];
                s += pi[x] * p[(x, y)] * d * d;
            }
        }
    }
    0.5 * s
}

/// `Var_pi(f)`.
pub fn variance(pi: &[f64], f: &[f64]) -> f64 {
    let mean: f64 = pi.iter().zip(f).map(|(p, v)| p * v).sum();
    pi.iter().zip(f).map(|(p, v)| p * (v - mean) * (v - mean)).sum()
}

/// Smallest nonzero eigenvalue of `I - M` in `L2(pi)` for `M` reversible
/// with respect to `pi`.
pub fn spectral_gap(m: &Matrix, pi: &[f64]) -> Result<f64> {
    let n = m.rows();
    if n == 1 {
        return Ok(f64::INFINITY);
    }
    let sq: Vec<f64> = pi.iter().map(|p| libm::sqrt(*p)).collect();
    // Symmetric form of I - M; diagonal from off-diagonal mass to avoid
    // cancellation in 1 - M(x, x). Adding SHIFT * sq sq^T moves the zero
    // eigenvalue (eigenvector sq) above the spectrum of I - M, which is in [0, 2].
    const SHIFT: f64 = 4.0;
    let mut l = Matrix::zeros(n, n);
    for x in 0..n {
        let mut off = 0.0;
        for y in 0..n {
            if x != y {
                off += m[(x, y)];
                let s = 0.5 * (sq[x] * m[(x, y)] / sq[y] + sq[y] * m[(y, x)] / sq[x]);
                l[(x, y)] = -s + SHIFT * sq[x] * sq[y];
            }
        }
        l[(x, x)] = off + SHIFT * pi[x];
    }
    Ok(symmetric_eigenvalues(&l)?[0])
}

/// Everything computed about a single kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct KernelAnalysis {
    pub eps: f64,
    pub p: Matrix,
    pub pi: Vec<f64>,
    pub adjoint: Matrix,
    pub m: Matrix,
    pub gap: f64,
    pub q: Matrix,
    pub pi_matrix: Matrix,
    /// `||pi P - pi||_inf`.
    pub stationarity_residual: f64,
    /// `||Q (I - P) - (I - Pi)||_inf` and `||(I - P) Q - (I - Pi)||_inf`.
    pub poisson_residuals: (f64, f64),
    /// `max_{x,y} |pi(x) M(x,y) - pi(y) M(y,x)|`.
    pub reversibility_residual: f64,
}

impl KernelAnalysis {
    /// Analyzes `P_eps` of `model`.
    pub fn new(model: &EvolutionModel, eps: f64) -> Result<Self> {
        KernelAnalysis::from_matrix(model.kernel(eps)?, eps)
    }

    /// Analyzes an irreducible stochastic matrix; `eps` is carried as a label.
    pub fn from_matrix(p: Matrix, eps: f64) -> Result<Self> {
        let n = p.rows();
        let pi = stationary_solve(&p)?;
        let stationarity_residual = vec_dist_inf(&p.left_mul(&pi), &pi);
        let adjoint = adjoint(&p, &pi);
        let m = p.add(&adjoint).scale(0.5);
        let mut reversibility_residual: f64 = 0.0;
        for x in 0..n {
            for y in 0..n {
                reversibility_residual = reversibility_residual.max((pi[x] * m[(x, y)] - pi[y] * m[(y, x)]).abs());
            }
        }
        let gap = spectral_gap(&m, &pi)?;
        let (q, pi_matrix) = pseudo_inverse(&p, &pi)?;
        let i_minus_p = Matrix::identity(n).sub(&p);
        let i_minus_pi = Matrix::identity(n).sub(&pi_matrix);
        let poisson_residuals =
            (q.matmul(&i_minus_p).sub(&i_minus_pi).norm_inf(), i_minus_p.matmul(&q).sub(&i_minus_pi).norm_inf());
        Ok(KernelAnalysis {
            eps,
            p,
            pi,
            adjoint,
            m,
            gap,
            q,
            pi_matrix,
            stationarity_residual,
            poisson_residuals,
            reversibility_residual,
        })
    }

    /// Largest absolute row sum of `Q`.
    pub fn q_row_sum_residual(&self) -> f64 {
        (0..self.q.rows()).map(|i| self.q.row(i).iter().sum::<f64>().abs()).fold(0.0, f64::max)
    }

    /// Poincaré lower bound on the gap with the given routing.
    pub fn poincare_bound(&self, routing: &RoutingFunction) -> Result<f64> {
        poincare_bound(&self.m, &self.pi, routing)
    }
}

/// `Q = (I - P + Pi)^{-1} - Pi` together with `Pi` (rows equal to `pi`).
pub fn pseudo_inverse(p: &Matrix, pi: &[f64]) -> Result<(Matrix, Matrix)> {
    let n = p.rows();
    let pi_matrix = Matrix::repeated_row(pi, n);
    let fundamental = Matrix::identity(n).sub(p).add(&pi_matrix).inverse()?;
    Ok((fundamental.sub(&pi_matrix), pi_matrix))
}

/// A path `gamma(x, y)` for every ordered pair of distinct states.
#[derive(Debug, Clone, PartialEq)]
pub struct RoutingFunction {
    n: usize,
    paths: Vec<Vec<StateId>>,
}

impl RoutingFunction {
    /// Routing from explicit paths indexed `x * n + y`; diagonal entries ignored.
    pub fn new(n: usize, paths: Vec<Vec<StateId>>) -> Result<Self> {
        if paths.len() != n * n {
            return Err(Error::InvalidParameter("routing needs one path per ordered pair".into()));
        }
        for x in 0..n {
            for y in 0..n {
                let p = &paths[x * n + y];
                if x != y && (p.first() != Some(&x) || p.last() != Some(&y) || p.iter().any(|&z| z >= n)) {
                    return Err(Error::InvalidParameter("routing path has wrong endpoints".into()));
                }
            }
        }
        Ok(RoutingFunction { n, paths })
    }

    /// Bottleneck-optimal witness paths of the elevation.
    pub fn from_elevation(graph: &CostGraph) -> Self {
        let n = graph.len();
        let qp = quasi_potential(graph);
        let table = ElevationTable::from_graph(graph, &qp.v);
        let paths =
            (0..n * n).map(|i| table.witness(i / n, i % n).expect("admissible graphs have finite elevation")).collect();
        RoutingFunction { n, paths }
    }

    pub fn path(&self, x: StateId, y: StateId) -> &[StateId] {
        &self.paths[x * self.n + y]
    }
}

/// `1 / kappa`, with `kappa` the maximum over oriented edges `e` of
/// `(pi(x-) M(e))^{-1} sum_{e in gamma(x,y)} |gamma(x,y)| pi(x) pi(y)`.
pub fn poincare_bound(m: &Matrix, pi: &[f64], routing: &RoutingFunction) -> Result<f64> {
    let n = m.rows();
    let mut load = vec![0.0; n * n];
    for x in 0..n {
        for y in 0..n {
            if x == y {
                continue;
            }
            let path = routing.path(x, y);
            let len = (path.len() - 1) as f64;
            for e in path.windows(2) {
                if !(m[(e[0], e[1])] > 0.0) || e[0] == e[1] {
                    return Err(Error::NonAdmissibleRoute { from: e[0], to: e[1] });
                }
                load[e[0] * n + e[1]] += len * pi[x] * pi[y];
            }
        }
    }
    let mut kappa: f64 = 0.0;
    for a in 0..n {
        for b in 0..n {
            let l = load[a * n + b];
            if l > 0.0 {
                kappa = kappa.max(l / (pi[a] * m[(a, b)]));
            }
        }
    }
    Ok(if kappa > 0.0 { 1.0 / kappa } else { f64::INFINITY })
}

/// Geometric grid `2^-3, ..., 2^-10` restricted to `(0, eps_max]`.
pub fn default_eps_grid(eps_max: f64) -> Vec<f64> {
    (3..=10).map(|j| libm::ldexp(1.0, -j)).filter(|&e| e <= eps_max).collect()
}

/// One grid point of a spectral scaling study.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScalingPoint {
    pub eps: f64,
    pub gap: f64,
    pub bound: f64,
    /// `||pi_eps - pi*||_inf`.
    pub pi_err: f64,
}

/// Log-log fits of gap and bound against `eps`.
#[derive(Debug, Clone, PartialEq)]
pub struct ScalingCheck {
    pub points: Vec<ScalingPoint>,
    pub gap_fit: LineFit,
    pub bound_fit: LineFit,
    /// Smallest `gap / eps^e` over the grid, for the given exponent `e`.
    pub min_constant: f64,
}

/// Evaluates gap and routing bound across `grid` and fits their slopes.
/// `pi_star` is used for the `pi_err` column; `exponent` is the energy barrier.
pub fn spectral_scaling_check(
    model: &EvolutionModel,
    grid: &[f64],
    pi_star: &[f64],
    exponent: f64,
) -> Result<ScalingCheck> {
    let routing = RoutingFunction::from_elevation(model.graph());
    let mut points = Vec::with_capacity(grid.len());
    for &eps in grid {
        let a = KernelAnalysis::new(model, eps)?;
        let bound = a.poincare_bound(&routing)?;
        points.push(ScalingPoint { eps, gap: a.gap, bound, pi_err: vec_dist_inf(&a.pi, pi_star) });
    }
    let eps: Vec<f64> = points.iter().map(|p| p.eps).collect();
    let gaps: Vec<f64> = points.iter().map(|p| p.gap).collect();
    let bounds: Vec<f64> = points.iter().map(|p| p.bound).collect();
    let gap_fit = loglog_fit(&eps, &gaps, 3)?;
    let bound_fit = loglog_fit(&eps, &bounds, 3)?;
    let min_constant = points.iter().map(|p| p.gap / libm::pow(p.eps, exponent)).fold(f64::INFINITY, f64::min);
    Ok(ScalingCheck { points, gap_fit, bound_fit, min_constant })
}
