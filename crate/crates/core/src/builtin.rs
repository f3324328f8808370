//! Built-in models: the birth-death chain, the two-player coordination game,
//! the complete-graph model with uniform costs, and its vanishing-perturbation
//! variant.

use alloc::format;
use alloc::string::{String, ToString};
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::model::{CompletionMode, EdgeSpec, EvolutionModel};

/// A named built-in model with its parameters.
#[derive(Debug, Clone, PartialEq)]
pub enum BuiltinExample {
    /// Chain on `{-N, ..., N}`: outward cost `a`, inward cost `b`.
    Example1 { a: f64, b: f64, n: usize },
    /// Coordination game on `{TL, TR, BL, BR}` with experimentation.
    Example2,
    /// Complete graph on `N` states with unit costs and prefactors `k`.
    Example3 { n: usize, k: Option<Vec<f64>> },
    /// [`Example3`](Self::Example3) with `k = 1` driven by the alternating
    /// perturbation `kappa (-1)^n / n`.
    Cloez { n: usize, kappa: f64 },
}

impl BuiltinExample {
    pub fn name(&self) -> &'static str {
        match self {
            BuiltinExample::Example1 { .. } => "example1",
            BuiltinExample::Example2 => "example2",
            BuiltinExample::Example3 { .. } => "example3",
            BuiltinExample::Cloez { .. } => "cloez",
        }
    }

    pub fn model(&self) -> Result<EvolutionModel> {
        match self {
            BuiltinExample::Example1 { a, b, n } => example1(*a, *b, *n),
            BuiltinExample::Example2 => Ok(example2()),
            BuiltinExample::Example3 { n, k } => example3(*n, k.as_deref()),
            BuiltinExample::Cloez { n, kappa } => {
                if !(kappa.abs() < 1.0) {
                    return Err(Error::InvalidParameter(format!(
                        "|kappa| = {} must be below the unit prefactor",
                        kappa.abs()
                    )));
                }
                example3(*n, None)
            }
        }
    }

    /// Amplitude of the alternating schedule perturbation, if any.
    pub fn perturbation(&self) -> Option<f64> {
        match self {
            BuiltinExample::Cloez { kappa, .. } => Some(*kappa),
            _ => None,
        }
    }
}

fn edge(from: usize, to: usize, cost: f64, k: f64) -> EdgeSpec {
    EdgeSpec { from, to, cost, k, h: Vec::new() }
}

/// Chain `{-N, ..., N}` with `c(x, x+1) = c(-x, -x-1) = a` and
/// `c(x+1, x) = c(-x-1, -x) = b`, diagonal completion, `k = 1`.
pub fn example1(a: f64, b: f64, n: usize) -> Result<EvolutionModel> {
    if !(a > 0.0 && b > 0.0 && a.is_finite() && b.is_finite()) {
        return Err(Error::InvalidParameter(format!("need a, b > 0 (got a = {a}, b = {b})")));
    }
    if n < 1 {
        return Err(Error::InvalidParameter("need N >= 1".into()));
    }
    let ni = n as i64;
    let states: Vec<String> = (-ni..=ni).map(|x| x.to_string()).collect();
    let idx = |x: i64| (x + ni) as usize;
    let mut edges = Vec::new();
    for x in -ni..=ni {
        // away from zero costs a, toward zero costs b
        if x < ni && x >= 0 {
            edges.push(edge(idx(x), idx(x + 1), a, 1.0));
        }
        if x < ni && x < 0 {
            edges.push(edge(idx(x), idx(x + 1), b, 1.0));
        }
        if x > -ni && x <= 0 {
            edges.push(edge(idx(x), idx(x - 1), a, 1.0));
        }
        if x > -ni && x > 0 {
            edges.push(edge(idx(x), idx(x - 1), b, 1.0));
        }
    }
    EvolutionModel::from_edges(states, CompletionMode::DiagonalComplement, &edges)
}

/// Coordination game with experimentation probabilities `eps` (when earning
/// less than the opponent) and `eps^2` (when earning more), row-normalized.
pub fn example2() -> EvolutionModel {
    let states = ["TL", "TR", "BL", "BR"].map(String::from).to_vec();
    #[rustfmt::skip]
    let cost = [
        [0.0, 1.0, 2.0, 3.0],
        [2.0, 4.0, 0.0, 2.0],
        [2.0, 0.0, 4.0, 2.0],
        [3.0, 2.0, 1.0, 0.0],
    ];
    let edges: Vec<EdgeSpec> =
        (0..4).flat_map(|x| (0..4).map(move |y| (x, y))).map(|(x, y)| edge(x, y, cost[x][y], 1.0)).collect();
    EvolutionModel::from_edges(states, CompletionMode::RowNormalize, &edges)
        .expect("built-in coordination game is valid")
}

/// Complete graph on `{1, ..., N}`, unit off-diagonal costs, diagonal completion.
///
/// `k` is an optional row-major `N x N` prefactor table (diagonal ignored);
/// it defaults to all ones.
pub fn example3(n: usize, k: Option<&[f64]>) -> Result<EvolutionModel> {
    if n < 2 {
        return Err(Error::InvalidParameter("need N >= 2".into()));
    }
    if let Some(k) = k {
        if k.len() != n * n {
            return Err(Error::InvalidParameter(format!("k table has {} entries, expected {}", k.len(), n * n)));
        }
    }
    let states: Vec<String> = (1..=n).map(|x| x.to_string()).collect();
    let mut edges = Vec::new();
    for x in 0..n {
        for y in 0..n {
            if x != y {
                let kxy = k.map_or(1.0, |k| k[x * n + y]);
                edges.push(edge(x, y, 1.0, kxy));
            }
        }
    }
    EvolutionModel::from_edges(states, CompletionMode::DiagonalComplement, &edges)
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn example1_costs_point_toward_zero() {
        let m = example1(2.0, 1.0, 2).unwrap();
        let g = m.graph();
        let i = |s: &str| g.index_of(s).unwrap();
        assert_eq!(g.cost(i("0"), i("1")), 2.0);
        assert_eq!(g.cost(i("0"), i("-1")), 2.0);
        assert_eq!(g.cost(i("1"), i("2")), 2.0);
        assert_eq!(g.cost(i("2"), i("1")), 1.0);
        assert_eq!(g.cost(i("-1"), i("0")), 1.0);
        assert_eq!(g.cost(i("-2"), i("-1")), 1.0);
        assert!(g.cost(i("-2"), i("0")).is_infinite());
        assert_eq!(g.states(), &["-2", "-1", "0", "1", "2"]);
    }

    #[test]
    fn example3_uniform_eps_max() {
        let m = example3(4, None).unwrap();
        assert!((m.eps_max() - 1.0 / 3.0).abs() < 2e-10);
    }

    #[test]
    fn invalid_parameters_rejected() {
        assert!(example1(0.0, 1.0, 1).is_err());
        assert!(example1(1.0, 1.0, 0).is_err());
        assert!(example3(1, None).is_err());
        assert!(BuiltinExample::Cloez { n: 3, kappa: 1.5 }.model().is_err());
    }
}
