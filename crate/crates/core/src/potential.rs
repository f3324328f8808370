//! Quasi-potential, tree-optimality gap, edge potential, elevation and
//! energy barrier of a cost graph.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::Result;
use crate::graph::{CostGraph, StateId};
use crate::resistance;
use crate::trees::{cost_tolerance, for_each_tree, min_in_tree_cost};

/// Minimum in-tree cost per root, and its normalization.
#[derive(Debug, Clone, PartialEq)]
pub struct QuasiPotential {
    /// Minimum cost of an in-tree rooted at each state.
    pub tilde_v: Vec<f64>,
    /// `tilde_v - min tilde_v`; its minimum is exactly zero.
    pub v: Vec<f64>,
    /// Minimum cost over all trees.
    pub c0: f64,
    /// States where `v` vanishes (up to the cost tolerance).
    pub s0: Vec<StateId>,
}

/// Quasi-potential via minimum-cost arborescences.
///
/// Panics if the graph is not admissible (some root has no finite in-tree).
pub fn quasi_potential(graph: &CostGraph) -> QuasiPotential {
    let tilde_v: Vec<f64> = (0..graph.len())
        .map(|x| min_in_tree_cost(graph, x).expect("admissible graph has a finite in-tree at every root"))
        .collect();
    let c0 = tilde_v.iter().copied().fold(f64::INFINITY, f64::min);
    let v: Vec<f64> = tilde_v.iter().map(|t| t - c0).collect();
    let tol = cost_tolerance(graph);
    let s0 = (0..graph.len()).filter(|&x| v[x] <= tol).collect();
    QuasiPotential { tilde_v, v, c0, s0 }
}

/// Second-best versus optimal tree cost over all roots.
#[derive(Debug, Clone, PartialEq)]
pub struct TreeGap {
    pub c0: f64,
    /// `+inf` when every finite-cost tree is optimal.
    pub theta: f64,
    /// Number of optimal trees (all roots).
    pub optimal_trees: u64,
    /// Total number of finite-cost trees (all roots).
    pub total_trees: u64,
}

/// Tree-optimality gap by exhaustive enumeration under `cap` trees in total.
pub fn tree_gap(graph: &CostGraph, cap: u64) -> Result<TreeGap> {
    let mut costs = Vec::new();
    let mut budget = cap;
    for root in 0..graph.len() {
        for_each_tree(graph, root, cap, &mut budget, |_, c| costs.push(c))?;
    }
    let c0 = costs.iter().copied().fold(f64::INFINITY, f64::min);
    let tol = cost_tolerance(graph);
    let optimal_trees = costs.iter().filter(|&&c| c - c0 <= tol).count() as u64;
    let second = costs.iter().copied().filter(|&c| c - c0 > tol).fold(f64::INFINITY, f64::min);
    Ok(TreeGap { c0, theta: second - c0, optimal_trees, total_trees: costs.len() as u64 })
}

/// Edge potential `W(x, y) = min{V(x) + c(x, y), V(y) + c(y, x)}`.
pub fn edge_potential(v: &[f64], graph: &CostGraph, x: StateId, y: StateId) -> f64 {
    (v[x] + graph.cost(x, y)).min(v[y] + graph.cost(y, x))
}

/// Symmetric table of edge potentials; the diagonal is `+inf` (unused).
pub fn edge_potential_table(v: &[f64], graph: &CostGraph) -> Vec<f64> {
    let n = graph.len();
    let mut w = vec![f64::INFINITY; n * n];
    for x in 0..n {
        for y in 0..n {
            if x != y {
                w[x * n + y] = edge_potential(v, graph, x, y);
            }
        }
    }
    w
}

/// All-pairs elevation with bottleneck-optimal witness paths.
#[derive(Debug, Clone, PartialEq)]
pub struct ElevationTable {
    n: usize,
    value: Vec<f64>,
    // pred[s * n + t]: predecessor of t on the witness path from s
    pred: Vec<usize>,
}

impl ElevationTable {
    /// Minimax of `W` over paths, one bottleneck Dijkstra per source.
    pub fn new(w: &[f64], n: usize) -> Self {
        let mut value = vec![f64::INFINITY; n * n];
        let mut pred = vec![usize::MAX; n * n];
        for s in 0..n {
            let best = &mut value[s * n..(s + 1) * n];
            let pr = &mut pred[s * n..(s + 1) * n];
            let mut done = vec![false; n];
            best[s] = f64::NEG_INFINITY;
            for _ in 0..n {
                let u = match (0..n)
                    .filter(|&u| !done[u] && best[u] < f64::INFINITY)
                    .min_by(|&a, &b| best[a].total_cmp(&best[b]).then(a.cmp(&b)))
                {
                    Some(u) => u,
                    None => break,
                };
                done[u] = true;
                for t in 0..n {
                    let wut = w[u * n + t];
                    if t == u || done[t] || wut.is_infinite() {
                        continue;
                    }
                    let cand = best[u].max(wut);
                    if cand < best[t] {
                        best[t] = cand;
                        pr[t] = u;
                    }
                }
            }
        }
        ElevationTable { n, value, pred }
    }

    pub fn from_graph(graph: &CostGraph, v: &[f64]) -> Self {
        ElevationTable::new(&edge_potential_table(v, graph), graph.len())
    }

    /// `Elev(x, y)` for `x != y`.
    pub fn value(&self, x: StateId, y: StateId) -> f64 {
        self.value[x * self.n + y]
    }

    /// Simple path from `x` to `y` attaining the elevation.
    pub fn witness(&self, x: StateId, y: StateId) -> Option<Vec<StateId>> {
        if x == y {
            return Some(vec![x]);
        }
        if self.value(x, y).is_infinite() {
            return None;
        }
        let mut path = vec![y];
        let mut z = y;
        while z != x {
            z = self.pred[x * self.n + z];
            path.push(z);
        }
        path.reverse();
        Some(path)
    }
}

/// `Elev(x, y)` and a witness path, for a single pair.
pub fn elevation(graph: &CostGraph, x: StateId, y: StateId) -> (f64, Vec<StateId>) {
    let qp = quasi_potential(graph);
    let table = ElevationTable::from_graph(graph, &qp.v);
    let path = table.witness(x, y).expect("admissible graphs have finite elevation");
    (table.value(x, y), path)
}

/// Energy barrier with the maximizing pair.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct EnergyBarrier {
    pub value: f64,
    /// Maximizing unordered pair `(x, y)`, `x < y`; `None` for a single state.
    pub pair: Option<(StateId, StateId)>,
}

/// `max_{x != y} Elev(x, y) - V(x) - V(y)`.
pub fn energy_barrier_from(table: &ElevationTable, v: &[f64]) -> EnergyBarrier {
    let n = v.len();
    let mut best = EnergyBarrier { value: 0.0, pair: None };
    for x in 0..n {
        for y in (x + 1)..n {
            let e = table.value(x, y) - v[x] - v[y];
            if best.pair.is_none() || e > best.value {
                best = EnergyBarrier { value: e, pair: Some((x, y)) };
            }
        }
    }
    best
}

pub fn energy_barrier(graph: &CostGraph) -> EnergyBarrier {
    let qp = quasi_potential(graph);
    energy_barrier_from(&ElevationTable::from_graph(graph, &qp.v), &qp.v)
}

/// Everything the `analyze` report shows about a cost graph.
#[derive(Debug, Clone, PartialEq)]
pub struct PotentialReport {
    pub tilde_v: Vec<f64>,
    pub v: Vec<f64>,
    pub c0: f64,
    pub s0: Vec<StateId>,
    pub theta: f64,
    pub energy_barrier: EnergyBarrier,
    /// Edge potentials, row-major; diagonal unused.
    pub w: Vec<f64>,
    pub elevation: ElevationTable,
    pub min_coradius: resistance::MinCoradius,
}

impl PotentialReport {
    pub fn compute(graph: &CostGraph, cap: u64) -> Result<Self> {
        graph.ensure_admissible()?;
        let qp = quasi_potential(graph);
        let gap = tree_gap(graph, cap)?;
        let w = edge_potential_table(&qp.v, graph);
        let elevation = ElevationTable::new(&w, graph.len());
        let energy_barrier = energy_barrier_from(&elevation, &qp.v);
        let min_coradius = resistance::min_coradius(graph);
        Ok(PotentialReport {
            tilde_v: qp.tilde_v,
            v: qp.v,
            c0: qp.c0,
            s0: qp.s0,
            theta: gap.theta,
            energy_barrier,
            w,
            elevation,
            min_coradius,
        })
    }

    /// `W(x, y)`.
    pub fn w(&self, x: StateId, y: StateId) -> f64 {
        self.w[x * self.v.len() + y]
    }
}
