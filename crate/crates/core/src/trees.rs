//! In-arborescences (x-trees): exhaustive enumeration and minimum-cost search.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{CostGraph, StateId};

/// Default cap on the number of enumerated trees.
pub const DEFAULT_TREE_CAP: u64 = 10_000_000;

/// Absolute tolerance when comparing non-integer tree costs.
pub const COST_TOLERANCE: f64 = 1e-9;

/// Tolerance for classifying tree costs: exact for integer-valued graphs.
pub fn cost_tolerance(graph: &CostGraph) -> f64 {
    if graph.is_integer_valued() {
        0.0
    } else {
        COST_TOLERANCE
    }
}

/// A spanning in-tree rooted at `root`: every other state has exactly one
/// successor and all successor chains end at the root.
#[derive(Debug, Clone, PartialEq)]
pub struct Arborescence {
    pub root: StateId,
    /// `succ[x]` is the successor of `x`; `None` exactly at the root.
    pub succ: Vec<Option<StateId>>,
    pub cost: f64,
}

impl Arborescence {
    /// Edges `(x, succ[x])` in source order.
    pub fn edges(&self) -> impl Iterator<Item = (StateId, StateId)> + '_ {
        self.succ.iter().enumerate().filter_map(|(x, s)| s.map(|y| (x, y)))
    }

    /// Checks the in-tree invariants against `n` states.
    pub fn is_valid(&self) -> bool {
        let n = self.succ.len();
        if self.succ[self.root].is_some() {
            return false;
        }
        (0..n).all(|x| {
            let mut z = x;
            for _ in 0..n {
                match self.succ[z] {
                    None => return z == self.root,
                    Some(y) => z = y,
                }
            }
            false
        })
    }
}

/// Calls `visit(succ, cost)` for every finite-cost in-tree rooted at `root`,
/// in lexicographic order of the edge list. `budget` is decremented per tree;
/// exceeding it aborts with [`Error::EnumerationCap`].
pub fn for_each_tree(
    graph: &CostGraph,
    root: StateId,
    cap: u64,
    budget: &mut u64,
    mut visit: impl FnMut(&[Option<StateId>], f64),
) -> Result<()> {
    let n = graph.len();
    let order: Vec<StateId> = (0..n).filter(|&x| x != root).collect();
    let choices: Vec<Vec<StateId>> = order.iter().map(|&x| graph.finite_successors(x).collect()).collect();
    let mut succ: Vec<Option<StateId>> = vec![None; n];
    if order.is_empty() {
        take_budget(cap, budget)?;
        visit(&succ, 0.0);
        return Ok(());
    }
    // cursor[d] = index of the choice currently tried at depth d
    let mut cursor = vec![0usize; order.len()];
    let mut partial = vec![0.0; order.len() + 1];
    let mut depth = 0usize;
    loop {
        let x = order[depth];
        if cursor[depth] >= choices[depth].len() {
            succ[x] = None;
            cursor[depth] = 0;
            if depth == 0 {
                return Ok(());
            }
            depth -= 1;
            cursor[depth] += 1;
            continue;
        }
        let y = choices[depth][cursor[depth]];
        succ[x] = Some(y);
        if closes_cycle(&succ, x, n) {
            succ[x] = None;
            cursor[depth] += 1;
            continue;
        }
        partial[depth + 1] = partial[depth] + graph.cost(x, y);
        if depth + 1 == order.len() {
            take_budget(cap, budget)?;
            visit(&succ, partial[depth + 1]);
            cursor[depth] += 1;
        } else {
            depth += 1;
        }
    }
}

fn take_budget(cap: u64, budget: &mut u64) -> Result<()> {
    if *budget == 0 {
        return Err(Error::EnumerationCap { cap });
    }
    *budget -= 1;
    Ok(())
}

// Whether the chain starting at succ[x] returns to x.
fn closes_cycle(succ: &[Option<StateId>], x: StateId, n: usize) -> bool {
    let mut z = succ[x];
    for _ in 0..n {
        match z {
            None => return false,
            Some(w) if w == x => return true,
            Some(w) => z = succ[w],
        }
    }
    true
}

/// All finite-cost in-trees rooted at `root`, lexicographically ordered.
pub fn enumerate_trees(graph: &CostGraph, root: StateId, cap: u64) -> Result<Vec<Arborescence>> {
    let mut out = Vec::new();
    let mut budget = cap;
    for_each_tree(graph, root, cap, &mut budget, |succ, cost| {
        out.push(Arborescence { root, succ: succ.to_vec(), cost })
    })?;
    Ok(out)
}

/// Minimum cost of an in-tree rooted at `root` (Chu-Liu/Edmonds on the
/// reversed graph). `None` if no finite-cost in-tree exists.
pub fn min_in_tree_cost(graph: &CostGraph, root: StateId) -> Option<f64> {
    let n = graph.len();
    // reversed edges: an in-tree of the graph is an out-arborescence here
    let mut edges: Vec<(usize, usize, f64)> = Vec::new();
    for x in 0..n {
        for y in graph.finite_successors(x) {
            edges.push((y, x, graph.cost(x, y)));
        }
    }
    min_out_arborescence(n, root, edges)
}

fn min_out_arborescence(mut n: usize, mut root: usize, mut edges: Vec<(usize, usize, f64)>) -> Option<f64> {
    let mut total = 0.0;
    loop {
        let mut best_in = vec![f64::INFINITY; n];
        let mut pred = vec![usize::MAX; n];
        for &(u, v, w) in &edges {
            if u != v && w < best_in[v] {
                best_in[v] = w;
                pred[v] = u;
            }
        }
        if (0..n).any(|v| v != root && best_in[v].is_infinite()) {
            return None;
        }
        best_in[root] = 0.0;
        let mut id = vec![usize::MAX; n];
        let mut mark = vec![usize::MAX; n];
        let mut cycles = 0;
        for v in 0..n {
            total += best_in[v];
            let mut x = v;
            while mark[x] != v && id[x] == usize::MAX && x != root {
                mark[x] = v;
                x = pred[x];
            }
            if x != root && id[x] == usize::MAX {
                let mut y = pred[x];
                while y != x {
                    id[y] = cycles;
                    y = pred[y];
                }
                id[x] = cycles;
                cycles += 1;
            }
        }
        if cycles == 0 {
            return Some(total);
        }
        for slot in id.iter_mut() {
            if *slot == usize::MAX {
                *slot = cycles;
                cycles += 1;
            }
        }
        edges = edges
            .into_iter()
            .filter_map(|(u, v, w)| {
                let (cu, cv) = (id[u], id[v]);
                (cu != cv).then(|| (cu, cv, w - best_in[v]))
            })
            .collect();
        n = cycles;
        root = id[root];
    }
}
