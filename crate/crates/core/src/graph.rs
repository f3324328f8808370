//! Cost graphs: the combinatorial skeleton of an evolution model.

use alloc::collections::VecDeque;
use alloc::string::String;
use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};

/// Index of a state in declaration order.
pub type StateId = usize;

/// Finite state set with a cost function `c: S x S -> [0, +inf]`.
///
/// Costs are stored row-major; `f64::INFINITY` marks a forbidden transition.
#[derive(Debug, Clone, PartialEq)]
pub struct CostGraph {
    states: Vec<String>,
    cost: Vec<f64>,
}

impl CostGraph {
    /// Validates shape and values. Admissibility is checked separately.
    pub fn new(states: Vec<String>, cost: Vec<f64>) -> Result<Self> {
        let n = states.len();
        if n == 0 {
            return Err(Error::InvalidModel("state set is empty".into()));
        }
        if cost.len() != n * n {
            return Err(Error::InvalidModel(alloc::format!(
                "cost table has {} entries, expected {}",
                cost.len(),
                n * n
            )));
        }
        for (i, name) in states.iter().enumerate() {
            if states[..i].contains(name) {
                return Err(Error::InvalidModel(alloc::format!("duplicate state {name:?}")));
            }
        }
        for x in 0..n {
            for y in 0..n {
                let c = cost[x * n + y];
                if c.is_nan() || c < 0.0 {
                    return Err(Error::InvalidModel(alloc::format!(
                        "cost({}, {}) = {c} is not in [0, inf]",
                        states[x],
                        states[y]
                    )));
                }
            }
            if !cost[x * n + x].is_finite() {
                return Err(Error::InvalidModel(alloc::format!("diagonal cost of {} must be finite", states[x])));
            }
        }
        Ok(CostGraph { states, cost })
    }

    pub fn len(&self) -> usize {
        self.states.len()
    }

    pub fn is_empty(&self) -> bool {
        self.states.is_empty()
    }

    pub fn states(&self) -> &[String] {
        &self.states
    }

    pub fn name(&self, x: StateId) -> &str {
        &self.states[x]
    }

    pub fn index_of(&self, name: &str) -> Option<StateId> {
        self.states.iter().position(|s| s == name)
    }

    #[inline]
    pub fn cost(&self, x: StateId, y: StateId) -> f64 {
        self.cost[x * self.states.len() + y]
    }

    /// Off-diagonal successors of `x` along finite-cost edges, in index order.
    pub fn finite_successors(&self, x: StateId) -> impl Iterator<Item = StateId> + '_ {
        (0..self.len()).filter(move |&y| y != x && self.cost(x, y).is_finite())
    }

    /// True when every finite cost is an integer, so costs compare exactly.
    pub fn is_integer_valued(&self) -> bool {
        self.cost.iter().all(|c| !c.is_finite() || libm::floor(*c) == *c)
    }

    /// Smallest strictly positive finite off-diagonal cost, if any.
    pub fn min_positive_cost(&self) -> Option<f64> {
        let n = self.len();
        (0..n)
            .flat_map(|x| (0..n).filter(move |&y| y != x).map(move |y| (x, y)))
            .map(|(x, y)| self.cost(x, y))
            .filter(|c| c.is_finite() && *c > 0.0)
            .reduce(f64::min)
    }

    /// Shortest (fewest edges) finite-cost directed path from `x` to `y`.
    ///
    /// The path from a state to itself is the empty path `[x]`.
    pub fn finite_path(&self, x: StateId, y: StateId) -> Option<Vec<StateId>> {
        let n = self.len();
        let mut pred = vec![usize::MAX; n];
        let mut seen = vec![false; n];
        let mut queue = VecDeque::new();
        seen[x] = true;
        queue.push_back(x);
        while let Some(u) = queue.pop_front() {
            if u == y {
                let mut path = vec![y];
                let mut z = y;
                while z != x {
                    z = pred[z];
                    path.push(z);
                }
                path.reverse();
                return Some(path);
            }
            for v in self.finite_successors(u) {
                if !seen[v] {
                    seen[v] = true;
                    pred[v] = u;
                    queue.push_back(v);
                }
            }
        }
        None
    }

    fn reachable_from(&self, x: StateId, reverse: bool) -> Vec<bool> {
        let n = self.len();
        let mut seen = vec![false; n];
        let mut stack = vec![x];
        seen[x] = true;
        while let Some(u) = stack.pop() {
            for v in 0..n {
                let c = if reverse { self.cost(v, u) } else { self.cost(u, v) };
                if v != u && c.is_finite() && !seen[v] {
                    seen[v] = true;
                    stack.push(v);
                }
            }
        }
        seen
    }

    /// First ordered pair `(x, y)` with no finite-cost path, if any.
    pub fn unreachable_pair(&self) -> Option<(StateId, StateId)> {
        let fwd = self.reachable_from(0, false);
        if let Some(y) = fwd.iter().position(|r| !r) {
            return Some((0, y));
        }
        let bwd = self.reachable_from(0, true);
        bwd.iter().position(|r| !r).map(|x| (x, 0))
    }

    /// True iff the finite-cost directed graph is strongly connected.
    pub fn is_admissible(&self) -> bool {
        self.unreachable_pair().is_none()
    }

    /// Like [`is_admissible`](Self::is_admissible) but names the offending pair.
    pub fn ensure_admissible(&self) -> Result<()> {
        match self.unreachable_pair() {
            None => Ok(()),
            Some((x, y)) => Err(Error::Inadmissible { from: self.states[x].clone(), to: self.states[y].clone() }),
        }
    }

    /// Decomposition of the limit kernel (edges = zero-cost pairs, self-loops
    /// included) into transient states and closed communicating classes.
    pub fn recurrent_classes(&self) -> ClassDecomposition {
        let n = self.len();
        let zero = |x: StateId, y: StateId| self.cost(x, y) == 0.0;
        let comp = strongly_connected(n, &zero);
        let ncomp = comp.iter().copied().max().map_or(0, |m| m + 1);

        let mut closed = vec![true; ncomp];
        for x in 0..n {
            for y in 0..n {
                if zero(x, y) && comp[x] != comp[y] {
                    closed[comp[x]] = false;
                }
            }
        }

        // order classes by their smallest member
        let mut order: Vec<usize> = Vec::new();
        for x in 0..n {
            if closed[comp[x]] && !order.contains(&comp[x]) {
                order.push(comp[x]);
            }
        }
        let classes: Vec<Vec<StateId>> = order.iter().map(|&c| (0..n).filter(|&x| comp[x] == c).collect()).collect();
        let periods = classes.iter().map(|class| class_period(class, &zero)).collect();
        let transient = (0..n).filter(|&x| !closed[comp[x]]).collect();
        ClassDecomposition { transient, classes, periods }
    }
}

/// Transient states and recurrent classes of the zero-cost relation.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct ClassDecomposition {
    pub transient: Vec<StateId>,
    pub classes: Vec<Vec<StateId>>,
    /// Period of each class (gcd of cycle lengths); 1 means aperiodic.
    pub periods: Vec<usize>,
}

impl ClassDecomposition {
    pub fn is_periodic(&self, class: usize) -> bool {
        self.periods[class] > 1
    }

    /// Union of all recurrent classes, ascending.
    pub fn recurrent_states(&self) -> Vec<StateId> {
        let mut all: Vec<StateId> = self.classes.iter().flatten().copied().collect();
        all.sort_unstable();
        all
    }

    pub fn class_of(&self, x: StateId) -> Option<usize> {
        self.classes.iter().position(|c| c.contains(&x))
    }
}

fn gcd(a: usize, b: usize) -> usize {
    if b == 0 {
        a
    } else {
        gcd(b, a % b)
    }
}

// Period of a strongly connected class: gcd over edges (u, v) inside the
// class of level(u) + 1 - level(v), with BFS levels from any member.
fn class_period(class: &[StateId], edge: &impl Fn(StateId, StateId) -> bool) -> usize {
    let start = class[0];
    let mut level: Vec<Option<usize>> = vec![None; class.iter().max().map_or(0, |m| m + 1)];
    level[start] = Some(0);
    let mut queue = VecDeque::from([start]);
    while let Some(u) = queue.pop_front() {
        for &v in class {
            if edge(u, v) && level[v].is_none() {
                level[v] = Some(level[u].unwrap() + 1);
                queue.push_back(v);
            }
        }
    }
    let mut g = 0;
    for &u in class {
        for &v in class {
            if edge(u, v) {
                let (lu, lv) = (level[u].unwrap(), level[v].unwrap());
                g = gcd(g, (lu + 1).abs_diff(lv));
            }
        }
    }
    // a singleton without a self-loop cannot be closed and recurrent unless
    // it has one; g == 0 only happens for a singleton with no internal edge
    g.max(1)
}

// Tarjan's algorithm on a dense edge predicate; returns component ids.
fn strongly_connected(n: usize, edge: &impl Fn(StateId, StateId) -> bool) -> Vec<usize> {
    struct State {
        index: Vec<Option<usize>>,
        low: Vec<usize>,
        on_stack: Vec<bool>,
        stack: Vec<usize>,
        comp: Vec<usize>,
        next_index: usize,
        next_comp: usize,
    }
    fn visit(v: usize, n: usize, edge: &impl Fn(usize, usize) -> bool, s: &mut State) {
        s.index[v] = Some(s.next_index);
        s.low[v] = s.next_index;
        s.next_index += 1;
        s.stack.push(v);
        s.on_stack[v] = true;
        for w in 0..n {
            if !edge(v, w) {
                continue;
            }
            match s.index[w] {
                None => {
                    visit(w, n, edge, s);
                    s.low[v] = s.low[v].min(s.low[w]);
                }
                Some(iw) if s.on_stack[w] => s.low[v] = s.low[v].min(iw),
                _ => {}
            }
        }
        if Some(s.low[v]) == s.index[v] {
            loop {
                let w = s.stack.pop().unwrap();
                s.on_stack[w] = false;
                s.comp[w] = s.next_comp;
                if w == v {
                    break;
                }
            }
            s.next_comp += 1;
        }
    }
    let mut s = State {
        index: vec![None; n],
        low: vec![0; n],
        on_stack: vec![false; n],
        stack: Vec::new(),
        comp: vec![0; n],
        next_index: 0,
        next_comp: 0,
    };
    for v in 0..n {
        if s.index[v].is_none() {
            visit(v, n, edge, &mut s);
        }
    }
    s.comp
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;
    use alloc::string::ToString;

    const INF: f64 = f64::INFINITY;

    fn graph(n: usize, cost: Vec<f64>) -> CostGraph {
        CostGraph::new((0..n).map(|i| i.to_string()).collect(), cost).unwrap()
    }

    #[test]
    fn example1_chain_is_admissible() {
        let m = builtin::example1(2.0, 1.0, 3).unwrap();
        assert!(m.graph().is_admissible());
    }

    #[test]
    fn singleton_is_admissible() {
        assert!(graph(1, vec![0.0]).is_admissible());
    }

    #[test]
    fn disconnected_pair_is_not_admissible() {
        let g = graph(2, vec![0.0, INF, INF, 0.0]);
        assert!(!g.is_admissible());
        assert!(matches!(g.ensure_admissible(), Err(Error::Inadmissible { .. })));
    }

    #[test]
    fn one_way_pair_reports_missing_direction() {
        let g = graph(2, vec![0.0, 1.0, INF, 0.0]);
        assert_eq!(g.unreachable_pair(), Some((1, 0)));
        assert_eq!(g.finite_path(0, 1), Some(vec![0, 1]));
        assert_eq!(g.finite_path(1, 0), None);
    }

    #[test]
    fn rejects_negative_and_infinite_diagonal() {
        let bad = CostGraph::new(vec!["a".into(), "b".into()], vec![0.0, -1.0, 1.0, 0.0]);
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
        let bad = CostGraph::new(vec!["a".into(), "b".into()], vec![INF, 1.0, 1.0, 0.0]);
        assert!(matches!(bad, Err(Error::InvalidModel(_))));
    }

    #[test]
    fn example1_limit_kernel_is_identity() {
        let m = builtin::example1(2.0, 1.0, 2).unwrap();
        let d = m.graph().recurrent_classes();
        assert!(d.transient.is_empty());
        assert_eq!(d.classes.len(), 5);
        assert!(d.classes.iter().all(|c| c.len() == 1));
        assert!(d.periods.iter().all(|&p| p == 1));
    }

    #[test]
    fn example2_has_periodic_class() {
        let m = builtin::example2();
        let g = m.graph();
        let d = g.recurrent_classes();
        let tl = g.index_of("TL").unwrap();
        let tr = g.index_of("TR").unwrap();
        let bl = g.index_of("BL").unwrap();
        let br = g.index_of("BR").unwrap();
        assert_eq!(d.classes, vec![vec![tl], vec![tr, bl], vec![br]]);
        assert_eq!(d.periods, vec![1, 2, 1]);
        assert!(d.is_periodic(1));
        assert!(d.transient.is_empty());
    }

    #[test]
    fn complete_zero_graph_is_one_aperiodic_class() {
        let d = graph(3, vec![0.0; 9]).recurrent_classes();
        assert_eq!(d.classes, vec![vec![0, 1, 2]]);
        assert_eq!(d.periods, vec![1]);
        assert!(d.transient.is_empty());
    }

    #[test]
    fn transient_state_detected() {
        // 0 -> 1 at zero cost, 1 absorbing at zero cost
        let d = graph(2, vec![0.0, 0.0, 1.0, 0.0]).recurrent_classes();
        assert_eq!(d.transient, vec![0]);
        assert_eq!(d.classes, vec![vec![1]]);
    }

    #[test]
    fn three_cycle_has_period_three() {
        let d = graph(3, vec![1.0, 0.0, INF, INF, 1.0, 0.0, 0.0, INF, 1.0]).recurrent_classes();
        assert_eq!(d.classes, vec![vec![0, 1, 2]]);
        assert_eq!(d.periods, vec![3]);
    }
}
