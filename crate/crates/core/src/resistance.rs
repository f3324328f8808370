//! Resistance (cheapest path cost into a set), coradius and minimum coradius.

use alloc::vec;
use alloc::vec::Vec;

use crate::error::{Error, Result};
use crate::graph::{CostGraph, StateId};

/// Cheapest path cost from every state into `target` (0 inside the target).
pub fn resistances_into(graph: &CostGraph, target: &[StateId]) -> Vec<f64> {
    let n = graph.len();
    let mut dist = vec![f64::INFINITY; n];
    let mut done = vec![false; n];
    for &t in target {
        dist[t] = 0.0;
    }
    // dense Dijkstra on reversed edges
    for _ in 0..n {
        let Some(u) = (0..n).filter(|&u| !done[u] && dist[u].is_finite()).min_by(|&a, &b| dist[a].total_cmp(&dist[b]))
        else {
            break;
        };
        done[u] = true;
        for x in 0..n {
            let c = graph.cost(x, u);
            if !done[x] && x != u && c.is_finite() && dist[u] + c < dist[x] {
                dist[x] = dist[u] + c;
            }
        }
    }
    dist
}

/// `r(x, target)`.
pub fn resistance(graph: &CostGraph, x: StateId, target: &[StateId]) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::InvalidParameter("resistance target set is empty".into()));
    }
    Ok(resistances_into(graph, target)[x])
}

/// `CR(A) = max_{x not in A} r(x, A)`; zero when `A` is the whole space.
pub fn coradius(graph: &CostGraph, target: &[StateId]) -> Result<f64> {
    if target.is_empty() {
        return Err(Error::InvalidParameter("coradius target set is empty".into()));
    }
    let r = resistances_into(graph, target);
    Ok((0..graph.len()).filter(|x| !target.contains(x)).map(|x| r[x]).fold(0.0, f64::max))
}

/// Minimum coradius over recurrent states of the zero-cost kernel.
#[derive(Debug, Clone, PartialEq)]
pub struct MinCoradius {
    pub value: f64,
    /// First recurrent state attaining the minimum.
    pub state: StateId,
    /// `CR({x})` per state; `None` for transient states.
    pub per_state: Vec<Option<f64>>,
}

pub fn min_coradius(graph: &CostGraph) -> MinCoradius {
    let decomposition = graph.recurrent_classes();
    let mut per_state = vec![None; graph.len()];
    for class in &decomposition.classes {
        for &x in class {
            per_state[x] = Some(coradius(graph, &[x]).expect("singleton target"));
        }
        let first = per_state[class[0]];
        assert!(class.iter().all(|&x| per_state[x] == first), "coradius must be constant on a recurrent class");
    }
    let (state, value) = per_state
        .iter()
        .enumerate()
        .filter_map(|(x, c)| c.map(|c| (x, c)))
        .fold((usize::MAX, f64::INFINITY), |best, cur| if cur.1 < best.1 { cur } else { best });
    MinCoradius { value, state, per_state }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::builtin;

    #[test]
    fn example1_resistance_and_coradius() {
        let (a, b, n) = (2.0, 1.0, 3usize);
        let m = builtin::example1(a, b, n).unwrap();
        let g = m.graph();
        let zero = g.index_of("0").unwrap();
        let r = resistances_into(g, &[zero]);
        for x in -3i64..=3 {
            assert_eq!(r[(x + 3) as usize], b * x.abs() as f64);
        }
        for x in -3i64..=3 {
            let cr = coradius(g, &[(x + 3) as usize]).unwrap();
            assert_eq!(cr, b * n as f64 + a * x.abs() as f64, "x={x}");
        }
        let mcr = min_coradius(g);
        assert_eq!((mcr.value, mcr.state), (3.0, zero));
    }

    #[test]
    fn example2_coradius() {
        let m = builtin::example2();
        let g = m.graph();
        assert_eq!(resistance(g, 0, &[1]).unwrap(), 1.0);
        let cr: Vec<f64> = (0..4).map(|x| coradius(g, &[x]).unwrap()).collect();
        assert_eq!(cr, vec![3.0, 1.0, 1.0, 3.0]);
        assert_eq!(min_coradius(g).value, 1.0);
    }

    #[test]
    fn trivial_targets() {
        let m = builtin::example2();
        let g = m.graph();
        assert_eq!(resistance(g, 2, &[2, 3]).unwrap(), 0.0);
        assert_eq!(coradius(g, &[0, 1, 2, 3]).unwrap(), 0.0);
        assert!(coradius(g, &[]).is_err());
    }
}
