//! Successive shortest paths with Dijkstra on reduced costs. Kept
//! independent of the simplex so that it can cross-check it.

use std::cmp::Ordering;
use std::collections::BinaryHeap;

use super::simplex::Arc;
use crate::error::{Error, Result};

#[derive(PartialEq)]
struct Item(f64, usize);

impl Eq for Item {}

impl Ord for Item {
    fn cmp(&self, other: &Self) -> Ordering {
        other.0.total_cmp(&self.0).then(other.1.cmp(&self.1))
    }
}

impl PartialOrd for Item {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Optimal dual potentials `phi` of the uncapacitated transshipment problem:
/// `phi(u) - phi(v) <= cost` on every arc and `sum phi * supply` equals the
/// optimal cost.
pub(crate) fn dual_potentials(n: usize, supply: &[f64], arcs: &[Arc]) -> Result<Vec<f64>> {
    let mut adj: Vec<Vec<(usize, bool)>> = vec![Vec::new(); n];
    for (a, arc) in arcs.iter().enumerate() {
        adj[arc.from].push((a, true));
        adj[arc.to].push((a, false));
    }
    let scale = supply.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(1e-300);
    let tol = 1e-13 * scale;
    let mut excess = supply.to_vec();
    let mut flow = vec![0.0; arcs.len()];
    let mut p = vec![0.0; n];
    let mut dist = vec![f64::INFINITY; n];
    let mut pred: Vec<Option<(usize, bool)>> = vec![None; n];
    let mut done = vec![false; n];
    let max_rounds = 10 * (n + arcs.len()) + 100;

    for _ in 0..max_rounds {
        if excess.iter().all(|&e| e <= tol) {
            return Ok(p.iter().map(|x| -x).collect());
        }
        dist.iter_mut().for_each(|d| *d = f64::INFINITY);
        pred.iter_mut().for_each(|x| *x = None);
        done.iter_mut().for_each(|x| *x = false);
        let mut heap = BinaryHeap::new();
        for v in 0..n {
            if excess[v] > tol {
                dist[v] = 0.0;
                heap.push(Item(0.0, v));
            }
        }
        let mut target = None;
        while let Some(Item(d, u)) = heap.pop() {
            if done[u] || d > dist[u] {
                continue;
            }
            done[u] = true;
            if excess[u] < -tol {
                target = Some(u);
                break;
            }
            for &(a, fwd) in &adj[u] {
                let arc = arcs[a];
                let (v, rc) = if fwd {
                    (arc.to, arc.cost + p[u] - p[arc.to])
                } else {
                    if flow[a] <= 0.0 {
                        continue;
                    }
                    (arc.from, -arc.cost + p[u] - p[arc.from])
                };
                let nd = d + rc.max(0.0);
                if nd < dist[v] {
                    dist[v] = nd;
                    pred[v] = Some((a, fwd));
                    heap.push(Item(nd, v));
                }
            }
        }
        let t = target.ok_or_else(|| Error::SolverFailure("no augmenting path to a deficit node".into()))?;
        let dt = dist[t];
        for v in 0..n {
            p[v] += dist[v].min(dt);
        }
        // bottleneck along the path
        let mut amount = -excess[t];
        let mut v = t;
        while let Some((a, fwd)) = pred[v] {
            if fwd {
                v = arcs[a].from;
            } else {
                amount = amount.min(flow[a]);
                v = arcs[a].to;
            }
        }
        amount = amount.min(excess[v]);
        let s = v;
        let mut v = t;
        while let Some((a, fwd)) = pred[v] {
            if fwd {
                flow[a] += amount;
                v = arcs[a].from;
            } else {
                flow[a] -= amount;
                v = arcs[a].to;
            }
        }
        excess[s] -= amount;
        excess[t] += amount;
    }
    Err(Error::SolverFailure("shortest-path iteration limit reached".into()))
}
