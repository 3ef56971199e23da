//! Sparse transshipment networks for pseudo-metric costs and the conversion
//! of their flows back into couplings.

use std::collections::VecDeque;

use super::simplex::Arc;
use crate::metric_space::{essential_edges, CostKind, CostMatrix};

pub(crate) struct Network {
    pub n_nodes: usize,
    pub arcs: Vec<Arc>,
}

/// Graph whose shortest-path metric is `cost`. `None` when the cost is not a
/// pseudo-metric the builder understands.
pub(crate) fn metric_network(cost: &CostMatrix) -> Option<Network> {
    let n = cost.len();
    let mut arcs = Vec::new();
    let both = |arcs: &mut Vec<Arc>, u: usize, v: usize, c: f64| {
        arcs.push(Arc { from: u, to: v, cost: c });
        arcs.push(Arc { from: v, to: u, cost: c });
    };
    match &cost.kind {
        CostKind::Capped { space, cap, slope } => {
            for &(i, j) in space.skeleton() {
                let c = slope * space.d(i, j);
                if c < *cap {
                    both(&mut arcs, i, j, c);
                }
            }
            if cap.is_finite() {
                for i in 0..n {
                    both(&mut arcs, i, n, cap / 2.0);
                }
                Some(Network { n_nodes: n + 1, arcs })
            } else {
                Some(Network { n_nodes: n, arcs })
            }
        }
        CostKind::Mismatch => {
            for i in 0..n {
                both(&mut arcs, i, n, 0.5);
            }
            Some(Network { n_nodes: n + 1, arcs })
        }
        CostKind::Dense(v) if cost.is_pseudo_metric() => {
            for (i, j) in essential_edges(n, |i, j| v[i * n + j]) {
                both(&mut arcs, i, j, v[i * n + j]);
            }
            Some(Network { n_nodes: n, arcs })
        }
        _ => None,
    }
}

/// Splits an acyclic flow into `(source, sink, mass)` shipments.
///
/// `supply[i] > 0` marks a source, `< 0` a sink; nodes at or beyond
/// `n_states` are pure transit nodes.
pub(crate) fn decompose(
    n_nodes: usize,
    n_states: usize,
    supply: &[f64],
    arcs: &[Arc],
    flow: &[f64],
) -> Vec<(usize, usize, f64)> {
    let mut out: Vec<Vec<usize>> = vec![Vec::new(); n_nodes];
    let mut indeg = vec![0usize; n_nodes];
    for (a, arc) in arcs.iter().enumerate() {
        if flow[a] > 0.0 {
            out[arc.from].push(a);
            indeg[arc.to] += 1;
        }
    }
    let mut ready: VecDeque<usize> = (0..n_nodes).filter(|&v| indeg[v] == 0).collect();
    let mut packets: Vec<VecDeque<(usize, f64)>> = vec![VecDeque::new(); n_nodes];
    let mut shipments = Vec::new();
    while let Some(u) = ready.pop_front() {
        let mut here = std::mem::take(&mut packets[u]);
        if u < n_states && supply[u] > 0.0 {
            here.push_back((u, supply[u]));
        }
        let mut need = if u < n_states { (-supply[u]).max(0.0) } else { 0.0 };
        while need > 0.0 {
            let Some((o, m)) = here.pop_front() else { break };
            if m <= need {
                shipments.push((o, u, m));
                need -= m;
            } else {
                shipments.push((o, u, need));
                here.push_front((o, m - need));
                need = 0.0;
            }
        }
        let k = out[u].len();
        for (idx, &a) in out[u].iter().enumerate() {
            let v = arcs[a].to;
            if idx + 1 == k {
                packets[v].extend(here.drain(..));
            } else {
                let mut want = flow[a];
                while want > 0.0 {
                    let Some((o, m)) = here.pop_front() else { break };
                    if m <= want {
                        packets[v].push_back((o, m));
                        want -= m;
                    } else {
                        packets[v].push_back((o, want));
                        here.push_front((o, m - want));
                        want = 0.0;
                    }
                }
            }
            indeg[v] -= 1;
            if indeg[v] == 0 {
                ready.push_back(v);
            }
        }
        // rounding dust with nowhere to go stays at the last sink it reached
        if u < n_states {
            for (o, m) in here {
                if m > 0.0 {
                    shipments.push((o, u, m));
                }
            }
        }
    }
    shipments
}
