//! Primal network simplex for uncapacitated minimum-cost flow.
//!
//! Spanning-tree bases are kept strongly feasible (Cunningham's leaving-arc
//! rule), which rules out cycling under degeneracy. Reduced costs are
//! `c(u,v) - pi(u) + pi(v)`, so optimal potentials satisfy
//! `pi(u) - pi(v) <= c(u,v)` on every arc.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy)]
pub(crate) struct Arc {
    pub from: usize,
    pub to: usize,
    pub cost: f64,
}

#[derive(Debug, Clone)]
pub(crate) struct FlowSolution {
    /// Flow on each input arc.
    pub flow: Vec<f64>,
    /// Node potentials; `pi(u) - pi(v) <= cost` holds on every arc at optimum.
    pub potential: Vec<f64>,
}

#[derive(Clone, Copy, PartialEq)]
enum Pricing {
    Block,
    Full,
}

/// Solves `min sum c x` subject to `out(i) - in(i) = supply[i]`, `x >= 0`.
///
/// Supplies must balance to within `1e-9`; a deterministic restart with full
/// pricing is attempted before reporting failure.
pub(crate) fn min_cost_flow(n_nodes: usize, supply: &[f64], arcs: &[Arc]) -> Result<FlowSolution> {
    let imbalance: f64 = supply.iter().sum();
    if imbalance.abs() > 1e-9 {
        return Err(Error::SolverFailure(format!("supplies do not balance: {imbalance:e}")));
    }
    match Simplex::new(n_nodes, supply, arcs).run(Pricing::Block) {
        Ok(s) => Ok(s),
        Err(_) => Simplex::new(n_nodes, supply, arcs).run(Pricing::Full),
    }
}

struct Simplex<'a> {
    n: usize,
    root: usize,
    arcs: &'a [Arc],
    n_real: usize,
    supply: &'a [f64],
    // arc arrays including artificial arcs at n_real..n_real+n
    from: Vec<usize>,
    to: Vec<usize>,
    cost: Vec<f64>,
    flow: Vec<f64>,
    // tree arrays over n+1 nodes
    parent: Vec<usize>,
    pred: Vec<usize>,
    up: Vec<bool>,
    depth: Vec<usize>,
    pi: Vec<f64>,
    children: Vec<Vec<usize>>,
    next_arc: usize,
    price_tol: f64,
}

const NONE: usize = usize::MAX;

impl<'a> Simplex<'a> {
    fn new(n: usize, supply: &'a [f64], arcs: &'a [Arc]) -> Self {
        let n_real = arcs.len();
        let max_cost = arcs.iter().fold(0.0f64, |m, a| m.max(a.cost.abs()));
        let big = (n as f64 + 1.0) * max_cost.max(1.0) + 1.0;
        let root = n;
        let total = n_real + n;
        let mut from = Vec::with_capacity(total);
        let mut to = Vec::with_capacity(total);
        let mut cost = Vec::with_capacity(total);
        for a in arcs {
            from.push(a.from);
            to.push(a.to);
            cost.push(a.cost);
        }
        let mut flow = vec![0.0; total];
        let mut parent = vec![NONE; n + 1];
        let mut pred = vec![NONE; n + 1];
        let mut up = vec![false; n + 1];
        let mut depth = vec![0; n + 1];
        let mut pi = vec![0.0; n + 1];
        let mut children = vec![Vec::new(); n + 1];
        for i in 0..n {
            let a = n_real + i;
            if supply[i] >= 0.0 {
                from.push(i);
                to.push(root);
                up[i] = true;
                pi[i] = big;
            } else {
                from.push(root);
                to.push(i);
                up[i] = false;
                pi[i] = -big;
            }
            cost.push(big);
            flow[a] = supply[i].abs();
            parent[i] = root;
            pred[i] = a;
            depth[i] = 1;
            children[root].push(i);
        }
        Simplex {
            n,
            root,
            arcs,
            n_real,
            supply,
            from,
            to,
            cost,
            flow,
            parent,
            pred,
            up,
            depth,
            pi,
            children,
            next_arc: 0,
            price_tol: 1e-12 * max_cost.max(1.0),
        }
    }

    #[inline]
    fn reduced(&self, a: usize) -> f64 {
        self.cost[a] - self.pi[self.from[a]] + self.pi[self.to[a]]
    }

    fn find_entering(&mut self, pricing: Pricing) -> Option<usize> {
        let m = self.n_real;
        if m == 0 {
            return None;
        }
        let block = match pricing {
            Pricing::Block => ((m as f64).sqrt() as usize).max(16).min(m),
            Pricing::Full => m,
        };
        let mut best = NONE;
        let mut best_rc = -self.price_tol;
        let mut scanned = 0;
        let mut in_block = 0;
        let mut a = self.next_arc;
        while scanned < m {
            let rc = self.reduced(a);
            if rc < best_rc {
                best_rc = rc;
                best = a;
            }
            scanned += 1;
            in_block += 1;
            a += 1;
            if a == m {
                a = 0;
            }
            if in_block == block {
                if best != NONE {
                    break;
                }
                in_block = 0;
            }
        }
        self.next_arc = a;
        (best != NONE).then_some(best)
    }

    fn join(&self, mut u: usize, mut v: usize) -> usize {
        while u != v {
            if self.depth[u] > self.depth[v] {
                u = self.parent[u];
            } else if self.depth[v] > self.depth[u] {
                v = self.parent[v];
            } else {
                u = self.parent[u];
                v = self.parent[v];
            }
        }
        u
    }

    fn run(mut self, pricing: Pricing) -> Result<FlowSolution> {
        let max_iter = 200 * (self.n + self.n_real + 10) + 100_000;
        let mut iter = 0usize;
        while let Some(entering) = self.find_entering(pricing) {
            iter += 1;
            if iter > max_iter {
                return Err(Error::SolverFailure("iteration limit reached".into()));
            }
            self.pivot(entering)?;
        }
        self.finish()
    }

    fn pivot(&mut self, entering: usize) -> Result<()> {
        let first = self.from[entering];
        let second = self.to[entering];
        let join = self.join(first, second);

        // Leaving arc: last blocking arc met when walking the cycle from
        // the join in the direction of the entering arc.
        let mut delta = f64::INFINITY;
        let mut u_out = NONE;
        let mut side_first = true;
        let mut u = first;
        while u != join {
            if self.up[u] {
                let d = self.flow[self.pred[u]];
                if d < delta {
                    delta = d;
                    u_out = u;
                    side_first = true;
                }
            }
            u = self.parent[u];
        }
        let mut u = second;
        while u != join {
            if !self.up[u] {
                let d = self.flow[self.pred[u]];
                if d <= delta {
                    delta = d;
                    u_out = u;
                    side_first = false;
                }
            }
            u = self.parent[u];
        }
        if u_out == NONE {
            return Err(Error::SolverFailure("unbounded pivot".into()));
        }

        if delta > 0.0 {
            self.flow[entering] += delta;
            let mut u = first;
            while u != join {
                let a = self.pred[u];
                if self.up[u] {
                    self.flow[a] = (self.flow[a] - delta).max(0.0);
                } else {
                    self.flow[a] += delta;
                }
                u = self.parent[u];
            }
            let mut u = second;
            while u != join {
                let a = self.pred[u];
                if self.up[u] {
                    self.flow[a] += delta;
                } else {
                    self.flow[a] = (self.flow[a] - delta).max(0.0);
                }
                u = self.parent[u];
            }
        }
        self.flow[self.pred[u_out]] = 0.0;

        let (u_in, v_in) = if side_first { (first, second) } else { (second, first) };
        self.reroot(u_in, v_in, u_out, entering);
        Ok(())
    }

    /// Hangs the subtree cut off at `u_out` below `v_in` through the
    /// entering arc, reversing the path `u_in -> u_out`.
    fn reroot(&mut self, u_in: usize, v_in: usize, u_out: usize, entering: usize) {
        let mut path = vec![u_in];
        let mut u = u_in;
        while u != u_out {
            u = self.parent[u];
            path.push(u);
        }
        let old_arcs: Vec<usize> = path.iter().map(|&p| self.pred[p]).collect();
        let old_parent_out = self.parent[u_out];
        remove_child(&mut self.children[old_parent_out], u_out);
        for i in 1..path.len() {
            let (child, node) = (path[i - 1], path[i]);
            remove_child(&mut self.children[node], child);
            self.children[child].push(node);
            self.parent[node] = child;
            let a = old_arcs[i - 1];
            self.pred[node] = a;
            self.up[node] = self.from[a] == node;
        }
        self.parent[u_in] = v_in;
        self.pred[u_in] = entering;
        self.up[u_in] = self.from[entering] == u_in;
        self.children[v_in].push(u_in);

        // refresh depth and potentials below u_in
        let mut stack = vec![u_in];
        while let Some(x) = stack.pop() {
            let p = self.parent[x];
            let a = self.pred[x];
            self.depth[x] = self.depth[p] + 1;
            self.pi[x] = if self.up[x] {
                self.pi[p] + self.cost[a]
            } else {
                self.pi[p] - self.cost[a]
            };
            stack.extend(self.children[x].iter().copied());
        }
    }

    /// Recomputes tree flows from the supplies to shed accumulated rounding.
    fn finish(mut self) -> Result<FlowSolution> {
        let n = self.n;
        let mut order = Vec::with_capacity(n + 1);
        let mut stack = vec![self.root];
        while let Some(x) = stack.pop() {
            order.push(x);
            stack.extend(self.children[x].iter().copied());
        }
        let mut subtree: Vec<f64> = (0..=n).map(|i| if i < n { self.supply[i] } else { 0.0 }).collect();
        let scale = self.supply.iter().fold(0.0f64, |m, s| m.max(s.abs())).max(1e-300);
        for f in self.flow.iter_mut() {
            *f = 0.0;
        }
        for &x in order.iter().rev() {
            if x == self.root {
                continue;
            }
            let a = self.pred[x];
            let f = if self.up[x] { subtree[x] } else { -subtree[x] };
            if f < -1e-9 * scale.max(1.0) {
                return Err(Error::SolverFailure(format!("negative tree flow {f:e}")));
            }
            self.flow[a] = f.max(0.0);
            let p = self.parent[x];
            subtree[p] += subtree[x];
        }
        let artificial: f64 = self.flow[self.n_real..].iter().sum();
        if artificial > 1e-9 {
            return Err(Error::SolverFailure(format!(
                "infeasible: {artificial:e} units left on artificial arcs"
            )));
        }
        debug_assert_eq!(self.arcs.len(), self.n_real);
        self.flow.truncate(self.n_real);
        self.pi.truncate(n);
        Ok(FlowSolution {
            flow: self.flow,
            potential: self.pi,
        })
    }
}

fn remove_child(v: &mut Vec<usize>, c: usize) {
    if let Some(pos) = v.iter().position(|&x| x == c) {
        v.swap_remove(pos);
    }
}
