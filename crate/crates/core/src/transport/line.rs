//! Exact closeness transport on spaces that embed isometrically in the line.
//!
//! For the cost `1(d > eps)` the problem is a bipartite b-matching whose
//! neighbourhoods are windows of equal width sliding monotonically along the
//! line. Sweeping sources left to right and always feeding the leftmost open
//! sink in the window is optimal. The dual comes from the minimum cut: nodes
//! reachable in the residual network from unsaturated sources.

use crate::metric_space::{LineEmbedding, MetricSpace};

pub(crate) struct LineClosenessSolution {
    /// `(source, sink, mass)`; close pairs first, then the leftover pairing.
    pub entries: Vec<(usize, usize, f64)>,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
}

pub(crate) fn solve(space: &MetricSpace, line: &LineEmbedding, mu: &[f64], nu: &[f64], eps: f64) -> LineClosenessSolution {
    let n = mu.len();
    let order = &line.order;
    let x = &line.coords;
    let close = |i: usize, j: usize| space.d(i, j) <= eps;

    let mut rem_mu = mu.to_vec();
    let mut rem_nu = nu.to_vec();
    let mut entries: Vec<(usize, usize, f64)> = Vec::new();

    let mut q = 0usize; // first order position that may still serve a sink
    for &i in order {
        if rem_mu[i] <= 0.0 {
            continue;
        }
        while q < n {
            let j = order[q];
            if rem_nu[j] <= 0.0 || (x[j] < x[i] && !close(i, j)) {
                q += 1;
            } else {
                break;
            }
        }
        let mut p = q;
        while p < n && rem_mu[i] > 0.0 {
            let j = order[p];
            if x[j] > x[i] && !close(i, j) {
                break;
            }
            if rem_nu[j] > 0.0 && close(i, j) {
                let take = rem_mu[i].min(rem_nu[j]);
                if take == rem_mu[i] {
                    rem_mu[i] = 0.0;
                    rem_nu[j] -= take;
                } else {
                    rem_nu[j] = 0.0;
                    rem_mu[i] -= take;
                }
                entries.push((i, j, take));
            }
            p += 1;
        }
    }
    let n_matched = entries.len();

    // Residual reachability from unsaturated sources.
    let mut adj_back: Vec<Vec<usize>> = vec![Vec::new(); n];
    for &(i, j, m) in &entries {
        if m > 0.0 {
            adj_back[j].push(i);
        }
    }
    let mut in_s = vec![false; n];
    let mut in_t = vec![false; n];
    let mut stack: Vec<usize> = Vec::new();
    for i in 0..n {
        if rem_mu[i] > 0.0 {
            in_s[i] = true;
            stack.push(i);
        }
    }
    // union-find "next unvisited sink" over order positions
    let mut next: Vec<usize> = (0..=n).collect();
    fn find(next: &mut [usize], mut a: usize) -> usize {
        while next[a] != a {
            next[a] = next[next[a]];
            a = next[a];
        }
        a
    }
    let slack = 1e-9 * (1.0 + eps);
    while let Some(i) = stack.pop() {
        let lo = order.partition_point(|&s| x[s] < x[i] - eps - slack);
        let mut k = find(&mut next, lo);
        while k < n {
            let j = order[k];
            if x[j] > x[i] + eps + slack {
                break;
            }
            if close(i, j) {
                next[k] = k + 1;
                in_t[j] = true;
                for &i2 in &adj_back[j] {
                    if !in_s[i2] {
                        in_s[i2] = true;
                        stack.push(i2);
                    }
                }
            }
            k = find(&mut next, k + 1);
        }
    }
    let f: Vec<f64> = in_s.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let g: Vec<f64> = in_t.iter().map(|&b| if b { -1.0 } else { 0.0 }).collect();

    // Pair leftovers in order; none of these pairs is close.
    let lm: Vec<usize> = order.iter().copied().filter(|&i| rem_mu[i] > 0.0).collect();
    let ln: Vec<usize> = order.iter().copied().filter(|&j| rem_nu[j] > 0.0).collect();
    let (mut a, mut b) = (0, 0);
    while a < lm.len() && b < ln.len() {
        let (i, j) = (lm[a], ln[b]);
        if rem_mu[i] <= rem_nu[j] {
            entries.push((i, j, rem_mu[i]));
            rem_nu[j] -= rem_mu[i];
            rem_mu[i] = 0.0;
            a += 1;
        } else {
            entries.push((i, j, rem_nu[j]));
            rem_mu[i] -= rem_nu[j];
            rem_nu[j] = 0.0;
            b += 1;
        }
    }
    debug_assert!(entries[..n_matched].iter().all(|&(i, j, _)| close(i, j)));
    LineClosenessSolution { entries, f, g }
}
