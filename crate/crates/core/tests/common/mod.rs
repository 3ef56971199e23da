//! Shared oracles and generators for the integration tests.
#![allow(dead_code)]

use std::collections::HashMap;
use std::sync::Arc;

use rand::Rng;
use rand_chacha::ChaCha8Rng;
use semcert_core::{Distribution, MetricSpace};

/// Weights are integer multiples of 1/UNIT.
pub const UNIT: u32 = 64;

/// Minimum of `sum c x` over the vertices of the transportation polytope.
///
/// Every vertex arises from the generalized northwest rule: pick any cell
/// with both margins open, ship `min(row, col)`, close whichever margin hits
/// zero, repeat. The search runs over all such pick sequences, memoized on
/// the residual margins.
pub fn vertex_oracle(mu: &[u32], nu: &[u32], cost: &[Vec<f64>]) -> f64 {
    // residual margins packed 8 bits each into one key
    fn key(r: &[u32], c: &[u32]) -> u128 {
        r.iter().chain(c).fold(0u128, |k, &x| (k << 8) | x as u128)
    }
    fn go(r: &mut [u32], c: &mut [u32], cost: &[Vec<f64>], memo: &mut HashMap<u128, f64>) -> f64 {
        if r.iter().all(|&x| x == 0) {
            return 0.0;
        }
        let k = key(r, c);
        if let Some(&v) = memo.get(&k) {
            return v;
        }
        let mut best = f64::INFINITY;
        for i in 0..r.len() {
            if r[i] == 0 {
                continue;
            }
            for j in 0..c.len() {
                if c[j] == 0 {
                    continue;
                }
                let m = r[i].min(c[j]);
                r[i] -= m;
                c[j] -= m;
                let v = cost[i][j] * m as f64 / UNIT as f64 + go(r, c, cost, memo);
                r[i] += m;
                c[j] += m;
                best = best.min(v);
            }
        }
        memo.insert(k, best);
        best
    }
    assert!(mu.len() + nu.len() <= 16);
    let mut memo = HashMap::new();
    go(&mut mu.to_vec(), &mut nu.to_vec(), cost, &mut memo)
}

/// Random composition of UNIT into `n` nonnegative parts.
pub fn random_units(rng: &mut ChaCha8Rng, n: usize) -> Vec<u32> {
    let mut cuts: Vec<u32> = (0..n - 1).map(|_| rng.gen_range(0..=UNIT)).collect();
    cuts.sort_unstable();
    let mut out = Vec::with_capacity(n);
    let mut prev = 0;
    for c in cuts {
        out.push(c - prev);
        prev = c;
    }
    out.push(UNIT - prev);
    out
}

pub fn to_dist(units: &[u32]) -> Distribution {
    Distribution::new(units.iter().map(|&u| u as f64 / UNIT as f64).collect()).unwrap()
}

pub fn labels(n: usize) -> Vec<String> {
    (0..n).map(|i| format!("s{i}")).collect()
}

/// Points in the plane with Euclidean distance.
pub fn planar_space(rng: &mut ChaCha8Rng, n: usize) -> Arc<MetricSpace> {
    let pts: Vec<(f64, f64)> = (0..n).map(|_| (rng.gen_range(0.0..4.0), rng.gen_range(0.0..4.0))).collect();
    let d = pts
        .iter()
        .map(|a| pts.iter().map(|b| ((a.0 - b.0).powi(2) + (a.1 - b.1).powi(2)).sqrt()).collect())
        .collect();
    Arc::new(semcert_core::metric_space::validate_space(labels(n), d, 0).unwrap())
}

pub fn line_space(rng: &mut ChaCha8Rng, n: usize) -> Arc<MetricSpace> {
    let coords: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..4.0)).collect();
    Arc::new(MetricSpace::from_line(labels(n), coords, 0).unwrap())
}
