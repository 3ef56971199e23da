//! Two copies of a reset-or-advance chain, one on the integers and one on
//! the shifted points `n + xi/n`. Both lattices are closed, so the chain has
//! two ergodic measures while the lattices come arbitrarily close.

use std::collections::BTreeMap;
use std::sync::Arc;

use crate::diagnostics::CouplingProvider;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric_space::MetricSpace;
use crate::transport::Coupling;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct XiChainSpec {
    pub xi: f64,
    /// Levels per lattice.
    pub depth: usize,
}

impl XiChainSpec {
    pub fn new(xi: f64, depth: usize) -> Result<Self> {
        if !(xi > 0.0 && xi < 0.5) {
            return Err(Error::OutOfDomain { value: xi, domain: "0 < xi < 1/2" });
        }
        if depth < 2 {
            return Err(Error::OutOfDomain { value: depth as f64, domain: "depth >= 2" });
        }
        Ok(XiChainSpec { xi, depth })
    }

    pub fn len(&self) -> usize {
        2 * self.depth
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Index of the integer state `n` (1-based level).
    pub fn integer(&self, n: usize) -> usize {
        n - 1
    }

    /// Index of the shifted state `n + xi/n`.
    pub fn shifted(&self, n: usize) -> usize {
        self.depth + n - 1
    }

    /// `(level, shifted?)` of a state index.
    pub fn level(&self, i: usize) -> (usize, bool) {
        if i < self.depth {
            (i + 1, false)
        } else {
            (i - self.depth + 1, true)
        }
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        let (n, s) = self.level(i);
        if s {
            n as f64 + self.xi / n as f64
        } else {
            n as f64
        }
    }

    fn reset(&self, i: usize) -> usize {
        if i < self.depth {
            0
        } else {
            self.depth
        }
    }

    fn advance(&self, i: usize) -> usize {
        let (n, _) = self.level(i);
        if n == self.depth {
            self.reset(i)
        } else {
            i + 1
        }
    }

    pub fn space(&self) -> Result<Arc<MetricSpace>> {
        let labels = (0..self.len())
            .map(|i| {
                let (n, s) = self.level(i);
                if s {
                    format!("{n}+xi/{n}")
                } else {
                    n.to_string()
                }
            })
            .collect();
        let coords = (0..self.len()).map(|i| self.coordinate(i)).collect();
        Ok(Arc::new(MetricSpace::from_line(labels, coords, 0)?))
    }
}

/// From a level below the top: half to the lattice base, half one level up.
/// The top level returns to the base.
pub fn build_xi_chain(spec: &XiChainSpec) -> Result<Kernel> {
    let n = spec.len();
    let mut m = vec![0.0; n * n];
    for i in 0..n {
        m[i * n + spec.reset(i)] += 0.5;
        m[i * n + spec.advance(i)] += 0.5;
    }
    Kernel::from_flat(spec.space()?, m)
}

/// `sum_{i<=depth} 2^-i` on each lattice (mass `1 - 2^-depth`).
pub fn xi_chain_reference_measures(spec: &XiChainSpec) -> (Vec<f64>, Vec<f64>) {
    let mut a = vec![0.0; spec.len()];
    let mut b = vec![0.0; spec.len()];
    for lvl in 1..=spec.depth {
        let w = 0.5f64.powi(lvl as i32);
        a[spec.integer(lvl)] = w;
        b[spec.shifted(lvl)] = w;
    }
    (a, b)
}

/// Both coordinates read the same coin: both reset or both advance.
#[derive(Debug, Clone)]
pub struct XiSyncProvider {
    pub spec: XiChainSpec,
}

impl CouplingProvider for XiSyncProvider {
    fn name(&self) -> String {
        "xi-sync".into()
    }

    fn joint(&self, kernel: &Kernel, x: usize, y: usize, t: u32, _law_y: &crate::metric_space::Distribution) -> Result<Coupling> {
        let n = self.spec.len();
        if kernel.len() != n {
            return Err(Error::SpaceMismatch { expected: n, got: kernel.len() });
        }
        let mut law: BTreeMap<(usize, usize), f64> = BTreeMap::new();
        law.insert((x, y), 1.0);
        for _ in 0..t {
            let mut next = BTreeMap::new();
            for (&(a, b), &m) in &law {
                *next.entry((self.spec.reset(a), self.spec.reset(b))).or_insert(0.0) += 0.5 * m;
                *next.entry((self.spec.advance(a), self.spec.advance(b))).or_insert(0.0) += 0.5 * m;
            }
            law = next;
        }
        let entries = law.into_iter().map(|((a, b), m)| (a, b, m)).collect();
        Ok(Coupling::from_entries(n, n, entries))
    }
}
