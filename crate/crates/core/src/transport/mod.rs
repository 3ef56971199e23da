//! Exact optimal transport between distributions on a finite space:
//! Wasserstein values with certified dual potentials, total variation,
//! maximal and closeness-maximizing couplings, and the gluing of couplings.

mod line;
mod network;
mod simplex;
mod ssp;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_space::{CostKind, CostMatrix, Distribution, MetricSpace};
use crate::par;

/// Marginal tolerance for couplings.
pub const MARGINAL_TOL: f64 = 1e-10;
/// Dual feasibility and value tolerance.
pub const DUAL_TOL: f64 = 1e-10;
/// Largest admissible primal-dual gap.
pub const GAP_TOL: f64 = 1e-8;
/// Debug builds rescan dual feasibility on every pair up to this size.
const CERTIFY_SCAN_MAX: usize = 400;

/// A joint law stored as sorted `(row, col, mass)` triplets with its
/// declared marginals.
#[derive(Debug, Clone, PartialEq)]
pub struct Coupling {
    rows: usize,
    cols: usize,
    entries: Vec<(usize, usize, f64)>,
    mu: Vec<f64>,
    nu: Vec<f64>,
}

/// On-disk form of a coupling.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CouplingFile {
    pub rows: Vec<String>,
    pub cols: Vec<String>,
    pub joint: Vec<Vec<f64>>,
}

impl Coupling {
    /// Builds a coupling and checks it against the declared marginals.
    pub fn new(
        rows: usize,
        cols: usize,
        entries: Vec<(usize, usize, f64)>,
        mu: Vec<f64>,
        nu: Vec<f64>,
    ) -> Result<Self> {
        if mu.len() != rows {
            return Err(Error::SpaceMismatch { expected: rows, got: mu.len() });
        }
        if nu.len() != cols {
            return Err(Error::SpaceMismatch { expected: cols, got: nu.len() });
        }
        for &(i, j, m) in &entries {
            if i >= rows || j >= cols {
                return Err(Error::Malformed(format!("coupling entry ({i}, {j}) out of range")));
            }
            if !m.is_finite() || m < 0.0 {
                return Err(Error::Malformed(format!("coupling entry ({i}, {j}) is {m}")));
            }
        }
        let c = Self::raw(rows, cols, entries, mu, nu);
        let err = c.marginal_error();
        if err > MARGINAL_TOL {
            return Err(Error::MarginalMismatch(err));
        }
        Ok(c)
    }

    /// Coupling whose declared marginals are those of `joint`.
    pub fn from_dense(joint: &[Vec<f64>]) -> Result<Self> {
        let rows = joint.len();
        let cols = joint.first().map_or(0, |r| r.len());
        let mut entries = Vec::new();
        for (i, row) in joint.iter().enumerate() {
            if row.len() != cols {
                return Err(Error::Malformed(format!("joint: row {i} has wrong length")));
            }
            for (j, &m) in row.iter().enumerate() {
                if !m.is_finite() || m < 0.0 {
                    return Err(Error::Malformed(format!("joint[{i}][{j}] is {m}")));
                }
                if m > 0.0 {
                    entries.push((i, j, m));
                }
            }
        }
        let total: f64 = entries.iter().map(|e| e.2).sum();
        if (total - 1.0).abs() > MARGINAL_TOL {
            return Err(Error::InvalidDistribution(format!("joint sums to {total}")));
        }
        Ok(Self::from_entries(rows, cols, entries))
    }

    /// Coupling whose declared marginals are computed from `entries`.
    pub(crate) fn from_entries(rows: usize, cols: usize, entries: Vec<(usize, usize, f64)>) -> Self {
        let mut mu = vec![0.0; rows];
        let mut nu = vec![0.0; cols];
        for &(i, j, m) in &entries {
            mu[i] += m;
            nu[j] += m;
        }
        Self::raw(rows, cols, entries, mu, nu)
    }

    fn raw(rows: usize, cols: usize, mut entries: Vec<(usize, usize, f64)>, mu: Vec<f64>, nu: Vec<f64>) -> Self {
        entries.sort_by_key(|a| (a.0, a.1));
        let mut merged: Vec<(usize, usize, f64)> = Vec::with_capacity(entries.len());
        for e in entries {
            match merged.last_mut() {
                Some(last) if last.0 == e.0 && last.1 == e.1 => last.2 += e.2,
                _ => merged.push(e),
            }
        }
        merged.retain(|e| e.2 > 0.0);
        Coupling { rows, cols, entries: merged, mu, nu }
    }

    pub fn rows(&self) -> usize {
        self.rows
    }

    pub fn cols(&self) -> usize {
        self.cols
    }

    /// Nonzero `(row, col, mass)` entries in row-major order.
    pub fn entries(&self) -> &[(usize, usize, f64)] {
        &self.entries
    }

    pub fn mu(&self) -> &[f64] {
        &self.mu
    }

    pub fn nu(&self) -> &[f64] {
        &self.nu
    }

    pub fn get(&self, i: usize, j: usize) -> f64 {
        self.entries
            .binary_search_by(|e| (e.0, e.1).cmp(&(i, j)))
            .map_or(0.0, |k| self.entries[k].2)
    }

    pub fn row_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.rows];
        for &(i, _, m) in &self.entries {
            s[i] += m;
        }
        s
    }

    pub fn col_sums(&self) -> Vec<f64> {
        let mut s = vec![0.0; self.cols];
        for &(_, j, m) in &self.entries {
            s[j] += m;
        }
        s
    }

    /// Largest deviation of a row or column sum from its declared marginal.
    pub fn marginal_error(&self) -> f64 {
        let r = self.row_sums().iter().zip(&self.mu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        let c = self.col_sums().iter().zip(&self.nu).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        r.max(c)
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.2).sum()
    }

    /// `E[f(X, Y)]`.
    pub fn expectation(&self, f: impl Fn(usize, usize) -> f64) -> f64 {
        self.entries.iter().map(|&(i, j, m)| m * f(i, j)).sum()
    }

    /// Probability of the event `pred(X, Y)`.
    pub fn mass_where(&self, pred: impl Fn(usize, usize) -> bool) -> f64 {
        self.entries.iter().filter(|&&(i, j, _)| pred(i, j)).map(|e| e.2).sum()
    }

    /// `P(X != Y)`.
    pub fn off_diagonal_mass(&self) -> f64 {
        self.mass_where(|i, j| i != j)
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        let mut d = vec![vec![0.0; self.cols]; self.rows];
        for &(i, j, m) in &self.entries {
            d[i][j] = m;
        }
        d
    }

    pub fn to_file(&self, row_space: &MetricSpace, col_space: &MetricSpace) -> CouplingFile {
        CouplingFile {
            rows: row_space.labels().to_vec(),
            cols: col_space.labels().to_vec(),
            joint: self.to_dense(),
        }
    }
}

/// Optimal value, an optimal coupling and dual potentials certifying it.
#[derive(Debug, Clone)]
pub struct TransportResult {
    pub value: f64,
    pub coupling: Coupling,
    pub f: Vec<f64>,
    pub g: Vec<f64>,
    pub duality_gap: f64,
}

impl TransportResult {
    /// Re-checks primal value, dual feasibility on every pair, and the gap.
    pub fn certify(&self, cost: &CostMatrix) -> Result<()> {
        let primal = self.coupling.expectation(|i, j| cost.get(i, j));
        if (primal - self.value).abs() > DUAL_TOL {
            return Err(Error::SolverFailure(format!(
                "reported value {} differs from coupling cost {primal}",
                self.value
            )));
        }
        let n = cost.len();
        let worst = par::map_range(n, |i| {
            (0..n)
                .map(|j| self.f[i] + self.g[j] - cost.get(i, j))
                .fold(f64::NEG_INFINITY, f64::max)
        })
        .into_iter()
        .fold(f64::NEG_INFINITY, f64::max);
        if worst > DUAL_TOL {
            return Err(Error::SolverFailure(format!("dual infeasible by {worst:e}")));
        }
        if self.duality_gap.abs() > GAP_TOL || self.duality_gap.is_nan() {
            return Err(Error::SolverFailure(format!("duality gap {:e}", self.duality_gap)));
        }
        Ok(())
    }
}

/// Sparse three-index law from [`glue`].
#[derive(Debug, Clone)]
pub struct TripleJoint {
    pub dims: (usize, usize, usize),
    pub entries: Vec<(usize, usize, usize, f64)>,
}

impl TripleJoint {
    fn pair(&self, dims: (usize, usize), pick: impl Fn(&(usize, usize, usize, f64)) -> (usize, usize)) -> Coupling {
        let entries = self
            .entries
            .iter()
            .map(|e| {
                let (a, b) = pick(e);
                (a, b, e.3)
            })
            .collect();
        Coupling::from_entries(dims.0, dims.1, entries)
    }

    pub fn marginal_12(&self) -> Coupling {
        self.pair((self.dims.0, self.dims.1), |e| (e.0, e.1))
    }

    pub fn marginal_23(&self) -> Coupling {
        self.pair((self.dims.1, self.dims.2), |e| (e.1, e.2))
    }

    pub fn marginal_13(&self) -> Coupling {
        self.pair((self.dims.0, self.dims.2), |e| (e.0, e.2))
    }

    pub fn total_mass(&self) -> f64 {
        self.entries.iter().map(|e| e.3).sum()
    }
}

fn check_pair(mu: &Distribution, nu: &Distribution) -> Result<()> {
    nu.check_len(mu.len())
}

/// `sup_A |mu(A) - nu(A)|`, computed as half the L1 distance.
pub fn tv_distance(mu: &Distribution, nu: &Distribution) -> Result<f64> {
    check_pair(mu, nu)?;
    Ok((0.5 * mu.l1_distance(nu)).min(1.0))
}

/// Common part on the diagonal, residuals coupled proportionally.
pub fn maximal_coupling(mu: &Distribution, nu: &Distribution) -> Result<Coupling> {
    check_pair(mu, nu)?;
    let (a, b) = (mu.weights(), nu.weights());
    let n = a.len();
    let mut entries: Vec<(usize, usize, f64)> = (0..n)
        .filter_map(|i| {
            let m = a[i].min(b[i]);
            (m > 0.0).then_some((i, i, m))
        })
        .collect();
    let plus: Vec<(usize, f64)> = (0..n).filter(|&i| a[i] > b[i]).map(|i| (i, a[i] - b[i])).collect();
    let minus: Vec<(usize, f64)> = (0..n).filter(|&j| b[j] > a[j]).map(|j| (j, b[j] - a[j])).collect();
    let tp: f64 = plus.iter().map(|p| p.1).sum();
    let tm: f64 = minus.iter().map(|p| p.1).sum();
    let t = 0.5 * (tp + tm);
    if t > 0.0 {
        for &(i, p) in &plus {
            for &(j, q) in &minus {
                entries.push((i, j, p * q / t));
            }
        }
    }
    Ok(Coupling::raw(n, n, entries, a.to_vec(), b.to_vec()))
}

/// Exact `inf_gamma sum c gamma` over couplings of `mu` and `nu`.
pub fn wasserstein(mu: &Distribution, nu: &Distribution, cost: &CostMatrix) -> Result<TransportResult> {
    let n = cost.len();
    mu.check_len(n)?;
    nu.check_len(n)?;
    let (a, b) = (mu.weights(), nu.weights());
    let (entries, f, g) = if cost.max_value() == 0.0 {
        let c = maximal_coupling(mu, nu)?;
        (c.entries, vec![0.0; n], vec![0.0; n])
    } else {
        match &cost.kind {
            CostKind::Mismatch => {
                let c = maximal_coupling(mu, nu)?;
                let f: Vec<f64> = (0..n).map(|i| if a[i] > b[i] { 1.0 } else { 0.0 }).collect();
                let g = f.iter().map(|x| -x).collect();
                (c.entries, f, g)
            }
            CostKind::Threshold { space, eps } if space.line_embedding().is_some() => {
                let line = space.line_embedding().expect("checked above");
                // the cut potentials are exactly feasible
                let sol = line::solve(space, line, a, b, *eps);
                (sol.entries, sol.f, sol.g)
            }
            _ => match network::metric_network(cost) {
                Some(net) => transshipment(a, b, cost, &net)?,
                None => bipartite(a, b, cost)?,
            },
        }
    };
    let coupling = Coupling::raw(n, n, entries, a.to_vec(), b.to_vec());
    let value = coupling.expectation(|i, j| cost.get(i, j));
    let dual: f64 = f.iter().zip(a).map(|(x, w)| x * w).sum::<f64>() + g.iter().zip(b).map(|(x, w)| x * w).sum::<f64>();
    let result = TransportResult {
        value,
        duality_gap: value - dual,
        coupling,
        f,
        g,
    };
    let merr = result.coupling.marginal_error();
    if merr > MARGINAL_TOL {
        return Err(Error::SolverFailure(format!("coupling marginals off by {merr:e}")));
    }
    if result.duality_gap.abs() > GAP_TOL {
        return Err(Error::SolverFailure(format!("duality gap {:e}", result.duality_gap)));
    }
    if cfg!(debug_assertions) && n <= CERTIFY_SCAN_MAX {
        result.certify(cost)?;
    }
    Ok(result)
}

type Solved = (Vec<(usize, usize, f64)>, Vec<f64>, Vec<f64>);

fn transshipment(a: &[f64], b: &[f64], cost: &CostMatrix, net: &network::Network) -> Result<Solved> {
    let n = a.len();
    let mut supply = vec![0.0; net.n_nodes];
    let mut entries = Vec::new();
    for i in 0..n {
        supply[i] = a[i] - b[i];
        let m = a[i].min(b[i]);
        if m > 0.0 {
            entries.push((i, i, m));
        }
    }
    balance(&mut supply[..n]);
    let sol = simplex::min_cost_flow(net.n_nodes, &supply, &net.arcs)?;
    entries.extend(network::decompose(net.n_nodes, n, &supply, &net.arcs, &sol.flow));
    let f: Vec<f64> = sol.potential[..n].to_vec();
    let (f, g) = repair(cost, &f, None);
    Ok((entries, f, g))
}

fn bipartite(a: &[f64], b: &[f64], cost: &CostMatrix) -> Result<Solved> {
    let src: Vec<usize> = (0..a.len()).filter(|&i| a[i] > 0.0).collect();
    let dst: Vec<usize> = (0..b.len()).filter(|&j| b[j] > 0.0).collect();
    let ns = src.len();
    let mut supply: Vec<f64> = src.iter().map(|&i| a[i]).chain(dst.iter().map(|&j| -b[j])).collect();
    let (sp, dm) = supply.split_at_mut(ns);
    let excess: f64 = sp.iter().sum::<f64>() + dm.iter().sum::<f64>();
    if let Some(last) = dm.last_mut() {
        *last -= excess;
    }
    let mut arcs = Vec::with_capacity(ns * dst.len());
    for (si, &i) in src.iter().enumerate() {
        for (di, &j) in dst.iter().enumerate() {
            arcs.push(simplex::Arc { from: si, to: ns + di, cost: cost.get(i, j) });
        }
    }
    let sol = simplex::min_cost_flow(ns + dst.len(), &supply, &arcs)?;
    let mut entries = Vec::new();
    for (k, arc) in arcs.iter().enumerate() {
        if sol.flow[k] > 0.0 {
            entries.push((src[arc.from], dst[arc.to - ns], sol.flow[k]));
        }
    }
    let mut f = vec![f64::NEG_INFINITY; a.len()];
    for (si, &i) in src.iter().enumerate() {
        f[i] = sol.potential[si];
    }
    let (f, g) = repair(cost, &f, Some(&src));
    Ok((entries, f, g))
}

/// Makes the net supply of the states sum to exactly zero by adjusting the
/// largest entry.
fn balance(supply: &mut [f64]) {
    let total: f64 = supply.iter().sum();
    if let Some(k) = (0..supply.len()).max_by(|&x, &y| supply[x].abs().total_cmp(&supply[y].abs())) {
        supply[k] -= total;
    }
}

/// Double c-transform: `g = f^c`, then `f = g^c`. The result is feasible on
/// every pair and its dual value is at least that of the input.
fn repair(cost: &CostMatrix, f: &[f64], rows: Option<&[usize]>) -> (Vec<f64>, Vec<f64>) {
    let n = cost.len();
    let all: Vec<usize>;
    let rows = match rows {
        Some(r) => r,
        None => {
            all = (0..n).collect();
            &all
        }
    };
    let g = par::map_range(n, |j| {
        rows.iter()
            .map(|&i| cost.get(i, j) - f[i])
            .fold(f64::INFINITY, f64::min)
    });
    let f = par::map_range(n, |i| (0..n).map(|j| cost.get(i, j) - g[j]).fold(f64::INFINITY, f64::min));
    (f, g)
}

/// Largest probability any coupling of `mu`, `nu` can give to pairs at
/// distance at most `eps`, with an optimal coupling.
pub fn max_closeness(mu: &Distribution, nu: &Distribution, space: &std::sync::Arc<MetricSpace>, eps: f64) -> Result<(f64, Coupling)> {
    if !(eps >= 0.0) {
        return Err(Error::OutOfDomain { value: eps, domain: "eps >= 0" });
    }
    mu.check_len(space.len())?;
    let cost = CostMatrix::threshold(space, eps);
    let res = wasserstein(mu, nu, &cost)?;
    let close = res.coupling.mass_where(|i, j| space.d(i, j) <= eps);
    Ok((close.clamp(0.0, 1.0), res.coupling))
}

/// Composes `gamma12` and `gamma23` through their shared middle marginal.
pub fn glue(gamma12: &Coupling, gamma23: &Coupling) -> Result<TripleJoint> {
    if gamma12.cols != gamma23.rows {
        return Err(Error::SpaceMismatch { expected: gamma12.cols, got: gamma23.rows });
    }
    let middle = gamma23.row_sums();
    let l1: f64 = gamma12.col_sums().iter().zip(&middle).map(|(a, b)| (a - b).abs()).sum();
    if l1 > MARGINAL_TOL {
        return Err(Error::MarginalMismatch(l1));
    }
    let mut by_col: Vec<Vec<(usize, f64)>> = vec![Vec::new(); gamma12.cols];
    for &(i, j, m) in &gamma12.entries {
        by_col[j].push((i, m));
    }
    let mut entries = Vec::new();
    let mut start = 0;
    let e23 = &gamma23.entries;
    while start < e23.len() {
        let j = e23[start].0;
        let mut end = start;
        while end < e23.len() && e23[end].0 == j {
            end += 1;
        }
        if middle[j] > 0.0 {
            for &(i, m1) in &by_col[j] {
                for &(_, k, m2) in &e23[start..end] {
                    entries.push((i, j, k, m1 * m2 / middle[j]));
                }
            }
        }
        start = end;
    }
    Ok(TripleJoint {
        dims: (gamma12.rows, gamma12.cols, gamma23.cols),
        entries,
    })
}

/// `max sum phi (mu - nu)` over `phi` with `|phi_i - phi_j| <= c_ij`,
/// solved by successive shortest paths independently of [`wasserstein`].
pub fn kantorovich_dual_value(mu: &Distribution, nu: &Distribution, cost: &CostMatrix) -> Result<f64> {
    if !cost.is_pseudo_metric() {
        return Err(Error::NotPseudoMetric);
    }
    let n = cost.len();
    mu.check_len(n)?;
    nu.check_len(n)?;
    if cost.max_value() == 0.0 {
        return Ok(0.0);
    }
    let net = network::metric_network(cost).ok_or(Error::NotPseudoMetric)?;
    let mut supply = vec![0.0; net.n_nodes];
    for (i, s) in supply[..n].iter_mut().enumerate() {
        *s = mu.get(i) - nu.get(i);
    }
    balance(&mut supply[..n]);
    let phi = ssp::dual_potentials(net.n_nodes, &supply, &net.arcs)?;
    Ok(phi[..n].iter().zip(&supply).map(|(p, s)| p * s).sum())
}
