//! Finite metric state spaces, probability vectors over them, and the cost
//! functions that transport problems are posed with.

use std::sync::{Arc, OnceLock};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Tolerance for every structural check on distances, weights and costs.
pub const VALIDATION_TOL: f64 = 1e-12;

/// Isometric embedding of a space into the real line, when one exists.
#[derive(Debug, Clone)]
pub struct LineEmbedding {
    /// Coordinate of every state.
    pub coords: Vec<f64>,
    /// State indices sorted by coordinate (ties by index).
    pub order: Vec<usize>,
}

/// A finite metric space with a reference point `x0`.
#[derive(Debug, Clone)]
pub struct MetricSpace {
    labels: Vec<String>,
    dist: Vec<f64>,
    n: usize,
    base: usize,
    diameter: f64,
    line: OnceLock<Option<LineEmbedding>>,
    skeleton: OnceLock<Vec<(usize, usize)>>,
}

/// On-disk form of a space. Unknown keys are rejected.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpaceFile {
    pub states: Vec<String>,
    pub distance: Vec<Vec<f64>>,
    pub base_point: usize,
}

/// Validates labels, a square distance matrix and a base index into a space.
pub fn validate_space(labels: Vec<String>, dist: Vec<Vec<f64>>, base_index: usize) -> Result<MetricSpace> {
    let n = labels.len();
    if dist.len() != n {
        return Err(Error::Malformed(format!(
            "distance: {} rows for {} states",
            dist.len(),
            n
        )));
    }
    let mut flat = Vec::with_capacity(n * n);
    for (i, row) in dist.iter().enumerate() {
        if row.len() != n {
            return Err(Error::Malformed(format!(
                "distance: row {i} has {} entries, expected {n}",
                row.len()
            )));
        }
        flat.extend_from_slice(row);
    }
    MetricSpace::from_flat(labels, flat, base_index)
}

impl MetricSpace {
    /// Builds a space from a row-major `n x n` distance matrix.
    pub fn from_flat(labels: Vec<String>, dist: Vec<f64>, base_index: usize) -> Result<Self> {
        Self::build(labels, dist, base_index, None)
    }

    fn build(labels: Vec<String>, dist: Vec<f64>, base_index: usize, line: Option<LineEmbedding>) -> Result<Self> {
        let n = labels.len();
        if n == 0 {
            return Err(Error::Malformed("states: empty state list".into()));
        }
        if dist.len() != n * n {
            return Err(Error::Malformed(format!(
                "distance: {} entries for {n} states",
                dist.len()
            )));
        }
        if base_index >= n {
            return Err(Error::BadBaseIndex { index: base_index, len: n });
        }
        {
            let mut seen = std::collections::HashSet::with_capacity(n);
            for l in &labels {
                if !seen.insert(l.as_str()) {
                    return Err(Error::Malformed(format!("states: duplicate label {l:?}")));
                }
            }
        }
        check_square_basics(&dist, n)?;
        let diameter = dist.iter().cloned().fold(0.0, f64::max);
        let space = MetricSpace {
            labels,
            dist,
            n,
            base: base_index,
            diameter,
            line: OnceLock::new(),
            skeleton: OnceLock::new(),
        };
        if let Some(l) = line {
            let _ = space.line.set(Some(l));
        }
        // A line embedding certifies the triangle inequality in O(n^2).
        if space.line_embedding().is_none() {
            if let Some(v) = worst_triangle_violation(&space.dist, n) {
                return Err(v);
            }
        }
        Ok(space)
    }

    /// Builds a space of points on the real line with Euclidean distance.
    pub fn from_line(labels: Vec<String>, coords: Vec<f64>, base_index: usize) -> Result<Self> {
        let n = coords.len();
        if labels.len() != n {
            return Err(Error::Malformed("labels and coordinates differ in length".into()));
        }
        if let Some(i) = coords.iter().position(|c| !c.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        let mut dist = vec![0.0; n * n];
        for i in 0..n {
            for j in 0..n {
                dist[i * n + j] = (coords[i] - coords[j]).abs();
            }
        }
        Self::build(labels, dist, base_index, Some(LineEmbedding::from_coords(coords)))
    }

    pub fn from_file(file: SpaceFile) -> Result<Self> {
        validate_space(file.states, file.distance, file.base_point)
    }

    pub fn to_file(&self) -> SpaceFile {
        SpaceFile {
            states: self.labels.clone(),
            distance: (0..self.n).map(|i| self.row(i).to_vec()).collect(),
            base_point: self.base,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn labels(&self) -> &[String] {
        &self.labels
    }

    pub fn label(&self, i: usize) -> &str {
        &self.labels[i]
    }

    pub fn index_of(&self, label: &str) -> Result<usize> {
        self.labels
            .iter()
            .position(|l| l == label)
            .ok_or_else(|| Error::UnknownState(label.to_string()))
    }

    pub fn base_index(&self) -> usize {
        self.base
    }

    #[inline]
    pub fn d(&self, i: usize, j: usize) -> f64 {
        self.dist[i * self.n + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        &self.dist[i * self.n..(i + 1) * self.n]
    }

    /// Distance from the reference point.
    pub fn d_base(&self, i: usize) -> f64 {
        self.d(i, self.base)
    }

    pub fn diameter(&self) -> f64 {
        self.diameter
    }

    /// Open ball `{i : d(i, center) < radius}`.
    pub fn ball(&self, center: usize, radius: f64) -> Vec<usize> {
        (0..self.n).filter(|&i| self.d(i, center) < radius).collect()
    }

    /// Open ball around the reference point.
    pub fn base_ball(&self, radius: f64) -> Vec<usize> {
        self.ball(self.base, radius)
    }

    /// Returns an isometric embedding into the line if the space has one.
    pub fn line_embedding(&self) -> Option<&LineEmbedding> {
        self.line
            .get_or_init(|| detect_line(&self.dist, self.n))
            .as_ref()
    }

    /// Edges whose lengths generate the metric as a shortest-path metric.
    ///
    /// An edge `(i, j)` is dropped when some `k` strictly between them
    /// satisfies `d(i,k) + d(k,j) <= d(i,j)`.
    pub fn skeleton(&self) -> &[(usize, usize)] {
        self.skeleton.get_or_init(|| match self.line_embedding() {
            Some(line) => line
                .order
                .windows(2)
                .map(|w| (w[0].min(w[1]), w[0].max(w[1])))
                .collect(),
            None => essential_edges(self.n, |i, j| self.d(i, j)),
        })
    }

    pub fn same_shape(&self, other: &MetricSpace) -> bool {
        self.n == other.n
    }
}

impl LineEmbedding {
    fn from_coords(coords: Vec<f64>) -> Self {
        let mut order: Vec<usize> = (0..coords.len()).collect();
        order.sort_by(|&a, &b| coords[a].total_cmp(&coords[b]).then(a.cmp(&b)));
        LineEmbedding { coords, order }
    }
}

fn check_square_basics(dist: &[f64], n: usize) -> Result<()> {
    for i in 0..n {
        for j in 0..n {
            let v = dist[i * n + j];
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeDistance { i, j, value: v });
            }
        }
        let dii = dist[i * n + i];
        if dii > VALIDATION_TOL {
            return Err(Error::NonzeroDiagonal { i, value: dii });
        }
    }
    for i in 0..n {
        for j in (i + 1)..n {
            let a = dist[i * n + j];
            let b = dist[j * n + i];
            if (a - b).abs() > VALIDATION_TOL {
                return Err(Error::AsymmetricDistance { i, j, a, b });
            }
        }
    }
    Ok(())
}

/// Exhaustive triple scan; returns the worst violation beyond tolerance.
fn worst_triangle_violation(dist: &[f64], n: usize) -> Option<Error> {
    let mut worst: Option<(f64, usize, usize, usize)> = None;
    for i in 0..n {
        for j in 0..n {
            let dij = dist[i * n + j];
            for k in 0..n {
                let excess = dist[i * n + k] - (dij + dist[j * n + k]);
                if excess > VALIDATION_TOL && worst.is_none_or(|w| excess > w.0) {
                    worst = Some((excess, i, j, k));
                }
            }
        }
    }
    worst.map(|(_, i, j, k)| Error::TriangleViolation {
        i,
        j,
        k,
        direct: dist[i * n + k],
        via: dist[i * n + j] + dist[j * n + k],
    })
}

fn detect_line(dist: &[f64], n: usize) -> Option<LineEmbedding> {
    if n <= 2 {
        let coords = if n == 1 { vec![0.0] } else { vec![0.0, dist[1]] };
        return Some(LineEmbedding::from_coords(coords));
    }
    // One endpoint of the line is the farthest point from state 0.
    let a = (0..n)
        .max_by(|&x, &y| dist[x].total_cmp(&dist[y]).then(y.cmp(&x)))
        .unwrap_or(0);
    let coords: Vec<f64> = (0..n).map(|i| dist[a * n + i]).collect();
    let diam = coords.iter().cloned().fold(0.0, f64::max);
    let tol = 1e-13 * diam.max(1.0);
    for i in 0..n {
        for j in (i + 1)..n {
            if (dist[i * n + j] - (coords[i] - coords[j]).abs()).abs() > tol {
                return None;
            }
        }
    }
    Some(LineEmbedding::from_coords(coords))
}

/// Essential edges of a (pseudo-)metric given by `d`.
pub(crate) fn essential_edges(n: usize, d: impl Fn(usize, usize) -> f64) -> Vec<(usize, usize)> {
    let mut edges = Vec::new();
    // neighbours of each node sorted by distance
    let sorted: Vec<Vec<usize>> = (0..n)
        .map(|i| {
            let mut v: Vec<usize> = (0..n).filter(|&k| k != i).collect();
            v.sort_by(|&a, &b| d(i, a).total_cmp(&d(i, b)).then(a.cmp(&b)));
            v
        })
        .collect();
    for (i, near) in sorted.iter().enumerate() {
        for j in (i + 1)..n {
            let dij = d(i, j);
            let strict = 2.0 * VALIDATION_TOL * dij.max(1.0);
            let mut redundant = false;
            for &k in near {
                let dik = d(i, k);
                if dik >= dij {
                    break;
                }
                if k == j || dik <= strict {
                    continue;
                }
                let dkj = d(k, j);
                if dkj > strict && dik + dkj <= dij + VALIDATION_TOL * dij.max(1.0) {
                    redundant = true;
                    break;
                }
            }
            if !redundant {
                edges.push((i, j));
            }
        }
    }
    edges
}

/// A probability vector over the states of a space.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Distribution {
    weights: Vec<f64>,
}

impl Distribution {
    pub fn new(weights: Vec<f64>) -> Result<Self> {
        if weights.is_empty() {
            return Err(Error::InvalidDistribution("no weights".into()));
        }
        for (i, &w) in weights.iter().enumerate() {
            if !w.is_finite() {
                return Err(Error::NonFiniteValue(i));
            }
            if w < 0.0 {
                return Err(Error::InvalidDistribution(format!("weight {i} is negative: {w}")));
            }
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > VALIDATION_TOL {
            return Err(Error::InvalidDistribution(format!("weights sum to {total}")));
        }
        Ok(Distribution { weights })
    }

    /// Wraps weights produced by exact linear operations on valid
    /// distributions, clamping rounding-level negatives to zero.
    pub(crate) fn from_trusted(mut weights: Vec<f64>) -> Self {
        for w in &mut weights {
            if *w < 0.0 {
                *w = 0.0;
            }
        }
        Distribution { weights }
    }

    pub fn dirac(n: usize, i: usize) -> Self {
        let mut weights = vec![0.0; n];
        weights[i] = 1.0;
        Distribution { weights }
    }

    pub fn uniform(n: usize) -> Self {
        Distribution {
            weights: vec![1.0 / n as f64; n],
        }
    }

    pub fn len(&self) -> usize {
        self.weights.len()
    }

    pub fn is_empty(&self) -> bool {
        self.weights.is_empty()
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn get(&self, i: usize) -> f64 {
        self.weights[i]
    }

    /// Indices with weight above `threshold`.
    pub fn support(&self, threshold: f64) -> Vec<usize> {
        (0..self.weights.len())
            .filter(|&i| self.weights[i] > threshold)
            .collect()
    }

    pub fn l1_distance(&self, other: &Distribution) -> f64 {
        self.weights
            .iter()
            .zip(&other.weights)
            .map(|(a, b)| (a - b).abs())
            .sum()
    }

    pub(crate) fn check_len(&self, n: usize) -> Result<()> {
        if self.weights.len() != n {
            return Err(Error::SpaceMismatch {
                expected: n,
                got: self.weights.len(),
            });
        }
        Ok(())
    }
}

#[derive(Debug, Clone)]
pub(crate) enum CostKind {
    Dense(Arc<Vec<f64>>),
    /// `min(cap, slope * d)` over a space; `cap` may be infinite.
    Capped {
        space: Arc<MetricSpace>,
        cap: f64,
        slope: f64,
    },
    /// `1(x != y)`.
    Mismatch,
    /// `1(d(x,y) > eps)`.
    Threshold { space: Arc<MetricSpace>, eps: f64 },
}

/// A square nonnegative cost with zero diagonal, optionally certified to be
/// a pseudo-metric. Structured costs are evaluated lazily.
#[derive(Debug, Clone)]
pub struct CostMatrix {
    n: usize,
    pub(crate) kind: CostKind,
    pseudo_metric: bool,
}

impl CostMatrix {
    /// A dense cost; with `pseudo_metric` set the triangle inequality is
    /// checked by exhaustive scan.
    pub fn dense(values: Vec<Vec<f64>>, pseudo_metric: bool) -> Result<Self> {
        let n = values.len();
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in values.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Malformed(format!("cost row {i} has wrong length")));
            }
            flat.extend_from_slice(row);
        }
        Self::dense_flat(n, flat, pseudo_metric)
    }

    pub fn dense_flat(n: usize, values: Vec<f64>, pseudo_metric: bool) -> Result<Self> {
        if values.len() != n * n || n == 0 {
            return Err(Error::Malformed("cost matrix must be square and nonempty".into()));
        }
        check_square_basics(&values, n)?;
        if pseudo_metric {
            if let Some(e) = worst_triangle_violation(&values, n) {
                return Err(e);
            }
        }
        Ok(CostMatrix {
            n,
            kind: CostKind::Dense(Arc::new(values)),
            pseudo_metric,
        })
    }

    /// Arbitrary nonnegative cost (no symmetry or diagonal requirement).
    /// Used for transport problems that are not distance-like.
    pub fn general(n: usize, values: Vec<f64>) -> Result<Self> {
        if values.len() != n * n || n == 0 {
            return Err(Error::Malformed("cost matrix must be square and nonempty".into()));
        }
        for (idx, &v) in values.iter().enumerate() {
            if !v.is_finite() || v < 0.0 {
                return Err(Error::NegativeDistance {
                    i: idx / n,
                    j: idx % n,
                    value: v,
                });
            }
        }
        Ok(CostMatrix {
            n,
            kind: CostKind::Dense(Arc::new(values)),
            pseudo_metric: false,
        })
    }

    /// The space metric itself.
    pub fn metric(space: &Arc<MetricSpace>) -> Self {
        CostMatrix {
            n: space.len(),
            kind: CostKind::Capped {
                space: Arc::clone(space),
                cap: f64::INFINITY,
                slope: 1.0,
            },
            pseudo_metric: true,
        }
    }

    /// Mismatch indicator `1(x != y)`; its transport value is the total
    /// variation distance.
    pub fn mismatch(n: usize) -> Self {
        CostMatrix {
            n,
            kind: CostKind::Mismatch,
            pseudo_metric: true,
        }
    }

    /// `1(d(x,y) > eps)`: its transport value is one minus the largest
    /// probability a coupling can put on eps-close pairs.
    pub fn threshold(space: &Arc<MetricSpace>, eps: f64) -> Self {
        CostMatrix {
            n: space.len(),
            kind: CostKind::Threshold {
                space: Arc::clone(space),
                eps,
            },
            pseudo_metric: false,
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    pub fn is_pseudo_metric(&self) -> bool {
        self.pseudo_metric
    }

    #[inline]
    pub fn get(&self, i: usize, j: usize) -> f64 {
        match &self.kind {
            CostKind::Dense(v) => v[i * self.n + j],
            CostKind::Capped { space, cap, slope } => {
                if i == j {
                    0.0
                } else {
                    (slope * space.d(i, j)).min(*cap)
                }
            }
            CostKind::Mismatch => {
                if i == j {
                    0.0
                } else {
                    1.0
                }
            }
            CostKind::Threshold { space, eps } => {
                if space.d(i, j) > *eps {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn max_value(&self) -> f64 {
        match &self.kind {
            CostKind::Dense(v) => v.iter().cloned().fold(0.0, f64::max),
            CostKind::Capped { space, cap, slope } => (slope * space.diameter()).min(*cap),
            CostKind::Mismatch => {
                if self.n > 1 {
                    1.0
                } else {
                    0.0
                }
            }
            CostKind::Threshold { space, eps } => {
                if space.diameter() > *eps {
                    1.0
                } else {
                    0.0
                }
            }
        }
    }

    pub fn to_dense(&self) -> Vec<Vec<f64>> {
        (0..self.n)
            .map(|i| (0..self.n).map(|j| self.get(i, j)).collect())
            .collect()
    }
}

/// Totally separating family member `d_n(x,y) = min(1, n d(x,y))`.
pub fn separating_family(space: &Arc<MetricSpace>, n: u32) -> Result<CostMatrix> {
    if n == 0 {
        return Err(Error::Malformed("separating family index must be >= 1".into()));
    }
    Ok(CostMatrix {
        n: space.len(),
        kind: CostKind::Capped {
            space: Arc::clone(space),
            cap: 1.0,
            slope: n as f64,
        },
        pseudo_metric: true,
    })
}

/// `c(x,y) = min(2A, K d(x,y))`. Its 1-Lipschitz functions are exactly the
/// functions with oscillation at most `2A` and `d`-Lipschitz constant at
/// most `K`.
pub fn capped_lipschitz_cost(space: &Arc<MetricSpace>, sup_bound: f64, lipschitz: f64) -> Result<CostMatrix> {
    if !(sup_bound >= 0.0 && lipschitz >= 0.0) || !sup_bound.is_finite() || !lipschitz.is_finite() {
        return Err(Error::Malformed(format!(
            "capped cost needs finite A >= 0 and K >= 0, got A={sup_bound}, K={lipschitz}"
        )));
    }
    if sup_bound == 0.0 && lipschitz == 0.0 {
        return Err(Error::NonpositiveParameters);
    }
    Ok(CostMatrix {
        n: space.len(),
        kind: CostKind::Capped {
            space: Arc::clone(space),
            cap: 2.0 * sup_bound,
            slope: lipschitz,
        },
        pseudo_metric: true,
    })
}
