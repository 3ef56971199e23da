//! Discrete-time Markov kernels on a finite metric space.

use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::metric_space::{Distribution, MetricSpace, SpaceFile, VALIDATION_TOL};
use crate::par;

/// Entries above this count as edges of the support graph.
pub const SUPPORT_EDGE_TOL: f64 = 1e-15;
/// Required invariance residual `|mu P - mu|_1` of computed stationary laws.
pub const INVARIANCE_TOL: f64 = 1e-10;

/// A row-stochastic transition matrix over a metric space.
#[derive(Debug, Clone)]
pub struct Kernel {
    space: Arc<MetricSpace>,
    matrix: Arc<Vec<f64>>,
}

/// On-disk form of a kernel: the space fields plus the matrix.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct KernelFile {
    pub states: Vec<String>,
    pub distance: Vec<Vec<f64>>,
    pub base_point: usize,
    pub matrix: Vec<Vec<f64>>,
}

/// Stationary laws of the closed communicating classes.
#[derive(Debug, Clone, Serialize)]
pub struct ErgodicDecomposition {
    pub measures: Vec<Distribution>,
    pub class_members: Vec<Vec<usize>>,
}

impl Kernel {
    pub fn new(space: Arc<MetricSpace>, matrix: Vec<Vec<f64>>) -> Result<Self> {
        let n = space.len();
        if matrix.len() != n {
            return Err(Error::Malformed(format!("matrix: {} rows for {n} states", matrix.len())));
        }
        let mut flat = Vec::with_capacity(n * n);
        for (i, row) in matrix.iter().enumerate() {
            if row.len() != n {
                return Err(Error::Malformed(format!("matrix: row {i} has {} entries", row.len())));
            }
            flat.extend_from_slice(row);
        }
        Self::from_flat(space, flat)
    }

    pub fn from_flat(space: Arc<MetricSpace>, matrix: Vec<f64>) -> Result<Self> {
        let n = space.len();
        if matrix.len() != n * n {
            return Err(Error::Malformed(format!("matrix: {} entries for {n} states", matrix.len())));
        }
        for i in 0..n {
            let row = &matrix[i * n..(i + 1) * n];
            let mut sum = 0.0;
            for &p in row {
                if !p.is_finite() || p < 0.0 {
                    return Err(Error::NotStochastic {
                        row: i,
                        reason: format!("entry {p} is negative or non-finite"),
                    });
                }
                sum += p;
            }
            if (sum - 1.0).abs() > VALIDATION_TOL {
                return Err(Error::NotStochastic {
                    row: i,
                    reason: format!("row sums to {sum}"),
                });
            }
        }
        Ok(Kernel {
            space,
            matrix: Arc::new(matrix),
        })
    }

    pub fn from_file(file: KernelFile) -> Result<Self> {
        let space = crate::metric_space::validate_space(file.states, file.distance, file.base_point)?;
        Kernel::new(Arc::new(space), file.matrix)
    }

    pub fn to_file(&self) -> KernelFile {
        let SpaceFile {
            states,
            distance,
            base_point,
        } = self.space.to_file();
        KernelFile {
            states,
            distance,
            base_point,
            matrix: (0..self.len()).map(|i| self.row(i).to_vec()).collect(),
        }
    }

    pub fn identity(space: Arc<MetricSpace>) -> Self {
        let n = space.len();
        let mut m = vec![0.0; n * n];
        for i in 0..n {
            m[i * n + i] = 1.0;
        }
        Kernel {
            space,
            matrix: Arc::new(m),
        }
    }

    pub fn space(&self) -> &Arc<MetricSpace> {
        &self.space
    }

    pub fn len(&self) -> usize {
        self.space.len()
    }

    pub fn is_empty(&self) -> bool {
        self.space.is_empty()
    }

    #[inline]
    pub fn entry(&self, i: usize, j: usize) -> f64 {
        self.matrix[i * self.len() + j]
    }

    pub fn row(&self, i: usize) -> &[f64] {
        let n = self.len();
        &self.matrix[i * n..(i + 1) * n]
    }

    pub fn matrix(&self) -> &[f64] {
        &self.matrix
    }

    /// `P_t` as a kernel, by binary powering of the one-step matrix.
    pub fn step(&self, t: u32) -> Kernel {
        let n = self.len();
        let mut result: Option<Vec<f64>> = None;
        let mut base: Vec<f64> = self.matrix.as_ref().clone();
        let mut e = t;
        while e > 0 {
            if e & 1 == 1 {
                result = Some(match result {
                    None => base.clone(),
                    Some(r) => matmul(&r, &base, n),
                });
            }
            e >>= 1;
            if e > 0 {
                base = matmul(&base, &base, n);
            }
        }
        match result {
            None => Kernel::identity(Arc::clone(&self.space)),
            Some(m) => Kernel {
                space: Arc::clone(&self.space),
                matrix: Arc::new(m),
            },
        }
    }

    /// `mu P_t`.
    pub fn push_measure(&self, mu: &Distribution, t: u32) -> Result<Distribution> {
        mu.check_len(self.len())?;
        let mut w = mu.weights().to_vec();
        for _ in 0..t {
            w = self.vec_mul(&w);
        }
        Ok(Distribution::from_trusted(w))
    }

    /// `P_t(i, .)`.
    pub fn push_point(&self, i: usize, t: u32) -> Distribution {
        if t == 0 {
            return Distribution::dirac(self.len(), i);
        }
        let mut w = self.row(i).to_vec();
        for _ in 1..t {
            w = self.vec_mul(&w);
        }
        Distribution::from_trusted(w)
    }

    /// `P_t(i, .)` for `t = 0..=t_max`, sharing the iteration.
    pub fn push_point_path(&self, i: usize, t_max: u32) -> Vec<Distribution> {
        let mut out = Vec::with_capacity(t_max as usize + 1);
        out.push(Distribution::dirac(self.len(), i));
        let mut w = out[0].weights().to_vec();
        for _ in 0..t_max {
            w = self.vec_mul(&w);
            out.push(Distribution::from_trusted(w.clone()));
        }
        out
    }

    /// `(P_t phi)(x_i) = sum_j P_t(i,j) phi_j`.
    pub fn apply_function(&self, phi: &[f64], t: u32) -> Result<Vec<f64>> {
        if phi.len() != self.len() {
            return Err(Error::SpaceMismatch {
                expected: self.len(),
                got: phi.len(),
            });
        }
        if let Some(i) = phi.iter().position(|v| !v.is_finite()) {
            return Err(Error::NonFiniteValue(i));
        }
        let mut v = phi.to_vec();
        for _ in 0..t {
            v = self.mat_vec(&v);
        }
        Ok(v)
    }

    fn vec_mul(&self, w: &[f64]) -> Vec<f64> {
        let n = self.len();
        let mut out = vec![0.0; n];
        for (i, &wi) in w.iter().enumerate() {
            if wi == 0.0 {
                continue;
            }
            let row = self.row(i);
            for (o, &p) in out.iter_mut().zip(row) {
                *o += wi * p;
            }
        }
        out
    }

    fn mat_vec(&self, v: &[f64]) -> Vec<f64> {
        let n = self.len();
        par::map_range(n, |i| self.row(i).iter().zip(v).map(|(p, x)| p * x).sum())
    }

    /// One stationary law per closed communicating class of the support
    /// graph, ordered by smallest member.
    pub fn invariant_measures(&self) -> Result<ErgodicDecomposition> {
        let n = self.len();
        let classes = closed_classes(n, |i, j| self.entry(i, j) > SUPPORT_EDGE_TOL);
        let mut measures = Vec::with_capacity(classes.len());
        for (cid, members) in classes.iter().enumerate() {
            let local = stationary_on_class(self, members).ok_or(Error::SingularSolve { class: cid })?;
            let mut w = vec![0.0; n];
            for (&m, &p) in members.iter().zip(&local) {
                w[m] = p;
            }
            let mu = Distribution::from_trusted(w);
            let residual = self.push_measure(&mu, 1)?.l1_distance(&mu);
            if residual > INVARIANCE_TOL {
                return Err(Error::SingularSolve { class: cid });
            }
            measures.push(mu);
        }
        Ok(ErgodicDecomposition {
            measures,
            class_members: classes,
        })
    }
}

impl ErgodicDecomposition {
    pub fn len(&self) -> usize {
        self.measures.len()
    }

    pub fn is_empty(&self) -> bool {
        self.measures.is_empty()
    }

    /// CSV with columns `class_id,state_label,weight`, one line per member.
    pub fn to_csv(&self, space: &MetricSpace) -> String {
        let mut s = String::from("class_id,state_label,weight\n");
        for (cid, (members, mu)) in self.class_members.iter().zip(&self.measures).enumerate() {
            for &m in members {
                s.push_str(&format!("{cid},{},{}\n", csv_field(space.label(m)), mu.get(m)));
            }
        }
        s
    }
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

fn matmul(a: &[f64], b: &[f64], n: usize) -> Vec<f64> {
    let mut c = vec![0.0; n * n];
    par::for_each_row(&mut c, n, |i, crow| {
        let arow = &a[i * n..(i + 1) * n];
        for (k, &aik) in arow.iter().enumerate() {
            if aik == 0.0 {
                continue;
            }
            let brow = &b[k * n..(k + 1) * n];
            for (cj, &bkj) in crow.iter_mut().zip(brow) {
                *cj += aik * bkj;
            }
        }
    });
    c
}

/// Closed strongly connected components of the graph `edge(i, j)`, each
/// sorted, ordered by smallest member.
pub(crate) fn closed_classes(n: usize, edge: impl Fn(usize, usize) -> bool) -> Vec<Vec<usize>> {
    let adj: Vec<Vec<usize>> = (0..n).map(|i| (0..n).filter(|&j| edge(i, j)).collect()).collect();
    let comp = tarjan(&adj);
    let n_comp = comp.iter().copied().max().map_or(0, |m| m + 1);
    let mut closed = vec![true; n_comp];
    for i in 0..n {
        for &j in &adj[i] {
            if comp[i] != comp[j] {
                closed[comp[i]] = false;
            }
        }
    }
    let mut classes: Vec<Vec<usize>> = vec![Vec::new(); n_comp];
    for i in 0..n {
        if closed[comp[i]] {
            classes[comp[i]].push(i);
        }
    }
    let mut classes: Vec<Vec<usize>> = classes.into_iter().filter(|c| !c.is_empty()).collect();
    classes.sort_by_key(|c| c[0]);
    classes
}

/// Iterative Tarjan; returns the component id of every node.
fn tarjan(adj: &[Vec<usize>]) -> Vec<usize> {
    let n = adj.len();
    const UNSET: usize = usize::MAX;
    let mut index = vec![UNSET; n];
    let mut low = vec![0usize; n];
    let mut on_stack = vec![false; n];
    let mut stack = Vec::new();
    let mut comp = vec![UNSET; n];
    let mut next_index = 0;
    let mut next_comp = 0;
    let mut call: Vec<(usize, usize)> = Vec::new();
    for root in 0..n {
        if index[root] != UNSET {
            continue;
        }
        call.push((root, 0));
        index[root] = next_index;
        low[root] = next_index;
        next_index += 1;
        stack.push(root);
        on_stack[root] = true;
        while let Some(&mut (v, ref mut pos)) = call.last_mut() {
            if *pos < adj[v].len() {
                let w = adj[v][*pos];
                *pos += 1;
                if index[w] == UNSET {
                    index[w] = next_index;
                    low[w] = next_index;
                    next_index += 1;
                    stack.push(w);
                    on_stack[w] = true;
                    call.push((w, 0));
                } else if on_stack[w] {
                    low[v] = low[v].min(index[w]);
                }
            } else {
                call.pop();
                if let Some(&(parent, _)) = call.last() {
                    low[parent] = low[parent].min(low[v]);
                }
                if low[v] == index[v] {
                    loop {
                        let w = stack.pop().expect("tarjan stack");
                        on_stack[w] = false;
                        comp[w] = next_comp;
                        if w == v {
                            break;
                        }
                    }
                    next_comp += 1;
                }
            }
        }
    }
    comp
}

/// Solves `(P_CC^T - I) pi = 0` with the last equation replaced by
/// `sum pi = 1`; falls back to least squares on the full system.
fn stationary_on_class(kernel: &Kernel, members: &[usize]) -> Option<Vec<f64>> {
    let m = members.len();
    if m == 1 {
        return Some(vec![1.0]);
    }
    let mut a = vec![0.0; m * m];
    for (r, &j) in members.iter().enumerate() {
        for (c, &i) in members.iter().enumerate() {
            a[r * m + c] = kernel.entry(i, j) - if r == c { 1.0 } else { 0.0 };
        }
    }
    let full = a.clone();
    for c in 0..m {
        a[(m - 1) * m + c] = 1.0;
    }
    let mut b = vec![0.0; m];
    b[m - 1] = 1.0;
    let pi = gauss_solve(a, b, m).or_else(|| least_squares_fallback(&full, m))?;
    let mut pi: Vec<f64> = pi.into_iter().map(|p| if p < 0.0 { 0.0 } else { p }).collect();
    let total: f64 = pi.iter().sum();
    if !(total > 0.0) || !total.is_finite() {
        return None;
    }
    pi.iter_mut().for_each(|p| *p /= total);
    Some(pi)
}

/// Gaussian elimination with partial pivoting (first maximal pivot wins).
fn gauss_solve(mut a: Vec<f64>, mut b: Vec<f64>, m: usize) -> Option<Vec<f64>> {
    let scale = a.iter().fold(0.0f64, |s, v| s.max(v.abs())).max(1.0);
    for k in 0..m {
        let mut piv = k;
        let mut best = a[k * m + k].abs();
        for r in (k + 1)..m {
            let v = a[r * m + k].abs();
            if v > best {
                best = v;
                piv = r;
            }
        }
        if best <= 1e-13 * scale {
            return None;
        }
        if piv != k {
            for c in 0..m {
                a.swap(k * m + c, piv * m + c);
            }
            b.swap(k, piv);
        }
        let (upper, lower) = a.split_at_mut((k + 1) * m);
        let pivot_row = &upper[k * m..(k + 1) * m];
        let pkk = pivot_row[k];
        let bk = b[k];
        let factors: Vec<f64> = (0..(m - k - 1)).map(|r| lower[r * m + k] / pkk).collect();
        par::for_each_row(lower, m, |r, row| {
            let f = factors[r];
            if f != 0.0 {
                for c in k..m {
                    row[c] -= f * pivot_row[c];
                }
            }
        });
        for (r, f) in factors.iter().enumerate() {
            b[k + 1 + r] -= f * bk;
        }
    }
    let mut x = vec![0.0; m];
    for k in (0..m).rev() {
        let mut s = b[k];
        for c in (k + 1)..m {
            s -= a[k * m + c] * x[c];
        }
        x[k] = s / a[k * m + k];
    }
    x.iter().all(|v| v.is_finite()).then_some(x)
}

fn least_squares_fallback(full: &[f64], m: usize) -> Option<Vec<f64>> {
    use nalgebra::{DMatrix, DVector};
    let mut sys = DMatrix::<f64>::zeros(m + 1, m);
    for r in 0..m {
        for c in 0..m {
            sys[(r, c)] = full[r * m + c];
        }
    }
    for c in 0..m {
        sys[(m, c)] = 1.0;
    }
    let mut rhs = DVector::<f64>::zeros(m + 1);
    rhs[m] = 1.0;
    let svd = sys.clone().svd(true, true);
    let x = svd.solve(&rhs, 1e-14).ok()?;
    let residual = (&sys * &x - &rhs).norm();
    (residual < 1e-8).then(|| x.iter().copied().collect())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn line_space(n: usize) -> Arc<MetricSpace> {
        Arc::new(
            MetricSpace::from_line(
                (0..n).map(|i| i.to_string()).collect(),
                (0..n).map(|i| i as f64).collect(),
                0,
            )
            .unwrap(),
        )
    }

    fn cycle3() -> Kernel {
        Kernel::new(
            line_space(3),
            vec![
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
                vec![1.0, 0.0, 0.0],
            ],
        )
        .unwrap()
    }

    #[test]
    fn rejects_non_stochastic_rows() {
        let e = Kernel::new(line_space(2), vec![vec![0.5, 0.4], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(e, Error::NotStochastic { row: 0, .. }));
        let e = Kernel::new(line_space(2), vec![vec![1.5, -0.5], vec![0.0, 1.0]]).unwrap_err();
        assert!(matches!(e, Error::NotStochastic { row: 0, .. }));
    }

    #[test]
    fn step_zero_one_and_cycle() {
        let k = cycle3();
        let id = k.step(0);
        for i in 0..3 {
            for j in 0..3 {
                assert_eq!(id.entry(i, j), if i == j { 1.0 } else { 0.0 });
                assert_eq!(k.step(1).entry(i, j), k.entry(i, j));
                assert_eq!(k.step(3).entry(i, j), if i == j { 1.0 } else { 0.0 });
            }
        }
    }

    #[test]
    fn identity_kernel_preserves_points() {
        let k = Kernel::identity(line_space(4));
        let mu = Distribution::dirac(4, 2);
        assert_eq!(k.push_measure(&mu, 5).unwrap(), mu);
        let dec = k.invariant_measures().unwrap();
        assert_eq!(dec.len(), 4);
        for (i, m) in dec.measures.iter().enumerate() {
            assert_eq!(m, &Distribution::dirac(4, i));
        }
    }

    #[test]
    fn swap_chain_has_uniform_law() {
        let k = Kernel::new(line_space(2), vec![vec![0.0, 1.0], vec![1.0, 0.0]]).unwrap();
        let dec = k.invariant_measures().unwrap();
        assert_eq!(dec.len(), 1);
        assert!((dec.measures[0].get(0) - 0.5).abs() < 1e-15);
        assert!((dec.measures[0].get(1) - 0.5).abs() < 1e-15);
    }

    #[test]
    fn constants_are_fixed_by_apply() {
        let k = cycle3();
        let v = k.apply_function(&[2.5, 2.5, 2.5], 7).unwrap();
        assert!(v.iter().all(|&x| x == 2.5));
        assert!(matches!(
            k.apply_function(&[1.0, f64::INFINITY, 0.0], 1),
            Err(Error::NonFiniteValue(1))
        ));
        assert!(matches!(
            k.apply_function(&[1.0], 1),
            Err(Error::SpaceMismatch { .. })
        ));
    }

    #[test]
    fn transient_states_are_excluded() {
        // 0 -> {0,1}, 1 absorbing, 2 -> 2 absorbing
        let k = Kernel::new(
            line_space(3),
            vec![
                vec![0.5, 0.5, 0.0],
                vec![0.0, 1.0, 0.0],
                vec![0.0, 0.0, 1.0],
            ],
        )
        .unwrap();
        let dec = k.invariant_measures().unwrap();
        assert_eq!(dec.class_members, vec![vec![1], vec![2]]);
        let csv = dec.to_csv(k.space());
        assert_eq!(csv, "class_id,state_label,weight\n0,1,1\n1,2,1\n");
    }

    #[test]
    fn gauss_solve_detects_singular() {
        assert!(gauss_solve(vec![1.0, 2.0, 2.0, 4.0], vec![1.0, 2.0], 2).is_none());
        let x = gauss_solve(vec![2.0, 1.0, 1.0, 3.0], vec![3.0, 5.0], 2).unwrap();
        assert!((x[0] - 0.8).abs() < 1e-15 && (x[1] - 1.4).abs() < 1e-15);
    }
}
