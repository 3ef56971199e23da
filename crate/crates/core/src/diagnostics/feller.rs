//! Gradient-type bounds (ASF+), the ASF profile and local weak
//! irreducibility.

use std::collections::{BTreeMap, BTreeSet};

use serde::Serialize;

use super::certificate::AsfPlusCertificate;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric_space::{capped_lipschitz_cost, separating_family, Distribution};
use crate::par;
use crate::transport::{max_closeness, wasserstein};

/// Slack on every inequality that compares a computed transport value with
/// a bound.
pub const CHECK_TOL: f64 = 1e-9;

#[derive(Debug, Clone, Serialize)]
pub struct AsfPlusRecord {
    pub x: usize,
    pub y: usize,
    /// Index into the certificate's time list.
    pub n: usize,
    pub t: u32,
    pub a: f64,
    pub k: f64,
    /// `sup |P_t phi(x) - P_t phi(y)|` over `|phi|_inf <= A`, `Lip(phi) <= K`.
    pub lhs: f64,
    pub rhs: f64,
    pub margin: f64,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct AsfPlusReport {
    pub records: Vec<AsfPlusRecord>,
    pub pass: bool,
    pub worst: Option<AsfPlusRecord>,
}

/// Laws `P_t(x, .)` for every state in `states` and every time in `times`.
pub(crate) fn laws_at(kernel: &Kernel, states: &BTreeSet<usize>, times: &BTreeSet<u32>) -> BTreeMap<(usize, u32), Distribution> {
    let t_max = times.iter().copied().max().unwrap_or(0);
    let list: Vec<usize> = states.iter().copied().collect();
    let paths = par::map(&list, |&s| kernel.push_point_path(s, t_max));
    let mut out = BTreeMap::new();
    for (s, path) in list.into_iter().zip(paths) {
        for &t in times {
            out.insert((s, t), path[t as usize].clone());
        }
    }
    out
}

fn check_pairs(n: usize, pairs: &[(usize, usize)]) -> Result<()> {
    for &(x, y) in pairs {
        if x >= n || y >= n {
            return Err(Error::SpaceMismatch { expected: n, got: x.max(y) + 1 });
        }
    }
    Ok(())
}

/// Checks the certificate's bound on every `(pair, n, (A, K))`, computing the
/// supremum over test functions exactly as a transport value.
pub fn check_asf_plus(
    kernel: &Kernel,
    cert: &AsfPlusCertificate,
    pairs: &[(usize, usize)],
    ak_grid: &[(f64, f64)],
) -> Result<AsfPlusReport> {
    let n = kernel.len();
    cert.validate(n)?;
    check_pairs(n, pairs)?;
    if ak_grid.iter().any(|&(a, k)| !(a > 0.0 && k > 0.0)) {
        return Err(Error::NonpositiveParameters);
    }
    let space = kernel.space();
    let costs = ak_grid
        .iter()
        .map(|&(a, k)| capped_lipschitz_cost(space, a, k))
        .collect::<Result<Vec<_>>>()?;
    let states: BTreeSet<usize> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    let times: BTreeSet<u32> = cert.times.iter().copied().collect();
    let laws = laws_at(kernel, &states, &times);

    let mut grid = Vec::with_capacity(pairs.len() * cert.times.len() * ak_grid.len());
    for (pi, _) in pairs.iter().enumerate() {
        for ni in 0..cert.times.len() {
            for ci in 0..ak_grid.len() {
                grid.push((pi, ni, ci));
            }
        }
    }
    let x0 = cert.x0;
    let records = par::try_map(&grid, |&(pi, ni, ci)| {
        let (x, y) = pairs[pi];
        let t = cert.times[ni];
        let (a, k) = ak_grid[ci];
        let lhs = if x == y {
            0.0
        } else {
            wasserstein(&laws[&(x, t)], &laws[&(y, t)], &costs[ci])?.value
        };
        let u = space.d(x, x0).max(space.d(y, x0));
        let rhs = space.d(x, y) * cert.f.eval(u) * (a + cert.slacks[ni] * k);
        Ok(AsfPlusRecord {
            x,
            y,
            n: ni,
            t,
            a,
            k,
            lhs,
            rhs,
            margin: rhs - lhs,
            pass: lhs <= rhs + CHECK_TOL,
        })
    })?;
    let worst = records.iter().min_by(|a, b| a.margin.total_cmp(&b.margin)).cloned();
    Ok(AsfPlusReport {
        pass: records.iter().all(|r| r.pass),
        records,
        worst,
    })
}

impl AsfPlusReport {
    /// Re-grades every record with slack `tol` in place of [`CHECK_TOL`].
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        for r in &mut self.records {
            r.pass = r.lhs <= r.rhs + tol;
        }
        self.pass = self.records.iter().all(|r| r.pass);
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct AsfProfile {
    pub x: usize,
    pub n_list: Vec<u32>,
    pub times: Vec<u32>,
    pub radii: Vec<f64>,
    /// `values[k][r]`: sup over the punctured ball of radius `radii[r]` of
    /// `W_{d_n}(P_t delta_x, P_t delta_y)` with `n = n_list[k]`, `t = times[k]`.
    pub values: Vec<Vec<f64>>,
    /// Max over the tail half of `n_list`, per radius.
    pub tail_estimate: Vec<f64>,
    /// Radii whose punctured ball is empty (reported as 0).
    pub empty_balls: Vec<f64>,
}

pub fn asf_profile(kernel: &Kernel, x: usize, times: &[u32], n_list: &[u32], radii: &[f64]) -> Result<AsfProfile> {
    let space = kernel.space();
    if x >= space.len() {
        return Err(Error::SpaceMismatch { expected: space.len(), got: x + 1 });
    }
    if times.len() != n_list.len() || times.is_empty() {
        return Err(Error::Malformed("times and n_list must be nonempty and of equal length".into()));
    }
    if n_list.windows(2).any(|w| w[0] >= w[1]) || n_list[0] == 0 {
        return Err(Error::Malformed("n_list must be positive and increasing".into()));
    }
    if radii.iter().any(|r| !(*r > 0.0)) {
        return Err(Error::Malformed("radii must be positive".into()));
    }
    let r_max = radii.iter().cloned().fold(0.0, f64::max);
    let ball: Vec<usize> = space.ball(x, r_max).into_iter().filter(|&y| y != x).collect();
    let mut states: BTreeSet<usize> = ball.iter().copied().collect();
    states.insert(x);
    let tset: BTreeSet<u32> = times.iter().copied().collect();
    let laws = laws_at(kernel, &states, &tset);
    let mut values = Vec::with_capacity(n_list.len());
    for (k, &nn) in n_list.iter().enumerate() {
        let cost = separating_family(space, nn)?;
        let t = times[k];
        let w = par::try_map(&ball, |&y| Ok::<_, Error>(wasserstein(&laws[&(x, t)], &laws[&(y, t)], &cost)?.value))?;
        let row = radii
            .iter()
            .map(|&r| {
                ball.iter()
                    .zip(&w)
                    .filter(|(&y, _)| space.d(x, y) < r)
                    .map(|(_, &v)| v)
                    .fold(0.0, f64::max)
            })
            .collect();
        values.push(row);
    }
    let tail_from = n_list.len() / 2;
    let tail_estimate = (0..radii.len())
        .map(|r| values[tail_from..].iter().map(|row: &Vec<f64>| row[r]).fold(0.0, f64::max))
        .collect();
    let empty_balls = radii.iter().copied().filter(|&r| space.ball(x, r).len() <= 1).collect();
    Ok(AsfProfile {
        x,
        n_list: n_list.to_vec(),
        times: times.to_vec(),
        radii: radii.to_vec(),
        values,
        tail_estimate,
        empty_balls,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct LwiRecord {
    pub t: u32,
    /// `min_{x,y in B_R(x0)} max_Gamma Gamma(d <= eps)`.
    pub value: f64,
    pub argmin: (usize, usize),
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct LwiReport {
    pub radius: f64,
    pub eps: f64,
    pub ball: Vec<usize>,
    pub records: Vec<LwiRecord>,
    pub first_passing_time: Option<u32>,
    pub pass: bool,
}

/// Local weak irreducibility around the space's base point over a finite
/// list of times: passes when some listed time has a positive value and so
/// does every later listed time.
pub fn check_lwi(kernel: &Kernel, radius: f64, eps: f64, times: &[u32]) -> Result<LwiReport> {
    if !(radius > 0.0) {
        return Err(Error::OutOfDomain { value: radius, domain: "R > 0" });
    }
    if !(eps > 0.0) {
        return Err(Error::OutOfDomain { value: eps, domain: "eps > 0" });
    }
    let space = kernel.space();
    let ball = space.base_ball(radius);
    let states: BTreeSet<usize> = ball.iter().copied().collect();
    let mut sorted_times = times.to_vec();
    sorted_times.sort_unstable();
    sorted_times.dedup();
    let tset: BTreeSet<u32> = sorted_times.iter().copied().collect();
    let laws = laws_at(kernel, &states, &tset);
    let mut pairs = Vec::new();
    for (a, &x) in ball.iter().enumerate() {
        for &y in &ball[a + 1..] {
            pairs.push((x, y));
        }
    }
    let mut records = Vec::with_capacity(sorted_times.len());
    for &t in &sorted_times {
        let vals = par::try_map(&pairs, |&(x, y)| Ok::<_, Error>(max_closeness(&laws[&(x, t)], &laws[&(y, t)], space, eps)?.0))?;
        let (value, argmin) = pairs
            .iter()
            .zip(&vals)
            .fold((1.0, (ball[0], ball[0])), |(bv, bp), (&p, &v)| if v < bv { (v, p) } else { (bv, bp) });
        records.push(LwiRecord { t, value, argmin, pass: value > 0.0 });
    }
    let first = records.iter().position(|r| r.pass);
    let pass = first.is_some_and(|k| records[k..].iter().all(|r| r.pass));
    Ok(LwiReport {
        radius,
        eps,
        ball,
        first_passing_time: first.map(|k| records[k].t),
        records,
        pass,
    })
}
