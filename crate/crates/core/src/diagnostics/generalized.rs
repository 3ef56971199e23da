//! Generalized-coupling assumptions: A1 (local contraction), A2 (uniform
//! overlap with vanishing gap), the gluing construction behind local weak
//! irreducibility, and the certificate implied by A1.

use std::collections::BTreeSet;

use serde::Serialize;

use super::certificate::AsfPlusCertificate;
use super::envelope::{Envelope, RateFn};
use super::feller::{laws_at, CHECK_TOL};
use super::provider::{checked_joint, CouplingProvider};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric_space::Distribution;
use crate::par;
use crate::transport::{glue, maximal_coupling, tv_distance, Coupling, TripleJoint, MARGINAL_TOL};

#[derive(Debug, Clone, Serialize)]
pub struct A1Record {
    pub x: usize,
    pub y: usize,
    pub t: u32,
    /// `d(x,x0) v d(y,x0)`.
    pub u: f64,
    pub tv: f64,
    pub tv_bound: f64,
    pub expected_gap: f64,
    pub gap_bound: f64,
    pub pass_tv: bool,
    pub pass_gap: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct A1Report {
    pub provider: String,
    pub x0: usize,
    pub f1: Envelope,
    pub f2: Envelope,
    pub r: RateFn,
    pub pairs: Vec<(usize, usize)>,
    pub times: Vec<u32>,
    pub records: Vec<A1Record>,
    pub pass: bool,
    pub worst: Option<A1Record>,
}

/// Law of the first coordinate of a joint.
fn first_marginal(j: &Coupling) -> Distribution {
    Distribution::from_trusted(j.row_sums())
}

struct Measured {
    tv: f64,
    gap: f64,
}

fn measure(
    kernel: &Kernel,
    provider: &dyn CouplingProvider,
    x: usize,
    y: usize,
    t: u32,
    law_x: &Distribution,
    law_y: &Distribution,
) -> Result<Measured> {
    let j = checked_joint(provider, kernel, x, y, t, law_y)?;
    let space = kernel.space();
    Ok(Measured {
        tv: tv_distance(&first_marginal(&j), law_x)?,
        gap: j.expectation(|a, b| space.d(a, b)),
    })
}

fn sorted_times(times: &[u32]) -> Result<Vec<u32>> {
    let mut t = times.to_vec();
    t.sort_unstable();
    t.dedup();
    if t.is_empty() || t[0] == 0 {
        return Err(Error::Malformed("times must be nonempty and positive".into()));
    }
    Ok(t)
}

/// Checks both parts of A1 exactly on every `(pair, t)`.
#[allow(clippy::too_many_arguments)]
pub fn verify_a1(
    kernel: &Kernel,
    provider: &dyn CouplingProvider,
    x0: usize,
    f1: &Envelope,
    f2: &Envelope,
    r: &RateFn,
    pairs: &[(usize, usize)],
    times: &[u32],
) -> Result<A1Report> {
    f1.validate()?;
    f2.validate()?;
    r.validate()?;
    let n = kernel.len();
    if x0 >= n || pairs.iter().any(|&(x, y)| x >= n || y >= n) {
        return Err(Error::SpaceMismatch { expected: n, got: n + 1 });
    }
    let times = sorted_times(times)?;
    let space = kernel.space();
    let states: BTreeSet<usize> = pairs.iter().flat_map(|&(x, y)| [x, y]).collect();
    let laws = laws_at(kernel, &states, &times.iter().copied().collect());
    let grid: Vec<(usize, u32)> = pairs.iter().enumerate().flat_map(|(p, _)| times.iter().map(move |&t| (p, t))).collect();
    let records = par::try_map(&grid, |&(p, t)| {
        let (x, y) = pairs[p];
        let m = measure(kernel, provider, x, y, t, &laws[&(x, t)], &laws[&(y, t)])?;
        let u = space.d(x, x0).max(space.d(y, x0));
        let d = space.d(x, y);
        let tv_bound = f1.eval(u) * d;
        let gap_bound = f2.eval(u) * r.eval(t) * d;
        let pass_tv = m.tv <= tv_bound + CHECK_TOL;
        let pass_gap = m.gap <= gap_bound + CHECK_TOL;
        Ok::<_, Error>(A1Record {
            x,
            y,
            t,
            u,
            tv: m.tv,
            tv_bound,
            expected_gap: m.gap,
            gap_bound,
            pass_tv,
            pass_gap,
            pass: pass_tv && pass_gap,
        })
    })?;
    let slack = |r: &A1Record| (r.tv_bound - r.tv).min(r.gap_bound - r.expected_gap);
    let worst = records.iter().min_by(|a, b| slack(a).total_cmp(&slack(b))).cloned();
    Ok(A1Report {
        provider: provider.name(),
        x0,
        f1: f1.clone(),
        f2: f2.clone(),
        r: r.clone(),
        pairs: pairs.to_vec(),
        times,
        pass: records.iter().all(|r| r.pass),
        records,
        worst,
    })
}

impl A1Report {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        for r in &mut self.records {
            r.pass_tv = r.tv <= r.tv_bound + tol;
            r.pass_gap = r.expected_gap <= r.gap_bound + tol;
            r.pass = r.pass_tv && r.pass_gap;
        }
        self.pass = self.records.iter().all(|r| r.pass);
        self
    }
}

/// Certificate on the report's times, `delta_n = r(t_n)`, `F = 2 F1 + F2` from a passing
/// A1 verification.
pub fn fit_asf_plus_envelope(report: &A1Report) -> Result<AsfPlusCertificate> {
    if !report.pass {
        return Err(Error::A1NotSatisfied);
    }
    let mut grid: Vec<f64> = report.records.iter().map(|r| r.u).collect();
    grid.sort_by(f64::total_cmp);
    grid.dedup();
    let f = Envelope::combine(2.0, &report.f1, 1.0, &report.f2, &grid);
    let times = report.times.clone();
    let slacks = times.iter().map(|&t| report.r.eval(t)).collect();
    Ok(AsfPlusCertificate {
        x0: report.x0,
        times,
        slacks,
        f_bounded: !f.is_unbounded(),
        f,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct A2Record {
    pub x: usize,
    pub y: usize,
    pub t: u32,
    pub tv: f64,
    pub expected_gap: f64,
    pub gap_bound: f64,
    pub pass_tv: bool,
    pub pass_gap: bool,
    pub pass: bool,
}

#[derive(Debug, Clone, Serialize)]
pub struct A2Report {
    pub provider: String,
    pub eps: f64,
    /// `1 - max TV`: the largest overlap parameter the data supports.
    pub eps_star: f64,
    pub records: Vec<A2Record>,
    pub pass: bool,
    pub worst: Option<A2Record>,
}

impl A2Report {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        let eps = self.eps;
        for r in &mut self.records {
            r.pass_tv = r.tv <= 1.0 - eps + tol;
            r.pass_gap = r.expected_gap <= r.gap_bound + tol;
            r.pass = r.pass_tv && r.pass_gap;
        }
        self.pass = self.records.iter().all(|r| r.pass);
        self
    }
}

/// Checks both parts of A2 on every ordered pair of `b` and every time.
pub fn verify_a2(
    kernel: &Kernel,
    provider: &dyn CouplingProvider,
    b: &[usize],
    eps: f64,
    r: &RateFn,
    times: &[u32],
) -> Result<A2Report> {
    if b.is_empty() {
        return Err(Error::Malformed("B must be nonempty".into()));
    }
    if !(eps > 0.0 && eps <= 1.0) {
        return Err(Error::OutOfDomain { value: eps, domain: "0 < eps <= 1" });
    }
    r.validate()?;
    let n = kernel.len();
    if b.iter().any(|&x| x >= n) {
        return Err(Error::SpaceMismatch { expected: n, got: n + 1 });
    }
    let times = sorted_times(times)?;
    let laws = laws_at(kernel, &b.iter().copied().collect(), &times.iter().copied().collect());
    let mut grid = Vec::with_capacity(b.len() * b.len() * times.len());
    for &x in b {
        for &y in b {
            for &t in &times {
                grid.push((x, y, t));
            }
        }
    }
    let records = par::try_map(&grid, |&(x, y, t)| {
        let m = measure(kernel, provider, x, y, t, &laws[&(x, t)], &laws[&(y, t)])?;
        let gap_bound = r.eval(t);
        let pass_tv = m.tv <= 1.0 - eps + CHECK_TOL;
        let pass_gap = m.gap <= gap_bound + CHECK_TOL;
        Ok::<_, Error>(A2Record {
            x,
            y,
            t,
            tv: m.tv,
            expected_gap: m.gap,
            gap_bound,
            pass_tv,
            pass_gap,
            pass: pass_tv && pass_gap,
        })
    })?;
    let max_tv = records.iter().map(|r| r.tv).fold(0.0, f64::max);
    let worst = records
        .iter()
        .max_by(|a, b| a.tv.total_cmp(&b.tv).then((a.expected_gap - a.gap_bound).total_cmp(&(b.expected_gap - b.gap_bound))))
        .cloned();
    Ok(A2Report {
        provider: provider.name(),
        eps,
        eps_star: 1.0 - max_tv,
        pass: records.iter().all(|r| r.pass),
        records,
        worst,
    })
}

#[derive(Debug, Clone, Serialize)]
pub struct GluingOutcome {
    #[serde(skip)]
    pub triple: TripleJoint,
    /// `P(d(V^X, V^Y) <= delta)`.
    pub closeness: f64,
    /// `P(X~ = Z~)` under the maximal coupling.
    pub p_equal: f64,
    /// `P(d(Z, Y) <= delta)` under the provider.
    pub p_close_zy: f64,
    pub lower_bound: f64,
    pub bound_holds: bool,
    /// Worst deviation of the `(V^X, V^Y)` marginals from `P_t(x,.)`, `P_t(y,.)`.
    pub marginal_error: f64,
}

/// Glues a maximal coupling of `(P_t(x,.), Law Z)` to the provider's
/// `(Z, Y)` and measures how often the outer coordinates are close.
pub fn theorem23_construction(
    kernel: &Kernel,
    provider: &dyn CouplingProvider,
    x: usize,
    y: usize,
    t: u32,
    delta: f64,
) -> Result<GluingOutcome> {
    if !(delta >= 0.0) {
        return Err(Error::OutOfDomain { value: delta, domain: "delta >= 0" });
    }
    let n = kernel.len();
    if x >= n || y >= n {
        return Err(Error::SpaceMismatch { expected: n, got: x.max(y) + 1 });
    }
    let space = kernel.space();
    let law_x = kernel.push_point(x, t);
    let law_y = kernel.push_point(y, t);
    let zy = checked_joint(provider, kernel, x, y, t, &law_y)?;
    let law_z = first_marginal(&zy);
    let xz = maximal_coupling(&law_x, &law_z)?;
    let triple = glue(&xz, &zy)?;
    let outer = triple.marginal_13();
    let merr = outer
        .row_sums()
        .iter()
        .zip(law_x.weights())
        .chain(outer.col_sums().iter().zip(law_y.weights()))
        .map(|(a, b)| (a - b).abs())
        .fold(0.0, f64::max);
    if merr > MARGINAL_TOL {
        return Err(Error::MarginalMismatch(merr));
    }
    let closeness = outer.mass_where(|a, b| space.d(a, b) <= delta);
    let p_equal = 1.0 - xz.off_diagonal_mass();
    let p_close_zy = zy.mass_where(|a, b| space.d(a, b) <= delta);
    let lower_bound = p_equal + p_close_zy - 1.0;
    Ok(GluingOutcome {
        triple,
        closeness,
        p_equal,
        p_close_zy,
        lower_bound,
        bound_holds: closeness >= lower_bound - 1e-10,
        marginal_error: merr,
    })
}
