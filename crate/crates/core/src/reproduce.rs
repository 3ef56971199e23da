//! Consolidated reproduction of the three worked examples: each claim with
//! its reference value, the measured counterpart and a pass flag.

use serde::Serialize;

use crate::diagnostics::{
    check_asf_plus, check_lwi, fit_asf_plus_envelope, support_separation, theorem23_construction, uniqueness_verdict,
    verify_a1, verify_a2, AsfPlusCertificate, Envelope, LwiParams, RateFn,
};
use crate::error::Result;
use crate::metric_space::Distribution;
use crate::models::*;
use crate::transport::tv_distance;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Relation {
    /// `|measured - reference| <= tolerance`
    Approx,
    /// `measured >= reference - tolerance`
    AtLeast,
    /// `measured <= reference + tolerance`
    AtMost,
}

#[derive(Debug, Clone, Serialize)]
pub struct ClaimRow {
    pub claim: String,
    pub reference: f64,
    pub measured: f64,
    pub relation: Relation,
    pub tolerance: f64,
    pub pass: bool,
}

impl ClaimRow {
    pub fn new(claim: impl Into<String>, reference: f64, measured: f64, relation: Relation, tolerance: f64) -> Self {
        let pass = match relation {
            Relation::Approx => (measured - reference).abs() <= tolerance,
            Relation::AtLeast => measured >= reference - tolerance,
            Relation::AtMost => measured <= reference + tolerance,
        };
        ClaimRow {
            claim: claim.into(),
            reference,
            measured,
            relation,
            tolerance,
            pass,
        }
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ExampleReport {
    pub example: String,
    pub rows: Vec<ClaimRow>,
    pub notes: Vec<String>,
    pub pass: bool,
}

impl ExampleReport {
    fn new(example: &str, rows: Vec<ClaimRow>, notes: Vec<String>) -> Self {
        ExampleReport {
            example: example.into(),
            pass: rows.iter().all(|r| r.pass),
            rows,
            notes,
        }
    }
}

fn flag(b: bool) -> f64 {
    if b {
        1.0
    } else {
        0.0
    }
}

fn normalised(w: Vec<f64>) -> Result<Distribution> {
    let s: f64 = w.iter().sum();
    Distribution::new(w.into_iter().map(|x| x / s).collect())
}

pub fn xi_chain_report(spec: &XiChainSpec) -> Result<ExampleReport> {
    let xi = spec.xi;
    let k = build_xi_chain(spec)?;
    let n = k.len();
    let dec = k.invariant_measures()?;
    let mut rows = vec![ClaimRow::new("number of ergodic invariant measures", 2.0, dec.len() as f64, Relation::Approx, 0.0)];
    let (a, b) = xi_chain_reference_measures(spec);
    let tol = 2f64.powi(4 - spec.depth as i32);
    if dec.len() == 2 {
        rows.push(ClaimRow::new("L1 distance to sum 2^-i delta_i", 0.0, dec.measures[0].l1_distance(&normalised(a)?), Relation::AtMost, tol));
        rows.push(ClaimRow::new("L1 distance to sum 2^-i delta_(i+xi/i)", 0.0, dec.measures[1].l1_distance(&normalised(b)?), Relation::AtMost, tol));
    }

    let eps = 0.1;
    let kk = (1..=spec.depth).find(|&j| xi / (j as f64) < eps).unwrap_or(spec.depth);
    let t = kk as u32 + 1;
    let lwi = check_lwi(&k, 3.0, eps, &[t])?;
    rows.push(ClaimRow::new(
        format!("LWI value at R=3, eps={eps}, t={t}"),
        2f64.powi(-(2 * kk as i32 + 2)),
        lwi.records[0].value,
        Relation::AtLeast,
        0.0,
    ));

    let pairs: Vec<(usize, usize)> = (0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect();
    let ak = [(1.0, 1.0), (1.0, 10.0)];
    let cert = |b: f64| AsfPlusCertificate {
        x0: 0,
        times: vec![1],
        slacks: vec![0.0],
        f: Envelope::Affine { a: 2.0 / xi, b: b / xi },
        f_bounded: false,
    };
    let stated = check_asf_plus(&k, &cert(1.0), &pairs, &ak)?;
    let corrected = check_asf_plus(&k, &cert(2.0), &pairs, &ak)?;
    let margin = |r: &crate::diagnostics::AsfPlusReport| r.worst.as_ref().map_or(0.0, |w| w.margin);
    rows.push(ClaimRow::new("ASF+ min margin, F(u)=(2u+1)/xi", 0.0, margin(&stated), Relation::AtLeast, 1e-9));
    rows.push(ClaimRow::new("ASF+ min margin, F(u)=2(u+1)/xi", 0.0, margin(&corrected), Relation::AtLeast, 1e-9));

    let f = Envelope::Affine { a: 2.0 / xi, b: 1.0 / xi };
    if dec.len() == 2 {
        let sep = support_separation(&dec.measures[0], &dec.measures[1], &f, k.space(), 0)?;
        rows.push(ClaimRow::new("support separation min d*F", 1.0, sep.min_ratio, Relation::AtLeast, 1e-9));
    }
    let verdict = uniqueness_verdict(&k, &cert(2.0), &pairs, &ak, LwiParams { radius: 3.0, eps, times: &[t] })?;
    rows.push(ClaimRow::new("uniqueness implied (1 = yes)", 0.0, flag(verdict.implied), Relation::Approx, 0.0));

    let mut notes = vec![
        "the envelope F is affine, so it is unbounded on the full chain; on the truncation it is bounded and the verdict is flagged truncation-dependent".to_string(),
        "the top level of each lattice resets to its base; the untruncated chain is infinite".to_string(),
    ];
    if !stated.pass {
        let s = k.space();
        let bad: Vec<String> = stated
            .records
            .iter()
            .filter(|r| !r.pass)
            .map(|r| format!("({}, {}) K={}: {} > {}", s.label(r.x), s.label(r.y), r.k, r.lhs, r.rhs))
            .collect();
        notes.push(format!("F(u)=(2u+1)/xi is violated at {}; F(u)=2(u+1)/xi holds", bad.join("; ")));
    }
    Ok(ExampleReport::new("xi-chain", rows, notes))
}

pub fn gaussian_report(spec: &GaussianWalkSpec, lambda: f64) -> Result<ExampleReport> {
    let k = build_gaussian_walk(spec)?;
    let x0 = k.space().base_index();
    let mut rows = Vec::new();
    let (i0, i1) = (spec.index(0.0), spec.index(1.0));
    rows.push(ClaimRow::new(
        "TV(P_1(0,.), P_1(1,.))",
        gaussian_tv_closed_form(0.0, 1.0, 1.0)?,
        tv_distance(&k.push_point(i0, 1), &k.push_point(i1, 1))?,
        Relation::Approx,
        1e-4,
    ));

    let pts: Vec<usize> = [-2.0, -1.0, -0.5, 0.0, 0.25, 1.0, 2.5].iter().map(|&x| spec.index(x)).collect();
    let pairs: Vec<(usize, usize)> = pts.iter().enumerate().flat_map(|(a, &x)| pts[a + 1..].iter().map(move |&y| (x, y))).collect();
    let ak = [(1.0, 1.0), (1.0, 10.0)];
    let cert = AsfPlusCertificate {
        x0,
        times: vec![1],
        slacks: vec![0.0],
        f: Envelope::Constant { c: 0.8 },
        f_bounded: true,
    };
    let asf = check_asf_plus(&k, &cert, &pairs, &ak)?;
    rows.push(ClaimRow::new("ASF+ min margin, F = 0.8", 0.0, asf.worst.as_ref().map_or(0.0, |w| w.margin), Relation::AtLeast, 1e-9));

    let lam = (-(1.25f64.powi(2)) / 2.0).exp() / (2.0 * std::f64::consts::PI).sqrt();
    let lwi = check_lwi(&k, 1.0, 0.5, &[1])?;
    rows.push(ClaimRow::new("LWI value at R=1, eps=0.5, t=1", lam * lam * 0.25, lwi.records[0].value, Relation::AtLeast, 0.0));

    let provider = GaussianShiftProvider::new(*spec, lambda)?;
    let a1_pts: Vec<usize> = [-0.99, -0.4, 0.0, 0.07, 0.99].iter().map(|&x| spec.index(x)).collect();
    let a1_pairs: Vec<(usize, usize)> = a1_pts.iter().flat_map(|&x| a1_pts.iter().filter(move |&&y| y != x).map(move |&y| (x, y))).collect();
    let times: Vec<u32> = (1..=6).collect();
    let f1 = Envelope::Constant { c: (2.0 * std::f64::consts::PI).sqrt().recip() };
    let f2 = Envelope::Constant { c: 1.0 };
    let rate = RateFn::Geometric { scale: 1.0, ratio: 1.0 - lambda };
    let a1 = verify_a1(&k, &provider, x0, &f1, &f2, &rate, &a1_pairs, &times)?;
    rows.push(ClaimRow::new("A1 holds (1 = yes)", 1.0, flag(a1.pass), Relation::Approx, 0.0));
    if let Ok(fitted) = fit_asf_plus_envelope(&a1) {
        let c = fitted.f.eval(0.0);
        rows.push(ClaimRow::new("fitted F = 2 F1 + F2", 2.0 / (2.0 * std::f64::consts::PI).sqrt() + 1.0, c, Relation::Approx, 1e-12));
        let r = check_asf_plus(&k, &fitted, &a1_pairs, &ak)?;
        rows.push(ClaimRow::new("fitted certificate passes ASF+ (1 = yes)", 1.0, flag(r.pass), Relation::Approx, 0.0));
    }

    let ball = k.space().base_ball(1.0);
    let mut b: Vec<usize> = ball.iter().copied().step_by(((0.1 / spec.step).round() as usize).max(1)).collect();
    b.extend(ball.last().copied());
    b.sort_unstable();
    b.dedup();
    let eps = 0.59;
    let a2 = verify_a2(&k, &provider, &b, eps, &RateFn::Geometric { scale: 2.0, ratio: 1.0 - lambda }, &(1..=10).collect::<Vec<_>>())?;
    rows.push(ClaimRow::new("A2 largest eps on B_1(0)", eps, a2.eps_star, Relation::AtLeast, 0.0));
    let g = theorem23_construction(&k, &provider, b[0], *b.last().unwrap_or(&b[0]), 6, 0.1)?;
    rows.push(ClaimRow::new("gluing closeness at delta=0.1, t=6", eps / 2.0, g.closeness, Relation::AtLeast, 0.0));
    rows.push(ClaimRow::new("gluing closeness minus its lower bound", 0.0, g.closeness - g.lower_bound, Relation::AtLeast, 1e-10));

    let v = uniqueness_verdict(&k, &cert, &pairs, &ak, LwiParams { radius: 1.0, eps: 0.5, times: &[1] })?;
    rows.push(ClaimRow::new("uniqueness implied (1 = yes)", 1.0, flag(v.implied), Relation::Approx, 0.0));
    rows.push(ClaimRow::new("number of ergodic invariant measures", 1.0, v.decomposition_count as f64, Relation::Approx, 0.0));
    let notes = vec![
        "Brownian motion has no invariant probability measure; a finite grid always has one, so that claim is not reproducible on a finite truncation".to_string(),
        "tail mass beyond the grid is folded into the boundary cells".to_string(),
        "the exact Gaussian total variation replaces the unspecified constants of the cited bound".to_string(),
    ];
    Ok(ExampleReport::new("gaussian", rows, notes))
}

pub fn interval_report(spec: &IntervalChainSpec) -> Result<ExampleReport> {
    let k = build_interval_chain(spec)?;
    let grid = spec.grid();
    let mut rows = Vec::new();
    let mut v = grid.clone();
    for n in 1..=6u32 {
        v = k.apply_function(&v, 1)?;
        let err = grid
            .iter()
            .zip(&v)
            .map(|(&u, &x)| interval_chain_closed_form(n, u).map(|c| (x - c).abs()))
            .collect::<Result<Vec<_>>>()?
            .into_iter()
            .fold(0.0, f64::max);
        rows.push(ClaimRow::new(format!("max |P_{n} id - closed form| over the grid"), 0.0, err, Relation::AtMost, 1e-3));
    }
    for n in [1u32, 3, 6] {
        for y in [1e-4, 1e-2, 0.25] {
            let d = interval_expected(&k, spec, &grid, n, 0.0)? - interval_expected(&k, spec, &grid, n, y)?;
            rows.push(ClaimRow::new(
                format!("|P_{n} id(0) - P_{n} id({y})|"),
                3f64.powi(1 - n as i32) * y.sqrt(),
                d.abs(),
                Relation::Approx,
                1e-3,
            ));
        }
    }
    let probes = [1e-2f64, 1e-4, 1e-6];
    let f: Vec<f64> = probes.iter().map(|&y| interval_required_f1(&k, spec, 1, y, 0.0)).collect::<Result<_>>()?;
    for (&y, v) in probes.iter().zip(&f) {
        rows.push(ClaimRow::new(format!("required F(1) at y={y}, t_1=1"), 1.0 / (3.0 * y.sqrt()), *v, Relation::Approx, 0.2 / (3.0 * y.sqrt())));
    }
    rows.push(ClaimRow::new("required F(1) ratio y=1e-4 over y=1e-2", 10.0, f[1] / f[0], Relation::Approx, 2.0));
    let notes = vec![
        "the required F(1) grows like 1/sqrt(y): no finite envelope certifies ASF+ for this chain".to_string(),
        format!("starts off the grid take their first step exactly; the grid has {} points", spec.grid_points),
    ];
    Ok(ExampleReport::new("interval", rows, notes))
}
