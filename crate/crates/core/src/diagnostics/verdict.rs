//! Uniqueness verdict from ASF+ and local weak irreducibility, and the
//! separation of ergodic supports forced by an ASF+ envelope.

use serde::Serialize;

use super::certificate::AsfPlusCertificate;
use super::envelope::Envelope;
use super::feller::{check_asf_plus, check_lwi, AsfPlusReport, LwiReport, CHECK_TOL};
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric_space::{Distribution, MetricSpace};

pub const SUPPORT_TOL: f64 = 1e-12;

pub const REASON_ASF_PLUS: &str = "ASF+ certificate fails on the grid";
pub const REASON_LWI: &str = "local weak irreducibility not observed";
pub const REASON_UNBOUNDED: &str = "F unbounded/truncation-dependent";

#[derive(Debug, Clone, Copy)]
pub struct LwiParams<'a> {
    pub radius: f64,
    pub eps: f64,
    pub times: &'a [u32],
}

#[derive(Debug, Clone, Serialize)]
pub struct Verdict {
    pub implied: bool,
    pub reasons: Vec<String>,
    pub asf_plus: AsfPlusReport,
    pub lwi: LwiReport,
    pub f_declared_bounded: bool,
    /// `max F(u)` over the arguments `u` reached by the pair grid.
    pub f_sup_observed: f64,
    /// The envelope grows without bound, so any finite truncation hides it.
    pub truncation_dependent: bool,
    pub decomposition_count: usize,
    /// `false` only if uniqueness was implied yet several ergodic measures exist.
    pub consistent: bool,
}

pub fn uniqueness_verdict(
    kernel: &Kernel,
    cert: &AsfPlusCertificate,
    pairs: &[(usize, usize)],
    ak_grid: &[(f64, f64)],
    lwi: LwiParams<'_>,
) -> Result<Verdict> {
    let asf_plus = check_asf_plus(kernel, cert, pairs, ak_grid)?;
    let lwi_report = check_lwi(kernel, lwi.radius, lwi.eps, lwi.times)?;
    let space = kernel.space();
    let f_sup_observed = pairs
        .iter()
        .map(|&(x, y)| cert.f.eval(space.d(x, cert.x0).max(space.d(y, cert.x0))))
        .fold(0.0, f64::max);
    let truncation_dependent = cert.f.is_unbounded();
    let decomposition_count = kernel.invariant_measures()?.len();
    let mut v = Verdict {
        implied: false,
        reasons: Vec::new(),
        asf_plus,
        lwi: lwi_report,
        f_declared_bounded: cert.f_bounded,
        f_sup_observed,
        truncation_dependent,
        decomposition_count,
        consistent: true,
    };
    v.grade();
    Ok(v)
}

impl Verdict {
    fn grade(&mut self) {
        self.reasons.clear();
        if !self.asf_plus.pass {
            self.reasons.push(REASON_ASF_PLUS.to_string());
        }
        if !self.lwi.pass {
            self.reasons.push(REASON_LWI.to_string());
        }
        if !self.f_declared_bounded || self.truncation_dependent {
            self.reasons.push(REASON_UNBOUNDED.to_string());
        }
        self.implied = self.reasons.is_empty();
        self.consistent = !self.implied || self.decomposition_count <= 1;
    }

    /// Re-grades the ASF+ records with slack `tol` and recomputes the verdict.
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.asf_plus = self.asf_plus.with_tolerance(tol);
        self.grade();
        self
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct SeparationReport {
    /// `min d(w1, w2) F(d(w1,x0) v d(w2,x0))` over the two supports.
    pub min_ratio: f64,
    pub witness: (usize, usize),
    pub pass: bool,
}

/// Checks that every pair drawn from the two supports sits at least
/// `1 / F(.)` apart.
pub fn support_separation(
    mu1: &Distribution,
    mu2: &Distribution,
    f: &Envelope,
    space: &MetricSpace,
    x0: usize,
) -> Result<SeparationReport> {
    let n = space.len();
    mu1.check_len(n)?;
    mu2.check_len(n)?;
    if x0 >= n {
        return Err(Error::BadBaseIndex { index: x0, len: n });
    }
    f.validate()?;
    if mu1.l1_distance(mu2) == 0.0 {
        return Err(Error::DistinctMeasuresRequired);
    }
    let s1 = mu1.support(SUPPORT_TOL);
    let s2 = mu2.support(SUPPORT_TOL);
    if s1.is_empty() || s2.is_empty() {
        return Err(Error::EmptySupport);
    }
    let mut best = (f64::INFINITY, (s1[0], s2[0]));
    for &a in &s1 {
        for &b in &s2 {
            let r = space.d(a, b) * f.eval(space.d(a, x0).max(space.d(b, x0)));
            if r < best.0 {
                best = (r, (a, b));
            }
        }
    }
    Ok(SeparationReport {
        min_ratio: best.0,
        witness: best.1,
        pass: best.0 >= 1.0 - CHECK_TOL,
    })
}

impl SeparationReport {
    pub fn with_tolerance(mut self, tol: f64) -> Self {
        self.pass = self.min_ratio >= 1.0 - tol;
        self
    }
}
