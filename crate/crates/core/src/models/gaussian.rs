//! Gaussian random walk `x -> x + N(0,1)` on the grid `h Z` intersected
//! with `[-L, L]`. Cells are centred on grid points; the two boundary cells
//! absorb the tails.

use std::sync::Arc;

use statrs::function::erf::erfc;

use crate::diagnostics::CouplingProvider;
use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric_space::MetricSpace;
use crate::transport::Coupling;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GaussianWalkSpec {
    pub half_width: f64,
    pub step: f64,
}

impl GaussianWalkSpec {
    pub fn new(half_width: f64, step: f64) -> Result<Self> {
        if !(half_width >= 6.0 && half_width.is_finite()) {
            return Err(Error::OutOfDomain { value: half_width, domain: "half_width >= 6" });
        }
        if !(step > 0.0 && step <= 0.05) {
            return Err(Error::OutOfDomain { value: step, domain: "0 < step <= 0.05" });
        }
        let m = half_width / step;
        if (m - m.round()).abs() > 1e-9 * m {
            return Err(Error::GridResolutionTooCoarse(format!(
                "step {step} does not divide half_width {half_width}"
            )));
        }
        Ok(GaussianWalkSpec { half_width, step })
    }

    /// Grid points on each side of zero.
    pub fn half_points(&self) -> usize {
        (self.half_width / self.step).round() as usize
    }

    pub fn len(&self) -> usize {
        2 * self.half_points() + 1
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn coordinate(&self, i: usize) -> f64 {
        (i as f64 - self.half_points() as f64) * self.step
    }

    /// Index of the grid point nearest to `x`, clamped to the grid.
    pub fn index(&self, x: f64) -> usize {
        let k = (x / self.step).round() + self.half_points() as f64;
        (k.max(0.0) as usize).min(self.len() - 1)
    }

    pub fn space(&self) -> Result<Arc<MetricSpace>> {
        let coords: Vec<f64> = (0..self.len()).map(|i| self.coordinate(i)).collect();
        let labels = coords.iter().map(|&x| super::grid_label(x, self.step)).collect();
        Ok(Arc::new(MetricSpace::from_line(labels, coords, self.half_points())?))
    }
}

/// Standard normal distribution function, accurate in both tails.
pub fn normal_cdf(z: f64) -> f64 {
    0.5 * erfc(-z / std::f64::consts::SQRT_2)
}

/// `P(a < N(0,1) <= b)` without cancellation in the upper tail.
fn normal_mass(a: f64, b: f64) -> f64 {
    if a >= 0.0 {
        normal_cdf(-a) - normal_cdf(-b)
    } else {
        normal_cdf(b) - normal_cdf(a)
    }
}

pub fn build_gaussian_walk(spec: &GaussianWalkSpec) -> Result<Kernel> {
    let n = spec.len();
    let h = spec.step;
    let mut m = vec![0.0; n * n];
    crate::par::for_each_row(&mut m, n, |i, row| {
        let x = spec.coordinate(i);
        for (k, w) in row.iter_mut().enumerate() {
            let c = spec.coordinate(k);
            let lo = if k == 0 { f64::NEG_INFINITY } else { c - h / 2.0 - x };
            let hi = if k + 1 == n { f64::INFINITY } else { c + h / 2.0 - x };
            *w = normal_mass(lo, hi);
        }
    });
    Kernel::from_flat(spec.space()?, m)
}

/// `d_TV(N(x,t), N(y,t)) = 2 Phi(|x-y| / (2 sqrt t)) - 1`.
pub fn gaussian_tv_closed_form(x: f64, y: f64, t: f64) -> Result<f64> {
    if !(t > 0.0) {
        return Err(Error::NonpositiveTime(t));
    }
    let z = (x - y).abs() / (2.0 * t.sqrt());
    Ok(1.0 - 2.0 * normal_cdf(-z))
}

/// Shared noise with a deterministic pull of `Z` towards `Y`:
/// `Y_t - Z_t = (1 - lambda)^t (y - x)`. On the grid the shift is split
/// between the two neighbouring grid multiples so that `E|Z - Y|` is exact.
#[derive(Debug, Clone)]
pub struct GaussianShiftProvider {
    pub spec: GaussianWalkSpec,
    pub lambda: f64,
}

impl GaussianShiftProvider {
    pub fn new(spec: GaussianWalkSpec, lambda: f64) -> Result<Self> {
        if !(lambda > 0.0 && lambda < 1.0) {
            return Err(Error::OutOfDomain { value: lambda, domain: "0 < lambda < 1" });
        }
        Ok(GaussianShiftProvider { spec, lambda })
    }

    /// `Y_t - Z_t` in grid units.
    pub fn gap(&self, x: usize, y: usize, t: u32) -> f64 {
        (1.0 - self.lambda).powi(t as i32) * (y as f64 - x as f64)
    }
}

impl CouplingProvider for GaussianShiftProvider {
    fn name(&self) -> String {
        format!("gaussian-shift(lambda={})", self.lambda)
    }

    fn joint(&self, kernel: &Kernel, x: usize, y: usize, t: u32, law_y: &crate::metric_space::Distribution) -> Result<Coupling> {
        let n = kernel.len();
        if n != self.spec.len() {
            return Err(Error::SpaceMismatch { expected: self.spec.len(), got: n });
        }
        let q = self.gap(x, y, t);
        let k_lo = q.floor();
        let p = 1.0 - (q - k_lo);
        let shifts = [(k_lo as i64, p), (k_lo as i64 + 1, 1.0 - p)];
        let mut entries = Vec::new();
        for (j, &m) in law_y.weights().iter().enumerate() {
            if m <= 0.0 {
                continue;
            }
            for &(k, w) in &shifts {
                if w > 0.0 {
                    let z = (j as i64 - k).clamp(0, n as i64 - 1) as usize;
                    entries.push((z, j, m * w));
                }
            }
        }
        Ok(Coupling::from_entries(n, n, entries))
    }
}
