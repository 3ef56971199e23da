//! The chain `x -> 2 - sqrt(x) + zeta` on `[0,1]` and `x -> 2/3 + x/3 + zeta`
//! on `[1,3]`, with `zeta` uniform on `[0, 1/3]`, on a uniform grid of `[0,3]`.
//! Each grid state owns the cell of points nearest to it; a row is the exact
//! probability that the image interval assigns to each cell.

use std::sync::Arc;

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric_space::MetricSpace;

const WIDTH: f64 = 1.0 / 3.0;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct IntervalChainSpec {
    pub grid_points: usize,
}

impl IntervalChainSpec {
    /// The grid must contain 0, 1 and 3, which needs `grid_points - 1`
    /// divisible by 3.
    pub fn new(grid_points: usize) -> Result<Self> {
        if grid_points < 31 {
            return Err(Error::GridResolutionTooCoarse(format!(
                "{grid_points} grid points, need at least 31"
            )));
        }
        if !(grid_points - 1).is_multiple_of(3) {
            return Err(Error::GridResolutionTooCoarse(format!(
                "{grid_points} grid points do not place 1 on the grid (need grid_points - 1 divisible by 3)"
            )));
        }
        Ok(IntervalChainSpec { grid_points })
    }

    pub fn spacing(&self) -> f64 {
        3.0 / (self.grid_points - 1) as f64
    }

    pub fn grid(&self) -> Vec<f64> {
        let m = (self.grid_points - 1) as f64;
        (0..self.grid_points).map(|k| 3.0 * k as f64 / m).collect()
    }

    pub fn space(&self) -> Result<Arc<MetricSpace>> {
        let g = self.grid();
        let labels = g.iter().map(|&u| super::grid_label(u, self.spacing())).collect();
        Ok(Arc::new(MetricSpace::from_line(labels, g, 0)?))
    }

    /// Index of the grid point nearest to `u`.
    pub fn nearest(&self, u: f64) -> usize {
        ((u / self.spacing()).round().max(0.0) as usize).min(self.grid_points - 1)
    }
}

fn image_start(y: f64) -> f64 {
    if y <= 1.0 {
        2.0 - y.sqrt()
    } else {
        2.0 / 3.0 + y / 3.0
    }
}

/// One-step law from any start `y` in `[0,3]`, over the grid cells.
pub fn interval_row(spec: &IntervalChainSpec, y: f64) -> Result<Vec<f64>> {
    if !(0.0..=3.0).contains(&y) {
        return Err(Error::OutOfDomain { value: y, domain: "[0, 3]" });
    }
    let h = spec.spacing();
    let n = spec.grid_points;
    let a = image_start(y);
    let b = a + WIDTH;
    let mut row = vec![0.0; n];
    let k_lo = ((a / h - 0.5).floor().max(0.0) as usize).min(n - 1);
    let k_hi = ((b / h + 0.5).ceil().max(0.0) as usize).min(n - 1);
    for (k, w) in row.iter_mut().enumerate().take(k_hi + 1).skip(k_lo) {
        let u = k as f64 * h;
        let lo = (u - h / 2.0).max(0.0).max(a);
        let hi = (u + h / 2.0).min(3.0).min(b);
        if hi > lo {
            *w = (hi - lo) / WIDTH;
        }
    }
    let s: f64 = row.iter().sum();
    row.iter_mut().for_each(|w| *w /= s);
    Ok(row)
}

pub fn build_interval_chain(spec: &IntervalChainSpec) -> Result<Kernel> {
    let space = spec.space()?;
    let g = spec.grid();
    let n = g.len();
    let rows = crate::par::try_map(&g, |&u| interval_row(spec, u))?;
    let mut m = Vec::with_capacity(n * n);
    for r in rows {
        m.extend(r);
    }
    Kernel::from_flat(space, m)
}

/// `(P_t phi)(y)` for a start `y` anywhere in `[0,3]`: the first step is
/// taken from `y` itself, the remaining `t - 1` on the grid.
pub fn interval_expected(kernel: &Kernel, spec: &IntervalChainSpec, phi: &[f64], t: u32, y: f64) -> Result<f64> {
    if t == 0 {
        return Err(Error::OutOfDomain { value: 0.0, domain: "t >= 1" });
    }
    if kernel.len() != spec.grid_points {
        return Err(Error::SpaceMismatch { expected: spec.grid_points, got: kernel.len() });
    }
    let v = kernel.apply_function(phi, t - 1)?;
    let row = interval_row(spec, y)?;
    Ok(row.iter().zip(&v).map(|(p, x)| p * x).sum())
}

/// The smallest `F(1)` compatible with the gradient bound for `phi = id`,
/// base point 0 and the pair `(0, y)`:
/// `|P_t phi(0) - P_t phi(y)| / (y (|phi|_inf + delta))`.
pub fn interval_required_f1(kernel: &Kernel, spec: &IntervalChainSpec, t: u32, y: f64, delta: f64) -> Result<f64> {
    if !(y > 0.0 && y <= 1.0) {
        return Err(Error::OutOfDomain { value: y, domain: "0 < y <= 1" });
    }
    let id = spec.grid();
    let diff = interval_expected(kernel, spec, &id, t, 0.0)? - interval_expected(kernel, spec, &id, t, y)?;
    Ok(diff.abs() / (y * (3.0 + delta)))
}

/// `E[X_n | X_0 = u]` for the continuous chain.
pub fn interval_chain_closed_form(n: u32, u: f64) -> Result<f64> {
    if n == 0 {
        return Err(Error::OutOfDomain { value: 0.0, domain: "n >= 1" });
    }
    if !(0.0..=3.0).contains(&u) {
        return Err(Error::OutOfDomain { value: u, domain: "[0, 3]" });
    }
    let upper = |k: i32, v: f64| 1.25 * (1.0 - 3f64.powi(-k)) + 3f64.powi(-k) * v;
    if u >= 1.0 {
        Ok(upper(n as i32, u))
    } else {
        Ok(upper(n as i32 - 1, 2.0 - u.sqrt() + 1.0 / 6.0))
    }
}
