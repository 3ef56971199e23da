//! The three worked examples as finite kernels, with closed-form oracles
//! and coupling strategies.

mod gaussian;
mod interval;
mod xi_chain;

pub use gaussian::{
    build_gaussian_walk, gaussian_tv_closed_form, normal_cdf, GaussianShiftProvider, GaussianWalkSpec,
};
pub use interval::{
    build_interval_chain, interval_chain_closed_form, interval_expected, interval_required_f1, interval_row,
    IntervalChainSpec,
};
pub use xi_chain::{build_xi_chain, xi_chain_reference_measures, XiChainSpec, XiSyncProvider};

/// Shortest decimal label for a point of a grid with spacing `step`.
pub(crate) fn grid_label(x: f64, step: f64) -> String {
    let digits = (0..=12).find(|&d| {
        let s = step * 10f64.powi(d);
        (s - s.round()).abs() < 1e-9 * s.max(1.0)
    });
    let s = format!("{:.*}", digits.unwrap_or(12) as usize, x);
    let s = if s.contains('.') { s.trim_end_matches('0').trim_end_matches('.').to_string() } else { s };
    if s == "-0" {
        "0".into()
    } else {
        s
    }
}
