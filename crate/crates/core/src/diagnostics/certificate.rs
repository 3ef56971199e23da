use serde::{Deserialize, Serialize};

use super::envelope::Envelope;
use crate::error::{Error, Result};

/// Candidate data `(x0, t_n, delta_n, F)` for the gradient-type bound
/// `|P_t phi(x) - P_t phi(y)| <= d(x,y) F(d(x,x0) v d(y,x0)) (|phi|_inf + delta K)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct AsfPlusCertificate {
    pub x0: usize,
    pub times: Vec<u32>,
    pub slacks: Vec<f64>,
    #[serde(rename = "F")]
    pub f: Envelope,
    /// Declared `sup F < inf` over the whole (possibly untruncated) space.
    #[serde(rename = "F_bounded")]
    pub f_bounded: bool,
}

impl AsfPlusCertificate {
    pub fn validate(&self, n_states: usize) -> Result<()> {
        let bad = |m: String| Err(Error::InvalidCertificate(m));
        if self.x0 >= n_states {
            return bad(format!("x0 = {} out of range for {n_states} states", self.x0));
        }
        if self.times.is_empty() || self.times.len() != self.slacks.len() {
            return bad("times and slacks must be nonempty and of equal length".into());
        }
        if self.times.contains(&0) || self.times.windows(2).any(|w| w[0] > w[1]) {
            return bad("times must be positive and non-decreasing".into());
        }
        if self.slacks.iter().any(|s| !(s.is_finite() && *s >= 0.0)) || self.slacks.windows(2).any(|w| w[0] < w[1]) {
            return bad("slacks must be nonnegative and non-increasing".into());
        }
        self.f.validate()
    }
}
