//! Monotone functions used as certificate envelopes and decay rates.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// A non-decreasing function `[0, inf) -> [0, inf)`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum Envelope {
    Constant { c: f64 },
    /// `a u + b`.
    Affine { a: f64, b: f64 },
    /// Right-continuous step function through `(u[k], values[k])`; the first
    /// value extends to the left and the last to the right.
    Table { u: Vec<f64>, values: Vec<f64> },
}

impl Envelope {
    pub fn eval(&self, x: f64) -> f64 {
        match self {
            Envelope::Constant { c } => *c,
            Envelope::Affine { a, b } => a * x + b,
            Envelope::Table { u, values } => {
                let k = u.partition_point(|&p| p <= x);
                values[k.saturating_sub(1)]
            }
        }
    }

    /// Checks finiteness, nonnegativity on `[0, inf)` and monotonicity.
    pub fn validate(&self) -> Result<()> {
        let bad = |m: &str| Err(Error::InvalidCertificate(m.into()));
        match self {
            Envelope::Constant { c } => {
                if !(c.is_finite() && *c >= 0.0) {
                    return bad("constant F must be finite and nonnegative");
                }
            }
            Envelope::Affine { a, b } => {
                if !(a.is_finite() && b.is_finite() && *a >= 0.0 && *b >= 0.0) {
                    return bad("affine F needs finite a >= 0 and b >= 0");
                }
            }
            Envelope::Table { u, values } => {
                if u.is_empty() || u.len() != values.len() {
                    return bad("table F needs matching nonempty u and values");
                }
                if u.windows(2).any(|w| !(w[0] < w[1])) {
                    return bad("table F arguments must be strictly increasing");
                }
                if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
                    return bad("table F values must be finite and nonnegative");
                }
                if values.windows(2).any(|w| w[0] > w[1]) {
                    return bad("table F must be non-decreasing");
                }
            }
        }
        Ok(())
    }

    /// Whether the function grows without bound on `[0, inf)`.
    pub fn is_unbounded(&self) -> bool {
        matches!(self, Envelope::Affine { a, .. } if *a > 0.0)
    }

    /// Pointwise `alpha f + beta g`, in closed form when both are.
    /// Otherwise tabulated on `grid`.
    pub fn combine(alpha: f64, f: &Envelope, beta: f64, g: &Envelope, grid: &[f64]) -> Envelope {
        use Envelope::*;
        match (f, g) {
            (Constant { c: c1 }, Constant { c: c2 }) => Constant { c: alpha * c1 + beta * c2 },
            (Constant { c }, Affine { a, b }) => Affine { a: beta * a, b: alpha * c + beta * b },
            (Affine { a, b }, Constant { c }) => Affine { a: alpha * a, b: alpha * b + beta * c },
            (Affine { a: a1, b: b1 }, Affine { a: a2, b: b2 }) => Affine {
                a: alpha * a1 + beta * a2,
                b: alpha * b1 + beta * b2,
            },
            _ => {
                let mut u: Vec<f64> = grid.to_vec();
                if let Table { u: t, .. } = f {
                    u.extend(t);
                }
                if let Table { u: t, .. } = g {
                    u.extend(t);
                }
                u.push(0.0);
                u.sort_by(f64::total_cmp);
                u.dedup();
                let values = u.iter().map(|&x| alpha * f.eval(x) + beta * g.eval(x)).collect();
                Table { u, values }
            }
        }
    }
}

/// A non-increasing rate `t -> r(t)` on positive integer times.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "lowercase", deny_unknown_fields)]
pub enum RateFn {
    /// `scale * ratio^t`.
    Geometric { scale: f64, ratio: f64 },
    /// `values[t - 1]`; later times reuse the last value.
    Table { values: Vec<f64> },
}

impl RateFn {
    pub fn eval(&self, t: u32) -> f64 {
        match self {
            RateFn::Geometric { scale, ratio } => scale * ratio.powi(t as i32),
            RateFn::Table { values } => {
                let k = (t.max(1) as usize - 1).min(values.len() - 1);
                values[k]
            }
        }
    }

    pub fn validate(&self) -> Result<()> {
        let ok = match self {
            RateFn::Geometric { scale, ratio } => *scale >= 0.0 && (0.0..=1.0).contains(ratio),
            RateFn::Table { values } => {
                !values.is_empty()
                    && values.iter().all(|v| v.is_finite() && *v >= 0.0)
                    && values.windows(2).all(|w| w[0] >= w[1])
            }
        };
        if ok {
            Ok(())
        } else {
            Err(Error::InvalidCertificate("rate must be nonnegative and non-increasing".into()))
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn table_is_right_continuous() {
        let f = Envelope::Table { u: vec![0.0, 1.0, 2.0], values: vec![1.0, 2.0, 5.0] };
        assert_eq!(f.eval(-1.0), 1.0);
        assert_eq!(f.eval(0.999), 1.0);
        assert_eq!(f.eval(1.0), 2.0);
        assert_eq!(f.eval(7.0), 5.0);
        f.validate().unwrap();
        let bad = Envelope::Table { u: vec![0.0, 1.0], values: vec![2.0, 1.0] };
        assert!(bad.validate().is_err());
    }

    #[test]
    fn combine_closed_forms() {
        let f1 = Envelope::Constant { c: 0.5 };
        let f2 = Envelope::Affine { a: 1.0, b: 1.0 };
        assert_eq!(Envelope::combine(2.0, &f1, 1.0, &f2, &[]), Envelope::Affine { a: 1.0, b: 2.0 });
    }

    #[test]
    fn serde_shape() {
        let f: Envelope = serde_json::from_str(r#"{"type":"affine","a":5,"b":2.5}"#).unwrap();
        assert_eq!(f, Envelope::Affine { a: 5.0, b: 2.5 });
        assert!(serde_json::from_str::<Envelope>(r#"{"type":"constant","c":1,"z":0}"#).is_err());
    }
}
