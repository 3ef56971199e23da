//! Families of joint laws `(Z_t, Y_t)` started from `(x, y)`.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::kernel::Kernel;
use crate::metric_space::Distribution;
use crate::models::{GaussianShiftProvider, GaussianWalkSpec, XiChainSpec, XiSyncProvider};
use crate::transport::{Coupling, MARGINAL_TOL};

pub trait CouplingProvider: Send + Sync {
    fn name(&self) -> String;

    /// Joint law of `(Z_t, Y_t)`. `law_y` is `P_t(y, .)`, supplied by the
    /// caller so that it is computed once per `(y, t)`.
    fn joint(&self, kernel: &Kernel, x: usize, y: usize, t: u32, law_y: &Distribution) -> Result<Coupling>;
}

/// The provider's joint, with its second marginal checked against `law_y`.
pub fn checked_joint(
    provider: &dyn CouplingProvider,
    kernel: &Kernel,
    x: usize,
    y: usize,
    t: u32,
    law_y: &Distribution,
) -> Result<Coupling> {
    let j = provider.joint(kernel, x, y, t, law_y)?;
    if j.rows() != kernel.len() || j.cols() != kernel.len() {
        return Err(Error::SpaceMismatch { expected: kernel.len(), got: j.rows().max(j.cols()) });
    }
    let cols = j.col_sums();
    let worst = cols.iter().zip(law_y.weights()).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
    if worst > MARGINAL_TOL {
        let l1 = cols.iter().zip(law_y.weights()).map(|(a, b)| (a - b).abs()).sum();
        return Err(Error::MarginalMismatch(l1));
    }
    Ok(j)
}

/// `Z = Y`.
#[derive(Debug, Clone, Copy)]
pub struct DiagonalProvider;

impl CouplingProvider for DiagonalProvider {
    fn name(&self) -> String {
        "diagonal".into()
    }

    fn joint(&self, kernel: &Kernel, _x: usize, _y: usize, _t: u32, law_y: &Distribution) -> Result<Coupling> {
        let n = kernel.len();
        let e = law_y.weights().iter().enumerate().filter(|(_, &m)| m > 0.0).map(|(j, &m)| (j, j, m)).collect();
        Ok(Coupling::from_entries(n, n, e))
    }
}

/// `Z ~ P_t(x, .)` independent of `Y`.
#[derive(Debug, Clone, Copy)]
pub struct IndependentProvider;

impl CouplingProvider for IndependentProvider {
    fn name(&self) -> String {
        "independent".into()
    }

    fn joint(&self, kernel: &Kernel, x: usize, _y: usize, t: u32, law_y: &Distribution) -> Result<Coupling> {
        let n = kernel.len();
        let law_x = kernel.push_point(x, t);
        let mut e = Vec::new();
        for (i, &a) in law_x.weights().iter().enumerate() {
            if a <= 0.0 {
                continue;
            }
            for (j, &b) in law_y.weights().iter().enumerate() {
                if b > 0.0 {
                    e.push((i, j, a * b));
                }
            }
        }
        Ok(Coupling::from_entries(n, n, e))
    }
}

/// Explicit joints read from a file.
#[derive(Debug, Clone, Default)]
pub struct TableProvider {
    joints: HashMap<(usize, usize, u32), Coupling>,
}

impl TableProvider {
    pub fn insert(&mut self, x: usize, y: usize, t: u32, joint: Coupling) {
        self.joints.insert((x, y, t), joint);
    }
}

impl CouplingProvider for TableProvider {
    fn name(&self) -> String {
        "table".into()
    }

    fn joint(&self, _kernel: &Kernel, x: usize, y: usize, t: u32, _law_y: &Distribution) -> Result<Coupling> {
        self.joints
            .get(&(x, y, t))
            .cloned()
            .ok_or_else(|| Error::Malformed(format!("provider has no joint for x={x}, y={y}, t={t}")))
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ProviderEntry {
    pub x: usize,
    pub y: usize,
    pub t: u32,
    pub joint: Vec<Vec<f64>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BuiltinProvider {
    pub builtin: String,
    #[serde(default)]
    pub params: serde_json::Map<String, serde_json::Value>,
}

/// On-disk provider: a list of explicit joints or a named strategy.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(untagged)]
pub enum ProviderFile {
    Builtin(BuiltinProvider),
    Table(Vec<ProviderEntry>),
}

fn param(p: &serde_json::Map<String, serde_json::Value>, key: &str) -> Result<f64> {
    p.get(key)
        .and_then(|v| v.as_f64())
        .ok_or_else(|| Error::Malformed(format!("params.{key}: missing or not a number")))
}

impl ProviderFile {
    pub fn into_provider(self) -> Result<Box<dyn CouplingProvider>> {
        match self {
            ProviderFile::Table(entries) => {
                let mut t = TableProvider::default();
                for e in entries {
                    t.insert(e.x, e.y, e.t, Coupling::from_dense(&e.joint)?);
                }
                Ok(Box::new(t))
            }
            ProviderFile::Builtin(b) => {
                let allowed: &[&str] = match b.builtin.as_str() {
                    "diagonal" | "independent" => &[],
                    "xi-sync" => &["xi", "depth"],
                    "gaussian-shift" => &["lambda", "half_width", "step"],
                    other => return Err(Error::Malformed(format!("builtin: unknown provider {other:?}"))),
                };
                if let Some(k) = b.params.keys().find(|k| !allowed.contains(&k.as_str())) {
                    return Err(Error::Malformed(format!("params.{k}: unknown parameter")));
                }
                Ok(match b.builtin.as_str() {
                    "diagonal" => Box::new(DiagonalProvider),
                    "independent" => Box::new(IndependentProvider),
                    "xi-sync" => Box::new(XiSyncProvider {
                        spec: XiChainSpec::new(param(&b.params, "xi")?, param(&b.params, "depth")? as usize)?,
                    }),
                    _ => Box::new(GaussianShiftProvider::new(
                        GaussianWalkSpec::new(param(&b.params, "half_width")?, param(&b.params, "step")?)?,
                        param(&b.params, "lambda")?,
                    )?),
                })
            }
        }
    }
}
