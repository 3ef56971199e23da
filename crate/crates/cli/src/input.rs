//! Model construction and parsing of state labels, lists and JSON inputs.

use std::path::Path;

use anyhow::{anyhow, bail, Context, Result};
use clap::{Args, ValueEnum};
use semcert_core::diagnostics::{AsfPlusCertificate, CouplingProvider, Envelope, ProviderFile, RateFn};
use semcert_core::kernel::KernelFile;
use semcert_core::models::*;
use semcert_core::Kernel;

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum ModelName {
    XiChain,
    Interval,
    Gaussian,
}

#[derive(Debug, Clone, Args)]
pub struct ModelArgs {
    /// Built-in model.
    #[arg(long, conflicts_with = "kernel")]
    pub model: Option<ModelName>,
    /// Kernel file (JSON).
    #[arg(long)]
    pub kernel: Option<std::path::PathBuf>,
    #[arg(long, default_value_t = 0.4)]
    pub xi: f64,
    #[arg(long, default_value_t = 40)]
    pub depth: usize,
    /// Grid points of the interval chain.
    #[arg(long, default_value_t = 3001)]
    pub grid: usize,
    #[arg(long = "half-width", default_value_t = 8.0)]
    pub half_width: f64,
    #[arg(long, default_value_t = 0.01)]
    pub step: f64,
}

pub enum Builtin {
    Xi(XiChainSpec),
    Interval(IntervalChainSpec),
    Gaussian(GaussianWalkSpec),
}

pub struct Loaded {
    pub kernel: Kernel,
    pub builtin: Option<Builtin>,
}

impl ModelArgs {
    pub fn builtin(&self, name: ModelName) -> Result<Builtin> {
        Ok(match name {
            ModelName::XiChain => Builtin::Xi(XiChainSpec::new(self.xi, self.depth)?),
            ModelName::Interval => Builtin::Interval(IntervalChainSpec::new(self.grid)?),
            ModelName::Gaussian => Builtin::Gaussian(GaussianWalkSpec::new(self.half_width, self.step)?),
        })
    }

    pub fn load(&self) -> Result<Loaded> {
        match (&self.model, &self.kernel) {
            (Some(name), _) => {
                let b = self.builtin(*name)?;
                let kernel = match &b {
                    Builtin::Xi(s) => build_xi_chain(s)?,
                    Builtin::Interval(s) => build_interval_chain(s)?,
                    Builtin::Gaussian(s) => build_gaussian_walk(s)?,
                };
                Ok(Loaded { kernel, builtin: Some(b) })
            }
            (None, Some(path)) => {
                let file: KernelFile = read_json(path, "kernel")?;
                Ok(Loaded { kernel: Kernel::from_file(file)?, builtin: None })
            }
            (None, None) => bail!("missing --model or --kernel"),
        }
    }
}

impl Loaded {
    /// Resolves a state by label. On the grid models a number picks the
    /// nearest grid point; on the xi-chain it must match a coordinate.
    pub fn state(&self, label: &str, field: &str) -> Result<usize> {
        let space = self.kernel.space();
        if let Ok(i) = space.index_of(label) {
            return Ok(i);
        }
        let value: Option<f64> = label.parse().ok();
        match (&self.builtin, value) {
            (Some(Builtin::Gaussian(s)), Some(x)) if x.abs() <= s.half_width => Ok(s.index(x)),
            (Some(Builtin::Interval(s)), Some(u)) if (0.0..=3.0).contains(&u) => Ok(s.nearest(u)),
            (Some(Builtin::Xi(s)), Some(u)) => (0..s.len())
                .find(|&i| (s.coordinate(i) - u).abs() <= 1e-9)
                .ok_or_else(|| anyhow!("{field}: no state at coordinate {label}")),
            _ => Err(anyhow!("{field}: unknown state {label:?}")),
        }
    }

    /// `x:y,x:y,...`; `None` means every unordered pair.
    pub fn pairs(&self, spec: Option<&str>, field: &str) -> Result<Vec<(usize, usize)>> {
        match spec {
            None => {
                let n = self.kernel.len();
                Ok((0..n).flat_map(|x| (x + 1..n).map(move |y| (x, y))).collect())
            }
            Some(s) => s
                .split(',')
                .map(|p| {
                    let (a, b) = p.split_once(':').ok_or_else(|| anyhow!("{field}: expected x:y, got {p:?}"))?;
                    Ok((self.state(a.trim(), field)?, self.state(b.trim(), field)?))
                })
                .collect(),
        }
    }

    pub fn states(&self, spec: &str, field: &str) -> Result<Vec<usize>> {
        spec.split(',').map(|s| self.state(s.trim(), field)).collect()
    }
}

pub fn read_json<T: serde::de::DeserializeOwned>(path: &Path, what: &str) -> Result<T> {
    let text = std::fs::read_to_string(path).with_context(|| format!("{what}: cannot read {}", path.display()))?;
    serde_json::from_str(&text).map_err(|e| anyhow!("{what}: {}: {e}", path.display()))
}

pub fn certificate(path: &Path) -> Result<AsfPlusCertificate> {
    read_json(path, "cert")
}

pub fn provider(path: &Path) -> Result<Box<dyn CouplingProvider>> {
    let file: ProviderFile = read_json(path, "provider")?;
    Ok(file.into_provider()?)
}

pub fn envelope(text: &str, field: &str) -> Result<Envelope> {
    let e: Envelope = serde_json::from_str(text).map_err(|e| anyhow!("{field}: {e}"))?;
    e.validate().map_err(|e| anyhow!("{field}: {e}"))?;
    Ok(e)
}

pub fn rate(text: &str, field: &str) -> Result<RateFn> {
    let r: RateFn = serde_json::from_str(text).map_err(|e| anyhow!("{field}: {e}"))?;
    r.validate().map_err(|e| anyhow!("{field}: {e}"))?;
    Ok(r)
}

pub fn list<T: std::str::FromStr>(text: &str, field: &str) -> Result<Vec<T>> {
    text.split(',')
        .map(|s| s.trim().parse::<T>().map_err(|_| anyhow!("{field}: cannot parse {s:?}")))
        .collect()
}

/// `A:K,A:K,...`
pub fn ak_grid(text: &str) -> Result<Vec<(f64, f64)>> {
    text.split(',')
        .map(|p| {
            let (a, k) = p.split_once(':').ok_or_else(|| anyhow!("ak: expected A:K, got {p:?}"))?;
            let parse = |s: &str| s.trim().parse::<f64>().map_err(|_| anyhow!("ak: cannot parse {s:?}"));
            Ok((parse(a)?, parse(k)?))
        })
        .collect()
}

/// `name=value`; only `check` is recognised.
pub fn parse_tol(text: &str) -> std::result::Result<(String, f64), String> {
    let (name, value) = text.split_once('=').ok_or_else(|| format!("expected name=value, got {text:?}"))?;
    let v: f64 = value.parse().map_err(|_| format!("cannot parse {value:?}"))?;
    if !(v > 0.0 && v.is_finite()) {
        return Err(format!("tolerance {name} must be positive"));
    }
    if name != "check" {
        return Err(format!("unknown tolerance {name:?} (known: check)"));
    }
    Ok((name.to_string(), v))
}
