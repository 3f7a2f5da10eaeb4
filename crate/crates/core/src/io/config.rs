//! Run configuration, read from JSON.

use std::path::Path;

use serde::{Deserialize, Serialize};

use super::data::TimeUnit;
use crate::chain::{AlphaSpec, ChainConfig, GammaPrior};
use crate::dynamic_model::{DynamicConfig, PhiSpec, TotalMassStep};
use crate::error::{Error, Result};

#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum ModelKind {
    #[default]
    Static,
    Dynamic,
}

impl ModelKind {
    pub fn name(self) -> &'static str {
        match self {
            ModelKind::Static => "static",
            ModelKind::Dynamic => "dynamic",
        }
    }
}

/// Dependence parameterisation; the time gaps of `ContinuousTime` come from
/// the data.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiConfig {
    Fixed(f64),
    Infer {
        init: f64,
        prior: GammaPrior,
    },
    ContinuousTime {
        xi: f64,
        #[serde(default)]
        prior: Option<GammaPrior>,
        #[serde(default)]
        unit: TimeUnit,
    },
}

impl Default for PhiConfig {
    fn default() -> Self {
        PhiConfig::Infer {
            init: 1.0,
            prior: GammaPrior::IMPROPER,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct OutputPaths {
    pub chain: String,
    pub summary: String,
    pub posterior: String,
}

impl Default for OutputPaths {
    fn default() -> Self {
        Self {
            chain: "chain.jsonl".into(),
            summary: "summary.csv".into(),
            posterior: "posterior.json".into(),
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RunConfig {
    pub model: ModelKind,
    pub tau: f64,
    pub alpha: AlphaSpec,
    pub phi: PhiConfig,
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub seed: Option<u64>,
    pub chains: usize,
    pub first_appearance_filter: bool,
    pub mh_sigma: f64,
    pub adapt_sigma: bool,
    pub total_mass_step: TotalMassStep,
    pub output: OutputPaths,
}

impl Default for RunConfig {
    fn default() -> Self {
        let chain = ChainConfig::default();
        let dynamic = DynamicConfig::default();
        Self {
            model: ModelKind::Static,
            tau: chain.tau,
            alpha: chain.alpha,
            phi: PhiConfig::default(),
            iterations: chain.iterations,
            burn_in: chain.burn_in,
            thinning: chain.thinning,
            seed: None,
            chains: 1,
            first_appearance_filter: dynamic.first_appearance_filter,
            mh_sigma: dynamic.mh_sigma,
            adapt_sigma: dynamic.adapt_sigma,
            total_mass_step: dynamic.total_mass_step,
            output: OutputPaths::default(),
        }
    }
}

impl RunConfig {
    pub fn from_path(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path)
            .map_err(|e| Error::Config(format!("cannot read {}: {e}", path.display())))?;
        let cfg: RunConfig = serde_json::from_str(&text)
            .map_err(|e| Error::Config(format!("{}: {e}", path.display())))?;
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn chain_config(&self) -> ChainConfig {
        ChainConfig {
            iterations: self.iterations,
            burn_in: self.burn_in,
            thinning: self.thinning,
            alpha: self.alpha,
            tau: self.tau,
        }
    }

    /// Sampler settings for the dynamic model given the data's time gaps.
    pub fn dynamic_config(&self, gaps: impl FnOnce(TimeUnit) -> Vec<f64>) -> DynamicConfig {
        let phi = match &self.phi {
            PhiConfig::Fixed(phi) => PhiSpec::Fixed(*phi),
            PhiConfig::Infer { init, prior } => PhiSpec::Infer {
                init: *init,
                prior: *prior,
            },
            PhiConfig::ContinuousTime { xi, prior, unit } => PhiSpec::ContinuousTime {
                dts: gaps(*unit),
                xi: *xi,
                prior: *prior,
            },
        };
        DynamicConfig {
            phi,
            mh_sigma: self.mh_sigma,
            adapt_sigma: self.adapt_sigma,
            first_appearance_filter: self.first_appearance_filter,
            total_mass_step: self.total_mass_step,
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.chain_config().validate()?;
        if self.chains == 0 {
            return Err(Error::Config("chains must be at least 1".into()));
        }
        if !(self.mh_sigma > 0.0 && self.mh_sigma.is_finite()) {
            return Err(Error::Config(format!("mh_sigma must be positive, got {}", self.mh_sigma)));
        }
        let (theta, prior) = match &self.phi {
            PhiConfig::Fixed(p) => (*p, None),
            PhiConfig::Infer { init, prior } => (*init, Some(*prior)),
            PhiConfig::ContinuousTime { xi, prior, .. } => (*xi, *prior),
        };
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Config(format!("phi/xi must be positive, got {theta}")));
        }
        if let Some(p) = prior {
            GammaPrior::new(p.shape, p.rate)?;
        }
        let o = &self.output;
        if [&o.chain, &o.summary, &o.posterior].iter().any(|p| p.is_empty()) {
            return Err(Error::Config("output paths must be non-empty".into()));
        }
        Ok(())
    }
}
