//! Sampler configuration and recorded posterior draws.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::measures::ItemId;

/// Gamma(shape, rate) prior. `shape = rate = 0` encodes the improper
/// `p(x) ∝ 1/x` limit.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaPrior {
    pub shape: f64,
    pub rate: f64,
}

impl GammaPrior {
    pub const IMPROPER: GammaPrior = GammaPrior { shape: 0.0, rate: 0.0 };

    pub fn new(shape: f64, rate: f64) -> Result<Self> {
        let ok = shape.is_finite() && rate.is_finite() && shape >= 0.0 && rate >= 0.0;
        if !ok || ((shape == 0.0) != (rate == 0.0)) {
            return Err(Error::Config(format!(
                "gamma prior needs shape, rate > 0 (or both 0 for 1/x), got ({shape}, {rate})"
            )));
        }
        Ok(Self { shape, rate })
    }

    pub fn is_improper(&self) -> bool {
        self.shape == 0.0 && self.rate == 0.0
    }

    /// Log density up to an additive constant.
    pub fn ln_density_unnorm(&self, x: f64) -> f64 {
        (self.shape - 1.0) * x.ln() - self.rate * x
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AlphaSpec {
    Fixed(f64),
    Prior { prior: GammaPrior, init: f64 },
}

impl AlphaSpec {
    pub fn initial(&self) -> f64 {
        match *self {
            AlphaSpec::Fixed(a) => a,
            AlphaSpec::Prior { init, .. } => init,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ChainConfig {
    /// Total sweeps, burn-in included.
    pub iterations: usize,
    pub burn_in: usize,
    pub thinning: usize,
    pub alpha: AlphaSpec,
    /// Inverse scale, held fixed during inference.
    pub tau: f64,
}

impl Default for ChainConfig {
    fn default() -> Self {
        Self {
            iterations: 20_000,
            burn_in: 10_000,
            thinning: 1,
            alpha: AlphaSpec::Prior {
                prior: GammaPrior::IMPROPER,
                init: 1.0,
            },
            tau: 1.0,
        }
    }
}

impl ChainConfig {
    pub fn short(iterations: usize, burn_in: usize) -> Self {
        Self {
            iterations,
            burn_in,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.iterations == 0 {
            return Err(Error::Config("iterations must be positive".into()));
        }
        if self.burn_in >= self.iterations {
            return Err(Error::Config(format!(
                "burn_in ({}) must be smaller than iterations ({})",
                self.burn_in, self.iterations
            )));
        }
        if self.thinning == 0 {
            return Err(Error::Config("thinning must be at least 1".into()));
        }
        if !(self.tau > 0.0 && self.tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {}", self.tau)));
        }
        let a = self.alpha.initial();
        if !(a > 0.0 && a.is_finite()) {
            return Err(Error::Config(format!("alpha must be positive, got {a}")));
        }
        if let AlphaSpec::Prior { prior, .. } = self.alpha {
            GammaPrior::new(prior.shape, prior.rate)?;
        }
        Ok(())
    }

    /// Whether sweep `i` (0-based) is kept.
    pub fn records(&self, i: usize) -> bool {
        i >= self.burn_in && (i - self.burn_in) % self.thinning == 0
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct EpochDraw {
    /// One weight per item of the chain, zero where the atom is absent.
    pub weights: Vec<f64>,
    /// Total mass of atoms never observed.
    pub unseen: f64,
}

impl EpochDraw {
    /// Weights normalised over active items plus the unseen mass; inactive
    /// items get zero.
    pub fn normalized(&self, active: &[bool]) -> (Vec<f64>, f64) {
        let total: f64 = self
            .weights
            .iter()
            .zip(active)
            .filter(|(_, &a)| a)
            .map(|(w, _)| w)
            .sum::<f64>()
            + self.unseen;
        let w = self
            .weights
            .iter()
            .zip(active)
            .map(|(w, &a)| if a { w / total } else { 0.0 })
            .collect();
        (w, self.unseen / total)
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Draw {
    pub alpha: f64,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi: Option<f64>,
    pub epochs: Vec<EpochDraw>,
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct Summary {
    pub mean: f64,
    pub q025: f64,
    pub q975: f64,
}

impl Summary {
    pub fn of(values: &[f64]) -> Self {
        let mut v = values.to_vec();
        v.sort_by(f64::total_cmp);
        Self {
            mean: v.iter().sum::<f64>() / v.len() as f64,
            q025: quantile_sorted(&v, 0.025),
            q975: quantile_sorted(&v, 0.975),
        }
    }
}

/// Linear-interpolation quantile of sorted data.
pub fn quantile_sorted(sorted: &[f64], p: f64) -> f64 {
    assert!(!sorted.is_empty());
    let h = p.clamp(0.0, 1.0) * (sorted.len() - 1) as f64;
    let lo = h.floor() as usize;
    let hi = h.ceil() as usize;
    sorted[lo] + (h - lo as f64) * (sorted[hi] - sorted[lo])
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PosteriorChain {
    pub items: Vec<ItemId>,
    /// `active[t][k]`: item k enters the likelihood at epoch t.
    pub active: Vec<Vec<bool>>,
    pub draws: Vec<Draw>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub phi_acceptance: Option<f64>,
}

impl PosteriorChain {
    pub fn new(items: Vec<ItemId>, active: Vec<Vec<bool>>) -> Self {
        Self {
            items,
            active,
            draws: Vec::new(),
            phi_acceptance: None,
        }
    }

    pub fn num_epochs(&self) -> usize {
        self.active.len()
    }

    pub fn len(&self) -> usize {
        self.draws.len()
    }

    pub fn is_empty(&self) -> bool {
        self.draws.is_empty()
    }

    pub fn alpha_samples(&self) -> Vec<f64> {
        self.draws.iter().map(|d| d.alpha).collect()
    }

    pub fn phi_samples(&self) -> Vec<f64> {
        self.draws.iter().filter_map(|d| d.phi).collect()
    }

    /// Normalised weights of every draw at epoch `t`: (items, unseen).
    pub fn normalized_draws(&self, t: usize) -> Vec<(Vec<f64>, f64)> {
        self.draws
            .iter()
            .map(|d| d.epochs[t].normalized(&self.active[t]))
            .collect()
    }

    /// Posterior mean normalised weights at epoch `t` and the mean unseen share.
    pub fn mean_normalized(&self, t: usize) -> (Vec<f64>, f64) {
        let k = self.items.len();
        let mut mean = vec![0.0; k];
        let mut unseen = 0.0;
        let n = self.draws.len() as f64;
        for (w, u) in self.normalized_draws(t) {
            for (m, x) in mean.iter_mut().zip(&w) {
                *m += x / n;
            }
            unseen += u / n;
        }
        (mean, unseen)
    }

    /// Per-item and unseen summaries of the normalised weights at epoch `t`.
    pub fn summarize_epoch(&self, t: usize) -> Result<(Vec<Summary>, Summary)> {
        if self.draws.is_empty() {
            return Err(Error::Chain("no draws recorded".into()));
        }
        let draws = self.normalized_draws(t);
        let per_item = (0..self.items.len())
            .map(|k| Summary::of(&draws.iter().map(|(w, _)| w[k]).collect::<Vec<_>>()))
            .collect();
        let unseen = Summary::of(&draws.iter().map(|(_, u)| *u).collect::<Vec<_>>());
        Ok((per_item, unseen))
    }

    /// Concatenates chains run on the same data.
    pub fn pooled(chains: &[PosteriorChain]) -> Result<PosteriorChain> {
        let first = chains.first().ok_or_else(|| Error::Chain("no chains to pool".into()))?;
        let mut out = PosteriorChain::new(first.items.clone(), first.active.clone());
        let mut acc = Vec::new();
        for c in chains {
            if c.items != first.items || c.active != first.active {
                return Err(Error::Chain("chains disagree on items or epochs".into()));
            }
            out.draws.extend(c.draws.iter().cloned());
            acc.extend(c.phi_acceptance);
        }
        if !acc.is_empty() {
            out.phi_acceptance = Some(acc.iter().sum::<f64>() / acc.len() as f64);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn records_respects_burn_in_and_thinning() {
        let cfg = ChainConfig {
            iterations: 10,
            burn_in: 4,
            thinning: 3,
            ..ChainConfig::default()
        };
        let kept: Vec<usize> = (0..10).filter(|&i| cfg.records(i)).collect();
        assert_eq!(kept, vec![4, 7]);
    }

    #[test]
    fn config_validation() {
        assert!(ChainConfig::short(10, 10).validate().is_err());
        assert!(ChainConfig::short(0, 0).validate().is_err());
        assert!(ChainConfig::short(10, 0).validate().is_ok());
        assert!(GammaPrior::new(1.0, 0.0).is_err());
        assert!(GammaPrior::new(0.0, 0.0).unwrap().is_improper());
    }

    #[test]
    fn normalization_skips_inactive() {
        let d = EpochDraw {
            weights: vec![1.0, 5.0, 2.0],
            unseen: 1.0,
        };
        let (w, u) = d.normalized(&[true, false, true]);
        assert_eq!(w, vec![0.25, 0.0, 0.5]);
        assert_eq!(u, 0.25);
    }

    #[test]
    fn quantiles_interpolate() {
        let v = [0.0, 1.0, 2.0, 3.0, 4.0];
        assert_eq!(quantile_sorted(&v, 0.5), 2.0);
        assert_eq!(quantile_sorted(&v, 0.125), 0.5);
        assert_eq!(quantile_sorted(&v, 1.0), 4.0);
    }
}
