//! Coverage of posterior intervals on synthetic dynamic data.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::stats::kendall_tau_b;
use crate::chain::{quantile_sorted, AlphaSpec, ChainConfig, GammaPrior, PosteriorChain};
use crate::dist;
use crate::dynamic_model::{
    run_dynamic_gibbs, simulate_dynamic_dataset, DynamicConfig, DynamicTruth, PhiSpec, SimulationConfig,
};
use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationSpec {
    pub replications: usize,
    pub simulation: SimulationConfig,
    pub alpha: f64,
    pub phi: f64,
    pub chain: ChainConfig,
    pub dynamic: DynamicConfig,
    pub level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct ReplicationResult {
    pub seed_stream: u64,
    pub alpha_interval: (f64, f64),
    pub phi_interval: (f64, f64),
    pub alpha_covered: bool,
    pub phi_covered: bool,
    /// Kendall τ-b per epoch over every item of the data set.
    pub kendall: Vec<f64>,
    /// Kendall τ-b per epoch over the items ranked at that epoch.
    pub kendall_ranked: Vec<f64>,
    pub phi_acceptance: Option<f64>,
}

impl ReplicationResult {
    pub fn mean_kendall(&self) -> f64 {
        self.kendall.iter().sum::<f64>() / self.kendall.len() as f64
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct CalibrationReport {
    pub replications: Vec<ReplicationResult>,
    pub alpha_covered: usize,
    pub phi_covered: usize,
    pub mean_kendall: f64,
    pub mean_kendall_ranked: f64,
}

fn interval(mut xs: Vec<f64>, level: f64) -> (f64, f64) {
    xs.sort_by(f64::total_cmp);
    let tail = 0.5 * (1.0 - level);
    (quantile_sorted(&xs, tail), quantile_sorted(&xs, 1.0 - tail))
}

fn covers((lo, hi): (f64, f64), x: f64) -> bool {
    lo <= x && x <= hi
}

fn score(chain: &PosteriorChain, truth: &DynamicTruth, ranked: &[Vec<usize>]) -> (Vec<f64>, Vec<f64>) {
    let mut all = Vec::with_capacity(truth.weights.len());
    let mut top = Vec::with_capacity(truth.weights.len());
    for (t, items) in ranked.iter().enumerate() {
        let (est, _) = chain.mean_normalized(t);
        let (tru, _) = truth.normalized(t);
        all.push(kendall_tau_b(&est, &tru));
        let e: Vec<f64> = items.iter().map(|&k| est[k]).collect();
        let r: Vec<f64> = items.iter().map(|&k| tru[k]).collect();
        top.push(kendall_tau_b(&e, &r));
    }
    (all, top)
}

pub fn run_replication(spec: &CalibrationSpec, seed: u64, stream: u64) -> Result<ReplicationResult> {
    let mut rng = crate::rng_stream(seed, stream);
    let phis = vec![spec.phi; spec.simulation.epochs.saturating_sub(1)];
    let data = simulate_dynamic_dataset(&spec.simulation, spec.alpha, &phis, &mut rng)?;
    let chain = run_dynamic_gibbs(&data.rankings, &spec.chain, &spec.dynamic, &mut rng)?;
    let alpha_interval = interval(chain.alpha_samples(), spec.level);
    let phi_interval = interval(chain.phi_samples(), spec.level);
    let index: Vec<Vec<usize>> = data
        .rankings
        .iter()
        .map(|lists| {
            let mut ks: Vec<usize> = lists
                .iter()
                .flat_map(|r| r.items().iter())
                .map(|id| data.truth.items.iter().position(|x| x == id).expect("ranked item is observed"))
                .collect();
            ks.sort_unstable();
            ks.dedup();
            ks
        })
        .collect();
    let (kendall, kendall_ranked) = score(&chain, &data.truth, &index);
    Ok(ReplicationResult {
        seed_stream: stream,
        alpha_interval,
        phi_interval,
        alpha_covered: covers(alpha_interval, spec.alpha),
        phi_covered: covers(phi_interval, spec.phi),
        kendall,
        kendall_ranked,
        phi_acceptance: chain.phi_acceptance,
    })
}

/// Replications run in parallel, each on its own stream of `seed`.
pub fn run_calibration(spec: &CalibrationSpec, seed: u64) -> Result<CalibrationReport> {
    let replications = (0..spec.replications as u64)
        .into_par_iter()
        .map(|r| run_replication(spec, seed, r))
        .collect::<Result<Vec<_>>>()?;
    let n = replications.len() as f64;
    let mean = |f: &dyn Fn(&ReplicationResult) -> f64| replications.iter().map(f).sum::<f64>() / n;
    let mean_kendall = mean(&|r| r.mean_kendall());
    let mean_kendall_ranked = mean(&|r| r.kendall_ranked.iter().sum::<f64>() / r.kendall_ranked.len() as f64);
    Ok(CalibrationReport {
        alpha_covered: replications.iter().filter(|r| r.alpha_covered).count(),
        phi_covered: replications.iter().filter(|r| r.phi_covered).count(),
        mean_kendall,
        mean_kendall_ranked,
        replications,
    })
}

/// Truths drawn from proper priors and fitted under the same priors, so the
/// posterior intervals have exact coverage on average for a correct sampler.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorCalibrationSpec {
    pub replications: usize,
    pub simulation: SimulationConfig,
    pub alpha_prior: GammaPrior,
    pub phi_prior: GammaPrior,
    /// The α and φ specifications are replaced by the priors above.
    pub chain: ChainConfig,
    pub dynamic: DynamicConfig,
    pub level: f64,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct PriorCalibrationReport {
    pub alpha_covered: usize,
    pub phi_covered: usize,
    /// Fraction of posterior draws below the truth, per replication;
    /// uniform on [0, 1] for a correct sampler.
    pub alpha_ranks: Vec<f64>,
    pub phi_ranks: Vec<f64>,
}

fn rank(xs: &[f64], truth: f64) -> f64 {
    xs.iter().filter(|&&x| x < truth).count() as f64 / xs.len() as f64
}

pub fn run_prior_calibration(spec: &PriorCalibrationSpec, seed: u64) -> Result<PriorCalibrationReport> {
    if spec.alpha_prior.is_improper() || spec.phi_prior.is_improper() {
        return Err(Error::Config("prior calibration needs proper priors".into()));
    }
    let chain = ChainConfig {
        alpha: AlphaSpec::Prior {
            prior: spec.alpha_prior,
            init: 1.0,
        },
        ..spec.chain.clone()
    };
    let dynamic = DynamicConfig {
        phi: PhiSpec::Infer {
            init: 1.0,
            prior: spec.phi_prior,
        },
        ..spec.dynamic.clone()
    };
    let runs = (0..spec.replications as u64)
        .into_par_iter()
        .map(|r| {
            let mut rng = crate::rng_stream(seed, r);
            let alpha = dist::gamma(&mut rng, spec.alpha_prior.shape, spec.alpha_prior.rate);
            let phi = dist::gamma(&mut rng, spec.phi_prior.shape, spec.phi_prior.rate);
            let phis = vec![phi; spec.simulation.epochs.saturating_sub(1)];
            let data = simulate_dynamic_dataset(&spec.simulation, alpha, &phis, &mut rng)?;
            let c = run_dynamic_gibbs(&data.rankings, &chain, &dynamic, &mut rng)?;
            let (a, p) = (c.alpha_samples(), c.phi_samples());
            Ok((
                covers(interval(a.clone(), spec.level), alpha),
                covers(interval(p.clone(), spec.level), phi),
                rank(&a, alpha),
                rank(&p, phi),
            ))
        })
        .collect::<Result<Vec<_>>>()?;
    Ok(PriorCalibrationReport {
        alpha_covered: runs.iter().filter(|r| r.0).count(),
        phi_covered: runs.iter().filter(|r| r.1).count(),
        alpha_ranks: runs.iter().map(|r| r.2).collect(),
        phi_ranks: runs.iter().map(|r| r.3).collect(),
    })
}
