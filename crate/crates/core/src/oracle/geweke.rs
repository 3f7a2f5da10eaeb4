//! Joint-distribution ("getting it right") tests of the Gibbs samplers.
//!
//! Marginal-conditional draws of (parameters, data) from the prior are
//! compared with successive-conditional draws, which alternate a sampler
//! sweep with regenerating the data given the current parameters. Both
//! target the same joint law when the sampler is correct.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::stats::{batch_means_se, mean_se, z_score};
use crate::chain::{AlphaSpec, GammaPrior};
use crate::dist;
use crate::dynamic_model::{
    compute_dynamic_stats, regenerate_world, simulate_world, state_from_world, DynamicConfig, DynamicLatentState,
    DynamicModel, DynamicWorld, PhiSpec, SimulationConfig, TotalMassStep,
};
use crate::error::{domain, Result};
use crate::measures::{sample_top_m, AtomicMeasure, GammaProcessParams, PartialRanking};
use crate::static_model::{compute_occurrence_stats, gibbs_update_z, static_sweep, ObservedStats, StaticLatentState};

pub const DEFAULT_THRESHOLD: f64 = 4.0;
const BATCHES: usize = 50;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GewekeStat {
    pub name: String,
    pub forward_mean: f64,
    pub forward_se: f64,
    pub gibbs_mean: f64,
    pub gibbs_se: f64,
    pub z: f64,
    pub passed: bool,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GewekeReport {
    pub threshold: f64,
    pub forward_samples: usize,
    pub gibbs_samples: usize,
    pub stats: Vec<GewekeStat>,
    pub passed: bool,
}

impl GewekeReport {
    pub fn max_abs_z(&self) -> f64 {
        self.stats.iter().map(|s| s.z.abs()).fold(0.0, f64::max)
    }
}

/// Builds a report from per-statistic sample columns: forward draws are
/// independent, Gibbs draws use batch means.
pub fn compare(names: &[&str], forward: &[Vec<f64>], gibbs: &[Vec<f64>], threshold: f64) -> GewekeReport {
    let stats: Vec<GewekeStat> = names
        .iter()
        .enumerate()
        .map(|(j, name)| {
            let (fm, fse) = mean_se(&forward[j]);
            let (gm, gse) = batch_means_se(&gibbs[j], BATCHES);
            let z = z_score(fm, fse, gm, gse);
            GewekeStat {
                name: (*name).to_string(),
                forward_mean: fm,
                forward_se: fse,
                gibbs_mean: gm,
                gibbs_se: gse,
                z,
                passed: z.abs() < threshold,
            }
        })
        .collect();
    GewekeReport {
        threshold,
        forward_samples: forward.first().map_or(0, Vec::len),
        gibbs_samples: gibbs.first().map_or(0, Vec::len),
        passed: stats.iter().all(|s| s.passed),
        stats,
    }
}

fn push_row(cols: &mut [Vec<f64>], row: &[f64]) {
    for (c, v) in cols.iter_mut().zip(row) {
        c.push(*v);
    }
}

/// Static model: `lists` top-`list_len` lists, α ~ `alpha_prior`.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct StaticGewekeSpec {
    pub lists: usize,
    pub list_len: usize,
    pub tau: f64,
    pub alpha_prior: GammaPrior,
    pub forward_samples: usize,
    pub sweeps: usize,
    pub threshold: f64,
}

impl Default for StaticGewekeSpec {
    fn default() -> Self {
        Self {
            lists: 3,
            list_len: 2,
            tau: 1.0,
            alpha_prior: GammaPrior { shape: 4.0, rate: 2.0 },
            forward_samples: 100_000,
            sweeps: 100_000,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

/// ΣZ has no finite mean when α ≤ 1, so it enters through `1 / (1 + ΣZ)`.
pub const STATIC_STATS: [&str; 5] = ["inv1p_sum_z", "total_mass", "total_mass_sq", "alpha", "observed_mass"];

fn static_row(state: &StaticLatentState) -> [f64; 5] {
    let t = state.total_mass();
    [1.0 / (1.0 + state.total_z()), t, t * t, state.alpha, state.w.iter().sum()]
}

/// Rankings from `g`, then the latent state read off `g` with Z drawn from
/// its conditional.
fn static_data<R: Rng + ?Sized>(
    spec: &StaticGewekeSpec,
    g: &mut AtomicMeasure,
    alpha: f64,
    rng: &mut R,
) -> Result<(ObservedStats, StaticLatentState)> {
    let params = GammaProcessParams::new(alpha, spec.tau)?;
    let rankings: Vec<PartialRanking> = (0..spec.lists)
        .map(|_| sample_top_m(&params, g, spec.list_len, rng))
        .collect::<Result<_>>()?;
    let stats = compute_occurrence_stats(&rankings)?;
    let w: Vec<f64> = stats
        .unique_items()
        .iter()
        .map(|id| g.weight(*id).expect("ranked items are instantiated"))
        .collect();
    let w_star = g.remainder()
        + g.atoms()
            .iter()
            .filter(|(id, _)| stats.index_of(**id).is_none())
            .map(|(_, w)| w)
            .sum::<f64>();
    let mut state = StaticLatentState {
        z: Vec::new(),
        w,
        w_star,
        alpha,
    };
    gibbs_update_z(&mut state, &stats, rng);
    Ok((stats, state))
}

pub fn static_geweke<R: Rng + ?Sized>(spec: &StaticGewekeSpec, rng: &mut R) -> Result<GewekeReport> {
    let alpha = AlphaSpec::Prior {
        prior: spec.alpha_prior,
        init: 1.0,
    };
    let tau = spec.tau;
    static_geweke_with(spec, rng, |state, stats, rng| static_sweep(state, stats, &alpha, tau, rng))
}

/// As [`static_geweke`] with a caller-supplied sweep, so that deliberately
/// broken updates can be checked to fail.
pub fn static_geweke_with<R, F>(spec: &StaticGewekeSpec, rng: &mut R, mut sweep: F) -> Result<GewekeReport>
where
    R: Rng + ?Sized,
    F: FnMut(&mut StaticLatentState, &ObservedStats, &mut R) -> Result<()>,
{
    let prior = spec.alpha_prior;
    if prior.is_improper() {
        return Err(domain("Geweke tests need a proper prior on alpha"));
    }
    if spec.sweeps < 2 * BATCHES || spec.forward_samples < 2 {
        return Err(domain("too few samples for a Geweke test"));
    }
    let draw_alpha = |rng: &mut R| dist::gamma(rng, prior.shape, prior.rate);
    let mut forward = vec![Vec::with_capacity(spec.forward_samples); STATIC_STATS.len()];
    for _ in 0..spec.forward_samples {
        let alpha = draw_alpha(rng);
        let mut g = AtomicMeasure::from_remainder(dist::gamma(rng, alpha, spec.tau))?;
        let (_, state) = if spec.lists == 0 {
            let s = StaticLatentState {
                z: Vec::new(),
                w: Vec::new(),
                w_star: g.total_mass(),
                alpha,
            };
            (compute_occurrence_stats(&[])?, s)
        } else {
            static_data(spec, &mut g, alpha, rng)?
        };
        push_row(&mut forward, &static_row(&state));
    }

    let alpha = draw_alpha(rng);
    let mut g = AtomicMeasure::from_remainder(dist::gamma(rng, alpha, spec.tau))?;
    let (mut stats, mut state) = if spec.lists == 0 {
        let s = StaticLatentState {
            z: Vec::new(),
            w: Vec::new(),
            w_star: g.total_mass(),
            alpha,
        };
        (compute_occurrence_stats(&[])?, s)
    } else {
        static_data(spec, &mut g, alpha, rng)?
    };
    let mut gibbs = vec![Vec::with_capacity(spec.sweeps); STATIC_STATS.len()];
    for _ in 0..spec.sweeps {
        sweep(&mut state, &stats, rng)?;
        push_row(&mut gibbs, &static_row(&state));
        if spec.lists > 0 {
            let mut g = AtomicMeasure::new(
                stats.unique_items().iter().copied().zip(state.w.iter().copied()),
                state.w_star,
            )?;
            let fresh = stats.unique_items().iter().map(|id| id.0 + 1).max().unwrap_or(0);
            g.reserve_ids_below(fresh);
            (stats, state) = static_data(spec, &mut g, state.alpha, rng)?;
        }
    }
    Ok(compare(&STATIC_STATS, &forward, &gibbs, spec.threshold))
}

/// Dynamic model with α and φ both under proper priors and the proposal
/// scale held fixed.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicGewekeSpec {
    pub epochs: usize,
    pub lists_per_epoch: usize,
    pub list_len: usize,
    pub tau: f64,
    pub alpha_prior: GammaPrior,
    pub phi_prior: GammaPrior,
    pub mh_sigma: f64,
    pub total_mass_step: TotalMassStep,
    pub forward_samples: usize,
    pub sweeps: usize,
    pub threshold: f64,
}

impl Default for DynamicGewekeSpec {
    fn default() -> Self {
        Self {
            epochs: 3,
            lists_per_epoch: 1,
            list_len: 3,
            tau: 1.0,
            alpha_prior: GammaPrior { shape: 4.0, rate: 2.0 },
            phi_prior: GammaPrior { shape: 2.0, rate: 0.5 },
            mh_sigma: 0.5,
            total_mass_step: TotalMassStep::Conditional,
            forward_samples: 100_000,
            sweeps: 100_000,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

pub const DYNAMIC_STATS: [&str; 7] = [
    "inv1p_sum_z",
    "total_mass_first",
    "total_mass_last",
    "alpha",
    "phi",
    "observed_mass_first",
    "survivors",
];

fn dynamic_row(state: &DynamicLatentState) -> [f64; 7] {
    let last = state.num_epochs() - 1;
    let survivors = state.c.iter().flatten().filter(|&&c| c > 0).count() as f64;
    [
        1.0 / (1.0 + state.total_z()),
        state.total_mass(0),
        state.total_mass(last),
        state.alpha,
        state.theta,
        state.w[0].iter().sum(),
        survivors,
    ]
}

fn dynamic_config(spec: &DynamicGewekeSpec) -> DynamicConfig {
    DynamicConfig {
        phi: PhiSpec::Infer {
            init: 1.0,
            prior: spec.phi_prior,
        },
        mh_sigma: spec.mh_sigma,
        adapt_sigma: false,
        first_appearance_filter: false,
        total_mass_step: spec.total_mass_step,
    }
}

fn dynamic_state<R: Rng + ?Sized>(
    spec: &DynamicGewekeSpec,
    world: &DynamicWorld,
    alpha: f64,
    phi: f64,
    rng: &mut R,
) -> Result<(DynamicModel, DynamicLatentState)> {
    let stats = compute_dynamic_stats(&world.rankings, false)?;
    let alpha_spec = AlphaSpec::Prior {
        prior: spec.alpha_prior,
        init: alpha,
    };
    let model = DynamicModel::new(stats, spec.tau, alpha_spec, &dynamic_config(spec))?;
    let state = state_from_world(&model, world, alpha, phi, rng)?;
    Ok((model, state))
}

pub fn dynamic_geweke<R: Rng + ?Sized>(spec: &DynamicGewekeSpec, rng: &mut R) -> Result<GewekeReport> {
    if spec.alpha_prior.is_improper() || spec.phi_prior.is_improper() {
        return Err(domain("Geweke tests need proper priors on alpha and phi"));
    }
    if spec.epochs < 2 || spec.lists_per_epoch == 0 {
        return Err(domain("dynamic Geweke test needs at least two epochs with data"));
    }
    if spec.sweeps < 2 * BATCHES || spec.forward_samples < 2 {
        return Err(domain("too few samples for a Geweke test"));
    }
    let sim = SimulationConfig {
        epochs: spec.epochs,
        lists_per_epoch: spec.lists_per_epoch,
        list_len: spec.list_len,
        tau: spec.tau,
    };
    let prior_draw = |rng: &mut R| -> Result<(f64, f64, DynamicWorld)> {
        let alpha = dist::gamma(rng, spec.alpha_prior.shape, spec.alpha_prior.rate);
        let phi = dist::gamma(rng, spec.phi_prior.shape, spec.phi_prior.rate).max(f64::MIN_POSITIVE);
        let world = simulate_world(&sim, alpha, &vec![phi; spec.epochs - 1], None, rng)?;
        Ok((alpha, phi, world))
    };

    let mut forward = vec![Vec::with_capacity(spec.forward_samples); DYNAMIC_STATS.len()];
    for _ in 0..spec.forward_samples {
        let (alpha, phi, world) = prior_draw(rng)?;
        let (_, state) = dynamic_state(spec, &world, alpha, phi, rng)?;
        push_row(&mut forward, &dynamic_row(&state));
    }

    let (alpha, phi, world) = prior_draw(rng)?;
    let (mut model, mut state) = dynamic_state(spec, &world, alpha, phi, rng)?;
    let mut gibbs = vec![Vec::with_capacity(spec.sweeps); DYNAMIC_STATS.len()];
    for _ in 0..spec.sweeps {
        model.sweep(&mut state, spec.mh_sigma, rng)?;
        push_row(&mut gibbs, &dynamic_row(&state));
        let world = regenerate_world(&model, &state, spec.lists_per_epoch, spec.list_len, rng)?;
        (model, state) = dynamic_state(spec, &world, state.alpha, state.theta, rng)?;
    }
    Ok(compare(&DYNAMIC_STATS, &forward, &gibbs, spec.threshold))
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    #[test]
    fn compare_flags_shifted_columns() {
        let a: Vec<f64> = (0..1000).map(|i| (i % 10) as f64).collect();
        let b: Vec<f64> = a.iter().map(|x| x + 5.0).collect();
        let ok = compare(&["x"], &[a.clone()], &[a.clone()], 4.0);
        assert!(ok.passed);
        let bad = compare(&["x"], &[a], &[b], 4.0);
        assert!(!bad.passed);
    }

    #[test]
    fn zero_data_instance_passes() {
        let spec = StaticGewekeSpec {
            lists: 0,
            forward_samples: 5_000,
            sweeps: 5_000,
            ..StaticGewekeSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let r = static_geweke(&spec, &mut rng).unwrap();
        assert!(r.passed, "{r:#?}");
    }

    #[test]
    fn small_static_run_passes() {
        let spec = StaticGewekeSpec {
            forward_samples: 20_000,
            sweeps: 20_000,
            ..StaticGewekeSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(6);
        let r = static_geweke(&spec, &mut rng).unwrap();
        assert!(r.passed, "{r:#?}");
    }

    #[test]
    fn small_dynamic_run_passes() {
        let spec = DynamicGewekeSpec {
            forward_samples: 5_000,
            sweeps: 5_000,
            ..DynamicGewekeSpec::default()
        };
        let mut rng = ChaCha8Rng::seed_from_u64(7);
        let r = dynamic_geweke(&spec, &mut rng).unwrap();
        assert!(r.passed, "{r:#?}");
    }
}
