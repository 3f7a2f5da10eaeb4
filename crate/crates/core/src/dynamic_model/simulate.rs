//! Forward simulation of dependent gamma processes and their rankings.

use std::collections::BTreeMap;

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::gibbs::DynamicModel;
use super::pitt_walker::{allocate_remainder_events, pitt_walker_step};
use super::state::{DynamicLatentState, DynamicStats};
use crate::dist;
use crate::error::{domain, Result};
use crate::measures::{sample_top_m, AtomicMeasure, GammaProcessParams, ItemId, PartialRanking};

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SimulationConfig {
    pub epochs: usize,
    pub lists_per_epoch: usize,
    pub list_len: usize,
    pub tau: f64,
}

/// Every measure with the atoms touched during simulation instantiated, the
/// counts coupling consecutive epochs and the rankings drawn at each epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicWorld {
    pub measures: Vec<AtomicMeasure>,
    pub counts: Vec<BTreeMap<ItemId, u64>>,
    pub rankings: Vec<Vec<PartialRanking>>,
}

/// True weights of the observed items, in the item order of the
/// corresponding statistics.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicTruth {
    pub items: Vec<ItemId>,
    /// `weights[t][k]`, zero where the atom is absent.
    pub weights: Vec<Vec<f64>>,
    pub unseen: Vec<f64>,
    pub alpha: f64,
    pub phis: Vec<f64>,
}

impl DynamicTruth {
    pub fn from_world(world: &DynamicWorld, stats: &DynamicStats, alpha: f64, phis: &[f64]) -> Self {
        let mut weights = Vec::with_capacity(world.measures.len());
        let mut unseen = Vec::with_capacity(world.measures.len());
        for g in &world.measures {
            let (w, u) = split_observed(g, stats);
            weights.push(w);
            unseen.push(u);
        }
        Self {
            items: stats.items().to_vec(),
            weights,
            unseen,
            alpha,
            phis: phis.to_vec(),
        }
    }

    /// Normalised weights at epoch t over all observed items plus unseen mass.
    pub fn normalized(&self, t: usize) -> (Vec<f64>, f64) {
        let total = self.weights[t].iter().sum::<f64>() + self.unseen[t];
        (self.weights[t].iter().map(|w| w / total).collect(), self.unseen[t] / total)
    }
}

#[derive(Clone, Debug)]
pub struct DynamicDataset {
    pub rankings: Vec<Vec<PartialRanking>>,
    pub truth: DynamicTruth,
    pub world: DynamicWorld,
}

fn split_observed(g: &AtomicMeasure, stats: &DynamicStats) -> (Vec<f64>, f64) {
    let w = stats.items().iter().map(|&id| g.weight(id).unwrap_or(0.0)).collect();
    let other: f64 = g
        .atoms()
        .iter()
        .filter(|(id, _)| stats.index_of(**id).is_none())
        .map(|(_, w)| w)
        .sum();
    (w, other + g.remainder())
}

fn check_sim(cfg: &SimulationConfig, phis: &[f64]) -> Result<()> {
    if cfg.epochs == 0 || cfg.list_len == 0 {
        return Err(domain("simulation needs at least one epoch and list length at least 1"));
    }
    if phis.len() + 1 != cfg.epochs {
        return Err(domain(format!("{} epochs need {} phis, got {}", cfg.epochs, cfg.epochs - 1, phis.len())));
    }
    Ok(())
}

/// Simulates `G_0 ~ Γ(α, τ)` (or starts from `initial`), then Pitt-Walker
/// transitions, drawing `lists_per_epoch` top-`list_len` lists per epoch.
pub fn simulate_world<R: Rng + ?Sized>(
    cfg: &SimulationConfig,
    alpha: f64,
    phis: &[f64],
    initial: Option<AtomicMeasure>,
    rng: &mut R,
) -> Result<DynamicWorld> {
    check_sim(cfg, phis)?;
    let params = GammaProcessParams::new(alpha, cfg.tau)?;
    let mut g = match initial {
        Some(g) => g,
        None => AtomicMeasure::from_remainder(dist::gamma(rng, alpha, cfg.tau))?,
    };
    let mut world = DynamicWorld {
        measures: Vec::with_capacity(cfg.epochs),
        counts: Vec::with_capacity(cfg.epochs.saturating_sub(1)),
        rankings: Vec::with_capacity(cfg.epochs),
    };
    for t in 0..cfg.epochs {
        let lists = (0..cfg.lists_per_epoch)
            .map(|_| sample_top_m(&params, &mut g, cfg.list_len, rng))
            .collect::<Result<Vec<_>>>()?;
        world.rankings.push(lists);
        if t + 1 < cfg.epochs {
            let step = pitt_walker_step(&mut g, &params, phis[t], rng)?;
            world.counts.push(step.counts);
            world.measures.push(std::mem::replace(&mut g, step.next));
        }
    }
    world.measures.push(g);
    Ok(world)
}

pub fn simulate_dynamic_dataset<R: Rng + ?Sized>(
    cfg: &SimulationConfig,
    alpha: f64,
    phis: &[f64],
    rng: &mut R,
) -> Result<DynamicDataset> {
    let world = simulate_world(cfg, alpha, phis, None, rng)?;
    let stats = super::state::compute_dynamic_stats(&world.rankings, false)?;
    let truth = DynamicTruth::from_world(&world, &stats, alpha, phis);
    Ok(DynamicDataset {
        rankings: world.rankings.clone(),
        truth,
        world,
    })
}

/// Sampler state read off a simulated world whose rankings produced
/// `model`'s statistics; Z is drawn from its conditional.
pub fn state_from_world<R: Rng + ?Sized>(
    model: &DynamicModel,
    world: &DynamicWorld,
    alpha: f64,
    theta: f64,
    rng: &mut R,
) -> Result<DynamicLatentState> {
    let stats = model.stats();
    let mut w = Vec::with_capacity(world.measures.len());
    let mut w_star = Vec::with_capacity(world.measures.len());
    for g in &world.measures {
        let (wt, u) = split_observed(g, stats);
        w.push(wt);
        w_star.push(u);
    }
    let mut c = Vec::with_capacity(world.counts.len());
    let mut c_star = Vec::with_capacity(world.counts.len());
    for counts in &world.counts {
        c.push(stats.items().iter().map(|id| counts.get(id).copied().unwrap_or(0)).collect());
        c_star.push(
            counts
                .iter()
                .filter(|(id, _)| stats.index_of(**id).is_none())
                .map(|(_, c)| c)
                .sum(),
        );
    }
    let mut state = DynamicLatentState {
        w,
        w_star,
        c,
        c_star,
        z: Vec::new(),
        alpha,
        theta,
        phi: model.phis(theta)?,
    };
    model.update_z_dynamic(&mut state, rng);
    Ok(state)
}

/// Draws a world from its conditional law given a sampler state: observed
/// trajectories are taken from the state, the unobserved part at the first
/// epoch is a gamma process with the unseen mass, unobserved survivors and
/// innovation at later epochs split the unseen mass in Dirichlet proportions,
/// and unseen counts are spread over unobserved atoms by weight. New
/// rankings are drawn from the resulting measures.
pub fn regenerate_world<R: Rng + ?Sized>(
    model: &DynamicModel,
    state: &DynamicLatentState,
    lists_per_epoch: usize,
    list_len: usize,
    rng: &mut R,
) -> Result<DynamicWorld> {
    let stats = model.stats();
    let tt = state.num_epochs();
    let params = GammaProcessParams::new(state.alpha, model.tau())?;
    let fresh = stats.items().iter().map(|id| id.0 + 1).max().unwrap_or(0);
    let mut g = AtomicMeasure::new(
        stats
            .items()
            .iter()
            .zip(&state.w[0])
            .filter(|(_, &w)| w > 0.0)
            .map(|(&id, &w)| (id, w)),
        state.w_star[0],
    )?;
    g.reserve_ids_below(fresh);
    let mut world = DynamicWorld {
        measures: Vec::with_capacity(tt),
        counts: Vec::with_capacity(tt.saturating_sub(1)),
        rankings: Vec::with_capacity(tt),
    };
    for t in 0..tt {
        let lists = (0..lists_per_epoch)
            .map(|_| sample_top_m(&params, &mut g, list_len, rng))
            .collect::<Result<Vec<_>>>()?;
        world.rankings.push(lists);
        if t + 1 == tt {
            break;
        }
        let mut counts = BTreeMap::new();
        for (k, &id) in stats.items().iter().enumerate() {
            if state.c[t][k] > 0 {
                counts.insert(id, state.c[t][k]);
            }
        }
        let unobserved: Vec<ItemId> = g
            .atoms()
            .keys()
            .filter(|id| stats.index_of(**id).is_none())
            .copied()
            .collect();
        allocate_remainder_events(&mut g, state.alpha, state.c_star[t], &unobserved, &mut counts, rng);

        let survivors: Vec<(ItemId, u64)> = counts
            .iter()
            .filter(|(id, _)| stats.index_of(**id).is_none())
            .map(|(&id, &c)| (id, c))
            .collect();
        let shares: Vec<f64> = survivors.iter().map(|&(_, c)| dist::gamma(rng, c as f64, 1.0)).collect();
        let innovation = dist::gamma(rng, state.alpha, 1.0);
        let norm = shares.iter().sum::<f64>() + innovation;
        let unseen = state.w_star[t + 1];
        let mut next = AtomicMeasure::from_remainder(unseen * innovation / norm)?;
        for ((id, _), s) in survivors.iter().zip(&shares) {
            next.insert_atom(*id, (unseen * s / norm).max(f64::MIN_POSITIVE))?;
        }
        for (k, &id) in stats.items().iter().enumerate() {
            let w = state.w[t + 1][k];
            if w > 0.0 {
                next.insert_atom(id, w)?;
            }
        }
        next.reserve_ids_below(g.next_fresh_id());
        world.counts.push(counts);
        world.measures.push(std::mem::replace(&mut g, next));
    }
    world.measures.push(g);
    Ok(world)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::chain::AlphaSpec;
    use crate::dynamic_model::gibbs::DynamicConfig;
    use crate::dynamic_model::state::compute_dynamic_stats;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn sim() -> SimulationConfig {
        SimulationConfig {
            epochs: 6,
            lists_per_epoch: 2,
            list_len: 4,
            tau: 1.0,
        }
    }

    #[test]
    fn simulated_state_satisfies_invariants() {
        let mut rng = ChaCha8Rng::seed_from_u64(8);
        for _ in 0..20 {
            let data = simulate_dynamic_dataset(&sim(), 2.0, &[3.0; 5], &mut rng).unwrap();
            let stats = compute_dynamic_stats(&data.rankings, false).unwrap();
            let model = DynamicModel::new(stats, 1.0, AlphaSpec::Fixed(2.0), &DynamicConfig::default()).unwrap();
            let state = state_from_world(&model, &data.world, 2.0, 3.0, &mut rng).unwrap();
            state.check_invariants(model.stats()).unwrap();
            for t in 0..6 {
                let (w, u) = data.truth.normalized(t);
                assert!((w.iter().sum::<f64>() + u - 1.0).abs() < 1e-12);
            }

            let regen = regenerate_world(&model, &state, 2, 4, &mut rng).unwrap();
            for t in 0..6 {
                assert!((regen.measures[t].total_mass() - state.total_mass(t)).abs() < 1e-9 * state.total_mass(t));
            }
            let stats2 = compute_dynamic_stats(&regen.rankings, false).unwrap();
            let model2 = DynamicModel::new(stats2, 1.0, AlphaSpec::Fixed(2.0), &DynamicConfig::default()).unwrap();
            let state2 = state_from_world(&model2, &regen, 2.0, 3.0, &mut rng).unwrap();
            state2.check_invariants(model2.stats()).unwrap();
        }
    }

    #[test]
    fn strong_dependence_nearly_freezes_weights() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let cfg = SimulationConfig {
            epochs: 20,
            lists_per_epoch: 1,
            list_len: 3,
            tau: 1.0,
        };
        let data = simulate_dynamic_dataset(&cfg, 1.0, &[1e6; 19], &mut rng).unwrap();
        let first = &data.world.measures[0];
        let last = &data.world.measures[19];
        for (id, &w) in first.atoms() {
            if w > 0.1 {
                let w_end = last.weight(*id).expect("heavy atom died");
                assert!((w_end / w - 1.0).abs() < 0.1, "{w} -> {w_end}");
            }
        }
    }
}
