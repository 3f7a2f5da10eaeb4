//! Static nonparametric Plackett-Luce model.
//!
//! Given rankings Y and inter-arrival times Z, the posterior of the rating
//! measure is a gamma process with fixed atoms at the observed items. The
//! sampler alternates
//!
//! * `Z_li ~ Exp(w_* + Σ_k δ_lik w_k)`
//! * `w_k ~ Gamma(n_k, τ + Σ_li δ_lik Z_li)`
//! * `w_* ~ Gamma(α, τ + Σ_li Z_li)`
//! * `α ~ Gamma(a + K, b + ln(1 + Σ Z / τ))`, then `w_*` again,
//!
//! where `δ_lik = 0` iff item k sits in list l strictly above rank i.

use std::collections::BTreeMap;

use rand::Rng;

use crate::chain::{AlphaSpec, ChainConfig, Draw, EpochDraw, GammaPrior, PosteriorChain};
use crate::dist;
use crate::error::{domain, Error, Result};
use crate::measures::{ItemId, PartialRanking};

/// Log probability of `ranking` under Plackett-Luce with the given weights and
/// an extra `remainder` of mass on items never ranked.
pub fn pl_log_probability(
    weights: &BTreeMap<ItemId, f64>,
    remainder: f64,
    ranking: &PartialRanking,
) -> Result<f64> {
    if !(remainder >= 0.0) {
        return Err(domain(format!("remainder must be non-negative, got {remainder}")));
    }
    let mut ws = Vec::with_capacity(ranking.len());
    for &id in ranking.items() {
        let w = *weights.get(&id).ok_or(Error::MissingWeight(id))?;
        if !(w > 0.0) {
            return Err(domain(format!("weight of {id} must be positive, got {w}")));
        }
        ws.push(w);
    }
    let total: f64 = weights.values().sum::<f64>() + remainder;
    if !(total > 0.0) {
        return Err(Error::ZeroMass);
    }
    let mut lp = 0.0;
    let mut taken = 0.0;
    for w in ws {
        let avail = total - taken;
        lp += w.ln() - avail.ln();
        taken += w;
    }
    Ok(lp)
}

/// Unique items, their occurrence counts and the lists re-expressed as item
/// indices. Items are indexed in order of first appearance.
#[derive(Clone, Debug, PartialEq)]
pub struct ObservedStats {
    unique_items: Vec<ItemId>,
    index: BTreeMap<ItemId, usize>,
    counts: Vec<u32>,
    lists: Vec<Vec<usize>>,
}

pub fn compute_occurrence_stats(rankings: &[PartialRanking]) -> Result<ObservedStats> {
    let mut stats = ObservedStats {
        unique_items: Vec::new(),
        index: BTreeMap::new(),
        counts: Vec::new(),
        lists: Vec::with_capacity(rankings.len()),
    };
    for r in rankings {
        let mut list = Vec::with_capacity(r.len());
        for &id in r.items() {
            let k = *stats.index.entry(id).or_insert_with(|| {
                stats.unique_items.push(id);
                stats.counts.push(0);
                stats.unique_items.len() - 1
            });
            if list.contains(&k) {
                return Err(Error::InvalidRanking(format!("{id} appears more than once")));
            }
            stats.counts[k] += 1;
            list.push(k);
        }
        stats.lists.push(list);
    }
    Ok(stats)
}

impl ObservedStats {
    pub fn num_items(&self) -> usize {
        self.unique_items.len()
    }

    pub fn unique_items(&self) -> &[ItemId] {
        &self.unique_items
    }

    pub fn index_of(&self, id: ItemId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn counts(&self) -> &[u32] {
        &self.counts
    }

    /// Lists as item indices, best first.
    pub fn lists(&self) -> &[Vec<usize>] {
        &self.lists
    }

    pub fn num_lists(&self) -> usize {
        self.lists.len()
    }

    /// `δ_lik` with a 0-based rank `i`.
    pub fn delta(&self, l: usize, i: usize, k: usize) -> bool {
        !self.lists[l][..i].contains(&k)
    }
}

#[derive(Clone, Debug, PartialEq)]
pub struct StaticLatentState {
    /// `z[l][i]`, one per ranked position.
    pub z: Vec<Vec<f64>>,
    pub w: Vec<f64>,
    pub w_star: f64,
    pub alpha: f64,
}

impl StaticLatentState {
    pub fn total_z(&self) -> f64 {
        self.z.iter().flatten().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.w.iter().sum::<f64>() + self.w_star
    }
}

/// Rates of the exponential conditionals of Z, shaped like `state.z`.
pub fn z_rates(state: &StaticLatentState, stats: &ObservedStats) -> Vec<Vec<f64>> {
    let all: f64 = state.w.iter().sum();
    stats
        .lists
        .iter()
        .map(|list| {
            let mut left = all;
            list.iter()
                .map(|&k| {
                    let rate = state.w_star + left.max(0.0);
                    left -= state.w[k];
                    rate
                })
                .collect()
        })
        .collect()
}

pub fn gibbs_update_z<R: Rng + ?Sized>(state: &mut StaticLatentState, stats: &ObservedStats, rng: &mut R) {
    let rates = z_rates(state, stats);
    state.z = rates
        .iter()
        .map(|row| row.iter().map(|&r| dist::exponential(rng, r)).collect())
        .collect();
}

/// `τ + Σ_li δ_lik Z_li` for each item.
pub fn weight_rates(state: &StaticLatentState, stats: &ObservedStats, tau: f64) -> Vec<f64> {
    let total = state.total_z();
    let mut excluded = vec![0.0; stats.num_items()];
    for (list, z) in stats.lists.iter().zip(&state.z) {
        // Z at ranks below an item's own position do not involve it.
        let mut below = 0.0;
        for (i, &k) in list.iter().enumerate().rev() {
            excluded[k] += below;
            below += z[i];
        }
    }
    excluded.iter().map(|e| tau + (total - e).max(0.0)).collect()
}

pub fn gibbs_update_weights<R: Rng + ?Sized>(
    state: &mut StaticLatentState,
    stats: &ObservedStats,
    tau: f64,
    rng: &mut R,
) -> Result<()> {
    let rates = weight_rates(state, stats, tau);
    for (k, rate) in rates.into_iter().enumerate() {
        let n = stats.counts[k];
        if n == 0 {
            return Err(Error::Internal(format!("item index {k} has no occurrences")));
        }
        state.w[k] = dist::gamma(rng, f64::from(n), rate);
    }
    Ok(())
}

pub fn gibbs_update_wstar<R: Rng + ?Sized>(state: &mut StaticLatentState, tau: f64, rng: &mut R) {
    state.w_star = dist::gamma(rng, state.alpha, tau + state.total_z());
}

/// Shape and rate of the conditional of α.
pub fn alpha_posterior(
    state: &StaticLatentState,
    stats: &ObservedStats,
    prior: &GammaPrior,
    tau: f64,
) -> Result<(f64, f64)> {
    let shape = prior.shape + stats.num_items() as f64;
    let rate = prior.rate + (state.total_z() / tau).ln_1p();
    if !(shape > 0.0 && rate > 0.0) {
        return Err(Error::Config(
            "alpha posterior is improper: no observed items under the 1/alpha prior".into(),
        ));
    }
    Ok((shape, rate))
}

/// Draws α and then refreshes `w_*`, whose conditional depends on it.
pub fn gibbs_update_alpha<R: Rng + ?Sized>(
    state: &mut StaticLatentState,
    stats: &ObservedStats,
    prior: &GammaPrior,
    tau: f64,
    rng: &mut R,
) -> Result<()> {
    let (shape, rate) = alpha_posterior(state, stats, prior, tau)?;
    state.alpha = dist::gamma(rng, shape, rate);
    gibbs_update_wstar(state, tau, rng);
    Ok(())
}

/// Moment-matched start: `w_k = n_k / τ`, `w_* = α / τ`, Z from its conditional.
pub fn initial_state<R: Rng + ?Sized>(
    stats: &ObservedStats,
    alpha: f64,
    tau: f64,
    rng: &mut R,
) -> StaticLatentState {
    let mut state = StaticLatentState {
        z: Vec::new(),
        w: stats.counts.iter().map(|&n| f64::from(n) / tau).collect(),
        w_star: alpha / tau,
        alpha,
    };
    gibbs_update_z(&mut state, stats, rng);
    state
}

/// One full sweep Z → w → w_* → α (→ w_*).
pub fn static_sweep<R: Rng + ?Sized>(
    state: &mut StaticLatentState,
    stats: &ObservedStats,
    alpha: &AlphaSpec,
    tau: f64,
    rng: &mut R,
) -> Result<()> {
    gibbs_update_z(state, stats, rng);
    gibbs_update_weights(state, stats, tau, rng)?;
    gibbs_update_wstar(state, tau, rng);
    if let AlphaSpec::Prior { prior, .. } = alpha {
        gibbs_update_alpha(state, stats, prior, tau, rng)?;
    }
    Ok(())
}

pub fn run_static_gibbs<R: Rng + ?Sized>(
    rankings: &[PartialRanking],
    config: &ChainConfig,
    rng: &mut R,
) -> Result<PosteriorChain> {
    config.validate()?;
    if rankings.is_empty() {
        return Err(Error::Config("at least one ranking is required".into()));
    }
    let stats = compute_occurrence_stats(rankings)?;
    let tau = config.tau;
    let mut state = initial_state(&stats, config.alpha.initial(), tau, rng);
    let mut chain = PosteriorChain::new(stats.unique_items.clone(), vec![vec![true; stats.num_items()]]);
    for i in 0..config.iterations {
        static_sweep(&mut state, &stats, &config.alpha, tau, rng)?;
        if config.records(i) {
            chain.draws.push(Draw {
                alpha: state.alpha,
                phi: None,
                epochs: vec![EpochDraw {
                    weights: state.w.clone(),
                    unseen: state.w_star,
                }],
            });
        }
    }
    Ok(chain)
}

/// Probability that the next list starts with an item never seen before.
pub fn predictive_new_item_prob(weights: &[f64], w_star: f64) -> f64 {
    w_star / (w_star + weights.iter().sum::<f64>())
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn ids(v: &[u64]) -> PartialRanking {
        PartialRanking::new(v.iter().map(|&x| ItemId(x)).collect()).unwrap()
    }

    fn weights(v: &[(u64, f64)]) -> BTreeMap<ItemId, f64> {
        v.iter().map(|&(k, w)| (ItemId(k), w)).collect()
    }

    #[test]
    fn pl_probability_fixtures() {
        let w = weights(&[(0, 2.0), (1, 1.0), (2, 1.0)]);
        let lp = pl_log_probability(&w, 0.0, &ids(&[0, 1])).unwrap();
        assert!((lp - 0.25f64.ln()).abs() < 1e-14);
        let single = weights(&[(5, 3.0)]);
        assert_eq!(pl_log_probability(&single, 0.0, &ids(&[5])).unwrap(), 0.0);
        assert!(matches!(
            pl_log_probability(&w, 0.0, &ids(&[9])),
            Err(Error::MissingWeight(ItemId(9)))
        ));
    }

    #[test]
    fn pl_pairs_sum_to_one() {
        let w = weights(&[(0, 1.3), (1, 0.2), (2, 2.5)]);
        let mut total = 0.0;
        for a in 0..3 {
            for b in 0..3 {
                if a != b {
                    total += pl_log_probability(&w, 0.0, &ids(&[a, b])).unwrap().exp();
                }
            }
        }
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn occurrence_stats_fixture() {
        let s = compute_occurrence_stats(&[ids(&[0, 1]), ids(&[1, 2])]).unwrap();
        assert_eq!(s.num_items(), 3);
        assert_eq!(s.counts(), &[1, 2, 1]);
        assert!(s.delta(0, 0, 0));
        assert!(!s.delta(0, 1, 0));
        assert!(s.delta(0, 1, 1));
        let empty = compute_occurrence_stats(&[]).unwrap();
        assert_eq!(empty.num_items(), 0);
    }

    fn fixture_state() -> (StaticLatentState, ObservedStats) {
        let stats = compute_occurrence_stats(&[ids(&[0, 1])]).unwrap();
        let state = StaticLatentState {
            z: vec![vec![1.0, 1.0]],
            w: vec![2.0, 1.0],
            w_star: 0.5,
            alpha: 1.0,
        };
        (state, stats)
    }

    #[test]
    fn z_rates_match_hand_computation() {
        let (state, stats) = fixture_state();
        assert_eq!(z_rates(&state, &stats), vec![vec![3.5, 1.5]]);
    }

    #[test]
    fn z_rates_match_delta_definition() {
        let stats = compute_occurrence_stats(&[ids(&[0, 1, 2]), ids(&[2, 3]), ids(&[3])]).unwrap();
        let state = StaticLatentState {
            z: vec![vec![0.3, 0.1, 0.7], vec![0.2, 0.9], vec![0.4]],
            w: vec![0.5, 1.5, 0.25, 2.0],
            w_star: 0.75,
            alpha: 1.0,
        };
        let rates = z_rates(&state, &stats);
        let wrates = weight_rates(&state, &stats, 1.0);
        for (l, list) in stats.lists().iter().enumerate() {
            for i in 0..list.len() {
                let want: f64 = state.w_star
                    + (0..4).filter(|&k| stats.delta(l, i, k)).map(|k| state.w[k]).sum::<f64>();
                assert!((rates[l][i] - want).abs() < 1e-14);
            }
        }
        for k in 0..4 {
            let mut want = 1.0;
            for (l, list) in stats.lists().iter().enumerate() {
                for i in 0..list.len() {
                    if stats.delta(l, i, k) {
                        want += state.z[l][i];
                    }
                }
            }
            assert!((wrates[k] - want).abs() < 1e-14, "k={k}");
        }
    }

    #[test]
    fn weight_rate_fixture() {
        // n = 3 and Σ δ Z = 2 at τ = 1 gives Gamma(3, 3).
        let stats = compute_occurrence_stats(&[ids(&[0]), ids(&[0]), ids(&[0])]).unwrap();
        let state = StaticLatentState {
            z: vec![vec![0.5], vec![1.0], vec![0.5]],
            w: vec![1.0],
            w_star: 1.0,
            alpha: 1.0,
        };
        assert_eq!(stats.counts()[0], 3);
        assert_eq!(weight_rates(&state, &stats, 1.0), vec![3.0]);
    }

    #[test]
    fn alpha_posterior_fixture() {
        let stats = compute_occurrence_stats(&[ids(&[0, 1, 2, 3, 4])]).unwrap();
        let e = std::f64::consts::E;
        let state = StaticLatentState {
            z: vec![vec![(e - 1.0) / 5.0; 5]],
            w: vec![1.0; 5],
            w_star: 1.0,
            alpha: 1.0,
        };
        let (shape, rate) = alpha_posterior(&state, &stats, &GammaPrior::new(1.0, 1.0).unwrap(), 1.0).unwrap();
        assert_eq!(shape, 6.0);
        assert!((rate - 2.0).abs() < 1e-14);
        let empty = compute_occurrence_stats(&[]).unwrap();
        let none = StaticLatentState {
            z: vec![],
            w: vec![],
            w_star: 1.0,
            alpha: 1.0,
        };
        assert_eq!(
            alpha_posterior(&none, &empty, &GammaPrior::new(2.0, 3.0).unwrap(), 1.0).unwrap(),
            (2.0, 3.0)
        );
        assert!(alpha_posterior(&none, &empty, &GammaPrior::IMPROPER, 1.0).is_err());
    }

    #[test]
    fn wstar_monte_carlo_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(11);
        let mut state = StaticLatentState {
            z: vec![vec![4.0]],
            w: vec![],
            w_star: 1.0,
            alpha: 7.0,
        };
        let n = 100_000;
        let mut sum = 0.0;
        for _ in 0..n {
            gibbs_update_wstar(&mut state, 1.0, &mut rng);
            sum += state.w_star;
        }
        let sd = 7f64.sqrt() / 5.0;
        assert!((sum / n as f64 - 1.4).abs() < 3.0 * sd / (n as f64).sqrt());
    }

    #[test]
    fn weights_monte_carlo_mean() {
        let mut rng = ChaCha8Rng::seed_from_u64(12);
        let stats = compute_occurrence_stats(&[ids(&[0, 1]), ids(&[1])]).unwrap();
        let mut state = StaticLatentState {
            z: vec![vec![0.4, 0.3], vec![0.8]],
            w: vec![1.0, 1.0],
            w_star: 1.0,
            alpha: 1.0,
        };
        let rates = weight_rates(&state, &stats, 1.0);
        let n = 100_000;
        let mut sums = [0.0; 2];
        for _ in 0..n {
            gibbs_update_weights(&mut state, &stats, 1.0, &mut rng).unwrap();
            sums[0] += state.w[0];
            sums[1] += state.w[1];
        }
        for k in 0..2 {
            let shape = f64::from(stats.counts()[k]);
            let mean = shape / rates[k];
            let se = shape.sqrt() / rates[k] / (n as f64).sqrt();
            assert!((sums[k] / n as f64 - mean).abs() < 3.0 * se, "k={k}");
        }
    }

    #[test]
    fn predictive_fixture() {
        assert_eq!(predictive_new_item_prob(&[1.0, 2.0], 1.0), 0.25);
        assert_eq!(predictive_new_item_prob(&[], 0.3), 1.0);
    }

    #[test]
    fn zero_iterations_rejected() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let cfg = ChainConfig::short(0, 0);
        assert!(run_static_gibbs(&[ids(&[0])], &cfg, &mut rng).is_err());
        assert!(run_static_gibbs(&[], &ChainConfig::short(5, 1), &mut rng).is_err());
    }

    #[test]
    fn duplicated_lists_concentrate_rank_one_item() {
        let mut prev = 0.0;
        for &l in &[1usize, 10, 100] {
            let lists: Vec<_> = (0..l).map(|_| ids(&[0, 1])).collect();
            let mut rng = ChaCha8Rng::seed_from_u64(7);
            let chain = run_static_gibbs(&lists, &ChainConfig::short(4000, 1000), &mut rng).unwrap();
            let (mean, _) = chain.mean_normalized(0);
            assert!(mean[0] > prev, "L={l}: {} <= {prev}", mean[0]);
            prev = mean[0];
        }
        assert!(prev > 0.9);
    }
}
