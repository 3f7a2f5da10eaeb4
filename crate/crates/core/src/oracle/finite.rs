//! Finite Plackett-Luce model with `M` items and Gamma(α/M, τ) weights.
//!
//! Approaches the gamma-process model as `M → ∞`, which makes it a reference
//! for the nonparametric sampler. Written separately from `static_model`.

use std::collections::BTreeMap;

use rand::Rng;
use rand_distr::{Distribution, Exp, Gamma};

use crate::chain::{ChainConfig, Draw, EpochDraw, PosteriorChain};
use crate::error::{Error, Result};
use crate::measures::{ItemId, PartialRanking};

/// Gibbs sampler for the finite model. Observed items come first (in order
/// of first appearance); the `M - K` never-ranked items are pooled into the
/// recorded `unseen` mass. α is held fixed.
pub fn finite_gibbs<R: Rng + ?Sized>(
    rankings: &[PartialRanking],
    m_items: usize,
    alpha: f64,
    tau: f64,
    config: &ChainConfig,
    rng: &mut R,
) -> Result<PosteriorChain> {
    config.validate()?;
    let mut ids: Vec<ItemId> = Vec::new();
    let mut index: BTreeMap<ItemId, usize> = BTreeMap::new();
    let lists: Vec<Vec<usize>> = rankings
        .iter()
        .map(|r| {
            r.items()
                .iter()
                .map(|id| {
                    *index.entry(*id).or_insert_with(|| {
                        ids.push(*id);
                        ids.len() - 1
                    })
                })
                .collect()
        })
        .collect();
    let k_obs = ids.len();
    if m_items < k_obs {
        return Err(Error::Config(format!(
            "finite model with {m_items} items cannot hold {k_obs} observed items"
        )));
    }
    let mut counts = vec![0.0; m_items];
    for l in &lists {
        for &k in l {
            counts[k] += 1.0;
        }
    }
    let share = alpha / m_items as f64;
    let mut w: Vec<f64> = counts.iter().map(|&n| (n + share) / tau).collect();
    let mut z: Vec<Vec<f64>> = lists.iter().map(|l| vec![0.0; l.len()]).collect();
    let mut chain = PosteriorChain::new(ids.clone(), vec![vec![true; k_obs]]);

    for it in 0..config.iterations {
        let total: f64 = w.iter().sum();
        for (l, zl) in lists.iter().zip(z.iter_mut()) {
            let mut taken = 0.0;
            for (i, &k) in l.iter().enumerate() {
                let rate = (total - taken).max(f64::MIN_POSITIVE);
                zl[i] = Exp::new(rate).unwrap().sample(rng);
                taken += w[k];
            }
        }
        let mut rates = vec![tau; m_items];
        for (l, zl) in lists.iter().zip(&z) {
            for (i, &zi) in zl.iter().enumerate() {
                // Every item not already placed above rank i.
                for (k, r) in rates.iter_mut().enumerate() {
                    if !l[..i].contains(&k) {
                        *r += zi;
                    }
                }
            }
        }
        for k in 0..m_items {
            let g = Gamma::new(share + counts[k], 1.0 / rates[k]).unwrap();
            w[k] = g.sample(rng).max(f64::MIN_POSITIVE);
        }
        if config.records(it) {
            chain.draws.push(Draw {
                alpha,
                phi: None,
                epochs: vec![EpochDraw {
                    weights: w[..k_obs].to_vec(),
                    unseen: w[k_obs..].iter().sum(),
                }],
            });
        }
    }
    Ok(chain)
}
