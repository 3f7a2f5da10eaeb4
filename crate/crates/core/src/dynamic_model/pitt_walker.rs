//! The Pitt-Walker transition between consecutive gamma-process measures.
//!
//! Given `G_t`, counts `c_k ~ Poi(φ w_k)` are attached to every atom; atoms
//! with a positive count survive with weight `Gamma(c_k, τ + φ)`, the rest die,
//! and an independent innovation `Γ(α, τ + φ)` is added. The marginal
//! `Γ(α, τ)` is preserved.

use std::collections::BTreeMap;

use rand::Rng;

use crate::dist;
use crate::error::{domain, Result};
use crate::measures::{AtomicMeasure, GammaProcessParams, ItemId};

#[derive(Clone, Debug, PartialEq)]
pub struct PittWalkerStep {
    /// Counts of every atom of `G_t` that received at least one event,
    /// including atoms materialised out of the remainder.
    pub counts: BTreeMap<ItemId, u64>,
    /// Count attached to mass that was in the remainder of `G_t`.
    pub remainder_count: u64,
    pub next: AtomicMeasure,
}

/// Advances `g` by one transition with dependence `phi`.
///
/// Events landing in the un-instantiated remainder are attached to atoms that
/// are materialised into `g` on the fly (a size-biased pick with replacement),
/// so `next` has only innovation mass left in its remainder.
pub fn pitt_walker_step<R: Rng + ?Sized>(
    g: &mut AtomicMeasure,
    params: &GammaProcessParams,
    phi: f64,
    rng: &mut R,
) -> Result<PittWalkerStep> {
    if !(phi > 0.0 && phi.is_finite()) {
        return Err(domain(format!("phi must be positive and finite, got {phi}")));
    }
    let mut counts = BTreeMap::new();
    for (&id, &w) in g.atoms() {
        let c = dist::poisson(rng, phi * w);
        if c > 0 {
            counts.insert(id, c);
        }
    }
    let remainder_count = dist::poisson(rng, phi * g.remainder());
    allocate_remainder_events(g, params.alpha(), remainder_count, &[], &mut counts, rng);

    let rate = params.tau() + phi;
    let mut next = AtomicMeasure::from_remainder(dist::gamma(rng, params.alpha(), rate))?;
    for (&id, &c) in &counts {
        next.insert_atom(id, dist::gamma(rng, c as f64, rate))?;
    }
    next.reserve_ids_below(g.next_fresh_id());
    Ok(PittWalkerStep {
        counts,
        remainder_count,
        next,
    })
}

/// Spreads `n` events over the atoms of `g` outside `fixed` plus its
/// remainder, proportionally to weight. Remainder hits create atoms.
pub(crate) fn allocate_remainder_events<R: Rng + ?Sized>(
    g: &mut AtomicMeasure,
    alpha: f64,
    n: u64,
    candidates: &[ItemId],
    counts: &mut BTreeMap<ItemId, u64>,
    rng: &mut R,
) {
    if n == 0 {
        return;
    }
    let mut pool: Vec<(ItemId, f64)> = candidates
        .iter()
        .filter_map(|&id| g.weight(id).map(|w| (id, w)))
        .collect();
    let mass = pool.iter().map(|p| p.1).sum::<f64>() + g.remainder();
    for _ in 0..n {
        let mut u = rng.random::<f64>() * mass;
        let mut hit = None;
        for &(id, w) in &pool {
            if u < w {
                hit = Some(id);
                break;
            }
            u -= w;
        }
        let id = match hit {
            Some(id) => id,
            None if g.remainder() > 0.0 => {
                let id = g.split_remainder(alpha, rng);
                pool.push((id, g.weight(id).unwrap_or(0.0)));
                id
            }
            None => pool.last().map(|p| p.0).expect("events need mass to land on"),
        };
        *counts.entry(id).or_insert(0) += 1;
    }
}

/// Probability that an atom with weight `w` at the first epoch is dead at
/// epoch `horizon` (1-based), with `phis[j]` the dependence of transition
/// `j → j + 1` (0-based).
pub fn lifetime_death_prob(w: f64, phis: &[f64], tau: f64, horizon: usize) -> Result<f64> {
    if horizon < 2 {
        return Err(domain(format!("horizon must be at least 2, got {horizon}")));
    }
    if phis.len() < horizon - 1 {
        return Err(domain(format!(
            "need {} transition parameters, got {}",
            horizon - 1,
            phis.len()
        )));
    }
    if !(w > 0.0) {
        return Err(domain(format!("weight must be positive, got {w}")));
    }
    let mut y = phis[horizon - 2];
    for j in (0..horizon - 2).rev() {
        y = y * phis[j] / (phis[j] + tau + y);
    }
    Ok((-y * w).exp())
}

/// Dependence of the discrete skeleton of the continuous-time process over a
/// gap `dt`: `τ / (exp(τ ξ dt) - 1)`.
pub fn phi_from_continuous_time(tau: f64, xi: f64, dt: f64) -> Result<f64> {
    if !(dt > 0.0 && dt.is_finite()) {
        return Err(domain(format!("time gap must be positive, got {dt}")));
    }
    if !(xi > 0.0 && xi.is_finite()) {
        return Err(domain(format!("xi must be positive, got {xi}")));
    }
    if !(tau > 0.0) {
        return Err(domain(format!("tau must be positive, got {tau}")));
    }
    Ok((tau / (tau * xi * dt).exp_m1()).max(f64::MIN_POSITIVE))
}
