//! Gamma-process random measures and size-biased generation of top-m lists.
//!
//! A gamma process with concentration `alpha` and inverse scale `tau` has
//! Lévy intensity `alpha * w^-1 * exp(-tau * w)`. Its total mass is
//! Gamma(alpha, tau) and its normalisation is a Dirichlet process, so the
//! un-instantiated part of a measure can be represented lazily by its total
//! mass alone: a size-biased pick from it takes a Beta(1, alpha) fraction.

use std::collections::BTreeMap;
use std::fmt;

use rand::Rng;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::dist;
use crate::error::{domain, Error, Result};

/// Concentration and inverse scale of a gamma process.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct GammaProcessParams {
    alpha: f64,
    tau: f64,
}

impl GammaProcessParams {
    pub fn new(alpha: f64, tau: f64) -> Result<Self> {
        if !(alpha > 0.0 && alpha.is_finite()) {
            return Err(domain(format!("alpha must be positive and finite, got {alpha}")));
        }
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(domain(format!("tau must be positive and finite, got {tau}")));
        }
        Ok(Self { alpha, tau })
    }

    pub fn alpha(&self) -> f64 {
        self.alpha
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    /// Lévy intensity `alpha * w^-1 * exp(-tau * w)`.
    pub fn intensity(&self, w: f64) -> f64 {
        self.alpha / w * (-self.tau * w).exp()
    }
}

/// Opaque item label. Fresh labels for newly instantiated atoms come from a
/// per-measure counter and never collide with labels already present.
#[derive(Clone, Copy, Debug, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
pub struct ItemId(pub u64);

impl fmt::Display for ItemId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "item{}", self.0)
    }
}

/// An ordered top-m list of distinct items.
#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(try_from = "Vec<ItemId>", into = "Vec<ItemId>")]
pub struct PartialRanking {
    items: Vec<ItemId>,
}

impl PartialRanking {
    pub fn new(items: Vec<ItemId>) -> Result<Self> {
        if items.is_empty() {
            return Err(Error::InvalidRanking("a ranking needs at least one item".into()));
        }
        for (i, a) in items.iter().enumerate() {
            if items[..i].contains(a) {
                return Err(Error::InvalidRanking(format!("{a} appears more than once")));
            }
        }
        Ok(Self { items })
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn len(&self) -> usize {
        self.items.len()
    }

    pub fn is_empty(&self) -> bool {
        self.items.is_empty()
    }

    pub fn position(&self, item: ItemId) -> Option<usize> {
        self.items.iter().position(|&x| x == item)
    }
}

impl TryFrom<Vec<ItemId>> for PartialRanking {
    type Error = Error;

    fn try_from(items: Vec<ItemId>) -> Result<Self> {
        Self::new(items)
    }
}

impl From<PartialRanking> for Vec<ItemId> {
    fn from(r: PartialRanking) -> Self {
        r.items
    }
}

/// Instantiated atoms plus the total mass of everything not yet instantiated.
#[derive(Clone, Debug, PartialEq)]
pub struct AtomicMeasure {
    atoms: BTreeMap<ItemId, f64>,
    remainder: f64,
    next_id: u64,
}

impl AtomicMeasure {
    /// A measure with no instantiated atoms.
    pub fn from_remainder(remainder: f64) -> Result<Self> {
        Self::new(std::iter::empty(), remainder)
    }

    pub fn new(atoms: impl IntoIterator<Item = (ItemId, f64)>, remainder: f64) -> Result<Self> {
        if !(remainder >= 0.0 && remainder.is_finite()) {
            return Err(domain(format!("remainder mass must be finite and non-negative, got {remainder}")));
        }
        let mut m = Self {
            atoms: BTreeMap::new(),
            remainder,
            next_id: 0,
        };
        for (id, w) in atoms {
            m.insert_atom(id, w)?;
        }
        Ok(m)
    }

    pub fn insert_atom(&mut self, id: ItemId, weight: f64) -> Result<()> {
        if !(weight > 0.0 && weight.is_finite()) {
            return Err(domain(format!("atom weight must be positive and finite, got {weight}")));
        }
        if self.atoms.insert(id, weight).is_some() {
            return Err(domain(format!("atom {id} already present")));
        }
        self.next_id = self.next_id.max(id.0 + 1);
        Ok(())
    }

    /// Guarantees that fresh labels are at least `floor`.
    pub fn reserve_ids_below(&mut self, floor: u64) {
        self.next_id = self.next_id.max(floor);
    }

    pub fn next_fresh_id(&self) -> u64 {
        self.next_id
    }

    pub fn fresh_id(&mut self) -> ItemId {
        let id = ItemId(self.next_id);
        self.next_id += 1;
        id
    }

    pub fn atoms(&self) -> &BTreeMap<ItemId, f64> {
        &self.atoms
    }

    pub fn weight(&self, id: ItemId) -> Option<f64> {
        self.atoms.get(&id).copied()
    }

    pub fn remainder(&self) -> f64 {
        self.remainder
    }

    pub fn num_atoms(&self) -> usize {
        self.atoms.len()
    }

    pub fn atom_mass(&self) -> f64 {
        self.atoms.values().sum()
    }

    pub fn total_mass(&self) -> f64 {
        self.atom_mass() + self.remainder
    }

    /// Instantiates a size-biased pick from the remainder and returns its label.
    pub(crate) fn split_remainder<R: Rng + ?Sized>(&mut self, alpha: f64, rng: &mut R) -> ItemId {
        let v = dist::beta(rng, 1.0, alpha);
        let w = (v * self.remainder).max(f64::MIN_POSITIVE);
        // A gamma process has infinitely many atoms, so the remainder stays
        // positive even when the product underflows for tiny alpha.
        self.remainder = ((1.0 - v) * self.remainder).max(f64::MIN_POSITIVE);
        let id = self.fresh_id();
        self.atoms.insert(id, w);
        id
    }
}

/// Laplace exponent of the gamma-process intensity: `alpha * ln(1 + z / tau)`.
pub fn levy_psi(params: &GammaProcessParams, z: f64) -> Result<f64> {
    if !(z >= 0.0) {
        return Err(domain(format!("psi needs z >= 0, got {z}")));
    }
    Ok(params.alpha * (z / params.tau).ln_1p())
}

/// `ln kappa(n, z)` with `kappa(n, z) = alpha * Gamma(n) / (z + tau)^n`.
pub fn ln_levy_kappa(params: &GammaProcessParams, n: u32, z: f64) -> Result<f64> {
    if n == 0 {
        return Err(domain("kappa diverges for n = 0 under the gamma intensity"));
    }
    if !(z >= 0.0) {
        return Err(domain(format!("kappa needs z >= 0, got {z}")));
    }
    let n = f64::from(n);
    Ok(params.alpha.ln() + ln_gamma(n) - n * (z + params.tau).ln())
}

/// n-th moment of the exponentially tilted intensity `lambda(w) e^{-z w}`.
pub fn levy_kappa(params: &GammaProcessParams, n: u32, z: f64) -> Result<f64> {
    ln_levy_kappa(params, n, z).map(f64::exp)
}

/// Finite instantiation of a gamma process for Monte Carlo checks: total mass
/// T ~ Gamma(alpha, tau), then Beta(1, alpha) stick-breaking until the unbroken
/// fraction of T is at most `epsilon`.
pub fn sample_truncated_gamma_process<R: Rng + ?Sized>(
    params: &GammaProcessParams,
    epsilon: f64,
    rng: &mut R,
) -> Result<AtomicMeasure> {
    if !(epsilon > 0.0) {
        return Err(domain(format!("truncation epsilon must be positive, got {epsilon}")));
    }
    let total = dist::gamma(rng, params.alpha, params.tau);
    let mut measure = AtomicMeasure::from_remainder(total)?;
    let mut left = 1.0;
    while left > epsilon {
        let v = dist::beta(rng, 1.0, params.alpha);
        let id = measure.fresh_id();
        let w = v * left * total;
        left *= 1.0 - v;
        if w > 0.0 {
            measure.atoms.insert(id, w);
        }
    }
    measure.remainder = left * total;
    Ok(measure)
}

/// Draws a top-`m` list by successive size-biased picks without replacement.
///
/// Items are taken from the instantiated atoms in proportion to their weight,
/// or from the remainder in proportion to its mass, in which case a new atom
/// with weight `V * remainder`, `V ~ Beta(1, alpha)`, is materialised in
/// `measure`. Total mass is unchanged.
pub fn sample_top_m<R: Rng + ?Sized>(
    params: &GammaProcessParams,
    measure: &mut AtomicMeasure,
    m: usize,
    rng: &mut R,
) -> Result<PartialRanking> {
    if m == 0 {
        return Err(domain("list length must be at least 1"));
    }
    let mut chosen: Vec<ItemId> = Vec::with_capacity(m);
    for _ in 0..m {
        let available = measure.remainder
            + measure
                .atoms
                .iter()
                .filter(|(id, _)| !chosen.contains(id))
                .map(|(_, w)| w)
                .sum::<f64>();
        if !(available > 0.0) || (measure.remainder == 0.0 && chosen.len() == measure.atoms.len()) {
            return Err(Error::ZeroMass);
        }
        let mut u = rng.random::<f64>() * available;
        let mut pick = None;
        let mut last_unchosen = None;
        for (&id, &w) in &measure.atoms {
            if chosen.contains(&id) {
                continue;
            }
            last_unchosen = Some(id);
            if u < w {
                pick = Some(id);
                break;
            }
            u -= w;
        }
        let id = match pick {
            Some(id) => id,
            None if measure.remainder > 0.0 => measure.split_remainder(params.alpha, rng),
            // Rounding left `u` just past the last atom.
            None => last_unchosen.ok_or(Error::ZeroMass)?,
        };
        chosen.push(id);
    }
    PartialRanking::new(chosen)
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn params(alpha: f64, tau: f64) -> GammaProcessParams {
        GammaProcessParams::new(alpha, tau).unwrap()
    }

    #[test]
    fn params_reject_nonpositive() {
        assert!(GammaProcessParams::new(0.0, 1.0).is_err());
        assert!(GammaProcessParams::new(1.0, -1.0).is_err());
        assert!(GammaProcessParams::new(f64::NAN, 1.0).is_err());
    }

    #[test]
    fn psi_closed_form_values() {
        assert_eq!(levy_psi(&params(1.0, 1.0), 0.0).unwrap(), 0.0);
        let v = levy_psi(&params(2.0, 1.0), std::f64::consts::E - 1.0).unwrap();
        assert!((v - 2.0).abs() < 1e-14);
        assert!(levy_psi(&params(1.0, 1.0), -0.1).is_err());
    }

    #[test]
    fn kappa_closed_form_values() {
        assert!((levy_kappa(&params(3.0, 2.0), 1, 0.0).unwrap() - 1.5).abs() < 1e-14);
        assert!((levy_kappa(&params(2.0, 1.0), 2, 1.0).unwrap() - 0.5).abs() < 1e-14);
        assert!(levy_kappa(&params(2.0, 1.0), 0, 1.0).is_err());
    }

    #[test]
    fn kappa_is_negative_derivative_of_previous_moment() {
        let p = params(1.7, 0.8);
        for n in 1..5 {
            for &z in &[0.0, 0.4, 2.0, 9.0] {
                let h = 1e-5 * (1.0 + z);
                let lo = if z >= h { z - h } else { z };
                let hi = z + h;
                let deriv = (levy_kappa(&p, n, hi).unwrap() - levy_kappa(&p, n, lo).unwrap()) / (hi - lo);
                let next = levy_kappa(&p, n + 1, z).unwrap();
                assert!(((-deriv - next) / next).abs() < 1e-4, "n={n} z={z}");
            }
        }
    }

    #[test]
    fn truncation_at_one_instantiates_nothing() {
        let mut rng = ChaCha8Rng::seed_from_u64(0);
        let m = sample_truncated_gamma_process(&params(2.0, 1.0), 1.0, &mut rng).unwrap();
        assert_eq!(m.num_atoms(), 0);
        assert!(m.remainder() > 0.0);
    }

    #[test]
    fn truncated_process_leaves_small_remainder() {
        let mut rng = ChaCha8Rng::seed_from_u64(5);
        let m = sample_truncated_gamma_process(&params(2.0, 1.0), 1e-8, &mut rng).unwrap();
        assert!(m.remainder() <= 1e-8 * m.total_mass() * (1.0 + 1e-12));
        assert!(m.atoms().values().all(|&w| w > 0.0));
    }

    #[test]
    fn single_atom_is_always_picked() {
        let mut rng = ChaCha8Rng::seed_from_u64(1);
        let mut m = AtomicMeasure::new([(ItemId(7), 1.0)], 0.0).unwrap();
        for _ in 0..100 {
            let r = sample_top_m(&params(1.0, 1.0), &mut m, 1, &mut rng).unwrap();
            assert_eq!(r.items(), &[ItemId(7)]);
        }
        assert!(sample_top_m(&params(1.0, 1.0), &mut m, 2, &mut rng).is_err());
        assert!(sample_top_m(&params(1.0, 1.0), &mut m, 0, &mut rng).is_err());
    }

    #[test]
    fn fresh_ids_do_not_collide() {
        let mut rng = ChaCha8Rng::seed_from_u64(2);
        let mut m = AtomicMeasure::new([(ItemId(3), 0.5), (ItemId(10), 0.2)], 5.0).unwrap();
        let r = sample_top_m(&params(0.5, 1.0), &mut m, 6, &mut rng).unwrap();
        assert_eq!(r.len(), 6);
        assert!(m.atoms().keys().all(|id| id.0 <= 10 || id.0 >= 11));
        assert_eq!(m.num_atoms(), m.atoms().len());
    }

    #[test]
    fn ranking_rejects_duplicates() {
        assert!(PartialRanking::new(vec![ItemId(1), ItemId(2), ItemId(1)]).is_err());
        assert!(PartialRanking::new(vec![]).is_err());
        let parsed: std::result::Result<PartialRanking, _> = serde_json::from_str("[1,1]");
        assert!(parsed.is_err());
    }

    proptest::proptest! {
        #[test]
        fn top_m_conserves_mass(seed in 0u64..1000, m in 1usize..8, rem in 0.01f64..10.0) {
            let mut rng = ChaCha8Rng::seed_from_u64(seed);
            let mut measure = AtomicMeasure::new(
                [(ItemId(0), 0.3), (ItemId(1), 1.2), (ItemId(2), 0.05)], rem).unwrap();
            let before = measure.total_mass();
            let r = sample_top_m(&params(1.3, 1.0), &mut measure, m, &mut rng).unwrap();
            proptest::prop_assert_eq!(r.len(), m);
            proptest::prop_assert!((measure.total_mass() - before).abs() <= 1e-12 * before);
            for id in r.items() {
                proptest::prop_assert!(measure.weight(*id).is_some());
            }
        }

        #[test]
        fn psi_is_monotone(a in 0.01f64..20.0, t in 0.01f64..20.0, z1 in 0.0f64..50.0, dz in 0.0f64..50.0) {
            let p = params(a, t);
            proptest::prop_assert!(levy_psi(&p, z1 + dz).unwrap() >= levy_psi(&p, z1).unwrap());
        }
    }
}
