use std::collections::BTreeMap;

use crate::error::{Error, Result};
use crate::measures::{ItemId, PartialRanking};

/// Per-epoch rankings re-expressed over the set of items seen at any epoch.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicStats {
    items: Vec<ItemId>,
    index: BTreeMap<ItemId, usize>,
    /// `lists[t][l]`: item indices, best first.
    lists: Vec<Vec<Vec<usize>>>,
    /// `n[t][k]`: occurrences of item k at epoch t.
    n: Vec<Vec<u32>>,
    first: Vec<usize>,
    last: Vec<usize>,
    /// `active[t][k]`: item k enters the likelihood at epoch t.
    active: Vec<Vec<bool>>,
}

/// Builds the per-epoch statistics. With `first_appearance_filter`, an item
/// does not compete in lists before the first epoch it is observed in.
pub fn compute_dynamic_stats(epochs: &[Vec<PartialRanking>], first_appearance_filter: bool) -> Result<DynamicStats> {
    if epochs.is_empty() {
        return Err(Error::Config("at least one epoch is required".into()));
    }
    let mut items = Vec::new();
    let mut index = BTreeMap::new();
    let mut first = Vec::new();
    let mut last = Vec::new();
    let mut lists = Vec::with_capacity(epochs.len());
    for (t, epoch) in epochs.iter().enumerate() {
        let mut out = Vec::with_capacity(epoch.len());
        for r in epoch {
            let mut list = Vec::with_capacity(r.len());
            for &id in r.items() {
                let k = *index.entry(id).or_insert_with(|| {
                    items.push(id);
                    first.push(t);
                    last.push(t);
                    items.len() - 1
                });
                if list.contains(&k) {
                    return Err(Error::Epoch {
                        epoch: t.to_string(),
                        message: format!("{id} appears more than once in a list"),
                    });
                }
                last[k] = t;
                list.push(k);
            }
            out.push(list);
        }
        lists.push(out);
    }
    let kk = items.len();
    let mut n = vec![vec![0u32; kk]; epochs.len()];
    for (t, epoch) in lists.iter().enumerate() {
        for list in epoch {
            for &k in list {
                n[t][k] += 1;
            }
        }
    }
    let active = (0..epochs.len())
        .map(|t| (0..kk).map(|k| !first_appearance_filter || t >= first[k]).collect())
        .collect();
    Ok(DynamicStats {
        items,
        index,
        lists,
        n,
        first,
        last,
        active,
    })
}

impl DynamicStats {
    pub fn num_epochs(&self) -> usize {
        self.lists.len()
    }

    pub fn num_items(&self) -> usize {
        self.items.len()
    }

    pub fn items(&self) -> &[ItemId] {
        &self.items
    }

    pub fn index_of(&self, id: ItemId) -> Option<usize> {
        self.index.get(&id).copied()
    }

    pub fn lists(&self, t: usize) -> &[Vec<usize>] {
        &self.lists[t]
    }

    pub fn n(&self, t: usize, k: usize) -> u32 {
        self.n[t][k]
    }

    pub fn first(&self, k: usize) -> usize {
        self.first[k]
    }

    pub fn last(&self, k: usize) -> usize {
        self.last[k]
    }

    pub fn is_active(&self, t: usize, k: usize) -> bool {
        self.active[t][k]
    }

    pub fn active(&self) -> &[Vec<bool>] {
        &self.active
    }
}

/// Full sampler state. `c[t]` and `c_star[t]` couple epochs t and t + 1.
#[derive(Clone, Debug, PartialEq)]
pub struct DynamicLatentState {
    pub w: Vec<Vec<f64>>,
    pub w_star: Vec<f64>,
    pub c: Vec<Vec<u64>>,
    pub c_star: Vec<u64>,
    /// `z[t][l][i]`.
    pub z: Vec<Vec<Vec<f64>>>,
    pub alpha: f64,
    /// Dependence parameter (φ) or diffusion rate (ξ), whichever is sampled.
    pub theta: f64,
    /// Per-transition dependence derived from `theta`.
    pub phi: Vec<f64>,
}

impl DynamicLatentState {
    pub fn num_epochs(&self) -> usize {
        self.w.len()
    }

    pub fn total_mass(&self, t: usize) -> f64 {
        self.w[t].iter().sum::<f64>() + self.w_star[t]
    }

    pub fn epoch_z(&self, t: usize) -> f64 {
        self.z[t].iter().flatten().sum()
    }

    pub fn total_z(&self) -> f64 {
        (0..self.z.len()).map(|t| self.epoch_z(t)).sum()
    }

    /// Checks lifetime contiguity, that observed items are alive, that counts
    /// vanish on dead atoms and that survival to t + 1 matches a positive count.
    pub fn check_invariants(&self, stats: &DynamicStats) -> Result<()> {
        let tt = self.num_epochs();
        let bad = |msg: String| Err(Error::Internal(msg));
        for t in 0..tt {
            if !(self.w_star[t] > 0.0) {
                return bad(format!("unseen mass at epoch {t} is {}", self.w_star[t]));
            }
        }
        for k in 0..stats.num_items() {
            let alive: Vec<usize> = (0..tt).filter(|&t| self.w[t][k] > 0.0).collect();
            if let (Some(&a), Some(&b)) = (alive.first(), alive.last()) {
                if b - a + 1 != alive.len() {
                    return bad(format!("item {k} has a gap in its lifetime"));
                }
            }
            for t in 0..tt {
                if stats.n(t, k) > 0 && !(self.w[t][k] > 0.0) {
                    return bad(format!("item {k} observed at epoch {t} with zero weight"));
                }
            }
            for t in 0..tt.saturating_sub(1) {
                let c = self.c[t][k];
                if self.w[t][k] == 0.0 && c != 0 {
                    return bad(format!("dead item {k} has count {c} at epoch {t}"));
                }
                if self.w[t][k] > 0.0 && ((c > 0) != (self.w[t + 1][k] > 0.0)) {
                    return bad(format!("item {k}: count {c} at epoch {t} disagrees with survival"));
                }
            }
        }
        Ok(())
    }
}
