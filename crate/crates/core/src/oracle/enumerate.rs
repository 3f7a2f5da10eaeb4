//! Exhaustive Plackett-Luce probabilities for small item sets.

use crate::error::{domain, Result};

pub const MAX_ITEMS: usize = 8;

/// Probability of every ordered `m`-subset of `0..weights.len()`, in
/// lexicographic order of the index sequences.
pub fn enumerate_topm_distribution(weights: &[f64], m: usize) -> Result<Vec<(Vec<usize>, f64)>> {
    let n = weights.len();
    if n == 0 || n > MAX_ITEMS {
        return Err(domain(format!("enumeration supports 1..={MAX_ITEMS} items, got {n}")));
    }
    if m == 0 || m > n {
        return Err(domain(format!("list length must be in 1..={n}, got {m}")));
    }
    if weights.iter().any(|&w| !(w > 0.0 && w.is_finite())) {
        return Err(domain("weights must be positive and finite"));
    }
    let mut out = Vec::new();
    let mut prefix = Vec::with_capacity(m);
    let mut used = vec![false; n];
    recurse(weights, m, 1.0, &mut prefix, &mut used, &mut out);
    Ok(out)
}

fn recurse(
    weights: &[f64],
    m: usize,
    p: f64,
    prefix: &mut Vec<usize>,
    used: &mut [bool],
    out: &mut Vec<(Vec<usize>, f64)>,
) {
    if prefix.len() == m {
        out.push((prefix.clone(), p));
        return;
    }
    let free: f64 = weights.iter().zip(used.iter()).filter(|(_, &u)| !u).map(|(w, _)| w).sum();
    for i in 0..weights.len() {
        if used[i] {
            continue;
        }
        used[i] = true;
        prefix.push(i);
        recurse(weights, m, p * weights[i] / free, prefix, used, out);
        prefix.pop();
        used[i] = false;
    }
}
