//! Monte Carlo check of the closed-form marginal likelihood of (Y, Z).
//!
//! For fixed rankings and inter-arrival times, the likelihood averaged over
//! the gamma process equals `exp(-ψ(ΣZ)) Π_k κ(n_k, Σ_li δ_lik Z_li)`, with
//! base-density factors left out on both sides.

use rand_distr::{Beta, Distribution, Gamma};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};
use statrs::function::gamma::ln_gamma;

use crate::error::{domain, Result};

/// Rankings over item indices `0..K` (K ≤ 2) with one Z per ranked position.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalFixture {
    pub lists: Vec<Vec<usize>>,
    pub z: Vec<Vec<f64>>,
}

impl MarginalFixture {
    fn num_items(&self) -> usize {
        self.lists.iter().flatten().map(|&k| k + 1).max().unwrap_or(0)
    }

    fn total_z(&self) -> f64 {
        self.z.iter().flatten().sum()
    }

    /// `(n_k, Σ_li δ_lik Z_li)` per item.
    fn item_terms(&self) -> Vec<(u32, f64)> {
        (0..self.num_items())
            .map(|k| {
                let mut n = 0;
                let mut s = 0.0;
                for (l, zl) in self.lists.iter().zip(&self.z) {
                    for (i, &zi) in zl.iter().enumerate() {
                        if !l[..i].contains(&k) {
                            s += zi;
                        }
                    }
                    n += l.iter().filter(|&&x| x == k).count() as u32;
                }
                (n, s)
            })
            .collect()
    }

    fn validate(&self) -> Result<()> {
        if self.lists.len() != self.z.len() || self.lists.iter().zip(&self.z).any(|(l, z)| l.len() != z.len()) {
            return Err(domain("Z must have one entry per ranked position"));
        }
        let k = self.num_items();
        if k == 0 || k > 2 {
            return Err(domain(format!("marginal check supports 1 or 2 items, got {k}")));
        }
        if self.item_terms().iter().any(|&(n, _)| n == 0) {
            return Err(domain("every item index below K must be ranked"));
        }
        Ok(())
    }
}

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct MarginalCheck {
    pub mc_estimate: f64,
    pub mc_se: f64,
    pub closed_form: f64,
    pub z_score: f64,
    pub samples: usize,
    /// Estimate from the same draws truncated at `epsilon / 2`.
    pub halved_estimate: f64,
}

impl MarginalCheck {
    /// Shift caused by halving the truncation level, in standard errors.
    pub fn truncation_shift(&self) -> f64 {
        (self.halved_estimate - self.mc_estimate).abs() / self.mc_se
    }
}

/// `exp(-α ln(1 + ΣZ/τ)) Π_k α Γ(n_k) / (s_k + τ)^{n_k}`.
pub fn marginal_closed_form(fixture: &MarginalFixture, alpha: f64, tau: f64) -> f64 {
    let mut ln = -alpha * (fixture.total_z() / tau).ln_1p();
    for (n, s) in fixture.item_terms() {
        let n = f64::from(n);
        ln += alpha.ln() + ln_gamma(n) - n * (s + tau).ln();
    }
    ln.exp()
}

const CHUNKS: u64 = 64;

/// Averages the weight likelihood over `n_mc` truncated gamma-process draws
/// (stick-breaking until the unbroken fraction is below `epsilon`). The same
/// draws broken further, down to `epsilon / 2`, give `halved_estimate`.
pub fn marginal_check(
    fixture: &MarginalFixture,
    alpha: f64,
    tau: f64,
    n_mc: usize,
    epsilon: f64,
    seed: u64,
) -> Result<MarginalCheck> {
    fixture.validate()?;
    if !(alpha > 0.0 && tau > 0.0 && epsilon > 0.0 && epsilon < 1.0) {
        return Err(domain("marginal check needs alpha, tau > 0 and epsilon in (0, 1)"));
    }
    let terms = fixture.item_terms();
    let sum_z = fixture.total_z();
    let per_chunk = n_mc.div_ceil(CHUNKS as usize);
    let partial: Vec<(f64, f64, f64, usize)> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = crate::rng_stream(seed, c);
            let total = Gamma::new(alpha, 1.0 / tau).unwrap();
            let stick = Beta::new(1.0, alpha).unwrap();
            let mut atoms = Vec::with_capacity(64);
            let (mut s1, mut s2, mut h, mut n) = (0.0, 0.0, 0.0, 0);
            let todo = per_chunk.min(n_mc.saturating_sub(c as usize * per_chunk));
            for _ in 0..todo {
                let t: f64 = total.sample(&mut rng);
                atoms.clear();
                let mut left = 1.0;
                let mut cut = None;
                while left > 0.5 * epsilon {
                    let v: f64 = stick.sample(&mut rng);
                    atoms.push(v * left * t);
                    left *= 1.0 - v;
                    if cut.is_none() && left <= epsilon {
                        cut = Some(atoms.len());
                    }
                }
                let x = estimator(&atoms[..cut.unwrap_or(atoms.len())], t, sum_z, &terms);
                s1 += x;
                s2 += x * x;
                h += estimator(&atoms, t, sum_z, &terms);
                n += 1;
            }
            (s1, s2, h, n)
        })
        .collect();
    let (s1, s2, h, n) = partial
        .iter()
        .fold((0.0, 0.0, 0.0, 0), |a, p| (a.0 + p.0, a.1 + p.1, a.2 + p.2, a.3 + p.3));
    let nf = n as f64;
    let mean = s1 / nf;
    let var = (s2 / nf - mean * mean) * nf / (nf - 1.0);
    let se = (var.max(0.0) / nf).sqrt();
    let closed = marginal_closed_form(fixture, alpha, tau);
    Ok(MarginalCheck {
        mc_estimate: mean,
        mc_se: se,
        closed_form: closed,
        z_score: (mean - closed) / se,
        samples: n,
        halved_estimate: h / nf,
    })
}

/// `e^{-T ΣZ} Σ_{distinct atoms} Π_k w^{n_k} e^{w (ΣZ - s_k)}`.
fn estimator(atoms: &[f64], total: f64, sum_z: f64, terms: &[(u32, f64)]) -> f64 {
    let f = |w: f64, (n, s): (u32, f64)| (f64::from(n) * w.ln() + w * (sum_z - s) - total * sum_z).exp();
    match terms {
        [a] => atoms.iter().map(|&w| f(w, *a)).sum(),
        [a, b] => {
            // Σ_{i≠j} f_a(w_i) f_b(w_j) with the e^{-TΣZ} factor applied once.
            let fa: Vec<f64> = atoms.iter().map(|&w| f(w, *a)).collect();
            let fb: Vec<f64> = atoms
                .iter()
                .map(|&w| (f64::from(b.0) * w.ln() + w * (sum_z - b.1)).exp())
                .collect();
            let sa: f64 = fa.iter().sum();
            let sb: f64 = fb.iter().sum();
            let diag: f64 = fa.iter().zip(&fb).map(|(x, y)| x * y).sum();
            sa * sb - diag
        }
        _ => unreachable!("validated to one or two items"),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn closed_form_limits() {
        let fx = MarginalFixture {
            lists: vec![vec![0]],
            z: vec![vec![1e-300]],
        };
        // κ(1, 0) = α / τ
        assert!((marginal_closed_form(&fx, 2.0, 4.0) - 0.5).abs() < 1e-12);
    }

    #[test]
    fn small_run_agrees() {
        let fx = MarginalFixture {
            lists: vec![vec![0, 1], vec![1]],
            z: vec![vec![0.3, 0.5], vec![0.2]],
        };
        let r = marginal_check(&fx, 1.5, 1.0, 50_000, 1e-8, 3).unwrap();
        assert!(r.z_score.abs() < 4.0, "{r:?}");
        assert!(r.truncation_shift() < 1.0, "{r:?}");
    }

    #[test]
    fn rejects_bad_fixtures() {
        let three = MarginalFixture {
            lists: vec![vec![0, 1, 2]],
            z: vec![vec![0.1; 3]],
        };
        assert!(marginal_check(&three, 1.0, 1.0, 10, 1e-8, 0).is_err());
        let ragged = MarginalFixture {
            lists: vec![vec![0]],
            z: vec![vec![0.1, 0.2]],
        };
        assert!(marginal_check(&ragged, 1.0, 1.0, 10, 1e-8, 0).is_err());
    }
}
