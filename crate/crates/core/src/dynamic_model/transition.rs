//! One-step transition densities with the Poisson count marginalised out.
//!
//! For an atom going from `w` to `w' > 0` the density is
//! `Σ_{c≥1} Poi(c; φw) Gamma(w'; c, τ+φ)`; for the unseen mass it is
//! `Σ_{c≥0} Poi(c; φw) Gamma(w'; α+c, τ+φ)`. The terms are unimodal in c, so
//! the sums are taken outwards from the mode until the remaining tail is
//! below `TAIL` of the running total.

use rand::Rng;
use statrs::function::gamma::ln_gamma;

use crate::dist;

const TAIL: f64 = 1e-12;

/// The count series `Poi(c; φw) Gamma(w'; shape0 + c, τ+φ)` for `c` in
/// `c_lo..=c_hi`. Terms are summed relative to the mode through the ratio
/// of consecutive terms, so only the mode term is evaluated directly.
#[derive(Clone, Debug)]
pub struct CountSeries {
    pub c_lo: u64,
    pub c_hi: u64,
    pub log_total: f64,
    lambda: f64,
    shape0: f64,
    /// `term(c_lo) / Σ terms`.
    p_lo: f64,
}

impl CountSeries {
    /// Requires `w > 0`, `w' > 0`, and `shape0 + c_min > 0`.
    pub fn new(w: f64, w_next: f64, phi: f64, tau: f64, shape0: f64, c_min: u64) -> Self {
        let rate = tau + phi;
        let log_term = |c: u64| {
            let s = shape0 + c as f64;
            c as f64 * (phi * w).ln() - phi * w - dist::ln_factorial(c) + s * rate.ln() - ln_gamma(s)
                + (s - 1.0) * w_next.ln()
                - rate * w_next
        };
        // term(c+1) / term(c) = λ / ((c+1)(c+shape0)); the mode is where it drops below 1.
        let lambda = (phi.ln() + w.ln() + rate.ln() + w_next.ln()).exp();
        let b = 1.0 + shape0;
        let root = 0.5 * (-b + (b * b - 4.0 * (shape0 - lambda)).max(0.0).sqrt());
        let mode = (root.ceil().max(0.0) as u64).max(c_min);
        let ratio = |c: u64| lambda / ((c + 1) as f64 * (c as f64 + shape0));

        let mut total = 1.0;
        let (mut rel, mut c) = (1.0, mode);
        loop {
            let q = ratio(c);
            rel *= q;
            if rel == 0.0 || !rel.is_finite() {
                break;
            }
            c += 1;
            total += rel;
            if q < 1.0 && rel * q / (1.0 - q) < TAIL * total {
                break;
            }
        }
        let c_hi = c;
        let (mut rel, mut c) = (1.0, mode);
        while c > c_min {
            let next = rel / ratio(c - 1);
            if next == 0.0 || !next.is_finite() {
                break;
            }
            rel = next;
            c -= 1;
            total += rel;
            if c == c_min {
                break;
            }
            // Going down, term(c-1)/term(c) shrinks as c decreases.
            let q = 1.0 / ratio(c - 1);
            if q < 1.0 && rel * q / (1.0 - q) < TAIL * total {
                break;
            }
        }
        let c_lo = c;
        Self {
            c_lo,
            c_hi,
            log_total: log_term(mode) + total.ln(),
            lambda,
            shape0,
            p_lo: rel / total,
        }
    }

    /// Probabilities of `c_lo..=c_hi`, normalized over the retained terms.
    pub fn probabilities(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        let mut p = self.p_lo;
        (self.c_lo..=self.c_hi).map(move |c| {
            let out = (c, p);
            p *= self.lambda / ((c + 1) as f64 * (c as f64 + self.shape0));
            out
        })
    }

    pub fn sample<R: Rng + ?Sized>(&self, rng: &mut R) -> u64 {
        let mut u = rng.random::<f64>();
        for (c, p) in self.probabilities() {
            if u < p {
                return c;
            }
            u -= p;
        }
        self.c_hi
    }
}

/// Log transition density of a single atom's weight; zero weights mean the
/// atom is absent. `(0, w')` is a birth from the innovation process.
pub fn ln_atom_transition(w: f64, w_next: f64, phi: f64, tau: f64, alpha: f64) -> f64 {
    match (w > 0.0, w_next > 0.0) {
        (false, false) => 0.0,
        (true, false) => -phi * w,
        (false, true) => alpha.ln() - w_next.ln() - (tau + phi) * w_next,
        (true, true) => CountSeries::new(w, w_next, phi, tau, 0.0, 1).log_total,
    }
}

/// Log transition density of the unseen mass.
pub fn ln_unseen_transition(w: f64, w_next: f64, phi: f64, tau: f64, alpha: f64) -> f64 {
    if w > 0.0 {
        CountSeries::new(w, w_next, phi, tau, alpha, 0).log_total
    } else {
        dist::ln_gamma_pdf(w_next, alpha, tau + phi)
    }
}

/// Exact draw of an atom's count given both weights.
pub fn sample_atom_count<R: Rng + ?Sized>(w: f64, w_next: f64, phi: f64, tau: f64, rng: &mut R) -> u64 {
    if w > 0.0 && w_next > 0.0 {
        CountSeries::new(w, w_next, phi, tau, 0.0, 1).sample(rng)
    } else {
        0
    }
}

/// Exact draw of the unseen-mass count given both totals.
pub fn sample_unseen_count<R: Rng + ?Sized>(
    w: f64,
    w_next: f64,
    phi: f64,
    tau: f64,
    alpha: f64,
    rng: &mut R,
) -> u64 {
    if w > 0.0 {
        CountSeries::new(w, w_next, phi, tau, alpha, 0).sample(rng)
    } else {
        0
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn brute(w: f64, w2: f64, phi: f64, tau: f64, s0: f64, c_min: u64) -> f64 {
        let terms: Vec<f64> = (c_min..3000)
            .map(|c| dist::ln_poisson_pmf(c, phi * w) + dist::ln_gamma_pdf(w2, s0 + c as f64, tau + phi))
            .collect();
        dist::log_sum_exp(&terms)
    }

    #[test]
    fn series_matches_brute_force() {
        for &(w, w2, phi) in &[
            (0.5, 0.7, 1.0),
            (2.0, 1.5, 50.0),
            (1e-3, 2.0, 0.1),
            (3.0, 1e-4, 5.0),
            (0.2, 0.3, 300.0),
        ] {
            for &(s0, c_min) in &[(0.0, 1u64), (2.0, 0), (0.3, 0)] {
                let s = CountSeries::new(w, w2, phi, 1.0, s0, c_min);
                let b = brute(w, w2, phi, 1.0, s0, c_min);
                assert!((s.log_total - b).abs() < 1e-10, "w={w} w2={w2} phi={phi} s0={s0}: {} vs {b}", s.log_total);
            }
        }
    }

    #[test]
    fn atom_density_integrates_to_survival() {
        // ∫ f(w'|w) dw' over w' > 0 is 1 - e^{-φw}.
        let (w, phi, tau) = (0.6, 2.0, 1.0);
        let n = 20000;
        let h = 20.0 / n as f64;
        let mut s = 0.0;
        for i in 0..n {
            let x = (i as f64 + 0.5) * h;
            s += ln_atom_transition(w, x, phi, tau, 1.0).exp() * h;
        }
        assert!((s + (-phi * w).exp_m1()).abs() < 1e-4, "{s}");
    }

    #[test]
    fn sampled_counts_follow_series() {
        let mut rng = ChaCha8Rng::seed_from_u64(4);
        let s = CountSeries::new(1.0, 1.2, 3.0, 1.0, 0.0, 1);
        let n = 100_000;
        let mut hist = vec![0usize; 64];
        for _ in 0..n {
            hist[sample_atom_count(1.0, 1.2, 3.0, 1.0, &mut rng) as usize] += 1;
        }
        assert_eq!(hist[0], 0);
        let mut mass = 0.0;
        for (c, p) in s.probabilities() {
            mass += p;
            let f = hist[c as usize] as f64 / n as f64;
            assert!((f - p).abs() < 5.0 * (p * (1.0 - p) / n as f64).sqrt() + 1e-6);
        }
        assert!((mass - 1.0).abs() < 1e-12);
    }
}
