//! Random variate helpers and log densities used by the samplers.
//!
//! Gamma distributions are parameterised by shape and **rate** throughout the
//! crate; the conversion to the scale parameter expected by `rand_distr`
//! happens here and nowhere else.

use rand::Rng;
use rand_distr::{Beta, Distribution, Exp, Gamma, Poisson, StandardNormal};
use statrs::function::gamma::ln_gamma;

/// Draws from Gamma(shape, rate). Underflow to zero is clamped to the
/// smallest positive normal so that strictly positive state stays positive.
pub fn gamma<R: Rng + ?Sized>(rng: &mut R, shape: f64, rate: f64) -> f64 {
    assert!(
        shape > 0.0 && rate > 0.0 && shape.is_finite() && rate.is_finite(),
        "gamma parameters out of range: shape={shape}, rate={rate}"
    );
    let x: f64 = Gamma::new(shape, 1.0 / rate).unwrap().sample(rng);
    x.max(f64::MIN_POSITIVE)
}

pub fn exponential<R: Rng + ?Sized>(rng: &mut R, rate: f64) -> f64 {
    assert!(
        rate > 0.0 && rate.is_finite(),
        "exponential rate out of range: {rate}"
    );
    Exp::new(rate).unwrap().sample(rng)
}

/// Poisson draw; a zero mean yields zero.
pub fn poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    assert!(mean >= 0.0 && mean.is_finite(), "poisson mean out of range: {mean}");
    if mean == 0.0 {
        return 0;
    }
    let k: f64 = Poisson::new(mean).unwrap().sample(rng);
    k as u64
}

/// Mean below which the zero-truncated Poisson is sampled by inversion.
const ZTP_INVERSION_LIMIT: f64 = 30.0;

/// Poisson conditioned on being at least one.
pub fn zero_truncated_poisson<R: Rng + ?Sized>(rng: &mut R, mean: f64) -> u64 {
    assert!(mean > 0.0 && mean.is_finite(), "zero-truncated poisson mean out of range: {mean}");
    if mean >= ZTP_INVERSION_LIMIT {
        loop {
            let k = poisson(rng, mean);
            if k >= 1 {
                return k;
            }
        }
    }
    let u: f64 = rng.random();
    // P(K = 1 | K >= 1) = mean e^{-mean} / (1 - e^{-mean})
    let mut p = mean * (-mean).exp() / -(-mean).exp_m1();
    let mut cdf = p;
    let mut k = 1u64;
    while u > cdf && p > 0.0 {
        k += 1;
        p *= mean / k as f64;
        cdf += p;
    }
    k
}

pub fn beta<R: Rng + ?Sized>(rng: &mut R, a: f64, b: f64) -> f64 {
    Beta::new(a, b).unwrap().sample(rng)
}

pub fn standard_normal<R: Rng + ?Sized>(rng: &mut R) -> f64 {
    rng.sample(StandardNormal)
}

pub fn ln_factorial(k: u64) -> f64 {
    ln_gamma(k as f64 + 1.0)
}

/// Log density of Gamma(shape, rate) at `x > 0`.
pub fn ln_gamma_pdf(x: f64, shape: f64, rate: f64) -> f64 {
    shape * rate.ln() - ln_gamma(shape) + (shape - 1.0) * x.ln() - rate * x
}

/// Log probability mass of Poisson(mean) at `k`.
pub fn ln_poisson_pmf(k: u64, mean: f64) -> f64 {
    if mean == 0.0 {
        return if k == 0 { 0.0 } else { f64::NEG_INFINITY };
    }
    k as f64 * mean.ln() - mean - ln_factorial(k)
}

/// `ln(Σ exp(x_i))` without overflow.
pub fn log_sum_exp(xs: &[f64]) -> f64 {
    let max = xs.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    max + xs.iter().map(|x| (x - max).exp()).sum::<f64>().ln()
}
