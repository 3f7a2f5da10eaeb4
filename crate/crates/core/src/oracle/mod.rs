//! Independent reference implementations and statistical harnesses.
//!
//! Nothing here reuses the samplers under test: draws come straight from
//! `rand_distr`, and each check reports a machine-readable result.

pub mod calibration;
pub mod enumerate;
pub mod finite;
pub mod geweke;
pub mod marginal;
pub mod quadrature;
pub mod stats;

use std::collections::BTreeMap;
use std::fmt;
use std::str::FromStr;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Gamma, Poisson};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::dynamic_model::{lifetime_death_prob, phi_from_continuous_time, pitt_walker_step};
use crate::error::{domain, Error, Result};
use crate::measures::{levy_kappa, levy_psi, AtomicMeasure, GammaProcessParams, ItemId, PartialRanking};
use crate::static_model::pl_log_probability;

use self::enumerate::enumerate_topm_distribution;
use self::geweke::{dynamic_geweke, static_geweke, DynamicGewekeSpec, GewekeReport, StaticGewekeSpec};
use self::marginal::{marginal_check, MarginalFixture};
use self::quadrature::{kappa_quadrature, psi_quadrature};
use self::stats::{gamma_cdf, ks_one_sample, ks_two_sample, KsResult};

pub const KS_LEVEL: f64 = 0.01;

/// Fraction of `n` forward simulations of a single atom that are dead at
/// each epoch `2..=max_horizon` (1-based), with binomial standard errors.
pub fn lifetime_monte_carlo(
    w: f64,
    phis: &[f64],
    tau: f64,
    max_horizon: usize,
    n: usize,
    seed: u64,
) -> Result<Vec<(f64, f64)>> {
    if max_horizon < 2 || phis.len() < max_horizon - 1 {
        return Err(domain("need a transition parameter for every step up to the horizon"));
    }
    const CHUNKS: u64 = 16;
    let per = n.div_ceil(CHUNKS as usize);
    let dead: Vec<Vec<usize>> = (0..CHUNKS)
        .into_par_iter()
        .map(|c| {
            let mut rng = crate::rng_stream(seed, c);
            let mut dead = vec![0usize; max_horizon - 1];
            let todo = per.min(n.saturating_sub(c as usize * per));
            for _ in 0..todo {
                let mut x = w;
                for (h, &phi) in phis[..max_horizon - 1].iter().enumerate() {
                    if x > 0.0 {
                        let k: f64 = Poisson::new(phi * x).unwrap().sample(&mut rng);
                        x = if k == 0.0 {
                            0.0
                        } else {
                            Gamma::new(k, 1.0 / (tau + phi)).unwrap().sample(&mut rng)
                        };
                    }
                    if x == 0.0 {
                        dead[h] += 1;
                    }
                }
            }
            dead
        })
        .collect();
    let nf = n as f64;
    Ok((0..max_horizon - 1)
        .map(|h| {
            let p = dead.iter().map(|d| d[h]).sum::<usize>() as f64 / nf;
            (p, (p * (1.0 - p) / nf).sqrt())
        })
        .collect())
}

/// Total masses of `steps` consecutive Pitt-Walker transitions started from
/// a stationary draw, keeping every `thin`-th value.
pub fn total_mass_chain<R: Rng + ?Sized>(
    alpha: f64,
    tau: f64,
    phi: f64,
    steps: usize,
    thin: usize,
    rng: &mut R,
) -> Result<Vec<f64>> {
    let params = GammaProcessParams::new(alpha, tau)?;
    let start: f64 = Gamma::new(alpha, 1.0 / tau).unwrap().sample(rng);
    let mut g = AtomicMeasure::from_remainder(start)?;
    let mut out = Vec::with_capacity(steps / thin.max(1) + 1);
    for i in 1..=steps {
        g = pitt_walker_step(&mut g, &params, phi, rng)?.next;
        if i % thin.max(1) == 0 {
            out.push(g.total_mass());
        }
    }
    Ok(out)
}

/// Smallest lag at which the lag-one autocorrelation `φ / (τ + φ)` of the
/// total mass has decayed below 0.01.
pub fn decorrelation_lag(tau: f64, phi: f64) -> usize {
    let rho = phi / (tau + phi);
    ((0.01f64).ln() / rho.ln()).ceil().max(1.0) as usize
}

#[derive(Clone, Copy, Debug, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "kebab-case")]
pub enum Suite {
    PsiKappa,
    Enumerate,
    Marginal,
    Geweke,
    Lifetime,
    Stationarity,
}

impl Suite {
    pub const ALL: [Suite; 6] = [
        Suite::PsiKappa,
        Suite::Enumerate,
        Suite::Marginal,
        Suite::Geweke,
        Suite::Lifetime,
        Suite::Stationarity,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Suite::PsiKappa => "psi-kappa",
            Suite::Enumerate => "enumerate",
            Suite::Marginal => "marginal",
            Suite::Geweke => "geweke",
            Suite::Lifetime => "lifetime",
            Suite::Stationarity => "stationarity",
        }
    }
}

impl fmt::Display for Suite {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for Suite {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        Suite::ALL
            .into_iter()
            .find(|x| x.name() == s)
            .ok_or_else(|| Error::Config(format!("unknown suite '{s}'")))
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct Check {
    pub name: String,
    /// The quantity compared against `bound`.
    pub value: f64,
    pub bound: f64,
    pub passed: bool,
}

impl Check {
    fn below(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            passed: value < bound,
        }
    }

    fn above(name: impl Into<String>, value: f64, bound: f64) -> Self {
        Self {
            name: name.into(),
            value,
            bound,
            passed: value > bound,
        }
    }
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SuiteReport {
    pub suite: Suite,
    pub seed: u64,
    pub passed: bool,
    pub checks: Vec<Check>,
}

impl SuiteReport {
    fn new(suite: Suite, seed: u64, checks: Vec<Check>) -> Self {
        Self {
            suite,
            seed,
            passed: checks.iter().all(|c| c.passed),
            checks,
        }
    }
}

pub fn run_suite(suite: Suite, seed: u64) -> Result<SuiteReport> {
    let checks = match suite {
        Suite::PsiKappa => psi_kappa_checks()?,
        Suite::Enumerate => enumerate_checks(seed)?,
        Suite::Marginal => marginal_checks(seed)?,
        Suite::Geweke => geweke_checks(seed)?,
        Suite::Lifetime => lifetime_checks(seed)?,
        Suite::Stationarity => stationarity_checks(seed)?,
    };
    Ok(SuiteReport::new(suite, seed, checks))
}

pub const PSI_KAPPA_ALPHAS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 5.0];
pub const PSI_KAPPA_TAUS: [f64; 5] = [0.1, 0.5, 1.0, 2.0, 10.0];
pub const PSI_KAPPA_ZS: [f64; 4] = [0.01, 0.5, 2.0, 20.0];

/// Largest relative error of ψ and of κ(n) for n = 1..4 over the grid.
pub fn psi_kappa_checks() -> Result<Vec<Check>> {
    let mut psi_err: f64 = 0.0;
    let mut kappa_err = [0.0f64; 4];
    for &a in &PSI_KAPPA_ALPHAS {
        for &t in &PSI_KAPPA_TAUS {
            let p = GammaProcessParams::new(a, t)?;
            for &z in &PSI_KAPPA_ZS {
                let q = psi_quadrature(a, t, z);
                psi_err = psi_err.max((levy_psi(&p, z)? - q).abs() / q.abs());
                for n in 1..=4u32 {
                    let q = kappa_quadrature(a, t, n, z);
                    let e = (levy_kappa(&p, n, z)? - q).abs() / q.abs();
                    kappa_err[n as usize - 1] = kappa_err[n as usize - 1].max(e);
                }
            }
        }
    }
    let mut checks = vec![Check::below("psi max relative error", psi_err, 1e-6)];
    for (i, e) in kappa_err.iter().enumerate() {
        checks.push(Check::below(format!("kappa n={} max relative error", i + 1), *e, 1e-6));
    }
    Ok(checks)
}

/// Random weight fixtures for every `M ≤ 6` and `m ≤ M`.
pub fn enumerate_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut sum_err: f64 = 0.0;
    let mut point_err: f64 = 0.0;
    for big_m in 1..=6usize {
        for m in 1..=big_m {
            for rep in 0..5 {
                let weights: Vec<f64> = if rep == 0 {
                    vec![1.0; big_m]
                } else {
                    (0..big_m).map(|_| rng.random_range(0.01..10.0)).collect()
                };
                let dist = enumerate_topm_distribution(&weights, m)?;
                let total: f64 = dist.iter().map(|(_, p)| p).sum();
                sum_err = sum_err.max((total - 1.0).abs());
                let map: BTreeMap<ItemId, f64> =
                    weights.iter().enumerate().map(|(i, &w)| (ItemId(i as u64), w)).collect();
                for (order, p) in &dist {
                    let r = PartialRanking::new(order.iter().map(|&i| ItemId(i as u64)).collect())?;
                    let lp = pl_log_probability(&map, 0.0, &r)?;
                    point_err = point_err.max((lp.exp() - p).abs());
                }
            }
        }
    }
    Ok(vec![
        Check::below("max |sum of probabilities - 1|", sum_err, 1e-10),
        Check::below("max |enumeration - pl_log_probability|", point_err, 1e-12),
    ])
}

pub const MARGINAL_SAMPLES: usize = 1_000_000;

pub fn marginal_fixtures() -> Vec<(String, MarginalFixture, f64, f64)> {
    vec![
        (
            "K=1 n=1".into(),
            MarginalFixture {
                lists: vec![vec![0]],
                z: vec![vec![0.7]],
            },
            1.0,
            1.0,
        ),
        (
            "K=1 n=3".into(),
            MarginalFixture {
                lists: vec![vec![0], vec![0], vec![0]],
                z: vec![vec![0.2], vec![0.5], vec![0.1]],
            },
            2.0,
            1.5,
        ),
        (
            "K=2 two lists".into(),
            MarginalFixture {
                lists: vec![vec![0, 1], vec![1]],
                z: vec![vec![0.3, 0.6], vec![0.4]],
            },
            1.5,
            1.0,
        ),
    ]
}

pub fn marginal_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (i, (name, fx, alpha, tau)) in marginal_fixtures().into_iter().enumerate() {
        let r = marginal_check(&fx, alpha, tau, MARGINAL_SAMPLES, 1e-10, seed.wrapping_add(i as u64))?;
        checks.push(Check::below(format!("{name}: |z|"), r.z_score.abs(), 3.0));
        checks.push(Check::below(
            format!("{name}: truncation shift / se"),
            r.truncation_shift(),
            1.0,
        ));
    }
    Ok(checks)
}

fn geweke_to_checks(prefix: &str, r: &GewekeReport) -> Vec<Check> {
    r.stats
        .iter()
        .map(|s| Check::below(format!("{prefix} {}: |z|", s.name), s.z.abs(), r.threshold))
        .collect()
}

pub fn geweke_checks(seed: u64) -> Result<Vec<Check>> {
    let mut rng = crate::rng_stream(seed, 0);
    let s = static_geweke(&StaticGewekeSpec::default(), &mut rng)?;
    let mut rng = crate::rng_stream(seed, 1);
    let d = dynamic_geweke(&DynamicGewekeSpec::default(), &mut rng)?;
    let mut checks = geweke_to_checks("static", &s);
    checks.extend(geweke_to_checks("dynamic", &d));
    Ok(checks)
}

pub const LIFETIME_SIMULATIONS: usize = 100_000;
/// `(φ, τ, w)` settings.
pub const LIFETIME_SETTINGS: [(f64, f64, f64); 3] = [(1.0, 1.0, 1.0), (5.0, 1.0, 0.3), (20.0, 2.0, 0.05)];

pub fn lifetime_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (i, &(phi, tau, w)) in LIFETIME_SETTINGS.iter().enumerate() {
        let phis = [phi; 5];
        let mc = lifetime_monte_carlo(w, &phis, tau, 6, LIFETIME_SIMULATIONS, seed.wrapping_add(i as u64))?;
        for (h, (p, se)) in (2..=6).zip(mc) {
            let exact = lifetime_death_prob(w, &phis, tau, h)?;
            let z = stats::z_score(p, se, exact, 0.0);
            checks.push(Check::below(format!("phi={phi} tau={tau} w={w} horizon {h}: |z|"), z.abs(), 3.0));
        }
    }
    Ok(checks)
}

pub const STATIONARITY_STEPS: usize = 10_000;
/// `(α, τ, φ)` settings.
pub const STATIONARITY_SETTINGS: [(f64, f64, f64); 2] = [(1.0, 1.0, 1.0), (2.0, 1.0, 10.0)];
pub const CK_PATHS: usize = 100_000;

/// KS test of the thinned total-mass chain against `Gamma(α, τ)`.
pub fn stationarity_ks(alpha: f64, tau: f64, phi: f64, steps: usize, seed: u64) -> Result<KsResult> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let xs = total_mass_chain(alpha, tau, phi, steps, decorrelation_lag(tau, phi), &mut rng)?;
    Ok(ks_one_sample(&xs, |x| gamma_cdf(x, alpha, tau)))
}

/// Fixed starting measure for the composition check.
pub fn ck_start() -> AtomicMeasure {
    AtomicMeasure::new([(ItemId(0), 1.0), (ItemId(1), 0.4)], 0.6).expect("valid fixture")
}

/// Two-sample KS of total mass after two steps with `φ(dt)` against one
/// step with `φ(2 dt)`, both from [`ck_start`].
pub fn chapman_kolmogorov_ks(alpha: f64, tau: f64, xi: f64, dt: f64, paths: usize, seed: u64) -> Result<KsResult> {
    let params = GammaProcessParams::new(alpha, tau)?;
    let phi1 = phi_from_continuous_time(tau, xi, dt)?;
    let phi2 = phi_from_continuous_time(tau, xi, 2.0 * dt)?;
    const CHUNKS: u64 = 16;
    let per = paths.div_ceil(CHUNKS as usize);
    let run = |stream_base: u64, composed: bool| -> Result<Vec<f64>> {
        let parts = (0..CHUNKS)
            .into_par_iter()
            .map(|c| {
                let mut rng = crate::rng_stream(seed, stream_base + c);
                let todo = per.min(paths.saturating_sub(c as usize * per));
                (0..todo)
                    .map(|_| {
                        let mut g = ck_start();
                        if composed {
                            g = pitt_walker_step(&mut g, &params, phi1, &mut rng)?.next;
                            g = pitt_walker_step(&mut g, &params, phi1, &mut rng)?.next;
                        } else {
                            g = pitt_walker_step(&mut g, &params, phi2, &mut rng)?.next;
                        }
                        Ok(g.total_mass())
                    })
                    .collect::<Result<Vec<f64>>>()
            })
            .collect::<Result<Vec<_>>>()?;
        Ok(parts.concat())
    };
    let a = run(0, true)?;
    let b = run(CHUNKS, false)?;
    Ok(ks_two_sample(&a, &b))
}

pub fn stationarity_checks(seed: u64) -> Result<Vec<Check>> {
    let mut checks = Vec::new();
    for (i, &(a, t, phi)) in STATIONARITY_SETTINGS.iter().enumerate() {
        let r = stationarity_ks(a, t, phi, STATIONARITY_STEPS, seed.wrapping_add(i as u64))?;
        checks.push(Check::above(
            format!("alpha={a} tau={t} phi={phi}: KS p-value"),
            r.p_value,
            KS_LEVEL,
        ));
    }
    let r = chapman_kolmogorov_ks(2.0, 1.0, 0.5, 1.0, CK_PATHS, seed)?;
    checks.push(Check::above("two half steps vs one full step: KS p-value", r.p_value, KS_LEVEL));
    Ok(checks)
}
