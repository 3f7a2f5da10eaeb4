//! Gibbs sampler for rankings observed over T epochs.
//!
//! Each sweep runs
//!
//! 1. (a) total masses given the counts, with weights rescaled;
//!    (b) item counts by zero-truncated Poisson Metropolis-Hastings, then a
//!    joint resample of each item's trajectory after its last observation and
//!    before its first one;
//! 2. (a) α with the unseen-mass chain marginalised; (b) the unseen-mass
//!    chain by backward filtering, forward sampling;
//! 3. item weights given counts;
//! 4. inter-arrival times Z;
//! 5. the dependence parameter by a log-normal random walk with counts
//!    marginalised, followed by an exact redraw of all counts.

use rand::Rng;
use serde::{Deserialize, Serialize};

use super::pitt_walker::phi_from_continuous_time;
use super::state::{compute_dynamic_stats, DynamicLatentState, DynamicStats};
use super::transition::{ln_atom_transition, ln_unseen_transition, sample_atom_count, sample_unseen_count};
use crate::chain::{AlphaSpec, ChainConfig, Draw, EpochDraw, GammaPrior, PosteriorChain};
use crate::dist;
use crate::error::{Error, Result};
use crate::measures::PartialRanking;

/// How the dependence between consecutive epochs is parameterised.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum PhiSpec {
    /// Constant φ, not sampled.
    Fixed(f64),
    /// Constant φ with a Gamma (or 1/φ) prior.
    Infer { init: f64, prior: GammaPrior },
    /// `φ_t = τ / (exp(τ ξ dt_t) - 1)` for the given gaps; ξ is sampled when
    /// a prior is given.
    ContinuousTime {
        dts: Vec<f64>,
        xi: f64,
        prior: Option<GammaPrior>,
    },
}

impl PhiSpec {
    pub fn initial(&self) -> f64 {
        match self {
            PhiSpec::Fixed(phi) => *phi,
            PhiSpec::Infer { init, .. } => *init,
            PhiSpec::ContinuousTime { xi, .. } => *xi,
        }
    }

    pub fn prior(&self) -> Option<GammaPrior> {
        match self {
            PhiSpec::Fixed(_) => None,
            PhiSpec::Infer { prior, .. } => Some(*prior),
            PhiSpec::ContinuousTime { prior, .. } => *prior,
        }
    }
}

/// How the total masses are refreshed at the start of a sweep.
#[derive(Clone, Copy, Debug, Default, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum TotalMassStep {
    /// Each total drawn from its exact conditional given the counts:
    /// `Gamma(α + M_{t-1} + M_t, τ + φ_{t-1} + φ_t)`, with Z rescaled inversely.
    #[default]
    Conditional,
    /// Forward draw `G_0 ~ Gamma(α, τ)`, `G_{t+1} ~ Gamma(α + M_t, τ + φ_t)`,
    /// rescaling weights only.
    Prior,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct DynamicConfig {
    pub phi: PhiSpec,
    pub mh_sigma: f64,
    /// Tune `mh_sigma` during burn-in towards 30% acceptance.
    pub adapt_sigma: bool,
    pub first_appearance_filter: bool,
    pub total_mass_step: TotalMassStep,
}

impl Default for DynamicConfig {
    fn default() -> Self {
        Self {
            phi: PhiSpec::Infer {
                init: 1.0,
                prior: GammaPrior::IMPROPER,
            },
            mh_sigma: 0.1,
            adapt_sigma: true,
            first_appearance_filter: true,
            total_mass_step: TotalMassStep::Conditional,
        }
    }
}

/// Data plus fixed settings; the sampler steps act on a separate state.
#[derive(Clone, Debug)]
pub struct DynamicModel {
    stats: DynamicStats,
    tau: f64,
    alpha: AlphaSpec,
    phi: PhiSpec,
    total_mass_step: TotalMassStep,
}

const TARGET_ACCEPTANCE: f64 = 0.3;
const ADAPT_BATCH: usize = 50;

impl DynamicModel {
    pub fn new(stats: DynamicStats, tau: f64, alpha: AlphaSpec, cfg: &DynamicConfig) -> Result<Self> {
        if !(tau > 0.0 && tau.is_finite()) {
            return Err(Error::Config(format!("tau must be positive, got {tau}")));
        }
        if !(cfg.mh_sigma > 0.0 && cfg.mh_sigma.is_finite()) {
            return Err(Error::Config(format!("mh_sigma must be positive, got {}", cfg.mh_sigma)));
        }
        let theta = cfg.phi.initial();
        if !(theta > 0.0 && theta.is_finite()) {
            return Err(Error::Config(format!("initial phi/xi must be positive, got {theta}")));
        }
        if let Some(p) = cfg.phi.prior() {
            GammaPrior::new(p.shape, p.rate)?;
        }
        if let PhiSpec::ContinuousTime { dts, .. } = &cfg.phi {
            if dts.len() + 1 != stats.num_epochs() {
                return Err(Error::Config(format!(
                    "{} epochs need {} time gaps, got {}",
                    stats.num_epochs(),
                    stats.num_epochs() - 1,
                    dts.len()
                )));
            }
            if let Some(dt) = dts.iter().find(|&&d| !(d > 0.0 && d.is_finite())) {
                return Err(Error::Config(format!("time gaps must be positive, got {dt}")));
            }
        }
        if let AlphaSpec::Prior { prior, .. } = alpha {
            GammaPrior::new(prior.shape, prior.rate)?;
            if prior.is_improper() && stats.num_items() == 0 {
                return Err(Error::Config(
                    "alpha posterior is improper: no observed items under the 1/alpha prior".into(),
                ));
            }
        }
        if !(alpha.initial() > 0.0) {
            return Err(Error::Config(format!("alpha must be positive, got {}", alpha.initial())));
        }
        Ok(Self {
            stats,
            tau,
            alpha,
            phi: cfg.phi.clone(),
            total_mass_step: cfg.total_mass_step,
        })
    }

    pub fn stats(&self) -> &DynamicStats {
        &self.stats
    }

    pub fn tau(&self) -> f64 {
        self.tau
    }

    fn num_epochs(&self) -> usize {
        self.stats.num_epochs()
    }

    /// Per-transition dependence for a value of the sampled parameter.
    pub fn phis(&self, theta: f64) -> Result<Vec<f64>> {
        let n = self.num_epochs().saturating_sub(1);
        match &self.phi {
            PhiSpec::Fixed(_) | PhiSpec::Infer { .. } => Ok(vec![theta; n]),
            PhiSpec::ContinuousTime { dts, .. } => dts
                .iter()
                .map(|&dt| phi_from_continuous_time(self.tau, theta, dt))
                .collect(),
        }
    }

    /// Whether the φ update runs at all.
    pub fn samples_phi(&self) -> bool {
        self.phi.prior().is_some() && self.num_epochs() > 1
    }

    /// Items alive exactly over their observed span, unit-ish weights.
    pub fn initial_state<R: Rng + ?Sized>(&self, rng: &mut R) -> Result<DynamicLatentState> {
        let tt = self.num_epochs();
        let kk = self.stats.num_items();
        let alpha = self.alpha.initial();
        let theta = self.phi.initial();
        let mut w = vec![vec![0.0; kk]; tt];
        let mut c = vec![vec![0u64; kk]; tt.saturating_sub(1)];
        for k in 0..kk {
            let (f, l) = (self.stats.first(k), self.stats.last(k));
            for t in f..=l {
                w[t][k] = f64::from(self.stats.n(t, k).max(1)) / self.tau;
                if t < l {
                    c[t][k] = 1;
                }
            }
        }
        let mut state = DynamicLatentState {
            w,
            w_star: vec![alpha / self.tau; tt],
            c,
            c_star: vec![0; tt.saturating_sub(1)],
            z: Vec::new(),
            alpha,
            theta,
            phi: self.phis(theta)?,
        };
        self.update_z_dynamic(&mut state, rng);
        Ok(state)
    }

    /// `S^{(k)}_t = Σ_li δ_tlik Z_tli` per item (zero where inactive) and
    /// `S_t = Σ_li Z_tli`.
    /// Sum of every latent `Z` in each epoch.
    pub fn z_totals(state: &DynamicLatentState) -> Vec<f64> {
        state.z.iter().map(|zt| zt.iter().flatten().sum()).collect()
    }

    pub fn exposures(&self, state: &DynamicLatentState) -> (Vec<Vec<f64>>, Vec<f64>) {
        let kk = self.stats.num_items();
        let mut per_item = Vec::with_capacity(self.num_epochs());
        let mut totals = Vec::with_capacity(self.num_epochs());
        for (t, zt) in state.z.iter().enumerate() {
            let total: f64 = zt.iter().flatten().sum();
            let mut excluded = vec![0.0; kk];
            for (list, z) in self.stats.lists(t).iter().zip(zt) {
                let mut below = 0.0;
                for (i, &k) in list.iter().enumerate().rev() {
                    excluded[k] += below;
                    below += z[i];
                }
            }
            per_item.push(
                (0..kk)
                    .map(|k| {
                        if self.stats.is_active(t, k) {
                            (total - excluded[k]).max(0.0)
                        } else {
                            0.0
                        }
                    })
                    .collect(),
            );
            totals.push(total);
        }
        (per_item, totals)
    }

    fn epoch_count(state: &DynamicLatentState, t: usize) -> u64 {
        state.c[t].iter().sum::<u64>() + state.c_star[t]
    }

    /// Refreshes the total mass of every epoch and rescales the weights.
    pub fn update_total_masses_and_rescale<R: Rng + ?Sized>(&self, state: &mut DynamicLatentState, rng: &mut R) {
        let tt = self.num_epochs();
        let m: Vec<f64> = (0..tt.saturating_sub(1))
            .map(|t| Self::epoch_count(state, t) as f64)
            .collect();
        for t in 0..tt {
            let new_total = match self.total_mass_step {
                TotalMassStep::Conditional => {
                    let mut shape = state.alpha;
                    let mut rate = self.tau;
                    if t > 0 {
                        shape += m[t - 1];
                        rate += state.phi[t - 1];
                    }
                    if t + 1 < tt {
                        shape += m[t];
                        rate += state.phi[t];
                    }
                    dist::gamma(rng, shape, rate)
                }
                TotalMassStep::Prior => {
                    if t == 0 {
                        dist::gamma(rng, state.alpha, self.tau)
                    } else {
                        dist::gamma(rng, state.alpha + m[t - 1], self.tau + state.phi[t - 1])
                    }
                }
            };
            let s = new_total / state.total_mass(t);
            for w in state.w[t].iter_mut() {
                *w *= s;
            }
            state.w_star[t] *= s;
            if self.total_mass_step == TotalMassStep::Conditional {
                for z in state.z[t].iter_mut().flatten() {
                    *z /= s;
                }
            }
        }
    }

    /// Count update for every (t, k) with `w_tk > 0`. Where `w_{t+1,k} = 0` the
    /// two-point move over {0, 1} is used; the dead-tail resample that
    /// follows in a sweep overwrites those entries.
    pub fn mh_update_c<R: Rng + ?Sized>(&self, state: &mut DynamicLatentState, rng: &mut R) {
        for t in 0..self.num_epochs().saturating_sub(1) {
            let phi = state.phi[t];
            let rate = self.tau + phi;
            for k in 0..self.stats.num_items() {
                let w = state.w[t][k];
                let w_next = state.w[t + 1][k];
                state.c[t][k] = if w == 0.0 {
                    0
                } else if w_next > 0.0 {
                    let cur = state.c[t][k].max(1);
                    let prop = dist::zero_truncated_poisson(rng, phi * w);
                    let ln_acc = dist::ln_gamma_pdf(w_next, prop as f64, rate)
                        - dist::ln_gamma_pdf(w_next, cur as f64, rate);
                    if ln_acc >= 0.0 || rng.random::<f64>().ln() < ln_acc {
                        prop
                    } else {
                        cur
                    }
                } else if rng.random::<f64>() < two_point_zero_prob(phi, w, self.tau) {
                    0
                } else {
                    1
                };
            }
        }
    }

    /// Jointly resamples `(c_tk, w_{t+1,k})` for `t ≥ t0` given `w_{t0,k}`.
    /// Item k must not be observed after `t0`.
    pub fn sample_dead_tail<R: Rng + ?Sized>(
        &self,
        state: &mut DynamicLatentState,
        k: usize,
        t0: usize,
        exposure: &[Vec<f64>],
        rng: &mut R,
    ) -> Result<()> {
        let tt = self.num_epochs();
        self.check_item(k)?;
        if t0 >= tt {
            return Err(Error::Internal(format!("epoch {t0} out of range")));
        }
        if self.stats.last(k) > t0 {
            return Err(Error::Internal(format!(
                "item {k} is observed at epoch {}, after {t0}",
                self.stats.last(k)
            )));
        }
        if t0 + 1 == tt {
            return Ok(());
        }
        let mut x = vec![0.0; tt];
        x[tt - 1] = exposure[tt - 1][k];
        for t in (t0 + 1..tt - 1).rev() {
            let phi = state.phi[t];
            x[t] = exposure[t][k] + phi * x[t + 1] / (self.tau + phi + x[t + 1]);
        }
        for t in t0..tt - 1 {
            let w = state.w[t][k];
            let phi = state.phi[t];
            let c = if w > 0.0 {
                let rate = self.tau + phi + x[t + 1];
                dist::poisson(rng, phi * w * (self.tau + phi) / rate)
            } else {
                0
            };
            state.c[t][k] = c;
            state.w[t + 1][k] = if c > 0 {
                dist::gamma(rng, c as f64, self.tau + phi + x[t + 1])
            } else {
                0.0
            };
        }
        Ok(())
    }

    /// Jointly resamples `(w_{t-1,k}, c_{t-1,k})` for `t ≤ t1` given
    /// `w_{t1,k}`, running the chain backwards in time. Item k must not be
    /// observed before `t1`.
    pub fn sample_dead_head<R: Rng + ?Sized>(
        &self,
        state: &mut DynamicLatentState,
        k: usize,
        t1: usize,
        exposure: &[Vec<f64>],
        rng: &mut R,
    ) -> Result<()> {
        self.check_item(k)?;
        if t1 >= self.num_epochs() {
            return Err(Error::Internal(format!("epoch {t1} out of range")));
        }
        if self.stats.first(k) < t1 {
            return Err(Error::Internal(format!(
                "item {k} is observed at epoch {}, before {t1}",
                self.stats.first(k)
            )));
        }
        if t1 == 0 {
            return Ok(());
        }
        let mut x = vec![0.0; t1];
        x[0] = exposure[0][k];
        for t in 1..t1 {
            let phi = state.phi[t - 1];
            x[t] = exposure[t][k] + phi * x[t - 1] / (self.tau + phi + x[t - 1]);
        }
        for t in (1..=t1).rev() {
            let w = state.w[t][k];
            let phi = state.phi[t - 1];
            let rate = self.tau + phi + x[t - 1];
            let c = if w > 0.0 {
                dist::poisson(rng, phi * w * (self.tau + phi) / rate)
            } else {
                0
            };
            state.c[t - 1][k] = c;
            state.w[t - 1][k] = if c > 0 { dist::gamma(rng, c as f64, rate) } else { 0.0 };
        }
        Ok(())
    }

    fn check_item(&self, k: usize) -> Result<()> {
        if k >= self.stats.num_items() {
            return Err(Error::Internal(format!("item index {k} out of range")));
        }
        Ok(())
    }

    /// Backward messages of the unseen-mass chain: `x_t` (exposure of the
    /// chain at t including all later epochs) and `y_t` (accumulated log
    /// normaliser).
    pub fn unseen_messages(&self, state: &DynamicLatentState, totals: &[f64]) -> (Vec<f64>, Vec<f64>) {
        let tt = self.num_epochs();
        let mut x = vec![0.0; tt];
        let mut y = vec![0.0; tt];
        x[tt - 1] = totals[tt - 1];
        for t in (0..tt - 1).rev() {
            let phi = state.phi[t];
            let d = self.tau + phi + x[t + 1];
            x[t] = totals[t] + phi * x[t + 1] / d;
            y[t] = y[t + 1] + (d / (self.tau + phi)).ln();
        }
        (x, y)
    }

    /// Shape and rate of the conditional of α.
    pub fn alpha_posterior(&self, state: &DynamicLatentState, prior: &GammaPrior) -> Result<(f64, f64)> {
        let totals = Self::z_totals(state);
        let (x, y) = self.unseen_messages(state, &totals);
        let shape = prior.shape + self.stats.num_items() as f64;
        let rate = prior.rate + y[0] + (x[0] / self.tau).ln_1p();
        if !(shape > 0.0 && rate > 0.0) {
            return Err(Error::Config("alpha posterior is improper".into()));
        }
        Ok((shape, rate))
    }

    /// Draws α; a no-op when α is fixed.
    pub fn update_alpha_dynamic<R: Rng + ?Sized>(&self, state: &mut DynamicLatentState, rng: &mut R) -> Result<()> {
        if let AlphaSpec::Prior { prior, .. } = self.alpha {
            let (shape, rate) = self.alpha_posterior(state, &prior)?;
            state.alpha = dist::gamma(rng, shape, rate);
        }
        Ok(())
    }

    /// Draws the unseen counts and masses.
    pub fn update_cstar_wstar<R: Rng + ?Sized>(&self, state: &mut DynamicLatentState, rng: &mut R) {
        let tt = self.num_epochs();
        let totals = Self::z_totals(state);
        let (x, _) = self.unseen_messages(state, &totals);
        state.w_star[0] = dist::gamma(rng, state.alpha, self.tau + x[0]);
        for t in 1..tt {
            let phi = state.phi[t - 1];
            let rate = self.tau + phi + x[t];
            let c = dist::poisson(rng, phi * state.w_star[t - 1] * (self.tau + phi) / rate);
            state.c_star[t - 1] = c;
            state.w_star[t] = dist::gamma(rng, state.alpha + c as f64, rate);
        }
    }

    /// Shape and rate of `w_tk` given counts and Z; shape 0 means the atom is absent.
    pub fn weight_conditional(&self, state: &DynamicLatentState, t: usize, k: usize, exposure: f64) -> (f64, f64) {
        let tt = self.num_epochs();
        let mut shape = f64::from(self.stats.n(t, k));
        let mut rate = self.tau + exposure;
        if t > 0 {
            shape += state.c[t - 1][k] as f64;
            rate += state.phi[t - 1];
        }
        if t + 1 < tt {
            shape += state.c[t][k] as f64;
            rate += state.phi[t];
        }
        (shape, rate)
    }

    /// Draws the atom weights, including the unseen masses.
    pub fn update_weights_dynamic<R: Rng + ?Sized>(&self, state: &mut DynamicLatentState, rng: &mut R) {
        let tt = self.num_epochs();
        let (exposure, totals) = self.exposures(state);
        for t in 0..tt {
            for k in 0..self.stats.num_items() {
                let (shape, rate) = self.weight_conditional(state, t, k, exposure[t][k]);
                state.w[t][k] = if shape > 0.0 { dist::gamma(rng, shape, rate) } else { 0.0 };
            }
            let mut shape = state.alpha;
            let mut rate = self.tau + totals[t];
            if t > 0 {
                shape += state.c_star[t - 1] as f64;
                rate += state.phi[t - 1];
            }
            if t + 1 < tt {
                shape += state.c_star[t] as f64;
                rate += state.phi[t];
            }
            state.w_star[t] = dist::gamma(rng, shape, rate);
        }
    }

    /// Rates of Z, shaped like `state.z`.
    pub fn z_rates(&self, state: &DynamicLatentState) -> Vec<Vec<Vec<f64>>> {
        (0..self.num_epochs())
            .map(|t| {
                let active: f64 = (0..self.stats.num_items())
                    .filter(|&k| self.stats.is_active(t, k))
                    .map(|k| state.w[t][k])
                    .sum();
                self.stats
                    .lists(t)
                    .iter()
                    .map(|list| {
                        let mut left = active;
                        list.iter()
                            .map(|&k| {
                                let r = state.w_star[t] + left.max(0.0);
                                left -= state.w[t][k];
                                r
                            })
                            .collect()
                    })
                    .collect()
            })
            .collect()
    }

    /// Draws the latent Z.
    pub fn update_z_dynamic<R: Rng + ?Sized>(&self, state: &mut DynamicLatentState, rng: &mut R) {
        state.z = self
            .z_rates(state)
            .iter()
            .map(|e| {
                e.iter()
                    .map(|l| l.iter().map(|&r| dist::exponential(rng, r)).collect())
                    .collect()
            })
            .collect();
    }

    /// Log density of all weight trajectories given the per-transition
    /// dependence, counts marginalised; terms free of φ are dropped.
    pub fn ln_transition_likelihood(&self, state: &DynamicLatentState, phis: &[f64]) -> f64 {
        let mut total = 0.0;
        for (t, &phi) in phis.iter().enumerate() {
            for k in 0..self.stats.num_items() {
                let (w, w_next) = (state.w[t][k], state.w[t + 1][k]);
                if w > 0.0 || w_next > 0.0 {
                    total += ln_atom_transition(w, w_next, phi, self.tau, state.alpha);
                }
            }
            total += ln_unseen_transition(state.w_star[t], state.w_star[t + 1], phi, self.tau, state.alpha);
        }
        total
    }

    /// Random-walk proposal for φ and accept/reject. Returns whether the move was taken.
    pub fn mh_update_phi<R: Rng + ?Sized>(&self, state: &mut DynamicLatentState, sigma: f64, rng: &mut R) -> Result<bool> {
        let prior = match self.phi.prior() {
            Some(p) if self.num_epochs() > 1 => p,
            _ => return Ok(false),
        };
        let theta = state.theta;
        let proposal = theta * (sigma * dist::standard_normal(rng)).exp();
        if !(proposal > 0.0 && proposal.is_finite()) {
            return Ok(false);
        }
        let phis_new = self.phis(proposal)?;
        let ln_ratio = prior.ln_density_unnorm(proposal) - prior.ln_density_unnorm(theta) + proposal.ln() - theta.ln()
            + self.ln_transition_likelihood(state, &phis_new)
            - self.ln_transition_likelihood(state, &state.phi);
        if ln_ratio >= 0.0 || rng.random::<f64>().ln() < ln_ratio {
            state.theta = proposal;
            state.phi = phis_new;
            return Ok(true);
        }
        Ok(false)
    }

    /// Draws every count from its exact conditional given both weights.
    pub fn redraw_counts<R: Rng + ?Sized>(&self, state: &mut DynamicLatentState, rng: &mut R) {
        for t in 0..self.num_epochs().saturating_sub(1) {
            let phi = state.phi[t];
            for k in 0..self.stats.num_items() {
                state.c[t][k] = sample_atom_count(state.w[t][k], state.w[t + 1][k], phi, self.tau, rng);
            }
            state.c_star[t] = sample_unseen_count(state.w_star[t], state.w_star[t + 1], phi, self.tau, state.alpha, rng);
        }
    }

    /// One full sweep, ending with the φ update when φ is sampled. Returns the φ
    /// acceptance, if it ran.
    pub fn sweep<R: Rng + ?Sized>(&self, state: &mut DynamicLatentState, sigma: f64, rng: &mut R) -> Result<Option<bool>> {
        self.update_total_masses_and_rescale(state, rng);
        self.mh_update_c(state, rng);
        let (exposure, _) = self.exposures(state);
        for k in 0..self.stats.num_items() {
            self.sample_dead_tail(state, k, self.stats.last(k), &exposure, rng)?;
            self.sample_dead_head(state, k, self.stats.first(k), &exposure, rng)?;
        }
        self.update_alpha_dynamic(state, rng)?;
        self.update_cstar_wstar(state, rng);
        self.update_weights_dynamic(state, rng);
        self.update_z_dynamic(state, rng);
        let accepted = if self.samples_phi() {
            let a = self.mh_update_phi(state, sigma, rng)?;
            self.redraw_counts(state, rng);
            Some(a)
        } else {
            None
        };
        if cfg!(debug_assertions) {
            state.check_invariants(&self.stats)?;
        }
        Ok(accepted)
    }
}

/// `P(c = 0)` in the two-point move used when the atom is absent at t + 1.
pub fn two_point_zero_prob(phi: f64, w: f64, tau: f64) -> f64 {
    1.0 / (1.0 + phi * w * (tau + phi))
}

/// A model, its state and the adaptive proposal scale for φ.
#[derive(Clone, Debug)]
pub struct DynamicSampler {
    pub model: DynamicModel,
    pub state: DynamicLatentState,
    pub sigma: f64,
    adapt: bool,
    accepted: usize,
    proposed: usize,
    batch_accepted: usize,
    batch_proposed: usize,
    batches: usize,
}

impl DynamicSampler {
    pub fn new<R: Rng + ?Sized>(model: DynamicModel, cfg: &DynamicConfig, rng: &mut R) -> Result<Self> {
        let state = model.initial_state(rng)?;
        Ok(Self::from_state(model, state, cfg))
    }

    pub fn from_state(model: DynamicModel, state: DynamicLatentState, cfg: &DynamicConfig) -> Self {
        Self {
            model,
            state,
            sigma: cfg.mh_sigma,
            adapt: cfg.adapt_sigma,
            accepted: 0,
            proposed: 0,
            batch_accepted: 0,
            batch_proposed: 0,
            batches: 0,
        }
    }

    /// One sweep; `tuning` allows the proposal scale to move.
    pub fn step<R: Rng + ?Sized>(&mut self, tuning: bool, rng: &mut R) -> Result<()> {
        if let Some(a) = self.model.sweep(&mut self.state, self.sigma, rng)? {
            if tuning && self.adapt {
                self.batch_proposed += 1;
                self.batch_accepted += usize::from(a);
                if self.batch_proposed == ADAPT_BATCH {
                    self.batches += 1;
                    let rate = self.batch_accepted as f64 / ADAPT_BATCH as f64;
                    let delta = (1.0 / (self.batches as f64).sqrt()).min(0.5);
                    self.sigma *= if rate > TARGET_ACCEPTANCE { delta.exp() } else { (-delta).exp() };
                    self.batch_accepted = 0;
                    self.batch_proposed = 0;
                }
            } else {
                self.proposed += 1;
                self.accepted += usize::from(a);
            }
        }
        Ok(())
    }

    /// Acceptance rate of the φ update outside tuning.
    pub fn acceptance(&self) -> Option<f64> {
        (self.proposed > 0).then(|| self.accepted as f64 / self.proposed as f64)
    }

    pub fn record(&self) -> Draw {
        Draw {
            alpha: self.state.alpha,
            phi: Some(self.state.theta),
            epochs: (0..self.state.num_epochs())
                .map(|t| EpochDraw {
                    weights: self.state.w[t].clone(),
                    unseen: self.state.w_star[t],
                })
                .collect(),
        }
    }
}

pub fn run_dynamic_gibbs<R: Rng + ?Sized>(
    epochs: &[Vec<PartialRanking>],
    chain: &ChainConfig,
    cfg: &DynamicConfig,
    rng: &mut R,
) -> Result<PosteriorChain> {
    chain.validate()?;
    let stats = compute_dynamic_stats(epochs, cfg.first_appearance_filter)?;
    let model = DynamicModel::new(stats, chain.tau, chain.alpha, cfg)?;
    let mut sampler = DynamicSampler::new(model, cfg, rng)?;
    let stats = sampler.model.stats();
    let mut out = PosteriorChain::new(stats.items().to_vec(), stats.active().to_vec());
    for i in 0..chain.iterations {
        sampler.step(i < chain.burn_in, rng)?;
        if chain.records(i) {
            out.draws.push(sampler.record());
        }
    }
    out.phi_acceptance = sampler.acceptance();
    Ok(out)
}
