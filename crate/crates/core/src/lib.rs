//! Bayesian nonparametric Plackett-Luce models for top-m rankings.
//!
//! * [`measures`]: gamma-process measures, Lévy functionals and lazy
//!   generation of top-m lists.
//! * [`static_model`]: Plackett-Luce likelihood and the Gibbs sampler for a
//!   single gamma-process rating measure.
//! * [`dynamic_model`]: Pitt-Walker dependent gamma processes and the Gibbs
//!   sampler for rankings that evolve over epochs.
//! * [`oracle`]: brute-force and Monte Carlo references used to check the
//!   samplers.
//! * [`io`]: CSV ingestion, run configuration and chain/summary output.

pub mod chain;
pub mod dist;
pub mod dynamic_model;
pub mod error;
pub mod io;
pub mod measures;
pub mod oracle;
pub mod static_model;

pub use chain::{AlphaSpec, ChainConfig, Draw, EpochDraw, GammaPrior, PosteriorChain};
pub use error::{Error, Result};
pub use measures::{AtomicMeasure, GammaProcessParams, ItemId, PartialRanking};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// The generator used for every chain and Monte Carlo worker.
pub type Rng = ChaCha8Rng;

/// Independent stream `stream` of the generator seeded with `seed`.
pub fn rng_stream(seed: u64, stream: u64) -> Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
