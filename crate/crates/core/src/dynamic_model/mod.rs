//! Pitt-Walker dependent gamma processes for rankings observed over time.

mod gibbs;
mod pitt_walker;
mod simulate;
mod state;
mod transition;

pub use gibbs::{
    run_dynamic_gibbs, two_point_zero_prob, DynamicConfig, DynamicModel, DynamicSampler, PhiSpec, TotalMassStep,
};
pub use pitt_walker::{lifetime_death_prob, phi_from_continuous_time, pitt_walker_step, PittWalkerStep};
pub use simulate::{
    regenerate_world, simulate_dynamic_dataset, simulate_world, state_from_world, DynamicDataset, DynamicTruth,
    DynamicWorld, SimulationConfig,
};
pub use state::{compute_dynamic_stats, DynamicLatentState, DynamicStats};
pub use transition::{
    ln_atom_transition, ln_unseen_transition, sample_atom_count, sample_unseen_count, CountSeries,
};
