//! Darboux (GBDT) transformations of the exponential family of systems.

pub mod closed_form;
mod seed;
mod state;

pub use seed::{jordan_seed, scalar_seed, Eigenfunction, GbdtSeed, JordanSeedParams, ScalarSeedParams, SeedParts};
pub use state::{GbdtState, SRoute, S_CONDITION_LIMIT};
