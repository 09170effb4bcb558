//! Ground truth for testing: exact finite structural models, Monte Carlo
//! sampling from them, and brute-force and finite-difference oracles.

pub mod config;
pub mod cun;
pub mod enumerate;
pub mod fd;
pub mod random;
pub mod sample;
pub mod scm;
pub mod simulate;
pub mod sweep;

pub use config::ScmConfig;
pub use enumerate::{
    enumerate_counterfactuals, observational_theta, observational_theta_exact, true_effects,
    true_effects_exact, CounterfactualLaw,
};
pub use sample::{replicate_seed, sample_dataset};
pub use scm::{Probability, StructuralModel};
pub use sweep::{decoupled_sweep_bounds, pair_sweep_bounds, psi_sweep_bounds, SweepBounds};
