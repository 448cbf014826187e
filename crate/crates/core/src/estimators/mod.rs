//! Estimators for data observed through compression or Gaussian noise:
//! linear shrinkage, soft thresholding, scalar Bayes posterior means, and
//! approximate message passing with its state-evolution predictor.

mod amp;
mod bayes;
mod prior;
pub mod quadrature;
mod shrinkage;

pub use amp::{amp_run, state_evolution, AmpConfig, AmpOutput, Denoiser, StateEvolutionTrace, TauSchedule};
pub use bayes::{posterior_mean_derivative, posterior_mean_scalar, posterior_moments, scalar_mmse};
pub use prior::{PriorKind, ScalarPrior};
pub use shrinkage::{
    beta0, beta0_with_argmin, linear_minimax_mse, optimal_linear_coefficient, soft_threshold, soft_threshold_risk,
    soft_threshold_risk_unit, soft_threshold_vec,
};
