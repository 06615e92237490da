//! Convergence analysis: Riemannian distance, Riccati recursions, bound
//! constants, gap trajectories and error dynamics.

pub mod bounds;
pub mod dynamics;
pub mod gap;
pub mod lemmas;
pub mod moments;
pub mod montecarlo;
pub mod properties;
pub mod riccati;
pub mod riemann;
pub mod stability;

pub use bounds::{compute_bound_report, covariance_constants, BoundReport, CovarianceConstants, EnvelopeFit};
pub use dynamics::{error_dynamics_step, replay_error_dynamics, ErrorDynamicsContext, ErrorDynamicsStep};
pub use gap::{compare_filters, covariance_gap_trajectory, FilterComparison, GapRecord, GapTrajectory};
pub use lemmas::{exp_scaling_check, psd_block_check};
pub use moments::exact_gap_moments;
pub use montecarlo::{envelope_check, estimate_gap_monte_carlo, fit_envelope, MonteCarloGap};
pub use riccati::{central_covariances, distributed_covariances, steady_state_covariance, FilterKind};
pub use riemann::{contraction_check, norm_gap_bound_check, riemannian_distance, InequalitySides, SpdMetricPair};
pub use stability::{is_detectable, is_stabilizable, spectral_radius, stability_check, StabilityReport};
