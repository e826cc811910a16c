//! Training dynamics of deep linear networks `W_L ... W_1`.
//!
//! With whitened inputs the squared loss reduces to `||W_L ... W_1 - R||_F^2 / 2`,
//! so a network is just an ordered list of conformable matrices and a target.
//! Around an equilibrium the estimation error evolves under the linear map
//! `E -> sum_i A_i E B_i`; its largest eigenvalue `lambda_max` gives the exact
//! step size `2 / lambda_max` above which the equilibrium cannot be stable.
//! The closed-form step-size bounds, the singular-value certificate for
//! converged solutions, and the identity-initialisation experiments live here
//! as well.

mod bounds;
mod error;
mod identity_init;
mod matrix_json;
mod net;
mod operator;
pub mod sampling;
mod spectral;
mod stability;
mod training;

pub use bounds::{cor1_bound, cor2_certificate, thm1_bound, thm2_step_bound, thm3_step_bound, SingularProfile};
pub use error::DeepLinearError;
pub use identity_init::{
    run_identity_init, DirectionRate, HistoryPoint, IdentityInitOptions, IdentityInitRecord, InitCase,
};
pub use matrix_json::MatrixJson;
pub use net::{DeepLinearNet, DeepLinearObjective, LinearTarget};
pub use operator::{
    error_factors, error_operator, lambda_max, lemma2_lower_bound, sylvester_sum_operator, OPERATOR_CAP,
};
pub use spectral::{is_symmetric, matrix_root, psd_projection, spectral_norm, symmetric_eigen};
pub use stability::{probe_equilibrium, stability_check, stability_check_at, PerturbationOutcome, StabilityReport};
pub use training::{train, TrainRecord};

pub use nalgebra::{DMatrix, DVector};
