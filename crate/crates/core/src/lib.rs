//! Diffusive quantum trajectories for finite-dimensional Lindblad master
//! equations.
//!
//! Every diffusive unraveling is labelled by a complex symmetric matrix `u`
//! with spectral norm at most one, giving the non-Hermitian correlations
//! `dξ_j dξ_k = u_jk dt` of the complex Wiener increments driving the
//! conditioned state. The crate provides the model types ([`operators`]),
//! the `u` parameterization and noise sampling ([`unravelings`]), three
//! equivalent trajectory steppers ([`trajectory`]), an exact master-equation
//! integrator for ensemble checks ([`oracle`]), the driven two-level atom
//! ([`fluorescence`]) and an ensemble runner that is data-parallel when the
//! `parallel` feature is enabled ([`ensemble`]).

pub mod ensemble;
pub mod error;
pub mod fluorescence;
pub mod linalg;
pub mod operators;
pub mod oracle;
pub mod random;
pub mod rng;
pub mod stats;
pub mod trajectory;
pub mod unravelings;
pub mod verify;

pub use error::{Error, Result};
pub use operators::{CMatrix, CVector, DensityMatrix, LindbladModel, PureState, C64};
pub use unravelings::{NoiseIncrement, UMatrix, UnravelingSpec};
