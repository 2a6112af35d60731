//! Casimir friction between two thermally excited harmonic oscillators in relative motion.
//!
//! The crate computes the friction force and the dissipated energy along
//! independent routes and makes them checkable against each other:
//!
//! - [`kernel`]: Kubo linear response, the commutator kernel φ(t) and the
//!   finite-η friction and reversible forces.
//! - [`perturbation`]: first-order time-dependent perturbation theory for an
//!   arbitrary [`LevelSystem`], transition probabilities and ΔE.
//! - [`spectral`]: the spectral form of the response function and ΔE from it,
//!   both in frequency and in time domain, plus the resonant closed forms.
//! - [`propagator`]: exact propagation of the truncated Schrödinger equation,
//!   the brute-force reference for the λ² behaviour of ΔE.
//! - [`barton`]: the zero-temperature normal-mode computation and its
//!   equivalence with the product-basis transition route.
//!
//! Units are natural: ħ is an explicit parameter (default 1) and k_B is folded
//! into β.

// `!(x > 0.0)` is how domain checks reject NaN.
#![allow(clippy::neg_cmp_op_on_partial_ord)]

pub mod barton;
pub mod drive;
pub mod error;
pub mod kernel;
pub mod model;
pub mod perturbation;
pub mod propagator;
pub mod quadrature;
pub mod spectral;

pub use drive::DriveProfile;
pub use error::{CasimirError, Result};
pub use kernel::{CouplingDrive, FrictionResult, Vec3};
pub use model::{FockTruncation, LevelSystem, Oscillator, OscillatorPair, ThermalEnsemble};
