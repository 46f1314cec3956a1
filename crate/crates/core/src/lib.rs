//! Local stability analysis of gradient play in two-player continuous games.
//!
//! The crate models two-player games with smooth costs, assembles the game
//! Jacobian `J = -Dg` of the stacked individual-gradient field
//! `g = (D1 f1, D2 f2)` at a fixed point, and analyzes it:
//!
//! - [`game`] — game carriers (quadratic games, cost oracles), gradient
//!   fields, Jacobian assembly, and fixed-point location;
//! - [`spectral`] — dense eigencomputations used everywhere else;
//! - [`decomp`] — structural splits of the Jacobian: potential/rotational
//!   coupling, symmetric/skew parts, the rotated-sorted block form, and
//!   compressed 2x2 matrices;
//! - [`qnr`] — sampling estimators for the numerical range and the quadratic
//!   numerical range;
//! - [`classify`] — Nash and Hurwitz tests, spectral bound regions for
//!   zero-sum and potential structure, robustness and instability
//!   certificates, and the aggregate equilibrium report;
//! - [`dynamics`] — discrete gradient play, continuous-time integration, and
//!   learning-rate-ratio sweeps.

pub mod classify;
pub mod decomp;
pub mod dynamics;
pub mod error;
pub mod game;
pub mod qnr;
pub mod spectral;

pub use error::{Error, Result};
pub use game::{GameJacobian, GradientField, JointAction, LearningConfig, QuadraticGame};
