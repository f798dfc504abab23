//! Gait generation and push recovery for a three-linear-pendulum biped.
//!
//! The crate is organised bottom-up: [`model`] holds the continuous dynamics
//! and their exact flow, [`gait`] solves for periodic gaits, [`stabilizer`]
//! synthesizes the constrained DLQR gain and the time-projection controller,
//! [`signal`] and [`augment`] model the estimation and hardware-side blocks,
//! and [`sim`] closes the loop around a simulated plant.

pub mod augment;
pub mod error;
pub mod gait;
pub mod io;
pub mod linalg;
pub mod model;
pub mod params;
pub mod selectors;
pub mod signal;
pub mod sim;
pub mod stabilizer;

pub use error::{Error, Result};
pub use gait::{gait_residual, nominal, solve_periodic, PeriodicGait};
pub use model::{
    build_continuous_dynamics, evolve, swap_support, transition, ContinuousDynamics, Transition,
};
pub use params::ModelParams;
pub use selectors::SelectorMatrices;
pub use stabilizer::{Controller, DlqrGain, ErrorDynamics, GainTable};
