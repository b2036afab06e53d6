//! Optimal integrity attacks against a Kalman filter, LQG controller and χ²
//! detector loop.
//!
//! The crate designs the nominal loop, builds the dynamics through which an
//! attack sequence biases the defender, synthesizes the finite-horizon attack
//! policy that trades estimation damage against detectability, evaluates the
//! resulting costs in closed form and checks them by paired simulation.

pub mod attack_dynamics;
pub mod bundled;
pub mod cli;
pub mod config;
pub mod csv_io;
pub mod error;
pub mod harness;
pub mod model_file;
pub mod numerics;
pub mod performance;
pub mod pipeline;
pub mod plant;
pub mod synthesis;

pub use error::{Error, Result};

#[cfg(doctest)]
mod book {
    #[doc = include_str!("../../../book/src/introduction.md")]
    mod introduction {}
    #[doc = include_str!("../../../book/src/model.md")]
    mod model {}
    #[doc = include_str!("../../../book/src/loop.md")]
    mod nominal_loop {}
    #[doc = include_str!("../../../book/src/attack_dynamics.md")]
    mod attack_dynamics {}
    #[doc = include_str!("../../../book/src/synthesis.md")]
    mod synthesis {}
    #[doc = include_str!("../../../book/src/tradeoff.md")]
    mod tradeoff {}
    #[doc = include_str!("../../../book/src/simulation.md")]
    mod simulation {}
    #[doc = include_str!("../../../book/src/cli.md")]
    mod cli {}
}
