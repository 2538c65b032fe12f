//! Fair-altruistic games and Markov games.
//!
//! The crate is `no_std` and only needs an allocator. Everything touching the
//! file system, the command line or wall-clock time lives in the `fairgame`
//! companion crate.
//!
//! * [`game`]: normal-form games, social-dilemma classification, the
//!   log-rescaled altruistic extension and altruism levels.
//! * [`markov`]: tabular Markov games, exact values, the fair objective and
//!   its exact policy gradient.
//! * [`learning`]: Fair MAA2C and Fair MAPPO with tabular actors and critics.
//! * [`env`]: repeated matrix games, mini-CleanUp and random Markov games.
//! * [`metrics`]: Gini coefficient and rolling aggregates.
#![no_std]

extern crate alloc;

#[cfg(test)]
extern crate std;

pub mod env;
mod error;
pub mod game;
pub mod learning;
pub mod linalg;
pub mod markov;
pub mod metrics;
mod rng;

pub use error::{Error, Result};
pub use rng::seeded_stream;
