//! File formats, experiment runs and the `fairgame` command line on top of
//! [`fairgame_core`].

pub use fairgame_core as core;

pub mod analyze;
pub mod config;
pub mod error;
pub mod eval;
pub mod formats;
pub mod plot;
pub mod runner;
pub mod trajectory;
pub mod verify;

pub use error::{Error, Result};
