pub mod acceptance;
pub mod cli;
pub mod dynamics;
pub mod error;
pub mod gaussian;
pub mod measure;
pub mod rng;
pub mod snapshot;
pub mod spectral;
pub mod stats;
pub mod verification;

pub use error::{Result, SqeError};
