pub mod aead;
pub mod eacirc;
pub mod error;
pub mod harness;
pub mod rng;
pub mod sac;
pub mod stats;
pub mod stream;

pub use error::{Error, Result};
