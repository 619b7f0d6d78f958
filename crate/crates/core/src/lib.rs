pub mod analysis;
pub mod data;
pub mod error;
pub mod io;
pub mod nn;
pub mod rng;
pub mod sim;

pub use error::{Error, Result};
