pub mod boundary;
pub mod census;
pub mod error;
pub mod injection;
pub mod lattice;
pub mod noise;
pub mod stabilizer;
pub mod thresholds;

pub use error::{CqcError, Result};
