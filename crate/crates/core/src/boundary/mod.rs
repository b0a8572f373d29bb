//! General-angle simulability boundary: dephased bond states, their convex
//! decompositions, posterior sampling, and the landscape.

mod bond;
mod decompose;
mod landscape;
mod sampler;
mod sites;

pub use bond::*;
pub use decompose::*;
pub use landscape::*;
pub use sampler::*;
pub use sites::*;
