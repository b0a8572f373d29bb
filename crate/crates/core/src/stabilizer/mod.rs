//! Stabilizer simulation of the noisy commuting circuit, with a dense
//! reference simulator and the postselected memory experiment.

pub mod circuit;
pub mod dense;
pub mod memory;
pub mod tableau;

pub use circuit::{
    compile_randomized_inputs, compile_with_masks, octahedron_mixture, parity_statistics, pauli_mixture,
    run_noisy_circuit, Circuit, CircuitRun, CompiledInputs, Gate, InputState, Op, ParityStats, Shot,
};
pub use dense::{dense_oracle, oracle_check, random_clifford_trajectory, x_marginals, OracleCheck};
pub use memory::{postselected_memory_experiment, MemoryMethod, MemoryResult};
pub use tableau::{Basis, Pauli, StabilizerTableau};

use crate::error::Result;

/// Create a tableau in `|0…0⟩` or `|+…+⟩`.
pub fn init_tableau(n: usize, basis: Basis) -> Result<StabilizerTableau> {
    StabilizerTableau::new(n, basis)
}
