//! Simulation, protocols and pulse compilation for globally controlled
//! one-dimensional qubit chains.
//!
//! Physical indices run `0..n`; even indices form the A sublattice, odd ones
//! the B sublattice. Computational qubits sit on every third A cell (physical
//! index `6u`), and a control unit (CU) is a single B cell in state 1.

pub mod chain;
pub mod compiler;
pub mod dense;
pub mod error;
pub mod isa;
pub mod layout;
pub mod noise;
pub mod program_io;
pub mod protocols;
pub mod redundant;
pub mod unitary;

pub use chain::{Cell, ChainState, QubitChain};
pub use dense::DenseState;
pub use error::{Error, Result};
pub use isa::{Instr, Macro, PulseInstruction, PulseProgram};
pub use layout::{Layout, LayoutConfig, SwitchingStation};
pub use num_complex::Complex64 as C64;
pub use unitary::Unitary1;

/// Random source shared by every simulator.
pub type SimRng = rand_chacha::ChaCha8Rng;

/// Outcome probabilities within this distance of 0 or 1 are taken as
/// deterministic and consume no random draw.
pub const DETERMINISTIC_TOL: f64 = 1e-9;

/// Seeded simulator RNG.
pub fn rng_from_seed(seed: u64) -> SimRng {
    use rand::SeedableRng;
    SimRng::seed_from_u64(seed)
}
