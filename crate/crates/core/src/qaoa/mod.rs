//! Layered QAOA circuits on a dense statevector.
//!
//! Each layer applies the problem unitary `U_H(gamma) = exp(-i gamma (H - offset))`
//! and then the mixer `U_M(beta) = exp(i beta sum_i Z_i)`, starting from
//! `|0...0>`, the ground state of the mixer `-sum_i Z_i`. Readout is in the X
//! basis, where `H` is diagonal.

mod circuit;
mod energy;
mod evolve;
mod native;
mod noise;
mod params;
mod state;

pub use circuit::{build_circuit, Gate, GateList};
pub use energy::{expected_energy_exact, sample_energy, sample_energy_in, SampleResult};
pub use evolve::{apply_problem_phase, XBasisEvolver};
pub use native::{compile_native, simulate_native, NativeCircuit, NativeGate};
pub use noise::{simulate_noisy, NoiseConfig};
pub use params::QaoaParams;
pub use state::{
    check_qubits, simulate, simulate_with_limit, xbasis_distribution, StateVector,
    DEFAULT_MAX_QUBITS,
};
