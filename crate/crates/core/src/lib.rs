//! Warehouse shelf allocation as a QUBO, solved with QAOA on a built-in
//! statevector simulator and checked against exhaustive enumeration.
//!
//! Pipeline: [`warehouse::ProblemInstance`] → [`warehouse::build_qubo`] →
//! [`ising::qubo_to_ising`] → [`qaoa::build_circuit`] / [`qaoa::XBasisEvolver`]
//! → [`strategies`] for the classical outer loop, with [`oracle`] as ground truth.

pub mod bits;
pub mod error;
pub mod ising;
pub mod optimize;
pub mod oracle;
pub mod qaoa;
pub mod seed;
pub mod strategies;
pub mod warehouse;

pub use bits::Bitstring;
pub use error::{Error, Result};
pub use ising::{
    estimate_resources, ising_energy, qubo_to_ising, IsingHamiltonian, ResourceEstimate,
};
pub use qaoa::QaoaParams;
pub use warehouse::{
    build_layout, build_qubo, decode_assignment, qubo_energy, ProblemInstance, QuboModel,
};
