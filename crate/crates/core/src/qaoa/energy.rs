use std::collections::BTreeMap;

use rand::distributions::{Distribution, WeightedIndex};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use super::state::{xbasis_distribution, StateVector};
use crate::error::{Error, Result};
use crate::ising::IsingHamiltonian;

fn check_size(state: &StateVector, h: &IsingHamiltonian) -> Result<()> {
    if state.num_qubits() != h.n {
        return Err(Error::LengthMismatch {
            expected: h.n,
            got: state.num_qubits(),
        });
    }
    Ok(())
}

/// `<psi|H|psi>` from the X-basis populations.
pub fn expected_energy_exact(state: &StateVector, h: &IsingHamiltonian) -> Result<f64> {
    check_size(state, h)?;
    Ok(xbasis_distribution(state)
        .iter()
        .zip(h.spectrum())
        .map(|(p, e)| p * e)
        .sum())
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct SampleResult {
    pub estimate: f64,
    pub shots: usize,
    /// X-basis outcome index (bit `i` = qubit `i` measured `|->`) to count.
    pub counts: BTreeMap<u64, usize>,
}

/// Draws `shots` X-basis outcomes and averages their energies.
pub fn sample_energy(
    state: &StateVector,
    h: &IsingHamiltonian,
    shots: usize,
    seed: u64,
) -> Result<SampleResult> {
    check_size(state, h)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    sample_energy_in(&xbasis_distribution(state), &h.spectrum(), shots, &mut rng)
}

/// Sampling on a precomputed distribution and spectrum.
pub fn sample_energy_in<R: Rng>(
    distribution: &[f64],
    spectrum: &[f64],
    shots: usize,
    rng: &mut R,
) -> Result<SampleResult> {
    if shots == 0 {
        return Err(Error::ZeroShots);
    }
    let sampler = WeightedIndex::new(distribution)
        .map_err(|e| Error::InvalidParams(format!("bad distribution: {e}")))?;
    let mut counts = BTreeMap::new();
    let mut total = 0.0;
    for _ in 0..shots {
        let k = sampler.sample(rng);
        total += spectrum[k];
        *counts.entry(k as u64).or_insert(0) += 1;
    }
    Ok(SampleResult {
        estimate: total / shots as f64,
        shots,
        counts,
    })
}
