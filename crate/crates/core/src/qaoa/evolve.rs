//! Diagonal fast path.
//!
//! `U_H` is diagonal in the X basis, so the whole circuit can be run on X-basis
//! amplitudes: the problem layer becomes a phase `exp(-i gamma E_x)` per
//! outcome and the mixer `exp(i beta Z)` becomes `cos(beta) + i sin(beta) X`
//! per qubit. This is what studies and scans use; the gate-by-gate simulator
//! in `state` is the reference it is tested against.

use num_complex::Complex64;

use super::params::QaoaParams;
use super::state::StateVector;
use crate::ising::IsingHamiltonian;

#[derive(Clone, Debug)]
pub struct XBasisEvolver {
    n: usize,
    offset: f64,
    spectrum: Vec<f64>,
    /// Distinct energies and the level of every outcome; penalty Hamiltonians
    /// have few levels, so phases are computed once per level.
    levels: Vec<f64>,
    level_of: Vec<u32>,
}

fn energy_levels(spectrum: &[f64]) -> (Vec<f64>, Vec<u32>) {
    let mut levels: Vec<f64> = spectrum.to_vec();
    levels.sort_by(f64::total_cmp);
    levels.dedup();
    let level_of = spectrum
        .iter()
        .map(|e| {
            levels
                .binary_search_by(|l| l.total_cmp(e))
                .expect("present") as u32
        })
        .collect();
    (levels, level_of)
}

impl XBasisEvolver {
    pub fn new(h: &IsingHamiltonian) -> Self {
        Self::from_spectrum(h.n, h.offset, h.spectrum())
    }

    pub fn from_spectrum(n: usize, offset: f64, spectrum: Vec<f64>) -> Self {
        assert_eq!(spectrum.len(), 1 << n);
        let (levels, level_of) = energy_levels(&spectrum);
        Self {
            n,
            offset,
            spectrum,
            levels,
            level_of,
        }
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn spectrum(&self) -> &[f64] {
        &self.spectrum
    }

    /// X-basis amplitudes written into `amps`; the global phase differs from the
    /// gate-level simulation by `exp(-i offset sum_k gamma_k)`.
    pub fn evolve_into(&self, params: &QaoaParams, amps: &mut Vec<Complex64>) {
        let dim = 1usize << self.n;
        let start = Complex64::new((dim as f64).sqrt().recip(), 0.0);
        amps.clear();
        amps.resize(dim, start);
        let mut phases = Vec::new();
        for k in 0..params.layers() {
            let (gamma, beta) = params.layer(k);
            if self.levels.len() * 2 < dim {
                phases.clear();
                phases.extend(
                    self.levels
                        .iter()
                        .map(|&e| Complex64::from_polar(1.0, -gamma * e)),
                );
                for (a, &l) in amps.iter_mut().zip(&self.level_of) {
                    *a *= phases[l as usize];
                }
            } else {
                for (a, &e) in amps.iter_mut().zip(&self.spectrum) {
                    *a *= Complex64::from_polar(1.0, -gamma * e);
                }
            }
            mix(amps, self.n, beta);
        }
    }

    pub fn evolve(&self, params: &QaoaParams) -> Vec<Complex64> {
        let mut amps = Vec::new();
        self.evolve_into(params, &mut amps);
        amps
    }

    pub fn distribution(&self, params: &QaoaParams) -> Vec<f64> {
        self.evolve(params).iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn expected_energy(&self, params: &QaoaParams) -> f64 {
        let mut scratch = Vec::new();
        self.expected_energy_with(params, &mut scratch)
    }

    /// Same as [`XBasisEvolver::expected_energy`], reusing `scratch`.
    pub fn expected_energy_with(&self, params: &QaoaParams, scratch: &mut Vec<Complex64>) -> f64 {
        self.evolve_into(params, scratch);
        scratch
            .iter()
            .zip(&self.spectrum)
            .map(|(a, &e)| a.norm_sqr() * e)
            .sum()
    }

    /// Computational-basis state, phase-aligned with gate-level simulation.
    pub fn state(&self, params: &QaoaParams) -> StateVector {
        let mut amps = self.evolve(params);
        let phase = Complex64::from_polar(1.0, self.offset * params.gammas.iter().sum::<f64>());
        amps.iter_mut().for_each(|a| *a *= phase);
        let mut s = StateVector::from_amplitudes(amps).expect("power-of-two length");
        s.apply_hadamard_all();
        s
    }
}

fn mix(amps: &mut [Complex64], n: usize, beta: f64) {
    let (s, c) = beta.sin_cos();
    for q in 0..n {
        let stride = 1usize << q;
        for block in amps.chunks_exact_mut(stride << 1) {
            let (lo, hi) = block.split_at_mut(stride);
            for (x0, x1) in lo.iter_mut().zip(hi.iter_mut()) {
                // [[c, i s], [i s, c]] written out on real and imaginary parts.
                let (a0, a1) = (*x0, *x1);
                *x0 = Complex64::new(c * a0.re - s * a1.im, c * a0.im + s * a1.re);
                *x1 = Complex64::new(c * a1.re - s * a0.im, c * a1.im + s * a0.re);
            }
        }
    }
}

/// Applies `exp(-i gamma (H - offset))` to a computational-basis state by
/// rotating into the X basis, multiplying phases and rotating back.
pub fn apply_problem_phase(state: &mut StateVector, spectrum: &[f64], offset: f64, gamma: f64) {
    assert_eq!(state.amplitudes().len(), spectrum.len());
    state.apply_hadamard_all();
    for (a, &e) in state.amplitudes_mut().iter_mut().zip(spectrum) {
        *a *= Complex64::from_polar(1.0, -gamma * (e - offset));
    }
    state.apply_hadamard_all();
}
