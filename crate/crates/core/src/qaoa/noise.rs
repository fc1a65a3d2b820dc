//! Monte-Carlo depolarizing noise.
//!
//! After every single-qubit gate a uniformly random non-identity Pauli hits the
//! addressed qubit with probability `p1`; after every two-qubit gate one of the
//! 15 non-identity two-qubit Paulis hits the pair with probability `p2`.

use rand::Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use super::circuit::{Gate, GateList};
use super::state::{check_qubits, xbasis_distribution, StateVector, DEFAULT_MAX_QUBITS};
use crate::error::{Error, Result};
use crate::seed::task_rng;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub struct NoiseConfig {
    pub p1: f64,
    pub p2: f64,
    pub trajectories: usize,
    pub seed: u64,
}

impl Default for NoiseConfig {
    fn default() -> Self {
        Self {
            p1: 3.4e-4,
            p2: 1.3e-2,
            trajectories: 1000,
            seed: 0,
        }
    }
}

impl NoiseConfig {
    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.p1) || !(0.0..=1.0).contains(&self.p2) {
            return Err(Error::InvalidParams(
                "depolarizing probabilities must lie in [0, 1]".into(),
            ));
        }
        if self.trajectories == 0 {
            return Err(Error::InvalidParams("need at least one trajectory".into()));
        }
        Ok(())
    }
}

/// 0 = I, 1 = X, 2 = Y, 3 = Z.
fn apply_pauli(state: &mut StateVector, q: usize, pauli: u8) {
    match pauli {
        1 => state.apply_x(q),
        2 => state.apply_y(q),
        3 => state.apply_z(q),
        _ => {}
    }
}

fn run_trajectory<R: Rng>(gates: &GateList, n: usize, cfg: &NoiseConfig, rng: &mut R) -> Vec<f64> {
    let mut state = StateVector::zero(n);
    for gate in gates.iter() {
        state.apply_gate(gate);
        match *gate {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } => {
                if cfg.p1 > 0.0 && rng.gen::<f64>() < cfg.p1 {
                    apply_pauli(&mut state, qubit, rng.gen_range(1..4));
                }
            }
            Gate::Rxx { a, b, .. } => {
                if cfg.p2 > 0.0 && rng.gen::<f64>() < cfg.p2 {
                    let k: u8 = rng.gen_range(1..16);
                    apply_pauli(&mut state, a, k / 4);
                    apply_pauli(&mut state, b, k % 4);
                }
            }
        }
    }
    xbasis_distribution(&state)
}

const CHUNK: usize = 16;

/// Trajectory-averaged X-basis distribution. Bit-reproducible for a given
/// seed regardless of thread count.
pub fn simulate_noisy(gates: &GateList, n: usize, cfg: &NoiseConfig) -> Result<Vec<f64>> {
    cfg.validate()?;
    check_qubits(n, DEFAULT_MAX_QUBITS)?;
    if let Some(g) = gates.iter().find(|g| g.max_qubit() >= n) {
        return Err(Error::QubitOutOfRange {
            index: g.max_qubit(),
            n,
        });
    }
    let chunks: Vec<usize> = (0..cfg.trajectories).step_by(CHUNK).collect();
    let partials: Vec<Vec<f64>> = chunks
        .par_iter()
        .map(|&start| {
            let mut acc = vec![0.0; 1 << n];
            for t in start..(start + CHUNK).min(cfg.trajectories) {
                let mut rng = task_rng(cfg.seed, t as u64);
                for (a, p) in acc.iter_mut().zip(run_trajectory(gates, n, cfg, &mut rng)) {
                    *a += p;
                }
            }
            acc
        })
        .collect();
    let mut total = vec![0.0; 1 << n];
    for part in partials {
        for (t, p) in total.iter_mut().zip(part) {
            *t += p;
        }
    }
    let scale = (cfg.trajectories as f64).recip();
    total.iter_mut().for_each(|t| *t *= scale);
    Ok(total)
}
