//! Exhaustive enumeration: the ground truth every QAOA number is compared to.

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::ising::{qubo_to_ising, IsingHamiltonian};
use crate::warehouse::{
    build_qubo_with, decode_assignment, AllocationReport, FcForm, ProblemInstance, QuboModel,
};

/// Largest register the oracle will enumerate (16 Mi states, 128 MiB of energies).
pub const MAX_ORACLE_QUBITS: usize = 24;

/// Energies closer than this to the minimum count as degenerate ground states.
pub const DEGENERACY_TOLERANCE: f64 = 1e-9;

/// All `2^n` energies, indexed like [`Bitstring::from_index`], plus the order
/// that sorts them ascending (ties broken by index).
#[derive(Clone, Debug)]
pub struct Spectrum {
    n: usize,
    energies: Vec<f64>,
    order: Vec<u32>,
}

fn check_size(n: usize) -> Result<()> {
    if n > MAX_ORACLE_QUBITS {
        return Err(Error::SpectrumTooLarge {
            n,
            max: MAX_ORACLE_QUBITS,
        });
    }
    Ok(())
}

impl Spectrum {
    pub fn from_energies(n: usize, energies: Vec<f64>) -> Result<Self> {
        check_size(n)?;
        if energies.len() != 1 << n {
            return Err(Error::LengthMismatch {
                expected: 1 << n,
                got: energies.len(),
            });
        }
        let mut order: Vec<u32> = (0..energies.len() as u32).collect();
        order.par_sort_unstable_by(|&a, &b| {
            energies[a as usize]
                .total_cmp(&energies[b as usize])
                .then(a.cmp(&b))
        });
        Ok(Self { n, energies, order })
    }

    pub fn from_hamiltonian(h: &IsingHamiltonian) -> Result<Self> {
        check_size(h.n)?;
        Self::from_energies(h.n, h.spectrum())
    }

    pub fn from_qubo(model: &QuboModel) -> Result<Self> {
        check_size(model.n)?;
        let energies = (0..1usize << model.n)
            .into_par_iter()
            .with_min_len(1 << 10)
            .map(|i| model.energy_of_index(i as u64))
            .collect();
        Self::from_energies(model.n, energies)
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn len(&self) -> usize {
        self.energies.len()
    }

    pub fn is_empty(&self) -> bool {
        self.energies.is_empty()
    }

    pub fn energies(&self) -> &[f64] {
        &self.energies
    }

    pub fn into_energies(self) -> Vec<f64> {
        self.energies
    }

    /// `(index, energy)` in ascending energy.
    pub fn sorted(&self) -> impl Iterator<Item = (u64, f64)> + '_ {
        self.order
            .iter()
            .map(|&i| (i as u64, self.energies[i as usize]))
    }

    pub fn min_energy(&self) -> f64 {
        self.energies[self.order[0] as usize]
    }

    pub fn max_energy(&self) -> f64 {
        self.energies[*self.order.last().unwrap() as usize]
    }

    /// Uniform average; what a fully depolarized register measures.
    pub fn mean(&self) -> f64 {
        self.energies.iter().sum::<f64>() / self.energies.len() as f64
    }

    pub fn ground_states(&self) -> Vec<u64> {
        let min = self.min_energy();
        self.sorted()
            .take_while(|&(_, e)| e - min <= DEGENERACY_TOLERANCE)
            .map(|(i, _)| i)
            .collect()
    }

    pub fn top(&self, k: usize) -> Vec<(u64, f64)> {
        self.sorted().take(k).collect()
    }
}

/// Total probability on `states` under an X-basis distribution.
pub fn ground_population(distribution: &[f64], states: &[u64]) -> f64 {
    states.iter().map(|&i| distribution[i as usize]).sum()
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct GroundState {
    pub bitstring: Bitstring,
    pub energy: f64,
    pub allocation: AllocationReport,
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct OracleReport {
    pub n_states: u64,
    pub min_energy: f64,
    pub max_energy: f64,
    pub mean_energy: f64,
    pub ground_bitstrings: Vec<Bitstring>,
    pub ground_states: Vec<GroundState>,
    /// Largest `|QUBO - Ising|` over the whole register.
    pub max_qubo_ising_deviation: f64,
}

/// Everything the oracle knows about one instance.
pub struct Oracle {
    pub instance: ProblemInstance,
    pub qubo: QuboModel,
    pub hamiltonian: IsingHamiltonian,
    pub spectrum: Spectrum,
}

impl Oracle {
    pub fn new(instance: &ProblemInstance, form: FcForm) -> Result<Self> {
        let qubo = build_qubo_with(instance, form)?;
        check_size(qubo.n)?;
        let hamiltonian = qubo_to_ising(&qubo);
        // The QUBO is the problem definition; the Ising form is checked against it.
        let spectrum = Spectrum::from_qubo(&qubo)?;
        Ok(Self {
            instance: instance.clone(),
            qubo,
            hamiltonian,
            spectrum,
        })
    }

    pub fn n(&self) -> usize {
        self.qubo.n
    }

    pub fn bitstring(&self, index: u64) -> Bitstring {
        Bitstring::from_index(index, self.n())
    }

    pub fn allocation(&self, index: u64) -> AllocationReport {
        let layout = self.qubo.layout.as_ref().expect("built from an instance");
        decode_assignment(&self.instance, layout, &self.bitstring(index)).expect("length matches")
    }

    pub fn max_qubo_ising_deviation(&self) -> f64 {
        let energies = self.spectrum.energies();
        (0..energies.len())
            .into_par_iter()
            .with_min_len(1 << 10)
            .map(|i| (self.hamiltonian.energy_of_index(i as u64) - energies[i]).abs())
            .reduce(|| 0.0, f64::max)
    }

    pub fn report(&self) -> OracleReport {
        let ground = self.spectrum.ground_states();
        let ground_states: Vec<GroundState> = ground
            .iter()
            .map(|&i| GroundState {
                bitstring: self.bitstring(i),
                energy: self.spectrum.energies()[i as usize],
                allocation: self.allocation(i),
            })
            .collect();
        OracleReport {
            n_states: self.spectrum.len() as u64,
            min_energy: self.spectrum.min_energy(),
            max_energy: self.spectrum.max_energy(),
            mean_energy: self.spectrum.mean(),
            ground_bitstrings: ground_states.iter().map(|g| g.bitstring.clone()).collect(),
            ground_states,
            max_qubo_ising_deviation: self.max_qubo_ising_deviation(),
        }
    }

    /// `bitstring,energy,feasible`, ascending in energy.
    pub fn write_csv<W: Write>(&self, mut out: W) -> Result<()> {
        let write = |out: &mut W, s: String| out.write_all(s.as_bytes()).map_err(Error::from);
        write(&mut out, "bitstring,energy,feasible\n".into())?;
        for (i, e) in self.spectrum.sorted() {
            write(
                &mut out,
                format!(
                    "{},{:.12},{}\n",
                    self.bitstring(i),
                    e,
                    self.allocation(i).feasible
                ),
            )?;
        }
        Ok(())
    }
}
