//! X-basis Ising form of a QUBO and gate-resource counts.
//!
//! Each binary variable maps to `x_i = (1 - s_i) / 2` where `s_i = +1` is the
//! `|+>` eigenstate of `sigma_x` on qubit `i`. The resulting Hamiltonian
//! `offset + sum_i h_i X_i + sum_{i<j} J_ij X_i X_j` is diagonal in the
//! `{|+>, |->}^n` basis.

use std::collections::BTreeMap;
use std::fmt::Write as _;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::bits::Bitstring;
use crate::error::{Error, Result};
use crate::warehouse::{build_qubo, slack_bits_for, Penalties, ProblemInstance, QuboModel};

pub const DEFAULT_DROP_THRESHOLD: f64 = 1e-12;

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct IsingHamiltonian {
    pub n: usize,
    pub couplings: BTreeMap<(usize, usize), f64>,
    pub fields: BTreeMap<usize, f64>,
    pub offset: f64,
}

impl IsingHamiltonian {
    /// An empty Hamiltonian, constant `offset` on `n` qubits.
    pub fn constant(n: usize, offset: f64) -> Self {
        Self {
            n,
            couplings: BTreeMap::new(),
            fields: BTreeMap::new(),
            offset,
        }
    }

    pub fn energy(&self, spins: &[i8]) -> Result<f64> {
        if spins.len() != self.n {
            return Err(Error::LengthMismatch {
                expected: self.n,
                got: spins.len(),
            });
        }
        if let Some(&bad) = spins.iter().find(|&&s| s != 1 && s != -1) {
            return Err(Error::InvalidSpin(bad));
        }
        let mut e = self.offset;
        for (&i, &h) in &self.fields {
            e += h * spins[i] as f64;
        }
        for (&(i, j), &jv) in &self.couplings {
            e += jv * (spins[i] * spins[j]) as f64;
        }
        Ok(e)
    }

    pub fn energy_of_bits(&self, bits: &Bitstring) -> Result<f64> {
        self.energy(&bits.to_spins())
    }

    /// Energy of the X-basis state whose bit `i` is 1 when qubit `i` is `|->`.
    pub fn energy_of_index(&self, index: u64) -> f64 {
        let s = |i: usize| if (index >> i) & 1 == 1 { -1.0 } else { 1.0 };
        let mut e = self.offset;
        for (&i, &h) in &self.fields {
            e += h * s(i);
        }
        for (&(i, j), &jv) in &self.couplings {
            e += jv * s(i) * s(j);
        }
        e
    }

    /// Diagonal of the Hamiltonian over all `2^n` X-basis states, indexed as
    /// in [`IsingHamiltonian::energy_of_index`].
    pub fn spectrum(&self) -> Vec<f64> {
        assert!(
            self.n < 48,
            "spectrum of {} qubits is not representable",
            self.n
        );
        let fields: Vec<_> = self.fields.iter().map(|(&i, &h)| (i, h)).collect();
        let couplings: Vec<_> = self.couplings.iter().map(|(&p, &j)| (p, j)).collect();
        (0..1usize << self.n)
            .into_par_iter()
            .with_min_len(1 << 10)
            .map(|index| {
                let index = index as u64;
                let s = |i: usize| if (index >> i) & 1 == 1 { -1.0 } else { 1.0 };
                let mut e = self.offset;
                for &(i, h) in &fields {
                    e += h * s(i);
                }
                for &((i, j), jv) in &couplings {
                    e += jv * s(i) * s(j);
                }
                e
            })
            .collect()
    }

    /// Maps back to a QUBO with `s_i = 1 - 2 x_i`.
    pub fn to_qubo(&self) -> QuboModel {
        let mut q = QuboModel::new(self.n);
        q.constant = self.offset;
        for (&i, &h) in &self.fields {
            q.constant += h;
            q.add_linear(i, -2.0 * h);
        }
        for (&(i, j), &jv) in &self.couplings {
            q.constant += jv;
            q.add_linear(i, -2.0 * jv);
            q.add_linear(j, -2.0 * jv);
            q.add_quadratic(i, j, 4.0 * jv);
        }
        q
    }

    /// `offset`, then `h i value` and `J i j value` lines.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        writeln!(out, "n {}", self.n).unwrap();
        writeln!(out, "offset {:.17e}", self.offset).unwrap();
        for (&i, &h) in &self.fields {
            writeln!(out, "h {i} {h:.17e}").unwrap();
        }
        for (&(i, j), &jv) in &self.couplings {
            writeln!(out, "J {i} {j} {jv:.17e}").unwrap();
        }
        out
    }

    pub fn from_text(text: &str) -> Result<Self> {
        let mut n = None;
        let mut offset = 0.0;
        let mut fields = BTreeMap::new();
        let mut couplings = BTreeMap::new();
        for (lineno, line) in text.lines().enumerate() {
            let err = |msg: &str| Error::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            let num = |k: usize| -> Result<f64> {
                toks.get(k)
                    .ok_or_else(|| err("missing value"))?
                    .parse()
                    .map_err(|_| err("bad number"))
            };
            let idx = |k: usize| -> Result<usize> {
                toks.get(k)
                    .ok_or_else(|| err("missing index"))?
                    .parse()
                    .map_err(|_| err("bad index"))
            };
            match toks.first() {
                None => continue,
                Some(t) if t.starts_with('#') => continue,
                Some(&"n") => n = Some(idx(1)?),
                Some(&"offset") => offset = num(1)?,
                Some(&"h") => {
                    fields.insert(idx(1)?, num(2)?);
                }
                Some(&"J") => {
                    let (i, j) = (idx(1)?, idx(2)?);
                    if i == j {
                        return Err(err("coupling on a single qubit"));
                    }
                    couplings.insert((i.min(j), i.max(j)), num(3)?);
                }
                Some(other) => return Err(err(&format!("unknown record {other:?}"))),
            }
        }
        let highest = fields
            .keys()
            .copied()
            .chain(couplings.keys().map(|&(_, j)| j))
            .max()
            .map_or(0, |m| m + 1);
        let n = n.unwrap_or(highest);
        if highest > n {
            return Err(Error::QubitOutOfRange {
                index: highest - 1,
                n,
            });
        }
        Ok(Self {
            n,
            couplings,
            fields,
            offset,
        })
    }
}

pub fn ising_energy(h: &IsingHamiltonian, spins: &[i8]) -> Result<f64> {
    h.energy(spins)
}

pub fn qubo_to_ising(model: &QuboModel) -> IsingHamiltonian {
    qubo_to_ising_with_threshold(model, DEFAULT_DROP_THRESHOLD)
}

pub fn qubo_to_ising_with_threshold(model: &QuboModel, threshold: f64) -> IsingHamiltonian {
    let mut offset = model.constant;
    let mut fields = vec![0.0; model.n];
    let mut couplings = BTreeMap::new();
    for (i, &a) in model.linear.iter().enumerate() {
        offset += a / 2.0;
        fields[i] -= a / 2.0;
    }
    for (&(i, j), &q) in &model.quadratic {
        offset += q / 4.0;
        fields[i] -= q / 4.0;
        fields[j] -= q / 4.0;
        if q.abs() / 4.0 > threshold {
            couplings.insert((i, j), q / 4.0);
        }
    }
    let fields = fields
        .into_iter()
        .enumerate()
        .filter(|(_, h)| h.abs() > threshold)
        .collect();
    IsingHamiltonian {
        n: model.n,
        couplings,
        fields,
        offset,
    }
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct NativeTotals {
    /// `R(theta, phi)` single-qubit pulses.
    pub single_qubit: usize,
    /// Molmer-Sorensen `R_XX` gates.
    pub ms: usize,
    /// Z rotations absorbed into the phase frame.
    pub virtual_z: usize,
}

#[derive(Clone, Debug, PartialEq, Eq, Serialize, Deserialize)]
pub struct ResourceEstimate {
    pub shelves: usize,
    pub products: usize,
    pub capacity: u32,
    pub layers: usize,
    pub n_qubits: usize,
    /// `M (P + 1 + log2 L)`; only defined when `L` is a power of two.
    pub closed_form_qubits: Option<usize>,
    /// Set when `L` is not a power of two and `ceil(log2(L + 1))` slack bits were used.
    pub formula_deviation: bool,
    /// Counts come from a constructed Hamiltonian, as opposed to a structural count.
    pub exact: bool,
    pub n_rx_per_layer: usize,
    pub n_rxx_per_layer: usize,
    pub n_rz_per_layer: usize,
    pub total_rx: usize,
    pub total_rxx: usize,
    pub total_rz: usize,
    pub native: NativeTotals,
}

impl ResourceEstimate {
    pub fn total_gates(&self) -> usize {
        self.total_rx + self.total_rxx + self.total_rz
    }
}

/// Largest number of coupling pairs for which the Hamiltonian is built exactly.
const EXACT_PAIR_LIMIT: usize = 2_000_000;

/// Counts for `shelves` shelves of capacity `capacity` holding `products`
/// unit-weight products, over `layers` QAOA layers.
pub fn estimate_resources(
    shelves: usize,
    products: usize,
    capacity: u32,
    layers: usize,
) -> Result<ResourceEstimate> {
    if shelves == 0 || products == 0 || capacity == 0 || layers == 0 {
        return Err(Error::InvalidParams(
            "shelves, products, capacity and layers must all be at least 1".into(),
        ));
    }
    let bits = slack_bits_for(capacity);
    let n_qubits = shelves * (products + bits);
    let power_of_two = capacity.is_power_of_two();
    let closed_form_qubits =
        power_of_two.then(|| shelves * (products + 1 + capacity.trailing_zeros() as usize));

    // Pairs the encoding can couple: products sharing a shelf, copies of one
    // product on different shelves, products with that shelf's slack bits,
    // and slack bits of the same shelf.
    let structural_pairs = shelves * products * (products - 1) / 2
        + products * shelves * (shelves - 1) / 2
        + shelves * products * bits
        + shelves * bits * (bits - 1) / 2;

    let (n_rx, n_rxx, exact) = if structural_pairs <= EXACT_PAIR_LIMIT {
        let lambda = (0..products)
            .map(|a| {
                (0..products)
                    .map(|b| if a == b { 0.0 } else { 0.5 })
                    .collect()
            })
            .collect();
        let inst = ProblemInstance::new(
            vec![capacity; shelves],
            vec![1; products],
            lambda,
            Penalties::default(),
        )?;
        let h = qubo_to_ising(&build_qubo(&inst)?);
        (h.fields.len(), h.couplings.len(), true)
    } else {
        (n_qubits, structural_pairs, false)
    };
    let n_rz = n_qubits;
    Ok(ResourceEstimate {
        shelves,
        products,
        capacity,
        layers,
        n_qubits,
        closed_form_qubits,
        formula_deviation: !power_of_two,
        exact,
        n_rx_per_layer: n_rx,
        n_rxx_per_layer: n_rxx,
        n_rz_per_layer: n_rz,
        total_rx: n_rx * layers,
        total_rxx: n_rxx * layers,
        total_rz: n_rz * layers,
        native: NativeTotals {
            single_qubit: n_rx * layers,
            ms: n_rxx * layers,
            virtual_z: n_rz * layers,
        },
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::warehouse::build_qubo;

    #[test]
    fn single_variable() {
        let mut q = QuboModel::new(1);
        q.add_linear(0, 1.0);
        let h = qubo_to_ising(&q);
        assert_eq!(h.fields.get(&0), Some(&-0.5));
        assert_eq!(h.offset, 0.5);
        assert!(h.couplings.is_empty());
    }

    #[test]
    fn product_of_two() {
        let mut q = QuboModel::new(2);
        q.add_quadratic(0, 1, 1.0);
        let h = qubo_to_ising(&q);
        assert_eq!(h.couplings.get(&(0, 1)), Some(&0.25));
        assert_eq!(h.fields.get(&0), Some(&-0.25));
        assert_eq!(h.fields.get(&1), Some(&-0.25));
        assert_eq!(h.offset, 0.25);
    }

    #[test]
    fn reference_energies() {
        let q = build_qubo(&ProblemInstance::three_products_two_shelves()).unwrap();
        let h = qubo_to_ising(&q);
        assert!((h.energy(&[1; 10]).unwrap() - 32.0).abs() < 1e-9);
        let ground: Bitstring = "1001100100".parse().unwrap();
        assert!((h.energy_of_bits(&ground).unwrap() - 0.2).abs() < 1e-9);
    }

    #[test]
    fn constant_hamiltonian() {
        let h = IsingHamiltonian::constant(3, 5.0);
        assert_eq!(h.energy(&[1, -1, 1]).unwrap(), 5.0);
        assert_eq!(h.spectrum(), vec![5.0; 8]);
    }

    #[test]
    fn energy_rejects_bad_input() {
        let h = IsingHamiltonian::constant(2, 0.0);
        assert!(matches!(h.energy(&[1]), Err(Error::LengthMismatch { .. })));
        assert!(matches!(h.energy(&[1, 0]), Err(Error::InvalidSpin(0))));
    }

    #[test]
    fn text_round_trip() {
        let q = build_qubo(&ProblemInstance::three_products_two_shelves()).unwrap();
        let h = qubo_to_ising(&q);
        let back = IsingHamiltonian::from_text(&h.to_text()).unwrap();
        assert_eq!(back, h);
        assert!(IsingHamiltonian::from_text("J 1 1 0.5").is_err());
        assert!(IsingHamiltonian::from_text("K 1").is_err());
    }

    #[test]
    fn reverse_mapping_is_idempotent() {
        let q = build_qubo(&ProblemInstance::three_products_two_shelves()).unwrap();
        let h = qubo_to_ising(&q);
        let again = qubo_to_ising(&h.to_qubo());
        assert_eq!(
            again.couplings.keys().collect::<Vec<_>>(),
            h.couplings.keys().collect::<Vec<_>>()
        );
        assert_eq!(
            again.fields.keys().collect::<Vec<_>>(),
            h.fields.keys().collect::<Vec<_>>()
        );
        for (k, v) in &h.couplings {
            assert!((again.couplings[k] - v).abs() < 1e-12);
        }
        for (k, v) in &h.fields {
            assert!((again.fields[k] - v).abs() < 1e-12);
        }
        assert!((again.offset - h.offset).abs() < 1e-12);
    }

    #[test]
    fn qubit_counts() {
        let small = estimate_resources(2, 3, 2, 1).unwrap();
        assert_eq!(small.n_qubits, 10);
        assert_eq!(small.closed_form_qubits, Some(10));
        let large = estimate_resources(100, 15, 8, 1).unwrap();
        assert_eq!(large.n_qubits, 1900);
        assert_eq!(large.closed_form_qubits, Some(1900));
        assert!(large.exact);
    }

    #[test]
    fn non_power_of_two_capacity_is_flagged() {
        let est = estimate_resources(2, 3, 3, 1).unwrap();
        assert!(est.formula_deviation);
        assert_eq!(est.closed_form_qubits, None);
        assert_eq!(est.n_qubits, 2 * (3 + 2));
    }

    #[test]
    fn reference_per_layer_counts() {
        // Regression baseline from the constructed 10-qubit Hamiltonian.
        let est = estimate_resources(2, 3, 2, 1).unwrap();
        let q = build_qubo(&ProblemInstance::three_products_two_shelves()).unwrap();
        let h = qubo_to_ising(&q);
        assert_eq!(est.n_rxx_per_layer, h.couplings.len());
        assert_eq!(est.n_rx_per_layer, h.fields.len());
        assert_eq!(est.n_rxx_per_layer, 23);
        assert_eq!(est.n_rx_per_layer, 10);
        assert_eq!(est.n_rz_per_layer, 10);
    }

    #[test]
    fn structural_pair_count_matches_exact_build() {
        for &(m, p, l) in &[(2, 3, 2), (3, 4, 4), (4, 2, 8), (100, 15, 8)] {
            let est = estimate_resources(m, p, l, 1).unwrap();
            let bits = slack_bits_for(l);
            let structural = m * p * (p - 1) / 2
                + p * m * (m - 1) / 2
                + m * p * bits
                + m * bits * (bits - 1) / 2;
            assert_eq!(est.n_rxx_per_layer, structural, "M={m} P={p} L={l}");
        }
    }

    #[test]
    fn doubling_layers_doubles_totals() {
        let one = estimate_resources(2, 3, 2, 3).unwrap();
        let two = estimate_resources(2, 3, 2, 6).unwrap();
        assert_eq!(two.total_gates(), 2 * one.total_gates());
        assert_eq!(two.total_rxx, 2 * one.total_rxx);
        assert_eq!(two.native.ms, 2 * one.native.ms);
    }
}
