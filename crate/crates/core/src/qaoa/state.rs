use num_complex::Complex64;

use super::circuit::{Gate, GateList};
use crate::error::{Error, Result};

pub const DEFAULT_MAX_QUBITS: usize = 24;

const ZERO: Complex64 = Complex64::new(0.0, 0.0);
const ONE: Complex64 = Complex64::new(1.0, 0.0);

pub type Matrix2 = [[Complex64; 2]; 2];
pub type Matrix4 = [[Complex64; 4]; 4];

/// Dense amplitudes in the computational basis; bit `i` of the index is qubit `i`.
#[derive(Clone, Debug, PartialEq)]
pub struct StateVector {
    n: usize,
    amps: Vec<Complex64>,
}

impl StateVector {
    /// `|0...0>`.
    pub fn zero(n: usize) -> Self {
        let mut amps = vec![ZERO; 1 << n];
        amps[0] = ONE;
        Self { n, amps }
    }

    /// `|+...+>`.
    pub fn plus(n: usize) -> Self {
        let a = Complex64::new((1u64 << n) as f64, 0.0).sqrt().inv();
        Self {
            n,
            amps: vec![a; 1 << n],
        }
    }

    pub fn from_amplitudes(amps: Vec<Complex64>) -> Result<Self> {
        let len = amps.len();
        if !len.is_power_of_two() {
            return Err(Error::InvalidParams(format!(
                "{len} amplitudes is not a power of two"
            )));
        }
        Ok(Self {
            n: len.trailing_zeros() as usize,
            amps,
        })
    }

    pub fn num_qubits(&self) -> usize {
        self.n
    }

    pub fn amplitudes(&self) -> &[Complex64] {
        &self.amps
    }

    pub fn amplitudes_mut(&mut self) -> &mut [Complex64] {
        &mut self.amps
    }

    pub fn into_amplitudes(self) -> Vec<Complex64> {
        self.amps
    }

    pub fn norm_sqr(&self) -> f64 {
        self.amps.iter().map(|a| a.norm_sqr()).sum()
    }

    pub fn normalize(&mut self) {
        let norm = self.norm_sqr().sqrt();
        if norm > 0.0 {
            self.amps.iter_mut().for_each(|a| *a /= norm);
        }
    }

    pub fn probabilities(&self) -> Vec<f64> {
        self.amps.iter().map(|a| a.norm_sqr()).collect()
    }

    pub fn max_deviation(&self, other: &Self) -> f64 {
        self.amps
            .iter()
            .zip(&other.amps)
            .map(|(a, b)| (a - b).norm())
            .fold(0.0, f64::max)
    }

    pub fn apply_1q(&mut self, q: usize, m: &Matrix2) {
        let stride = 1usize << q;
        for base in (0..self.amps.len()).step_by(stride << 1) {
            for i in base..base + stride {
                let (a0, a1) = (self.amps[i], self.amps[i + stride]);
                self.amps[i] = m[0][0] * a0 + m[0][1] * a1;
                self.amps[i + stride] = m[1][0] * a0 + m[1][1] * a1;
            }
        }
    }

    /// `m` acts on the local basis `|bit_a bit_b>` ordered `00, 01, 10, 11`.
    pub fn apply_2q(&mut self, a: usize, b: usize, m: &Matrix4) {
        assert_ne!(a, b, "two-qubit gate on a single qubit");
        let (ma, mb) = (1usize << a, 1usize << b);
        for i in 0..self.amps.len() {
            if i & ma != 0 || i & mb != 0 {
                continue;
            }
            let idx = [i, i | mb, i | ma, i | ma | mb];
            let v = idx.map(|k| self.amps[k]);
            for (r, &k) in idx.iter().enumerate() {
                self.amps[k] = m[r][0] * v[0] + m[r][1] * v[1] + m[r][2] * v[2] + m[r][3] * v[3];
            }
        }
    }

    pub fn apply_rx(&mut self, q: usize, theta: f64) {
        self.apply_1q(q, &rx_matrix(theta));
    }

    pub fn apply_rz(&mut self, q: usize, theta: f64) {
        let (lo, hi) = (
            Complex64::from_polar(1.0, -theta / 2.0),
            Complex64::from_polar(1.0, theta / 2.0),
        );
        let mask = 1usize << q;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            *amp *= if i & mask == 0 { lo } else { hi };
        }
    }

    pub fn apply_rxx(&mut self, a: usize, b: usize, theta: f64) {
        self.apply_2q(a, b, &rxx_matrix(theta));
    }

    pub fn apply_x(&mut self, q: usize) {
        let mask = 1usize << q;
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                self.amps.swap(i, i | mask);
            }
        }
    }

    pub fn apply_y(&mut self, q: usize) {
        let mask = 1usize << q;
        let i_unit = Complex64::i();
        for i in 0..self.amps.len() {
            if i & mask == 0 {
                let (a0, a1) = (self.amps[i], self.amps[i | mask]);
                self.amps[i] = -i_unit * a1;
                self.amps[i | mask] = i_unit * a0;
            }
        }
    }

    pub fn apply_z(&mut self, q: usize) {
        let mask = 1usize << q;
        for (i, amp) in self.amps.iter_mut().enumerate() {
            if i & mask != 0 {
                *amp = -*amp;
            }
        }
    }

    /// Hadamard on every qubit (unnormalized Walsh-Hadamard butterflies, then one rescale).
    pub fn apply_hadamard_all(&mut self) {
        let len = self.amps.len();
        let mut half = 1;
        while half < len {
            for base in (0..len).step_by(half << 1) {
                for i in base..base + half {
                    let (a, b) = (self.amps[i], self.amps[i + half]);
                    self.amps[i] = a + b;
                    self.amps[i + half] = a - b;
                }
            }
            half <<= 1;
        }
        let scale = (len as f64).sqrt().recip();
        self.amps.iter_mut().for_each(|a| *a *= scale);
    }

    pub fn apply_gate(&mut self, gate: &Gate) {
        match *gate {
            Gate::Rx { qubit, theta } => self.apply_rx(qubit, theta),
            Gate::Rz { qubit, theta } => self.apply_rz(qubit, theta),
            Gate::Rxx { a, b, theta } => self.apply_rxx(a, b, theta),
        }
    }

    pub fn apply_gates(&mut self, gates: &GateList) -> Result<()> {
        check_gates(gates, self.n)?;
        for g in gates.iter() {
            self.apply_gate(g);
        }
        Ok(())
    }
}

pub fn rx_matrix(theta: f64) -> Matrix2 {
    let (s, c) = (theta / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    let ms = Complex64::new(0.0, -s);
    [[c, ms], [ms, c]]
}

pub fn rxx_matrix(theta: f64) -> Matrix4 {
    let (s, c) = (theta / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    let ms = Complex64::new(0.0, -s);
    [
        [c, ZERO, ZERO, ms],
        [ZERO, c, ms, ZERO],
        [ZERO, ms, c, ZERO],
        [ms, ZERO, ZERO, c],
    ]
}

/// Refuses registers whose statevector would exceed `max` qubits.
pub fn check_qubits(n: usize, max: usize) -> Result<()> {
    if n > max {
        let bytes = (1u128 << n.min(127)) * std::mem::size_of::<Complex64>() as u128;
        return Err(Error::TooManyQubits { n, max, bytes });
    }
    Ok(())
}

fn check_gates(gates: &GateList, n: usize) -> Result<()> {
    if let Some(g) = gates.iter().find(|g| g.max_qubit() >= n) {
        return Err(Error::QubitOutOfRange {
            index: g.max_qubit(),
            n,
        });
    }
    Ok(())
}

/// Runs `gates` on `|0...0>` of `n` qubits.
pub fn simulate(gates: &GateList, n: usize) -> Result<StateVector> {
    simulate_with_limit(gates, n, DEFAULT_MAX_QUBITS)
}

pub fn simulate_with_limit(gates: &GateList, n: usize, max_qubits: usize) -> Result<StateVector> {
    check_qubits(n, max_qubits)?;
    let mut state = StateVector::zero(n);
    state.apply_gates(gates)?;
    Ok(state)
}

/// Probabilities of the `{|+>, |->}^n` outcomes; bit `i` set means qubit `i` is `|->`.
pub fn xbasis_distribution(state: &StateVector) -> Vec<f64> {
    let mut rotated = state.clone();
    rotated.apply_hadamard_all();
    rotated.probabilities()
}
