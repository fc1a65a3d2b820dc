//! Compilation to the trapped-ion native set.
//!
//! Native gates are `R(theta, phi) = exp(-i theta/2 (cos(phi) X + sin(phi) Y))`
//! and the Molmer-Sorensen gate, which the device parameterizes as
//! `exp(-i theta sigma_a sigma_b)` (no factor one half), so an `RXX(t)` here
//! becomes an MS gate with `theta = t / 2`. `RZ` is never executed: it is
//! pushed to the end of the circuit as a per-qubit phase frame. Every later
//! pulse on that qubit has its axis rotated by minus the accumulated frame,
//! which turns MS gates into phased MS gates `sigma_phi = cos(phi) X + sin(phi) Y`.
//! The residual frame is applied at readout.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use super::circuit::{Gate, GateList};
use super::state::{check_qubits, StateVector, DEFAULT_MAX_QUBITS};
use crate::error::{Error, Result};
use crate::ising::NativeTotals;

#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum NativeGate {
    R {
        qubit: usize,
        theta: f64,
        phi: f64,
    },
    Ms {
        a: usize,
        b: usize,
        theta: f64,
        phi_a: f64,
        phi_b: f64,
    },
}

#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct NativeCircuit {
    pub n: usize,
    pub gates: Vec<NativeGate>,
    /// Accumulated Z rotation per qubit, to be applied before readout.
    pub frame: Vec<f64>,
    pub virtual_z: usize,
}

impl NativeCircuit {
    pub fn totals(&self) -> NativeTotals {
        let ms = self
            .gates
            .iter()
            .filter(|g| matches!(g, NativeGate::Ms { .. }))
            .count();
        NativeTotals {
            single_qubit: self.gates.len() - ms,
            ms,
            virtual_z: self.virtual_z,
        }
    }

    pub fn physical_gates(&self) -> usize {
        self.gates.len()
    }
}

pub fn compile_native(gates: &GateList) -> NativeCircuit {
    let mut frame = vec![0.0; gates.n];
    let mut out = Vec::with_capacity(gates.len());
    let mut virtual_z = 0;
    for gate in gates.iter() {
        match *gate {
            Gate::Rz { qubit, theta } => {
                frame[qubit] += theta;
                virtual_z += 1;
            }
            Gate::Rx { qubit, theta } => out.push(NativeGate::R {
                qubit,
                theta,
                phi: -frame[qubit],
            }),
            Gate::Rxx { a, b, theta } => out.push(NativeGate::Ms {
                a,
                b,
                theta: theta / 2.0,
                phi_a: -frame[a],
                phi_b: -frame[b],
            }),
        }
    }
    NativeCircuit {
        n: gates.n,
        gates: out,
        frame,
        virtual_z,
    }
}

fn r_matrix(theta: f64, phi: f64) -> [[Complex64; 2]; 2] {
    let (s, c) = (theta / 2.0).sin_cos();
    let c = Complex64::new(c, 0.0);
    let mis = Complex64::new(0.0, -s);
    [
        [c, mis * Complex64::from_polar(1.0, -phi)],
        [mis * Complex64::from_polar(1.0, phi), c],
    ]
}

fn ms_matrix(theta: f64, phi_a: f64, phi_b: f64) -> [[Complex64; 4]; 4] {
    let (s, c) = theta.sin_cos();
    let z = Complex64::new(0.0, 0.0);
    let c = Complex64::new(c, 0.0);
    // sigma_phi[0][1] = e^{-i phi}, sigma_phi[1][0] = e^{i phi}.
    let off = |bit_a: usize, bit_b: usize| {
        let ea = if bit_a == 0 { -phi_a } else { phi_a };
        let eb = if bit_b == 0 { -phi_b } else { phi_b };
        Complex64::new(0.0, -s) * Complex64::from_polar(1.0, ea + eb)
    };
    let mut m = [[z; 4]; 4];
    for row in 0..4 {
        let (bit_a, bit_b) = (row >> 1, row & 1);
        m[row][row] = c;
        m[row][3 - row] = off(bit_a, bit_b);
    }
    m
}

/// Runs the native circuit on `|0...0>` and applies the residual frame, so
/// the result is directly comparable with [`super::simulate`] on the source circuit.
pub fn simulate_native(circuit: &NativeCircuit) -> Result<StateVector> {
    check_qubits(circuit.n, DEFAULT_MAX_QUBITS)?;
    let mut state = StateVector::zero(circuit.n);
    for gate in &circuit.gates {
        match *gate {
            NativeGate::R { qubit, theta, phi } => {
                if qubit >= circuit.n {
                    return Err(Error::QubitOutOfRange {
                        index: qubit,
                        n: circuit.n,
                    });
                }
                state.apply_1q(qubit, &r_matrix(theta, phi));
            }
            NativeGate::Ms {
                a,
                b,
                theta,
                phi_a,
                phi_b,
            } => {
                if a.max(b) >= circuit.n {
                    return Err(Error::QubitOutOfRange {
                        index: a.max(b),
                        n: circuit.n,
                    });
                }
                state.apply_2q(a, b, &ms_matrix(theta, phi_a, phi_b));
            }
        }
    }
    for (q, &angle) in circuit.frame.iter().enumerate() {
        state.apply_rz(q, angle);
    }
    Ok(state)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qaoa::simulate;

    #[test]
    fn rx_maps_to_r_with_zero_phase() {
        let gates = GateList {
            n: 1,
            gates: vec![Gate::Rx {
                qubit: 0,
                theta: 1.0,
            }],
        };
        let native = compile_native(&gates);
        assert_eq!(
            native.gates,
            vec![NativeGate::R {
                qubit: 0,
                theta: 1.0,
                phi: 0.0
            }]
        );
        assert_eq!(native.totals().single_qubit, 1);
    }

    #[test]
    fn rz_is_virtual() {
        let gates = GateList {
            n: 1,
            gates: vec![Gate::Rz {
                qubit: 0,
                theta: 0.9,
            }],
        };
        let native = compile_native(&gates);
        assert_eq!(native.physical_gates(), 0);
        assert_eq!(native.virtual_z, 1);
        let direct = simulate(&gates, 1).unwrap();
        assert!(simulate_native(&native).unwrap().max_deviation(&direct) < 1e-12);
    }

    #[test]
    fn ms_angle_uses_device_convention() {
        let gates = GateList {
            n: 2,
            gates: vec![Gate::Rxx {
                a: 0,
                b: 1,
                theta: 1.2,
            }],
        };
        let native = compile_native(&gates);
        match native.gates[0] {
            NativeGate::Ms { theta, .. } => assert!((theta - 0.6).abs() < 1e-15),
            other => panic!("unexpected {other:?}"),
        }
        let direct = simulate(&gates, 2).unwrap();
        assert!(simulate_native(&native).unwrap().max_deviation(&direct) < 1e-12);
    }

    #[test]
    fn frame_tracking_through_entanglers() {
        let gates = GateList {
            n: 3,
            gates: vec![
                Gate::Rx {
                    qubit: 0,
                    theta: 0.7,
                },
                Gate::Rz {
                    qubit: 0,
                    theta: 1.3,
                },
                Gate::Rz {
                    qubit: 2,
                    theta: -0.4,
                },
                Gate::Rxx {
                    a: 0,
                    b: 2,
                    theta: 0.9,
                },
                Gate::Rx {
                    qubit: 0,
                    theta: -1.1,
                },
                Gate::Rz {
                    qubit: 1,
                    theta: 2.2,
                },
                Gate::Rxx {
                    a: 1,
                    b: 0,
                    theta: 0.35,
                },
                Gate::Rz {
                    qubit: 0,
                    theta: 0.5,
                },
                Gate::Rx {
                    qubit: 2,
                    theta: 0.25,
                },
            ],
        };
        let native = compile_native(&gates);
        assert_eq!(native.virtual_z, 4);
        assert_eq!(native.physical_gates(), 5);
        let direct = simulate(&gates, 3).unwrap();
        assert!(simulate_native(&native).unwrap().max_deviation(&direct) < 1e-12);
    }
}
