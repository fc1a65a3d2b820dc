use std::fmt::{self, Write as _};

use serde::{Deserialize, Serialize};

use super::params::QaoaParams;
use crate::error::{Error, Result};
use crate::ising::IsingHamiltonian;

/// `RX(t) = exp(-i t X / 2)`, `RZ(t) = exp(-i t Z / 2)`, `RXX(t) = exp(-i t X X / 2)`.
#[derive(Clone, Copy, Debug, PartialEq, Serialize, Deserialize)]
pub enum Gate {
    Rx { qubit: usize, theta: f64 },
    Rz { qubit: usize, theta: f64 },
    Rxx { a: usize, b: usize, theta: f64 },
}

impl Gate {
    pub fn max_qubit(&self) -> usize {
        match *self {
            Gate::Rx { qubit, .. } | Gate::Rz { qubit, .. } => qubit,
            Gate::Rxx { a, b, .. } => a.max(b),
        }
    }

    pub fn is_two_qubit(&self) -> bool {
        matches!(self, Gate::Rxx { .. })
    }
}

impl fmt::Display for Gate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            Gate::Rx { qubit, theta } => write!(f, "RX {qubit} {theta:.16e}"),
            Gate::Rz { qubit, theta } => write!(f, "RZ {qubit} {theta:.16e}"),
            Gate::Rxx { a, b, theta } => write!(f, "RXX {a} {b} {theta:.16e}"),
        }
    }
}

#[derive(Clone, Debug, Default, PartialEq, Serialize, Deserialize)]
pub struct GateList {
    pub n: usize,
    pub gates: Vec<Gate>,
}

impl GateList {
    pub fn new(n: usize) -> Self {
        Self {
            n,
            gates: Vec::new(),
        }
    }

    pub fn push(&mut self, gate: Gate) {
        self.gates.push(gate);
    }

    pub fn len(&self) -> usize {
        self.gates.len()
    }

    pub fn is_empty(&self) -> bool {
        self.gates.is_empty()
    }

    pub fn iter(&self) -> std::slice::Iter<'_, Gate> {
        self.gates.iter()
    }

    /// `(rx, rz, rxx)` counts.
    pub fn counts(&self) -> (usize, usize, usize) {
        self.gates.iter().fold((0, 0, 0), |(x, z, xx), g| match g {
            Gate::Rx { .. } => (x + 1, z, xx),
            Gate::Rz { .. } => (x, z + 1, xx),
            Gate::Rxx { .. } => (x, z, xx + 1),
        })
    }

    /// One gate per line, angles with 17 significant digits.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for g in &self.gates {
            writeln!(out, "{g}").unwrap();
        }
        out
    }

    pub fn from_text(n: usize, text: &str) -> Result<Self> {
        let mut list = Self::new(n);
        for (lineno, line) in text.lines().enumerate() {
            let err = |msg: &str| Error::Parse {
                line: lineno + 1,
                msg: msg.to_string(),
            };
            let toks: Vec<&str> = line.split_whitespace().collect();
            if toks.is_empty() {
                continue;
            }
            let idx = |k: usize| -> Result<usize> {
                toks.get(k)
                    .ok_or_else(|| err("missing qubit"))?
                    .parse()
                    .map_err(|_| err("bad qubit"))
            };
            let angle = |k: usize| -> Result<f64> {
                toks.get(k)
                    .ok_or_else(|| err("missing angle"))?
                    .parse()
                    .map_err(|_| err("bad angle"))
            };
            let gate = match toks[0] {
                "RX" => Gate::Rx {
                    qubit: idx(1)?,
                    theta: angle(2)?,
                },
                "RZ" => Gate::Rz {
                    qubit: idx(1)?,
                    theta: angle(2)?,
                },
                "RXX" => Gate::Rxx {
                    a: idx(1)?,
                    b: idx(2)?,
                    theta: angle(3)?,
                },
                other => return Err(err(&format!("unknown gate {other:?}"))),
            };
            if gate.max_qubit() >= n {
                return Err(Error::QubitOutOfRange {
                    index: gate.max_qubit(),
                    n,
                });
            }
            list.push(gate);
        }
        Ok(list)
    }
}

/// Per layer: one `RX(2 gamma h_i)` per field and one `RXX(2 gamma J_ij)` per
/// coupling, then `RZ(-2 beta)` on every qubit. The offset only contributes a
/// global phase and is not synthesized.
pub fn build_circuit(h: &IsingHamiltonian, params: &QaoaParams) -> GateList {
    let mut list = GateList::new(h.n);
    for k in 0..params.layers() {
        let (gamma, beta) = params.layer(k);
        for (&qubit, &field) in &h.fields {
            list.push(Gate::Rx {
                qubit,
                theta: 2.0 * gamma * field,
            });
        }
        for (&(a, b), &coupling) in &h.couplings {
            list.push(Gate::Rxx {
                a,
                b,
                theta: 2.0 * gamma * coupling,
            });
        }
        for qubit in 0..h.n {
            list.push(Gate::Rz {
                qubit,
                theta: -2.0 * beta,
            });
        }
    }
    list
}
