//! Bitstrings over the binary variables (equivalently, X-basis outcomes).
//!
//! Serialized as ASCII `0`/`1` with variable 0 leftmost. As an integer the
//! string is little-endian: variable `i` is bit `i` of the index, which is the
//! same convention the statevector uses for qubit `i`.

use std::fmt;
use std::str::FromStr;

use serde::{Deserialize, Deserializer, Serialize, Serializer};

use crate::error::{Error, Result};

#[derive(Clone, Debug, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Bitstring(Vec<bool>);

impl Bitstring {
    pub fn zeros(n: usize) -> Self {
        Self(vec![false; n])
    }

    pub fn from_bools(bits: Vec<bool>) -> Self {
        Self(bits)
    }

    /// Bit `i` of `index` becomes variable `i`.
    pub fn from_index(index: u64, n: usize) -> Self {
        Self((0..n).map(|i| (index >> i) & 1 == 1).collect())
    }

    pub fn to_index(&self) -> u64 {
        assert!(
            self.0.len() <= 64,
            "bitstring too long for an integer index"
        );
        self.0
            .iter()
            .enumerate()
            .fold(0u64, |acc, (i, &b)| acc | ((b as u64) << i))
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    pub fn get(&self, i: usize) -> bool {
        self.0[i]
    }

    pub fn set(&mut self, i: usize, value: bool) {
        self.0[i] = value;
    }

    pub fn as_slice(&self) -> &[bool] {
        &self.0
    }

    /// X-basis spins, `x = 0 -> +1`, `x = 1 -> -1`.
    pub fn to_spins(&self) -> Vec<i8> {
        self.0.iter().map(|&b| if b { -1 } else { 1 }).collect()
    }

    pub fn from_spins(spins: &[i8]) -> Result<Self> {
        spins
            .iter()
            .map(|&s| match s {
                1 => Ok(false),
                -1 => Ok(true),
                other => Err(Error::InvalidSpin(other)),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl fmt::Display for Bitstring {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for &b in &self.0 {
            f.write_str(if b { "1" } else { "0" })?;
        }
        Ok(())
    }
}

impl FromStr for Bitstring {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        s.chars()
            .map(|c| match c {
                '0' => Ok(false),
                '1' => Ok(true),
                other => Err(Error::Parse {
                    line: 1,
                    msg: format!("unexpected character {other:?} in bitstring"),
                }),
            })
            .collect::<Result<Vec<_>>>()
            .map(Self)
    }
}

impl Serialize for Bitstring {
    fn serialize<S: Serializer>(&self, serializer: S) -> std::result::Result<S::Ok, S::Error> {
        serializer.collect_str(self)
    }
}

impl<'de> Deserialize<'de> for Bitstring {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> std::result::Result<Self, D::Error> {
        let s = String::deserialize(deserializer)?;
        s.parse().map_err(serde::de::Error::custom)
    }
}
