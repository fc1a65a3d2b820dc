use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Per-layer angles `(gamma_k, beta_k)`, in radians.
#[derive(Clone, Debug, PartialEq, Serialize, Deserialize)]
pub struct QaoaParams {
    pub gammas: Vec<f64>,
    pub betas: Vec<f64>,
}

impl QaoaParams {
    pub fn new(gammas: Vec<f64>, betas: Vec<f64>) -> Result<Self> {
        if gammas.is_empty() || gammas.len() != betas.len() {
            return Err(Error::InvalidParams(format!(
                "need matching non-empty gamma/beta lists, got {} and {}",
                gammas.len(),
                betas.len()
            )));
        }
        if gammas.iter().chain(&betas).any(|v| !v.is_finite()) {
            return Err(Error::InvalidParams("angles must be finite".into()));
        }
        Ok(Self { gammas, betas })
    }

    pub fn single(gamma: f64, beta: f64) -> Self {
        Self {
            gammas: vec![gamma],
            betas: vec![beta],
        }
    }

    /// From `[gamma_1, beta_1, gamma_2, beta_2, ...]`.
    pub fn from_flat(flat: &[f64]) -> Result<Self> {
        if !flat.len().is_multiple_of(2) {
            return Err(Error::InvalidParams("odd number of angles".into()));
        }
        let gammas = flat.iter().step_by(2).copied().collect();
        let betas = flat.iter().skip(1).step_by(2).copied().collect();
        Self::new(gammas, betas)
    }

    pub fn to_flat(&self) -> Vec<f64> {
        self.gammas
            .iter()
            .zip(&self.betas)
            .flat_map(|(&g, &b)| [g, b])
            .collect()
    }

    pub fn layers(&self) -> usize {
        self.gammas.len()
    }

    pub fn layer(&self, k: usize) -> (f64, f64) {
        (self.gammas[k], self.betas[k])
    }

    /// Copy with every angle reduced into `[0, 2 pi)`. For reporting only.
    pub fn canonical(&self) -> Self {
        let wrap = |v: &f64| v.rem_euclid(std::f64::consts::TAU);
        Self {
            gammas: self.gammas.iter().map(wrap).collect(),
            betas: self.betas.iter().map(wrap).collect(),
        }
    }
}
