//! Portable network file: `{"dims": [...], "theta": [...], "clip": [u, v] | null}`.
//!
//! `theta` is stored in the flat parameter ordering of [`crate::net::to_vector`].
//! Floats are written in shortest round-trip decimal form, so reading a file
//! back yields bit-identical parameters.

use std::fs;
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{contract, Result};
use crate::net::{realize_clipped, realize_vectorized, Activation, Architecture, VectorizedParams};

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct NetworkFile {
    pub dims: Architecture,
    pub theta: Vec<f64>,
    pub clip: Option<[f64; 2]>,
}

impl NetworkFile {
    pub fn new(params: &VectorizedParams, clip: Option<(f64, f64)>) -> Result<Self> {
        let file = Self {
            dims: params.arch().clone(),
            theta: params.theta().to_vec(),
            clip: clip.map(|(u, v)| [u, v]),
        };
        file.validate()?;
        Ok(file)
    }

    fn validate(&self) -> Result<()> {
        VectorizedParams::new(self.theta.clone(), self.dims.clone())?;
        if let Some([u, v]) = self.clip {
            if !(u.is_finite() && v.is_finite() && u < v) {
                return Err(contract(format!("clip range must satisfy finite u < v, got [{u}, {v}]")));
            }
        }
        Ok(())
    }

    pub fn params(&self) -> Result<VectorizedParams> {
        VectorizedParams::new(self.theta.clone(), self.dims.clone())
    }

    /// Evaluates the stored network: clipped output layer when `clip` is set,
    /// otherwise rectified hidden layers and an affine output.
    pub fn realize(&self, x: &[f64]) -> Result<Vec<f64>> {
        let params = self.params()?;
        match self.clip {
            Some([u, v]) => realize_clipped(&params, u, v, x),
            None => {
                let mut acts = vec![Activation::Rect; params.arch().depth()];
                *acts.last_mut().expect("depth >= 1") = Activation::Identity;
                realize_vectorized(&params, &acts, x)
            }
        }
    }

    pub fn to_json(&self) -> Result<String> {
        Ok(serde_json::to_string(self)?)
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let file: Self = serde_json::from_str(text)?;
        file.validate()?;
        Ok(file)
    }

    pub fn write(&self, path: impl AsRef<Path>) -> Result<()> {
        fs::write(path, self.to_json()? + "\n")?;
        Ok(())
    }

    pub fn read(path: impl AsRef<Path>) -> Result<Self> {
        Self::from_json(&fs::read_to_string(path)?)
    }
}
