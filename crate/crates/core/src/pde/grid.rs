use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Uniform periodic grid on [−L, L) with `n` nodes.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Grid1D {
    pub half_length: f64,
    pub n: usize,
}

impl Grid1D {
    pub fn new(half_length: f64, n: usize) -> Result<Self> {
        let g = Self { half_length, n };
        g.validate()?;
        Ok(g)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.half_length.is_finite() && self.half_length > 0.0) {
            return Err(Error::InvalidParameter {
                name: "half_length",
                reason: format!("must be > 0, got {}", self.half_length),
            });
        }
        if self.n < 64 {
            return Err(Error::InvalidParameter {
                name: "n",
                reason: format!("need at least 64 nodes, got {}", self.n),
            });
        }
        Ok(())
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_length / self.n as f64
    }

    pub fn x(&self, j: usize) -> f64 {
        -self.half_length + j as f64 * self.dx()
    }

    pub fn positions(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.x(j)).collect()
    }

    /// Angular wavenumber of FFT bin `j` (negative frequencies in the upper half).
    pub fn wavenumber(&self, j: usize) -> f64 {
        let base = std::f64::consts::PI / self.half_length;
        let m = if j <= self.n / 2 { j as f64 } else { j as f64 - self.n as f64 };
        base * m
    }

    pub fn wavenumbers(&self) -> Vec<f64> {
        (0..self.n).map(|j| self.wavenumber(j)).collect()
    }
}
