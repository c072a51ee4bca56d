use crate::dispersion::sinc;
use crate::error::{Error, Result};

use super::grid::Grid1D;
use super::spectral::Spectral;

/// Fourier symbol sin(kδ)/(kδ) of the normalized top-hat kernel on [−δ, δ],
/// per FFT bin.
pub fn top_hat_symbol(grid: &Grid1D, delta: f64) -> Vec<f64> {
    grid.wavenumbers().into_iter().map(|k| sinc(k * delta)).collect()
}

pub(crate) fn check_delta(delta: f64, grid: &Grid1D) -> Result<()> {
    if !(delta.is_finite() && delta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must be > 0, got {delta}"),
        });
    }
    if delta > grid.half_length {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("kernel half-width {delta} exceeds domain half-length {}", grid.half_length),
        });
    }
    Ok(())
}

/// Circular convolution of `field` with the top-hat kernel of half-width
/// `delta`, computed spectrally.
pub fn convolve_kernel(field: &[f64], delta: f64, grid: &Grid1D) -> Result<Vec<f64>> {
    grid.validate()?;
    check_delta(delta, grid)?;
    if field.len() != grid.n {
        return Err(Error::InvalidParameter {
            name: "field",
            reason: format!("length {} does not match grid size {}", field.len(), grid.n),
        });
    }
    let symbol = top_hat_symbol(grid, delta);
    let mut out = vec![0.0; grid.n];
    Spectral::new(grid.n).filter_one(field, &symbol, &mut out);
    Ok(out)
}
