//! FFT plumbing shared by the diffusion and convolution operators.

use std::sync::Arc;

use num_complex::Complex64;
use rustfft::{Fft, FftPlanner};

/// Forward/inverse transforms of one length with reusable scratch space.
pub struct Spectral {
    n: usize,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    buf: Vec<Complex64>,
    spec: Vec<Complex64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("n", &self.n).finish()
    }
}

impl Spectral {
    pub fn new(n: usize) -> Self {
        let mut planner = FftPlanner::new();
        let forward = planner.plan_fft_forward(n);
        let inverse = planner.plan_fft_inverse(n);
        let len = forward.get_inplace_scratch_len().max(inverse.get_inplace_scratch_len());
        Self {
            n,
            forward,
            inverse,
            buf: vec![Complex64::default(); n],
            spec: vec![Complex64::default(); n],
            scratch: vec![Complex64::default(); len],
        }
    }

    pub fn len(&self) -> usize {
        self.n
    }

    pub fn is_empty(&self) -> bool {
        self.n == 0
    }

    /// Applies real, even Fourier multipliers `mu` to `a` and `mv` to `b`
    /// (both real fields) using a single complex transform pair.
    ///
    /// With z = a + i·b, the transforms separate as A_k = (Z_k + conj Z_{−k})/2
    /// and B_k = (Z_k − conj Z_{−k})/(2i), so the filtered spectrum is
    /// ((mu+mv)/2)·Z_k + ((mu−mv)/2)·conj Z_{−k}.
    pub fn filter_pair(&mut self, a: &mut [f64], b: &mut [f64], mu: &[f64], mv: &[f64]) {
        let n = self.n;
        for (z, (&x, &y)) in self.buf.iter_mut().zip(a.iter().zip(b.iter())) {
            *z = Complex64::new(x, y);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        self.spec.copy_from_slice(&self.buf);
        let spec = &self.spec;
        for k in 0..n {
            let mk = if k == 0 { 0 } else { n - k };
            let plus = 0.5 * (mu[k] + mv[k]);
            let minus = 0.5 * (mu[k] - mv[k]);
            self.buf[k] = plus * spec[k] + minus * spec[mk].conj();
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / n as f64;
        for (z, (x, y)) in self.buf.iter().zip(a.iter_mut().zip(b.iter_mut())) {
            *x = z.re * scale;
            *y = z.im * scale;
        }
    }

    /// Writes the Fourier-multiplied copy of real `field` into `out`.
    pub fn filter_one(&mut self, field: &[f64], m: &[f64], out: &mut [f64]) {
        for (z, &x) in self.buf.iter_mut().zip(field) {
            *z = Complex64::new(x, 0.0);
        }
        self.forward.process_with_scratch(&mut self.buf, &mut self.scratch);
        for (z, &mk) in self.buf.iter_mut().zip(m) {
            *z *= mk;
        }
        self.inverse.process_with_scratch(&mut self.buf, &mut self.scratch);
        let scale = 1.0 / self.n as f64;
        for (o, z) in out.iter_mut().zip(&self.buf) {
            *o = z.re * scale;
        }
    }
}
