//! 2×2 real matrices and their spectra.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

/// Row-major 2×2 matrix `[[a11, a12], [a21, a22]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Mat2(pub [[f64; 2]; 2]);

impl Mat2 {
    pub const fn new(a11: f64, a12: f64, a21: f64, a22: f64) -> Self {
        Self([[a11, a12], [a21, a22]])
    }

    pub fn a11(&self) -> f64 {
        self.0[0][0]
    }
    pub fn a12(&self) -> f64 {
        self.0[0][1]
    }
    pub fn a21(&self) -> f64 {
        self.0[1][0]
    }
    pub fn a22(&self) -> f64 {
        self.0[1][1]
    }

    pub fn trace(&self) -> f64 {
        self.a11() + self.a22()
    }

    pub fn det(&self) -> f64 {
        self.a11() * self.a22() - self.a12() * self.a21()
    }

    /// Roots of λ² - tr·λ + det = 0, larger real part first.
    pub fn eigenvalues(&self) -> [Complex64; 2] {
        quadratic_eigs(self.trace(), self.det())
    }

    /// Eigenvector for a real eigenvalue, normalized to unit length.
    pub fn eigenvector(&self, lambda: f64) -> [f64; 2] {
        // Pick the better-conditioned row of (A - λI).
        let r1 = [self.a11() - lambda, self.a12()];
        let r2 = [self.a21(), self.a22() - lambda];
        let n1 = r1[0].hypot(r1[1]);
        let n2 = r2[0].hypot(r2[1]);
        let v = if n1 == 0.0 && n2 == 0.0 {
            [1.0, 0.0]
        } else if n1 >= n2 {
            [-r1[1], r1[0]]
        } else {
            [-r2[1], r2[0]]
        };
        let n = v[0].hypot(v[1]);
        [v[0] / n, v[1] / n]
    }
}

/// Roots of λ² - b·λ + c = 0 ordered by descending real part (then by
/// descending imaginary part). Uses the cancellation-free form for real roots.
pub fn quadratic_eigs(b: f64, c: f64) -> [Complex64; 2] {
    let disc = b * b - 4.0 * c;
    if disc >= 0.0 {
        let sq = disc.sqrt();
        let q = 0.5 * (b + b.signum() * sq);
        let (r1, r2) = if q == 0.0 {
            (0.0, 0.0)
        } else {
            (q, c / q)
        };
        let (hi, lo) = if r1 >= r2 { (r1, r2) } else { (r2, r1) };
        [Complex64::new(hi, 0.0), Complex64::new(lo, 0.0)]
    } else {
        let im = 0.5 * (-disc).sqrt();
        [Complex64::new(0.5 * b, im), Complex64::new(0.5 * b, -im)]
    }
}

/// Local type of an equilibrium from its Jacobian spectrum.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Stability {
    StableNode,
    StableFocus,
    UnstableNode,
    UnstableFocus,
    Saddle,
    NonHyperbolic,
}

/// Real parts within this band of zero are treated as zero.
pub const NON_HYPERBOLIC_BAND: f64 = 1e-10;

impl Stability {
    pub fn classify(eigs: &[Complex64; 2]) -> Self {
        let band = NON_HYPERBOLIC_BAND;
        let (r1, r2) = (eigs[0].re, eigs[1].re);
        if r1.abs() <= band || r2.abs() <= band {
            return Stability::NonHyperbolic;
        }
        let complex = eigs[0].im != 0.0;
        match (r1 > 0.0, r2 > 0.0) {
            (true, true) if complex => Stability::UnstableFocus,
            (true, true) => Stability::UnstableNode,
            (false, false) if complex => Stability::StableFocus,
            (false, false) => Stability::StableNode,
            _ => Stability::Saddle,
        }
    }

    pub fn is_stable(self) -> bool {
        matches!(self, Stability::StableNode | Stability::StableFocus)
    }

    pub fn label(self) -> &'static str {
        match self {
            Stability::StableNode => "stable_node",
            Stability::StableFocus => "stable_focus",
            Stability::UnstableNode => "unstable_node",
            Stability::UnstableFocus => "unstable_focus",
            Stability::Saddle => "saddle",
            Stability::NonHyperbolic => "non_hyperbolic",
        }
    }
}

impl std::fmt::Display for Stability {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.label())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn eigenvalues_solve_characteristic_polynomial() {
        let m = Mat2::new(0.3, -1.2, 0.7, -0.05);
        for l in m.eigenvalues() {
            let r = l * l - m.trace() * l + m.det();
            assert!(r.norm() < 1e-14);
        }
    }

    #[test]
    fn ordering_and_classes() {
        let saddle = Mat2::new(-1.0, 0.0, 0.0, 0.05);
        let e = saddle.eigenvalues();
        assert_eq!(e[0].re, 0.05);
        assert_eq!(e[1].re, -1.0);
        assert_eq!(Stability::classify(&e), Stability::Saddle);
        assert_eq!(
            Stability::classify(&Mat2::new(1.0, 0.0, 0.0, 0.05).eigenvalues()),
            Stability::UnstableNode
        );
        assert_eq!(
            Stability::classify(&Mat2::new(-0.1, -1.0, 1.0, -0.1).eigenvalues()),
            Stability::StableFocus
        );
        assert_eq!(
            Stability::classify(&Mat2::new(0.0, -1.0, 1.0, 0.0).eigenvalues()),
            Stability::NonHyperbolic
        );
    }

    #[test]
    fn eigenvector_is_null_vector() {
        let m = Mat2::new(-1.0, -0.0463, 0.0, 0.05);
        let lam = m.eigenvalues()[0].re;
        let v = m.eigenvector(lam);
        let r0 = m.a11() * v[0] + m.a12() * v[1] - lam * v[0];
        let r1 = m.a21() * v[0] + m.a22() * v[1] - lam * v[1];
        assert!(r0.abs() < 1e-14 && r1.abs() < 1e-14);
    }
}
