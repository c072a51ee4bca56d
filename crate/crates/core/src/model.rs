//! Kinetics, equilibria and linearization of the temporal model.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{Mat2, Stability};
use crate::params::{ModelParams, State2};

/// Reaction terms with the cooperation field `w` supplied separately.
///
/// In the local model `w == v`; in the nonlocal model `w` is the kernel
/// average of `v` around the point.
#[inline]
pub fn kinetics(u: f64, v: f64, w: f64, p: &ModelParams) -> (f64, f64) {
    let coop = 1.0 + p.alpha * w;
    let du = u * (1.0 - u) - p.c * coop * u * v / (p.m + coop * u);
    let dv = p.s * v * (1.0 - p.gamma * v / (p.beta + u));
    (du, dv)
}

/// Right-hand side (du/dt, dv/dt) of the temporal system.
pub fn reaction_rates(x: State2, p: &ModelParams) -> Result<(f64, f64)> {
    if !x.is_finite() {
        return Err(Error::NonFinite {
            context: format!("reaction_rates at ({}, {})", x.u, x.v),
        });
    }
    Ok(kinetics(x.u, x.v, x.v, p))
}

/// Closed-form Jacobian of the reaction terms.
pub fn jacobian(x: State2, p: &ModelParams) -> Mat2 {
    let State2 { u, v } = x;
    let coop = 1.0 + p.alpha * v;
    let den = p.m + coop * u;
    let den2 = den * den;
    let a11 = 1.0 - 2.0 * u - p.c * p.m * coop * v / den2;
    let a12 = -p.c * p.m * u * p.alpha * v / den2 - p.c * u * coop / den;
    let b = p.beta + u;
    let a21 = p.s * p.gamma * v * v / (b * b);
    let a22 = p.s * (1.0 - 2.0 * p.gamma * v / b);
    Mat2::new(a11, a12, a21, a22)
}

/// Sensitivity of the prey equation to the cooperation field at a
/// homogeneous state, c·m·α·u·v / (m + (1+αv)u)².
///
/// This is the part of a12 that the nonlocal kernel smooths.
pub fn cooperation_weight(x: State2, p: &ModelParams) -> f64 {
    let den = p.m + (1.0 + p.alpha * x.v) * x.u;
    p.c * p.m * p.alpha * x.u * x.v / (den * den)
}

/// Coefficients of the cubic R(u) = A1 u³ + A2 u² + A3 u + A4 whose roots
/// in (0, 1) are the prey components of interior equilibria.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CubicCoefficients {
    pub a1: f64,
    pub a2: f64,
    pub a3: f64,
    pub a4: f64,
}

impl CubicCoefficients {
    pub fn new(p: &ModelParams) -> Self {
        let ModelParams {
            c,
            m,
            gamma: g,
            beta: b,
            alpha: a,
            ..
        } = *p;
        Self {
            a1: g * a,
            a2: a * (c - g) + g * (g + a * b),
            a3: (c - g) * (g + a * b) + c * a * b + m * g * g,
            a4: c * b * (g + a * b) - m * g * g,
        }
    }

    pub fn eval(&self, u: f64) -> f64 {
        ((self.a1 * u + self.a2) * u + self.a3) * u + self.a4
    }

    pub fn deriv(&self, u: f64) -> f64 {
        (3.0 * self.a1 * u + 2.0 * self.a2) * u + self.a3
    }

    pub fn scale(&self) -> f64 {
        self.a1
            .abs()
            .max(self.a2.abs())
            .max(self.a3.abs())
            .max(self.a4.abs())
    }

    /// Real roots of R'(u) = 0, ascending.
    pub fn critical_points(&self) -> Vec<f64> {
        let (qa, qb, qc) = (3.0 * self.a1, 2.0 * self.a2, self.a3);
        let mut out = Vec::with_capacity(2);
        if qa == 0.0 {
            if qb != 0.0 {
                out.push(-qc / qb);
            }
            return out;
        }
        let disc = qb * qb - 4.0 * qa * qc;
        if disc < 0.0 {
            return out;
        }
        let sq = disc.sqrt();
        let q = -0.5 * (qb + qb.signum() * sq);
        if q == 0.0 {
            out.push(0.0);
        } else {
            out.push(q / qa);
            out.push(qc / q);
        }
        out.sort_by(f64::total_cmp);
        out
    }
}

/// Which equilibrium a report describes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EquilibriumKind {
    Trivial,
    PredatorFree,
    PreyFree,
    Interior,
}

impl EquilibriumKind {
    pub fn label(self) -> &'static str {
        match self {
            EquilibriumKind::Trivial => "E0",
            EquilibriumKind::PredatorFree => "E1",
            EquilibriumKind::PreyFree => "E2",
            EquilibriumKind::Interior => "E*",
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EquilibriumReport {
    pub kind: EquilibriumKind,
    pub point: State2,
    pub jacobian: Mat2,
    pub eigenvalues: [Complex64; 2],
    pub stability: Stability,
}

impl EquilibriumReport {
    pub fn at(kind: EquilibriumKind, point: State2, p: &ModelParams) -> Self {
        Self::from_jacobian(kind, point, jacobian(point, p))
    }

    fn from_jacobian(kind: EquilibriumKind, point: State2, jacobian: Mat2) -> Self {
        let eigenvalues = jacobian.eigenvalues();
        Self {
            kind,
            point,
            jacobian,
            eigenvalues,
            stability: Stability::classify(&eigenvalues),
        }
    }
}

/// E0 = (0, 0), E1 = (1, 0) and E2 = (0, β/γ), in that order.
pub fn boundary_equilibria(p: &ModelParams) -> Vec<EquilibriumReport> {
    let e2 = State2::new(0.0, p.beta / p.gamma);
    // At the axes the general formula has removable 0/0 terms only when
    // m = 0, which validation excludes, so the closed form is safe.
    vec![
        EquilibriumReport::at(EquilibriumKind::Trivial, State2::new(0.0, 0.0), p),
        EquilibriumReport::at(EquilibriumKind::PredatorFree, State2::new(1.0, 0.0), p),
        EquilibriumReport::at(EquilibriumKind::PreyFree, e2, p),
    ]
}

/// Roots of R closer than this to either end of (0, 1) belong to the
/// boundary equilibria and are not admitted.
const ROOT_EDGE: f64 = 1e-12;
/// R has a double root when |R| at a critical point falls below this
/// fraction of the coefficient scale.
pub const DEGENERATE_ROOT_TOL: f64 = 1e-10;

/// Interior equilibria sorted by ascending prey density.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct InteriorEquilibria {
    pub points: Vec<EquilibriumReport>,
    /// R has a (numerically) double root in (0, 1): saddle-node locus.
    pub degenerate: bool,
}

impl InteriorEquilibria {
    pub fn unique(&self) -> Option<&EquilibriumReport> {
        match self.points.as_slice() {
            [only] => Some(only),
            _ => None,
        }
    }
}

/// All prey roots of R in (0, 1), found on monotone sub-intervals delimited
/// by the critical points of R and polished with one Newton step.
pub fn interior_roots(coef: &CubicCoefficients) -> (Vec<f64>, bool) {
    let lo = ROOT_EDGE;
    let hi = 1.0 - ROOT_EDGE;
    let tol = DEGENERATE_ROOT_TOL * coef.scale();

    let mut knots = vec![lo];
    let mut degenerate = false;
    let mut tangent = Vec::new();
    for uc in coef.critical_points() {
        if uc > lo && uc < hi {
            knots.push(uc);
            if coef.eval(uc).abs() <= tol {
                degenerate = true;
                tangent.push(uc);
            }
        }
    }
    knots.push(hi);

    let mut roots = Vec::new();
    for w in knots.windows(2) {
        let (a, b) = (w[0], w[1]);
        let (fa, fb) = (coef.eval(a), coef.eval(b));
        if fa == 0.0 {
            roots.push(a);
            continue;
        }
        if fa.signum() == fb.signum() {
            continue;
        }
        let r = bisect(|x| coef.eval(x), a, b, fa);
        roots.push(r);
    }
    // Near a numerically double root, round-off decides whether R touches,
    // crosses twice or misses zero. Collapse everything within the
    // resolution radius onto the critical point itself.
    for uc in tangent {
        let curv = (6.0 * coef.a1 * uc + 2.0 * coef.a2).abs().max(f64::MIN_POSITIVE);
        let radius = 2.0 * (2.0 * tol / curv).sqrt() + 1e-12;
        roots.retain(|r| (r - uc).abs() > radius);
        roots.push(uc);
    }
    roots.sort_by(f64::total_cmp);
    roots.dedup_by(|a, b| (*a - *b).abs() < 1e-14);
    let roots = roots
        .into_iter()
        .map(|r| {
            let d = coef.deriv(r);
            if d != 0.0 {
                let polished = r - coef.eval(r) / d;
                if (polished - r).abs() < 1e-8 {
                    return polished;
                }
            }
            r
        })
        .filter(|&r| r > lo && r < hi)
        .collect();
    (roots, degenerate)
}

fn bisect(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64, mut fa: f64) -> f64 {
    for _ in 0..200 {
        let mid = 0.5 * (a + b);
        if mid <= a || mid >= b {
            break;
        }
        let fm = f(mid);
        if fm == 0.0 {
            return mid;
        }
        if fm.signum() == fa.signum() {
            a = mid;
            fa = fm;
        } else {
            b = mid;
        }
    }
    0.5 * (a + b)
}

/// Interior equilibria (u*, (β + u*)/γ) with u* a root of R in (0, 1).
pub fn interior_equilibria(p: &ModelParams) -> InteriorEquilibria {
    let coef = CubicCoefficients::new(p);
    let (roots, degenerate) = interior_roots(&coef);
    let points = roots
        .into_iter()
        .map(|u| {
            let x = State2::new(u, (p.beta + u) / p.gamma);
            EquilibriumReport::at(EquilibriumKind::Interior, x, p)
        })
        .collect();
    InteriorEquilibria { points, degenerate }
}

/// The unique interior equilibrium, or an error when there is none or several.
pub fn unique_interior(p: &ModelParams) -> Result<EquilibriumReport> {
    let set = interior_equilibria(p);
    match set.points.len() {
        0 => Err(Error::NoInteriorEquilibrium),
        1 => Ok(set.points[0]),
        n => Err(Error::AmbiguousEquilibrium { count: n }),
    }
}

/// Boundary equilibria followed by interior ones.
pub fn all_equilibria(p: &ModelParams) -> Vec<EquilibriumReport> {
    let mut out = boundary_equilibria(p);
    out.extend(interior_equilibria(p).points);
    out
}
