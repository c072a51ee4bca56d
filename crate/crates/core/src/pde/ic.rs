use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model;
use crate::params::{ModelParams, State2};

use super::grid::Grid1D;

/// Prey and predator profiles at one instant.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FieldState {
    pub time: f64,
    pub u: Vec<f64>,
    pub v: Vec<f64>,
}

impl FieldState {
    pub fn homogeneous(n: usize, x: State2) -> Self {
        Self {
            time: 0.0,
            u: vec![x.u; n],
            v: vec![x.v; n],
        }
    }

    pub fn len(&self) -> usize {
        self.u.len()
    }

    pub fn is_empty(&self) -> bool {
        self.u.is_empty()
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.v).all(|x| x.is_finite())
    }

    pub fn max_abs(&self) -> (f64, f64) {
        let m = |f: &[f64]| f.iter().fold(0.0f64, |a, x| a.max(x.abs()));
        (m(&self.u), m(&self.v))
    }
}

/// Seeded initial conditions.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "lowercase", deny_unknown_fields)]
pub enum InitialCondition {
    /// E* plus independent Gaussian white noise of size `epsilon` on each field.
    Noise {
        #[serde(default = "default_epsilon")]
        epsilon: f64,
        #[serde(default)]
        seed: u64,
    },
    /// `inner` on |x| < `l1`, `outer` elsewhere.
    Step { inner: State2, outer: State2, l1: f64 },
}

pub fn default_epsilon() -> f64 {
    1e-5
}

impl InitialCondition {
    pub fn build(&self, grid: &Grid1D, p: &ModelParams) -> Result<FieldState> {
        match *self {
            InitialCondition::Noise { epsilon, seed } => make_noise_ic(grid, p, epsilon, seed),
            InitialCondition::Step { inner, outer, l1 } => make_step_ic(grid, inner, outer, l1),
        }
    }
}

/// u_j = u* + ε·ξ_j, v_j = v* + ε·ψ_j with ξ then ψ drawn from a ChaCha8
/// stream seeded by `seed`.
pub fn make_noise_ic(grid: &Grid1D, p: &ModelParams, epsilon: f64, seed: u64) -> Result<FieldState> {
    grid.validate()?;
    if !epsilon.is_finite() {
        return Err(Error::InvalidParameter {
            name: "epsilon",
            reason: format!("must be finite, got {epsilon}"),
        });
    }
    let e = model::unique_interior(p)?.point;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut draw = |c: f64| -> Vec<f64> {
        (0..grid.n)
            .map(|_| {
                let xi: f64 = StandardNormal.sample(&mut rng);
                c + epsilon * xi
            })
            .collect()
    };
    let u = draw(e.u);
    let v = draw(e.v);
    Ok(FieldState { time: 0.0, u, v })
}

pub fn make_step_ic(grid: &Grid1D, inner: State2, outer: State2, l1: f64) -> Result<FieldState> {
    grid.validate()?;
    if !(l1 > 0.0 && l1 < grid.half_length) {
        return Err(Error::InvalidParameter {
            name: "l1",
            reason: format!("must lie in (0, {}), got {l1}", grid.half_length),
        });
    }
    if !(inner.is_finite() && outer.is_finite()) || inner.u < 0.0 || inner.v < 0.0 || outer.u < 0.0 || outer.v < 0.0 {
        return Err(Error::InvalidParameter {
            name: "step states",
            reason: "must be finite and non-negative".into(),
        });
    }
    let (u, v) = (0..grid.n)
        .map(|j| if grid.x(j).abs() < l1 { (inner.u, inner.v) } else { (outer.u, outer.v) })
        .unzip();
    Ok(FieldState { time: 0.0, u, v })
}
