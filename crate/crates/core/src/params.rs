//! Parameter and state types shared by every analysis layer.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// The six kinetic parameters of the rescaled predator-prey system
///
/// ```text
/// du/dt = u(1 - u) - c(1 + αv)uv / (m + (1 + αv)u)
/// dv/dt = s v (1 - γv / (β + u))
/// ```
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ModelParams {
    /// Consumption scale.
    pub c: f64,
    /// Half-saturation offset.
    pub m: f64,
    /// Predator growth rate.
    pub s: f64,
    /// Predator intraspecific competition.
    pub gamma: f64,
    /// Alternative-food constant.
    pub beta: f64,
    /// Cooperative hunting strength; zero switches cooperation off.
    pub alpha: f64,
}

impl ModelParams {
    /// Reference parameter set used throughout the numerical experiments
    /// (c = 0.05, m = 0.08, s = 0.05, γ = 0.08, β = 0.01) with α = 0.04.
    pub const fn baseline() -> Self {
        Self {
            c: 0.05,
            m: 0.08,
            s: 0.05,
            gamma: 0.08,
            beta: 0.01,
            alpha: 0.04,
        }
    }

    pub fn with(mut self, which: Parameter, value: f64) -> Self {
        which.set(&mut self, value);
        self
    }

    pub fn with_alpha(self, alpha: f64) -> Self {
        self.with(Parameter::Alpha, alpha)
    }

    pub fn with_gamma(self, gamma: f64) -> Self {
        self.with(Parameter::Gamma, gamma)
    }

    pub fn with_c(self, c: f64) -> Self {
        self.with(Parameter::C, c)
    }

    pub fn validate(&self) -> Result<()> {
        let positive = [
            ("c", self.c),
            ("m", self.m),
            ("s", self.s),
            ("gamma", self.gamma),
            ("beta", self.beta),
        ];
        for (name, value) in positive {
            if !(value.is_finite() && value > 0.0) {
                return Err(Error::param(name, format!("must be finite and > 0, got {value}")));
            }
        }
        if !(self.alpha.is_finite() && self.alpha >= 0.0) {
            return Err(Error::param(
                "alpha",
                format!("must be finite and >= 0, got {}", self.alpha),
            ));
        }
        Ok(())
    }

    /// Transcritical discriminant mγ² - cβ(γ + αβ). Positive means E2 is a saddle.
    pub fn prey_free_margin(&self) -> f64 {
        self.m * self.gamma * self.gamma - self.c * self.beta * (self.gamma + self.alpha * self.beta)
    }

    /// Prey growth rate at the prey-free state, 1 - cβ(γ + αβ)/(mγ²).
    pub fn b11(&self) -> f64 {
        1.0 - self.c * self.beta * (self.gamma + self.alpha * self.beta)
            / (self.m * self.gamma * self.gamma)
    }

    /// Upper edge of the absorbing box in v, (β + 1)/γ.
    pub fn v_box(&self) -> f64 {
        (self.beta + 1.0) / self.gamma
    }
}

impl Default for ModelParams {
    fn default() -> Self {
        Self::baseline()
    }
}

/// A scalar parameter that bifurcation scans may vary.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Parameter {
    Alpha,
    Gamma,
    C,
}

impl Parameter {
    pub fn get(self, p: &ModelParams) -> f64 {
        match self {
            Parameter::Alpha => p.alpha,
            Parameter::Gamma => p.gamma,
            Parameter::C => p.c,
        }
    }

    pub fn set(self, p: &mut ModelParams, value: f64) {
        match self {
            Parameter::Alpha => p.alpha = value,
            Parameter::Gamma => p.gamma = value,
            Parameter::C => p.c = value,
        }
    }

    pub fn name(self) -> &'static str {
        match self {
            Parameter::Alpha => "alpha",
            Parameter::Gamma => "gamma",
            Parameter::C => "c",
        }
    }
}

impl std::fmt::Display for Parameter {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(self.name())
    }
}

/// Prey and predator biomass at one point of phase space.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct State2 {
    pub u: f64,
    pub v: f64,
}

impl State2 {
    pub const fn new(u: f64, v: f64) -> Self {
        Self { u, v }
    }

    pub fn is_finite(&self) -> bool {
        self.u.is_finite() && self.v.is_finite()
    }

    pub fn distance(&self, other: &State2) -> f64 {
        (self.u - other.u).hypot(self.v - other.v)
    }
}

impl From<[f64; 2]> for State2 {
    fn from(x: [f64; 2]) -> Self {
        Self { u: x[0], v: x[1] }
    }
}

impl From<State2> for [f64; 2] {
    fn from(x: State2) -> Self {
        [x.u, x.v]
    }
}

/// Diffusion coefficients and nonlocal interaction range.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SpatialParams {
    pub d1: f64,
    pub d2: f64,
    /// Half-width of the cooperation kernel; zero selects the local model.
    #[serde(default)]
    pub delta: f64,
}

impl SpatialParams {
    pub const fn new(d1: f64, d2: f64, delta: f64) -> Self {
        Self { d1, d2, delta }
    }

    pub const fn local(d1: f64, d2: f64) -> Self {
        Self { d1, d2, delta: 0.0 }
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.d1.is_finite() && self.d1 > 0.0) {
            return Err(Error::param("d1", format!("must be > 0, got {}", self.d1)));
        }
        if !(self.d2.is_finite() && self.d2 > 0.0) {
            return Err(Error::param("d2", format!("must be > 0, got {}", self.d2)));
        }
        if !(self.delta.is_finite() && self.delta >= 0.0) {
            return Err(Error::param("delta", format!("must be >= 0, got {}", self.delta)));
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_validates() {
        assert!(ModelParams::baseline().validate().is_ok());
        assert!(ModelParams::baseline().with_alpha(0.0).validate().is_ok());
    }

    #[test]
    fn rejects_bad_values() {
        assert!(ModelParams::baseline().with_c(0.0).validate().is_err());
        assert!(ModelParams::baseline().with_alpha(-1e-3).validate().is_err());
        assert!(ModelParams::baseline().with_gamma(f64::NAN).validate().is_err());
        assert!(SpatialParams::new(1.0, 10.0, -1.0).validate().is_err());
    }

    #[test]
    fn b11_baseline() {
        let p = ModelParams::baseline();
        // mγ² = 5.12e-4, cβ(γ+αβ) = 4.02e-5
        assert!((p.prey_free_margin() - (5.12e-4 - 4.02e-5)).abs() < 1e-15);
        assert!((p.b11() - (1.0 - 4.02e-5 / 5.12e-4)).abs() < 1e-14);
    }
}
