//! Cooperative-hunting predator–prey dynamics: equilibria, cycles,
//! bifurcation thresholds, Turing analysis, spatial simulation and fronts.

pub mod bifurcation;
pub mod dispersion;
pub mod error;
pub mod linalg;
pub mod model;
pub mod ode;
pub mod par;
pub mod params;
pub mod pde;
pub mod temporal;
pub mod waves;

pub use error::{Error, Result};
pub use params::{ModelParams, Parameter, SpatialParams, State2};
