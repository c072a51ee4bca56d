//! Periodic 1-D simulation of the local and nonlocal reaction–diffusion models.

mod grid;
mod ic;
mod kernel;
mod sim;
mod spectral;

pub use grid::Grid1D;
pub use ic::{default_epsilon, make_noise_ic, make_step_ic, FieldState, InitialCondition};
pub use kernel::{convolve_kernel, top_hat_symbol};
pub use sim::{simulate, step, Laplacian, SimConfig, SimFailure, SimRun, SimStats, Simulator};
pub use spectral::Spectral;
