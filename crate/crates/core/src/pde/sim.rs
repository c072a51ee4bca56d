use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::kinetics;
use crate::par::Exec;
use crate::params::{ModelParams, SpatialParams};

use super::grid::Grid1D;
use super::ic::{FieldState, InitialCondition};
use super::kernel::{check_delta, top_hat_symbol};
use super::spectral::Spectral;

/// Everything needed to reproduce one simulation.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimConfig {
    pub model: ModelParams,
    pub spatial: SpatialParams,
    pub grid: Grid1D,
    #[serde(default = "default_dt")]
    pub dt: f64,
    pub t_end: f64,
    /// Steps between stored snapshots.
    #[serde(default = "default_stride")]
    pub stride: usize,
    pub ic: InitialCondition,
    #[serde(default)]
    pub laplacian: Laplacian,
    #[serde(default)]
    pub exec: Exec,
}

/// Fourier symbol of the diffusion operator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Laplacian {
    /// −k². Exact for band-limited data, but a steep profile rings across the
    /// whole domain, and positive ringing ahead of an invasion front grows.
    Spectral,
    /// −(4/dx²)·sin²(k·dx/2), the three-point Laplacian. Its heat semigroup
    /// maps non-negative grid data to non-negative grid data.
    #[default]
    Central,
}

impl Laplacian {
    pub fn symbol(self, grid: &Grid1D) -> Vec<f64> {
        let dx = grid.dx();
        grid.wavenumbers()
            .into_iter()
            .map(|k| match self {
                Laplacian::Spectral => k * k,
                Laplacian::Central => (2.0 * (0.5 * k * dx).sin() / dx).powi(2),
            })
            .collect()
    }
}

fn default_dt() -> f64 {
    0.01
}

fn default_stride() -> usize {
    100
}

impl SimConfig {
    pub fn validate(&self) -> Result<()> {
        self.model.validate()?;
        self.spatial.validate()?;
        self.grid.validate()?;
        if self.spatial.delta > 0.0 {
            check_delta(self.spatial.delta, &self.grid)?;
        }
        if !(self.dt.is_finite() && self.dt > 0.0) {
            return Err(Error::InvalidParameter {
                name: "dt",
                reason: format!("must be > 0, got {}", self.dt),
            });
        }
        if !(self.t_end.is_finite() && self.t_end > 0.0) {
            return Err(Error::InvalidParameter {
                name: "t_end",
                reason: format!("must be > 0, got {}", self.t_end),
            });
        }
        if self.stride == 0 {
            return Err(Error::InvalidParameter {
                name: "stride",
                reason: "must be >= 1".into(),
            });
        }
        Ok(())
    }

    pub fn total_steps(&self) -> u64 {
        (self.t_end / self.dt).round() as u64
    }

    pub fn initial_state(&self) -> Result<FieldState> {
        self.ic.build(&self.grid, &self.model)
    }
}

/// Health counters of a run.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct SimStats {
    pub steps: u64,
    /// Grid values that went negative beyond round-off and were reset to 0.
    pub clamps: u64,
    pub first_clamp_time: Option<f64>,
    pub last_clamp_time: Option<f64>,
}

/// Values within this (relative) distance of zero are transform round-off
/// and are flushed to exactly 0 without being counted. Left in place, positive
/// round-off ahead of an invasion front grows exponentially and seeds spurious
/// invasions across the whole domain.
const ROUNDOFF: f64 = 1e-13;
/// A field exceeding this magnitude has left every bounded regime.
const BLOWUP: f64 = 1e8;
const CHUNK: usize = 4096;

/// Strang-split stepper: exact spectral diffusion half-steps around an
/// explicit midpoint reaction step. Consecutive half-steps are fused.
#[derive(Debug)]
pub struct Simulator {
    model: ModelParams,
    grid: Grid1D,
    dt: f64,
    exec: Exec,
    fft: Spectral,
    half: [Vec<f64>; 2],
    full: [Vec<f64>; 2],
    symbol: Option<Vec<f64>>,
    w: Vec<f64>,
    uh: Vec<f64>,
    vh: Vec<f64>,
    reaction: bool,
    stats: SimStats,
}

impl Simulator {
    pub fn new(cfg: &SimConfig) -> Result<Self> {
        cfg.validate()?;
        let n = cfg.grid.n;
        let k2 = cfg.laplacian.symbol(&cfg.grid);
        let mult = |d: f64, tau: f64| -> Vec<f64> { k2.iter().map(|q| (-d * q * tau).exp()).collect() };
        let (d1, d2) = (cfg.spatial.d1, cfg.spatial.d2);
        Ok(Self {
            model: cfg.model,
            grid: cfg.grid,
            dt: cfg.dt,
            exec: cfg.exec,
            fft: Spectral::new(n),
            half: [mult(d1, 0.5 * cfg.dt), mult(d2, 0.5 * cfg.dt)],
            full: [mult(d1, cfg.dt), mult(d2, cfg.dt)],
            symbol: (cfg.spatial.delta > 0.0).then(|| top_hat_symbol(&cfg.grid, cfg.spatial.delta)),
            w: vec![0.0; n],
            uh: vec![0.0; n],
            vh: vec![0.0; n],
            reaction: true,
            stats: SimStats::default(),
        })
    }

    /// Test hook: diffusion only.
    pub fn without_reaction(mut self) -> Self {
        self.reaction = false;
        self
    }

    pub fn stats(&self) -> SimStats {
        self.stats
    }

    pub fn grid(&self) -> &Grid1D {
        &self.grid
    }

    fn diffuse(&mut self, s: &mut FieldState, full: bool) {
        let [mu, mv] = if full { &self.full } else { &self.half };
        self.fft.filter_pair(&mut s.u, &mut s.v, mu, mv);
    }

    fn react(&mut self, s: &mut FieldState) {
        if !self.reaction {
            return;
        }
        let (p, dt, exec) = (self.model, self.dt, self.exec);

        if let Some(sym) = &self.symbol {
            self.fft.filter_one(&s.v, sym, &mut self.w);
        }
        {
            let (u, v) = (&s.u, &s.v);
            let w: &[f64] = if self.symbol.is_some() { &self.w } else { v };
            exec.zip_chunks_mut(&mut self.uh, &mut self.vh, CHUNK, |off, uh, vh| {
                for j in 0..uh.len() {
                    let i = off + j;
                    let (du, dv) = kinetics(u[i], v[i], w[i], &p);
                    uh[j] = u[i] + 0.5 * dt * du;
                    vh[j] = v[i] + 0.5 * dt * dv;
                }
            });
        }
        if let Some(sym) = &self.symbol {
            self.fft.filter_one(&self.vh, sym, &mut self.w);
        }
        let (uh, vh) = (&self.uh, &self.vh);
        let wh: &[f64] = if self.symbol.is_some() { &self.w } else { vh };
        exec.zip_chunks_mut(&mut s.u, &mut s.v, CHUNK, |off, u, v| {
            for j in 0..u.len() {
                let i = off + j;
                let (du, dv) = kinetics(uh[i], vh[i], wh[i], &p);
                u[j] += dt * du;
                v[j] += dt * dv;
            }
        });
    }

    /// Zeroes negative and round-off values, counting negatives beyond
    /// round-off, and aborts on
    /// non-finite or runaway values.
    fn sanitize(&mut self, s: &mut FieldState, t: f64) -> Result<()> {
        let peak = |f: &[f64]| f.iter().try_fold(0.0f64, |a, x| x.is_finite().then(|| a.max(x.abs())));
        let (pu, pv) = match (peak(&s.u), peak(&s.v)) {
            (Some(a), Some(b)) if a <= BLOWUP && b <= BLOWUP => (a, b),
            _ => {
                let (max_u, max_v) = s_max(s);
                return Err(Error::SimulationBlowUp { t, max_u, max_v });
            }
        };
        let mut clamped = 0u64;
        for (field, pk) in [(&mut s.u, pu), (&mut s.v, pv)] {
            let tol = ROUNDOFF * pk.max(1.0);
            for x in field.iter_mut() {
                if *x < tol {
                    if *x < -tol {
                        clamped += 1;
                    }
                    *x = 0.0;
                }
            }
        }
        if clamped > 0 {
            self.stats.clamps += clamped;
            self.stats.first_clamp_time.get_or_insert(t);
            self.stats.last_clamp_time = Some(t);
        }
        Ok(())
    }

    /// Advances `s` by `nsteps` steps of size dt.
    pub fn advance(&mut self, s: &mut FieldState, nsteps: u64) -> Result<()> {
        if s.u.len() != self.grid.n || s.v.len() != self.grid.n {
            return Err(Error::InvalidParameter {
                name: "state",
                reason: format!("field length does not match grid size {}", self.grid.n),
            });
        }
        if nsteps == 0 {
            return Ok(());
        }
        let t0 = s.time;
        self.diffuse(s, false);
        self.sanitize(s, t0)?;
        for i in 0..nsteps {
            let t = t0 + (i + 1) as f64 * self.dt;
            self.react(s);
            self.sanitize(s, t)?;
            self.diffuse(s, i + 1 < nsteps);
            self.sanitize(s, t)?;
            s.time = t;
            self.stats.steps += 1;
        }
        Ok(())
    }

    pub fn step(&mut self, s: &mut FieldState) -> Result<()> {
        self.advance(s, 1)
    }

    /// Runs to `t_end`, handing the initial state, every `stride`-th state
    /// and the final state to `sink` as they are produced.
    pub fn run<F>(&mut self, s: &mut FieldState, t_end: f64, stride: usize, mut sink: F) -> Result<()>
    where
        F: FnMut(&FieldState) -> Result<()>,
    {
        let total = ((t_end - s.time) / self.dt).round().max(0.0) as u64;
        let stride = stride.max(1) as u64;
        sink(s)?;
        let mut done = 0;
        while done < total {
            let chunk = stride.min(total - done);
            self.advance(s, chunk)?;
            done += chunk;
            sink(s)?;
        }
        Ok(())
    }
}

fn s_max(s: &FieldState) -> (f64, f64) {
    let m = |f: &[f64]| f.iter().fold(0.0f64, |a, x| if x.is_finite() { a.max(x.abs()) } else { f64::INFINITY });
    (m(&s.u), m(&s.v))
}

/// One step from `state` under `cfg` (convenience; builds a fresh stepper).
pub fn step(state: &FieldState, cfg: &SimConfig) -> Result<FieldState> {
    let mut sim = Simulator::new(cfg)?;
    let mut s = state.clone();
    sim.step(&mut s)?;
    Ok(s)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SimRun {
    pub snapshots: Vec<FieldState>,
    pub stats: SimStats,
}

/// A failed run keeps whatever snapshots were produced before the failure.
#[derive(Debug, Clone, PartialEq)]
pub struct SimFailure {
    pub error: Error,
    pub snapshots: Vec<FieldState>,
    pub stats: SimStats,
}

impl std::fmt::Display for SimFailure {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        write!(f, "{} ({} snapshots retained)", self.error, self.snapshots.len())
    }
}

impl std::error::Error for SimFailure {}

/// Runs `cfg` from its initial condition, keeping every snapshot in memory.
pub fn simulate(cfg: &SimConfig) -> std::result::Result<SimRun, SimFailure> {
    let fail = |error: Error| SimFailure {
        error,
        snapshots: Vec::new(),
        stats: SimStats::default(),
    };
    let mut sim = Simulator::new(cfg).map_err(fail)?;
    let mut s = cfg.initial_state().map_err(fail)?;
    let mut snapshots = Vec::new();
    match sim.run(&mut s, cfg.t_end, cfg.stride, |x| {
        snapshots.push(x.clone());
        Ok(())
    }) {
        Ok(()) => Ok(SimRun {
            snapshots,
            stats: sim.stats(),
        }),
        Err(error) => Err(SimFailure {
            error,
            snapshots,
            stats: sim.stats(),
        }),
    }
}
