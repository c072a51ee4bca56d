//! TOML run configurations, one schema per subcommand. Every block rejects
//! unknown keys, and omitted keys take the defaults written into the manifest.

use std::path::Path;

use coophunt::dispersion::WaveTarget;
use coophunt::pde::{Grid1D, InitialCondition, Laplacian};
use coophunt::temporal::{Direction, Source};
use coophunt::{ModelParams, Parameter, SpatialParams};
use serde::de::DeserializeOwned;
use serde::{Deserialize, Serialize};

use crate::CliError;

pub fn load<T: DeserializeOwned>(path: &Path) -> Result<T, CliError> {
    let text = std::fs::read_to_string(path).map_err(|e| CliError::io(format!("reading {}", path.display()), e))?;
    let de = toml::Deserializer::new(&text);
    serde_path_to_error::deserialize(de).map_err(|e| {
        let at = e.path().to_string();
        let at = if at == "." { "(top level)".to_string() } else { at };
        CliError::Config(format!("{}: at `{at}`: {}", path.display(), e.inner().message().trim()))
    })
}

fn yes() -> bool {
    true
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct EquilibriaConfig {
    #[serde(default)]
    pub model: ModelParams,
    /// Optional periodic-orbit searches seeded near E*.
    #[serde(default)]
    pub cycles: Vec<CycleSeed>,
    #[serde(default)]
    pub heteroclinic: Option<HeteroclinicSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct CycleSeed {
    /// Seed is (u_factor·u*, v_factor·v*).
    pub u_factor: f64,
    #[serde(default = "one")]
    pub v_factor: f64,
    pub direction: Direction,
    #[serde(default = "cycle_budget")]
    pub t_budget: f64,
}

fn one() -> f64 {
    1.0
}

fn cycle_budget() -> f64 {
    2e4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct HeteroclinicSpec {
    pub sources: Vec<Source>,
    #[serde(default = "het_offset")]
    pub offset: f64,
    #[serde(default = "cycle_budget")]
    pub t_budget: f64,
}

fn het_offset() -> f64 {
    1e-6
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcateConfig {
    #[serde(default)]
    pub model: ModelParams,
    pub bifurcate: BifurcateSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct BifurcateSpec {
    pub parameter: Parameter,
    pub range: (f64, f64),
    #[serde(default = "branch_points")]
    pub points: usize,
    #[serde(default = "yes")]
    pub refine: bool,
    /// Log-spaced samples used to bracket Hopf points.
    #[serde(default = "hopf_samples")]
    pub hopf_samples: usize,
    #[serde(default = "yes")]
    pub criticality: bool,
    /// Relative offset base for criticality probes (base·{1, 2, 4, 8}).
    #[serde(default = "criticality_offset")]
    pub criticality_offset: f64,
    #[serde(default = "criticality_budget")]
    pub criticality_budget: f64,
    #[serde(default = "cycle_budget")]
    pub cycle_budget: f64,
}

fn branch_points() -> usize {
    60
}

fn hopf_samples() -> usize {
    50
}

fn criticality_offset() -> f64 {
    0.005
}

fn criticality_budget() -> f64 {
    6e4
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionConfig {
    #[serde(default)]
    pub model: ModelParams,
    pub spatial: SpatialParams,
    #[serde(default)]
    pub dispersion: DispersionSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DispersionSpec {
    pub k_max: f64,
    pub points: usize,
}

impl Default for DispersionSpec {
    fn default() -> Self {
        Self { k_max: 2.0, points: 400 }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuringCurveConfig {
    #[serde(default)]
    pub model: ModelParams,
    pub turing_curve: TuringCurveSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct TuringCurveSpec {
    #[serde(default = "d2")]
    pub d2: f64,
    /// Zero selects the local model.
    #[serde(default)]
    pub delta: f64,
    pub alpha_range: (f64, f64),
    #[serde(default = "curve_points")]
    pub points: usize,
}

fn d2() -> f64 {
    10.0
}

fn curve_points() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimulateConfig {
    #[serde(default)]
    pub model: ModelParams,
    pub spatial: SpatialParams,
    pub grid: Grid1D,
    #[serde(default = "dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "stride")]
    pub stride: usize,
    pub ic: InitialCondition,
    #[serde(default)]
    pub laplacian: Laplacian,
    #[serde(default)]
    pub output: SimOutput,
}

fn dt() -> f64 {
    0.01
}

fn stride() -> usize {
    100
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct SimOutput {
    /// Write every n-th snapshot (the first and last are always written).
    pub snapshot_every: usize,
    pub classify: bool,
    pub tail_fraction: f64,
}

impl Default for SimOutput {
    fn default() -> Self {
        Self {
            snapshot_every: 10,
            classify: true,
            tail_fraction: coophunt::waves::DEFAULT_TAIL_FRACTION,
        }
    }
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSpeedConfig {
    #[serde(default)]
    pub model: ModelParams,
    pub spatial: SpatialParams,
    pub wave_speed: WaveSpeedSpec,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct WaveSpeedSpec {
    pub target: WaveTarget,
    /// When present, a front is simulated and its speed fitted.
    #[serde(default)]
    pub measure: Option<MeasureSpec>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct MeasureSpec {
    pub grid: Grid1D,
    #[serde(default = "dt")]
    pub dt: f64,
    pub t_end: f64,
    #[serde(default = "stride")]
    pub stride: usize,
    /// Half-width of the initial patch of E*.
    #[serde(default = "patch")]
    pub l1: f64,
    /// Tracked u level. Defaults to the midpoint between E* and the invaded
    /// state, or 1e-4 deviation from u* for the coexistence envelope.
    #[serde(default)]
    pub level: Option<f64>,
    /// The fit window is [window_start·t_end, t_end].
    #[serde(default = "window_start")]
    pub window_start: f64,
    /// Prey offset of the initial patch for the coexistence envelope.
    #[serde(default = "perturbation")]
    pub perturbation: f64,
    #[serde(default)]
    pub laplacian: Laplacian,
}

fn patch() -> f64 {
    100.0
}

fn window_start() -> f64 {
    0.7
}

fn perturbation() -> f64 {
    1e-2
}
