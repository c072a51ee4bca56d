//! Post-processing of simulation output: front tracking, speed fits and
//! regime labels.

use std::io::Write;

use num_complex::Complex64;
use rustfft::FftPlanner;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::pde::{FieldState, Grid1D};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Field {
    U,
    V,
}

impl Field {
    pub fn of<'a>(&self, s: &'a FieldState) -> &'a [f64] {
        match self {
            Field::U => &s.u,
            Field::V => &s.v,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Side {
    Left,
    Right,
}

/// Outermost point on `side` of the midpoint where the profile crosses
/// `level`, linearly interpolated between grid nodes.
pub fn front_position(state: &FieldState, grid: &Grid1D, field: Field, level: f64, side: Side) -> Result<f64> {
    let f = field.of(state);
    if f.len() != grid.n {
        return Err(Error::InvalidParameter {
            name: "state",
            reason: format!("field length {} does not match grid size {}", f.len(), grid.n),
        });
    }
    let mid = grid.n / 2;
    let crossing = |j: usize, i: usize| -> Option<f64> {
        let (a, b) = (f[j] - level, f[i] - level);
        if a == 0.0 {
            return Some(grid.x(j));
        }
        if a.signum() == b.signum() || b == 0.0 {
            return None;
        }
        let frac = a / (a - b);
        Some(grid.x(j) + frac * (grid.x(i) - grid.x(j)))
    };
    match side {
        Side::Right => (mid..grid.n - 1).rev().find_map(|j| crossing(j + 1, j)),
        Side::Left => (0..mid).find_map(|j| crossing(j, j + 1)),
    }
    .ok_or(Error::NoCrossing { level })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrontTrack {
    pub times: Vec<f64>,
    pub positions: Vec<f64>,
    pub level: f64,
}

impl FrontTrack {
    pub fn new(level: f64) -> Self {
        Self {
            times: Vec::new(),
            positions: Vec::new(),
            level,
        }
    }

    /// Records the front of `state`; snapshots without a crossing are skipped
    /// and reported as `false`.
    pub fn record(&mut self, state: &FieldState, grid: &Grid1D, field: Field, side: Side) -> Result<bool> {
        match front_position(state, grid, field, self.level, side) {
            Ok(x) => {
                self.times.push(state.time);
                self.positions.push(x);
                Ok(true)
            }
            Err(Error::NoCrossing { .. }) => Ok(false),
            Err(e) => Err(e),
        }
    }

    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn write_csv<W: Write>(&self, w: W) -> std::io::Result<()> {
        let mut out = csv::Writer::from_writer(w);
        out.write_record(["t", "position"])?;
        for (t, x) in self.times.iter().zip(&self.positions) {
            out.write_record([t.to_string(), x.to_string()])?;
        }
        out.flush()
    }
}

pub fn track_front(snapshots: &[FieldState], grid: &Grid1D, field: Field, level: f64, side: Side) -> Result<FrontTrack> {
    let mut track = FrontTrack::new(level);
    for s in snapshots {
        track.record(s, grid, field, side)?;
    }
    Ok(track)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SpeedEstimate {
    /// |slope| of position against time.
    pub speed: f64,
    pub rms_residual: f64,
    pub samples: usize,
}

pub const MIN_FIT_SAMPLES: usize = 10;

/// Least-squares front speed over `window`. The front must stay at least
/// 5δ (5 cells when δ = 0) away from ±L throughout the window.
pub fn estimate_speed(track: &FrontTrack, window: (f64, f64), grid: &Grid1D, delta: f64) -> Result<SpeedEstimate> {
    let margin = if delta > 0.0 { 5.0 * delta } else { 5.0 * grid.dx() };
    let pts: Vec<(f64, f64)> = track
        .times
        .iter()
        .zip(&track.positions)
        .filter(|(t, _)| **t >= window.0 && **t <= window.1)
        .map(|(&t, &x)| (t, x))
        .collect();
    if pts.len() < MIN_FIT_SAMPLES {
        return Err(Error::WindowTooShort {
            samples: pts.len(),
            needed: MIN_FIT_SAMPLES,
        });
    }
    if let Some(&(t, _)) = pts.iter().find(|(_, x)| grid.half_length - x.abs() < margin) {
        return Err(Error::BoundaryContamination { t, margin });
    }
    let n = pts.len() as f64;
    let tm = pts.iter().map(|p| p.0).sum::<f64>() / n;
    let xm = pts.iter().map(|p| p.1).sum::<f64>() / n;
    let stt = pts.iter().map(|p| (p.0 - tm).powi(2)).sum::<f64>();
    let stx = pts.iter().map(|p| (p.0 - tm) * (p.1 - xm)).sum::<f64>();
    let slope = stx / stt;
    let rss = pts.iter().map(|p| (p.1 - xm - slope * (p.0 - tm)).powi(2)).sum::<f64>();
    Ok(SpeedEstimate {
        speed: slope.abs(),
        rms_residual: (rss / n).sqrt(),
        samples: pts.len(),
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum RegimeLabel {
    HomogeneousStationary,
    HomogeneousOscillatory,
    StationaryPattern,
    OscillatoryPattern,
}

impl RegimeLabel {
    pub fn label(&self) -> &'static str {
        match self {
            RegimeLabel::HomogeneousStationary => "homogeneous-stationary",
            RegimeLabel::HomogeneousOscillatory => "homogeneous-oscillatory",
            RegimeLabel::StationaryPattern => "stationary-pattern",
            RegimeLabel::OscillatoryPattern => "oscillatory-pattern",
        }
    }

    pub fn from_variances(vx: f64, vt: f64, theta_x: f64, theta_t: f64) -> Self {
        match (vx >= theta_x, vt >= theta_t) {
            (false, false) => RegimeLabel::HomogeneousStationary,
            (false, true) => RegimeLabel::HomogeneousOscillatory,
            (true, false) => RegimeLabel::StationaryPattern,
            (true, true) => RegimeLabel::OscillatoryPattern,
        }
    }
}

pub const VARIANCE_THRESHOLD: f64 = 1e-6;
pub const DEFAULT_TAIL_FRACTION: f64 = 0.25;
pub const MIN_TAIL_SNAPSHOTS: usize = 20;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Classification {
    pub label: RegimeLabel,
    /// Time-mean of the spatial variance of u.
    pub spatial_variance: f64,
    /// Space-mean of the temporal variance of u.
    pub temporal_variance: f64,
    pub tail_snapshots: usize,
}

/// Streaming accumulator for the tail-window variances of u, so long runs
/// need not keep their snapshots.
#[derive(Debug, Clone)]
pub struct RegimeAccumulator {
    count: usize,
    mean: Vec<f64>,
    m2: Vec<f64>,
    spatial_sum: f64,
}

impl RegimeAccumulator {
    pub fn new(n: usize) -> Self {
        Self {
            count: 0,
            mean: vec![0.0; n],
            m2: vec![0.0; n],
            spatial_sum: 0.0,
        }
    }

    pub fn push(&mut self, u: &[f64]) {
        assert_eq!(u.len(), self.mean.len(), "snapshot length changed");
        self.count += 1;
        let k = self.count as f64;
        for ((m, s), &x) in self.mean.iter_mut().zip(self.m2.iter_mut()).zip(u) {
            let d = x - *m;
            *m += d / k;
            *s += d * (x - *m);
        }
        let n = u.len() as f64;
        let avg = u.iter().sum::<f64>() / n;
        self.spatial_sum += u.iter().map(|x| (x - avg).powi(2)).sum::<f64>() / n;
    }

    pub fn count(&self) -> usize {
        self.count
    }

    pub fn finish(&self) -> Result<Classification> {
        if self.count < MIN_TAIL_SNAPSHOTS {
            return Err(Error::InsufficientTail {
                have: self.count,
                need: MIN_TAIL_SNAPSHOTS,
            });
        }
        let k = self.count as f64;
        let vx = self.spatial_sum / k;
        let vt = self.m2.iter().map(|s| s / k).sum::<f64>() / self.m2.len() as f64;
        Ok(Classification {
            label: RegimeLabel::from_variances(vx, vt, VARIANCE_THRESHOLD, VARIANCE_THRESHOLD),
            spatial_variance: vx,
            temporal_variance: vt,
            tail_snapshots: self.count,
        })
    }
}

/// Number of trailing snapshots forming the tail window.
pub fn tail_len(total: usize, tail_fraction: f64) -> usize {
    ((total as f64 * tail_fraction).round() as usize).min(total)
}

/// Labels a run from the variances of u over its last `tail_fraction` of
/// snapshots, thresholding both at 1e-6.
pub fn classify_pattern(snapshots: &[FieldState], tail_fraction: f64) -> Result<Classification> {
    if !(tail_fraction > 0.0 && tail_fraction <= 1.0) {
        return Err(Error::InvalidParameter {
            name: "tail_fraction",
            reason: format!("must lie in (0, 1], got {tail_fraction}"),
        });
    }
    let tail = &snapshots[snapshots.len() - tail_len(snapshots.len(), tail_fraction)..];
    let Some(first) = tail.first() else {
        return Err(Error::InsufficientTail {
            have: 0,
            need: MIN_TAIL_SNAPSHOTS,
        });
    };
    let mut acc = RegimeAccumulator::new(first.u.len());
    for s in tail {
        acc.push(&s.u);
    }
    acc.finish()
}

/// Wavenumber of the largest non-constant Fourier mode of `field`.
pub fn dominant_wavenumber(field: &[f64], grid: &Grid1D) -> f64 {
    let n = field.len();
    let mut buf: Vec<Complex64> = field.iter().map(|&x| Complex64::new(x, 0.0)).collect();
    FftPlanner::new().plan_fft_forward(n).process(&mut buf);
    let best = (1..=n / 2).max_by(|&a, &b| buf[a].norm_sqr().total_cmp(&buf[b].norm_sqr())).unwrap_or(1);
    grid.wavenumber(best)
}
