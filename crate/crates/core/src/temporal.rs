//! Time integration of the temporal system, limit-cycle detection and
//! heteroclinic-orbit tracing.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::model::{self, kinetics, EquilibriumKind};
use crate::ode::{self, Control, OdeOptions, StepData, Vec2};
use crate::params::{ModelParams, State2};

/// Sampled solution of the temporal system.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Trajectory {
    pub times: Vec<f64>,
    pub states: Vec<State2>,
    pub params: ModelParams,
}

impl Trajectory {
    pub fn len(&self) -> usize {
        self.times.len()
    }

    pub fn is_empty(&self) -> bool {
        self.times.is_empty()
    }

    pub fn last(&self) -> Option<State2> {
        self.states.last().copied()
    }

    /// CSV with columns `t,u,v`.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["t", "u", "v"])?;
        for (t, x) in self.times.iter().zip(&self.states) {
            w.write_record([t.to_string(), x.u.to_string(), x.v.to_string()])?;
        }
        w.flush()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Direction {
    Forward,
    Backward,
}

fn field(p: &ModelParams, dir: Direction) -> impl Fn(&Vec2) -> Vec2 + '_ {
    let sign = match dir {
        Direction::Forward => 1.0,
        Direction::Backward => -1.0,
    };
    move |y: &Vec2| {
        let (du, dv) = kinetics(y[0], y[1], y[1], p);
        [sign * du, sign * dv]
    }
}

fn check_start(x0: State2, p: &ModelParams) -> Result<()> {
    p.validate()?;
    if !x0.is_finite() {
        return Err(Error::NonFinite {
            context: format!("initial state ({}, {})", x0.u, x0.v),
        });
    }
    if x0.u < 0.0 || x0.v < 0.0 {
        return Err(Error::InvalidParameter {
            name: "x0",
            reason: format!("state must be non-negative, got ({}, {})", x0.u, x0.v),
        });
    }
    Ok(())
}

/// Integrates forward to `t_end`, recording every accepted step.
pub fn integrate(x0: State2, p: &ModelParams, t_end: f64, rel_tol: f64, abs_tol: f64) -> Result<Trajectory> {
    check_start(x0, p)?;
    let opts = OdeOptions::with_tol(rel_tol, abs_tol);
    let mut times = vec![0.0];
    let mut states = vec![x0];
    ode::integrate(field(p, Direction::Forward), 0.0, x0.into(), t_end, &opts, |s| {
        times.push(s.t1);
        states.push(s.y1.into());
        Control::Continue
    })?;
    Ok(Trajectory {
        times,
        states,
        params: *p,
    })
}

/// Integrates forward and reports the dense solution at `sample_times`
/// (ascending, non-negative; values beyond the last are ignored).
pub fn integrate_sampled(x0: State2, p: &ModelParams, sample_times: &[f64], opts: &OdeOptions) -> Result<Trajectory> {
    check_start(x0, p)?;
    if sample_times.windows(2).any(|w| !(w[1] > w[0])) || sample_times.first().is_some_and(|&t| t < 0.0) {
        return Err(Error::InvalidParameter {
            name: "sample_times",
            reason: "must be non-negative and strictly increasing".into(),
        });
    }
    let mut times = Vec::with_capacity(sample_times.len());
    let mut states = Vec::with_capacity(sample_times.len());
    let mut next = 0;
    while next < sample_times.len() && sample_times[next] == 0.0 {
        times.push(0.0);
        states.push(x0);
        next += 1;
    }
    if let Some(&t_end) = sample_times.last().filter(|&&t| t > 0.0) {
        ode::integrate(field(p, Direction::Forward), 0.0, x0.into(), t_end, opts, |s| {
            while next < sample_times.len() && sample_times[next] <= s.t1 {
                let t = sample_times[next];
                times.push(t);
                states.push(s.interpolate(t).into());
                next += 1;
            }
            Control::Continue
        })?;
    }
    Ok(Trajectory {
        times,
        states,
        params: *p,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum CycleStability {
    Stable,
    Unstable,
}

/// How a cycle query ended.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum CycleEnding {
    Periodic,
    ConvergedToPoint(State2),
    /// Left the positive box (typical for backward runs with no repelling cycle).
    Escaped { t: f64 },
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LimitCycleReport {
    pub exists: bool,
    /// Zero when no cycle was found.
    pub period: f64,
    pub amplitude_u: (f64, f64),
    pub amplitude_v: (f64, f64),
    pub stability: CycleStability,
    pub ending: CycleEnding,
    /// Spread of the last successive u-maxima relative to the cycle's u-range.
    pub maxima_spread: f64,
}

impl LimitCycleReport {
    pub fn amplitude(&self) -> f64 {
        self.amplitude_u.1 - self.amplitude_u.0
    }

    /// Whether this cycle's u-range strictly contains `inner`'s.
    pub fn encloses(&self, inner: &LimitCycleReport) -> bool {
        self.amplitude_u.0 < inner.amplitude_u.0 && self.amplitude_u.1 > inner.amplitude_u.1
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CycleOptions {
    pub t_budget: f64,
    /// Fraction of the budget discarded before extrema are collected.
    pub transient_fraction: f64,
    /// Number of consecutive periods that must agree.
    pub periods: usize,
    pub rel_spread: f64,
    /// A cycle whose u-range falls below this is treated as a point.
    pub min_amplitude: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
}

impl Default for CycleOptions {
    fn default() -> Self {
        Self {
            t_budget: 2e4,
            transient_fraction: 0.5,
            periods: 5,
            rel_spread: 1e-4,
            min_amplitude: 1e-6,
            rel_tol: 1e-10,
            abs_tol: 1e-12,
        }
    }
}

impl CycleOptions {
    pub fn with_budget(t_budget: f64) -> Self {
        Self {
            t_budget,
            ..Self::default()
        }
    }
}

#[derive(Debug, Clone, Copy)]
struct Extremum {
    t: f64,
    value: f64,
}

/// Extrema of both components inside one accepted step, located by bisection
/// on the interpolated derivative sign.
fn step_extrema<F: Fn(&Vec2) -> Vec2>(f: &F, s: &StepData, comp: usize, maxima: &mut Vec<Extremum>, minima: &mut Vec<Extremum>) {
    let d0 = f(&s.y0)[comp];
    let d1 = f(&s.y1)[comp];
    if d0 == 0.0 || d0.signum() == d1.signum() {
        return;
    }
    let (mut a, mut b) = (s.t0, s.t1);
    for _ in 0..60 {
        let mid = 0.5 * (a + b);
        let dm = f(&s.interpolate(mid))[comp];
        if dm.signum() == d0.signum() {
            a = mid;
        } else {
            b = mid;
        }
    }
    let t = 0.5 * (a + b);
    let e = Extremum {
        t,
        value: s.interpolate(t)[comp],
    };
    if d0 > 0.0 {
        maxima.push(e);
    } else {
        minima.push(e);
    }
}

fn in_box(y: &Vec2, p: &ModelParams) -> bool {
    y[0] > 0.0 && y[1] > 0.0 && y[0] < 2.0 && y[1] < 4.0 * p.v_box()
}

/// Finds a periodic orbit by integrating from `seed` in the given time direction.
///
/// Backward integration turns repelling cycles into attracting ones, so a
/// cycle found that way is reported as unstable.
pub fn detect_limit_cycle(p: &ModelParams, seed: State2, direction: Direction, opts: &CycleOptions) -> Result<LimitCycleReport> {
    check_start(seed, p)?;
    let f = field(p, direction);
    let ode_opts = OdeOptions {
        h_max: 1.0,
        ..OdeOptions::with_tol(opts.rel_tol, opts.abs_tol)
    };
    let stability = match direction {
        Direction::Forward => CycleStability::Stable,
        Direction::Backward => CycleStability::Unstable,
    };
    let t_tail = opts.transient_fraction * opts.t_budget;
    let need = opts.periods + 1;

    let mut umax: Vec<Extremum> = Vec::new();
    let mut umin: Vec<Extremum> = Vec::new();
    let mut vmax: Vec<Extremum> = Vec::new();
    let mut vmin: Vec<Extremum> = Vec::new();
    let mut escaped = None;
    let mut at_rest = false;
    let mut periodic = false;
    let mut tail_lo = [f64::INFINITY; 2];
    let mut tail_hi = [f64::NEG_INFINITY; 2];
    let mut last_y = Vec2::from(seed);

    let end = ode::integrate(&f, 0.0, seed.into(), opts.t_budget, &ode_opts, |s| {
        last_y = s.y1;
        if !in_box(&s.y1, p) {
            escaped = Some(s.t1);
            return Control::Stop;
        }
        let dy = f(&s.y1);
        if dy[0].hypot(dy[1]) < 1e-14 {
            at_rest = true;
            return Control::Stop;
        }
        if s.t1 < t_tail {
            return Control::Continue;
        }
        for i in 0..2 {
            tail_lo[i] = tail_lo[i].min(s.y1[i]);
            tail_hi[i] = tail_hi[i].max(s.y1[i]);
        }
        let before = umax.len();
        step_extrema(&f, s, 0, &mut umax, &mut umin);
        step_extrema(&f, s, 1, &mut vmax, &mut vmin);
        if umax.len() > before && umax.len() >= need && maxima_agree(&umax[umax.len() - need..], &umin, opts) {
            periodic = true;
            return Control::Stop;
        }
        Control::Continue
    });
    let end = match end {
        Ok(e) => e,
        // A backward run that runs away to infinity in finite time fails the
        // step-size control; that is an escape, not a cycle.
        Err(Error::StepSizeUnderflow { t }) if direction == Direction::Backward => {
            return Ok(no_cycle(stability, CycleEnding::Escaped { t }));
        }
        Err(e) => return Err(e),
    };

    if let Some(t) = escaped {
        return Ok(no_cycle(stability, CycleEnding::Escaped { t }));
    }
    if at_rest {
        return Ok(no_cycle(stability, CycleEnding::ConvergedToPoint(last_y.into())));
    }
    if periodic {
        let recent = &umax[umax.len() - need..];
        let (t_lo, t_hi) = (recent[0].t, recent[need - 1].t);
        let within = |e: &&Extremum| e.t >= t_lo && e.t <= t_hi;
        let lo_of = |v: &[Extremum]| v.iter().filter(within).map(|e| e.value).fold(f64::INFINITY, f64::min);
        let hi_of = |v: &[Extremum]| v.iter().filter(within).map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
        return Ok(LimitCycleReport {
            exists: true,
            period: (t_hi - t_lo) / opts.periods as f64,
            amplitude_u: (lo_of(&umin), hi_of(recent)),
            amplitude_v: (lo_of(&vmin), hi_of(&vmax)),
            stability,
            ending: CycleEnding::Periodic,
            maxima_spread: spread(recent, &umin),
        });
    }

    // Budget spent without agreement: decide between a slow spiral into a
    // point and a genuinely unresolved case.
    let tail_amp = (tail_hi[0] - tail_lo[0]).max(0.0);
    let last_amp = last_period_amplitude(&umax, &umin);
    if tail_amp < opts.min_amplitude || last_amp.is_some_and(|a| a < opts.min_amplitude) {
        return Ok(no_cycle(stability, CycleEnding::ConvergedToPoint(end.y.into())));
    }
    if umax.len() >= need && decaying(&umax[umax.len() - need..], &umin) {
        return Ok(no_cycle(stability, CycleEnding::ConvergedToPoint(end.y.into())));
    }
    Err(Error::Inconclusive(format!(
        "{} u-maxima in tail, spread {:.3e}, tail u-range {:.3e} after t = {}",
        umax.len(),
        if umax.len() >= need { spread(&umax[umax.len() - need..], &umin) } else { f64::NAN },
        tail_amp,
        end.t
    )))
}

fn no_cycle(stability: CycleStability, ending: CycleEnding) -> LimitCycleReport {
    LimitCycleReport {
        exists: false,
        period: 0.0,
        amplitude_u: (0.0, 0.0),
        amplitude_v: (0.0, 0.0),
        stability,
        ending,
        maxima_spread: f64::NAN,
    }
}

/// Spread of successive maxima relative to the oscillation range they span.
///
/// Measuring against the range (rather than the maxima themselves) keeps a
/// slowly decaying spiral around a point from passing as a cycle.
fn spread(m: &[Extremum], minima: &[Extremum]) -> f64 {
    let hi = m.iter().map(|e| e.value).fold(f64::NEG_INFINITY, f64::max);
    let lo = m.iter().map(|e| e.value).fold(f64::INFINITY, f64::min);
    let (t0, t1) = (m[0].t, m[m.len() - 1].t);
    let floor = minima
        .iter()
        .filter(|e| e.t >= t0 && e.t <= t1)
        .map(|e| e.value)
        .fold(f64::INFINITY, f64::min);
    let range = hi - floor;
    if range.is_finite() && range > 0.0 {
        (hi - lo) / range
    } else {
        f64::INFINITY
    }
}

fn maxima_agree(m: &[Extremum], minima: &[Extremum], opts: &CycleOptions) -> bool {
    if spread(m, minima) >= opts.rel_spread {
        return false;
    }
    let gaps: Vec<f64> = m.windows(2).map(|w| w[1].t - w[0].t).collect();
    let gmax = gaps.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let gmin = gaps.iter().copied().fold(f64::INFINITY, f64::min);
    gmin > 0.0 && (gmax - gmin) / gmax < 1e-2
}

fn last_period_amplitude(umax: &[Extremum], umin: &[Extremum]) -> Option<f64> {
    let hi = umax.last()?;
    let lo = umin.iter().rev().find(|e| e.t < hi.t)?;
    Some(hi.value - lo.value)
}

/// Whether per-period amplitudes shrink monotonically by a clear factor.
fn decaying(recent: &[Extremum], umin: &[Extremum]) -> bool {
    let amps: Vec<f64> = recent
        .iter()
        .filter_map(|mx| umin.iter().rev().find(|e| e.t < mx.t).map(|mn| mx.value - mn.value))
        .collect();
    amps.len() >= 3 && amps.windows(2).all(|w| w[1] < w[0]) && amps[amps.len() - 1] < 0.99 * amps[0]
}

/// Equilibria a heteroclinic orbit may start from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Source {
    E0,
    E1,
    E2,
}

/// Where a traced orbit ends up.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub enum Terminal {
    InteriorPoint(State2),
    InteriorCycle { period: f64, amplitude_u: (f64, f64) },
    Other(State2),
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicReport {
    pub source: Source,
    pub launch: State2,
    /// Unit launch direction (into the open positive quadrant).
    pub direction: [f64; 2],
    pub trajectory: Trajectory,
    pub terminal: Terminal,
    /// Smallest distance to E1 along the orbit (route diagnostic).
    pub closest_to_e1: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct HeteroclinicOptions {
    pub t_budget: f64,
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// Distance to a stable interior equilibrium that counts as arrival.
    pub arrival: f64,
}

impl Default for HeteroclinicOptions {
    fn default() -> Self {
        Self {
            t_budget: 2e4,
            rel_tol: 1e-10,
            abs_tol: 1e-14,
            arrival: 1e-6,
        }
    }
}

/// Launch point and unit direction for an orbit leaving `source`.
///
/// For the saddles E1 and E2 this is the unstable eigenvector; E0 is a node
/// whose eigenvectors lie on the invariant axes, so the launch uses the
/// diagonal between them to enter the open quadrant.
pub fn launch_direction(source: Source, p: &ModelParams) -> Result<(State2, [f64; 2])> {
    let b = model::boundary_equilibria(p);
    match source {
        Source::E0 => {
            let r = std::f64::consts::FRAC_1_SQRT_2;
            Ok((b[0].point, [r, r]))
        }
        Source::E1 | Source::E2 => {
            let idx = if source == Source::E1 { 1 } else { 2 };
            let eq = &b[idx];
            let [l_hi, l_lo] = eq.eigenvalues;
            if !(l_hi.re > 0.0 && l_lo.re < 0.0 && l_hi.im == 0.0) {
                return Err(Error::NotASaddle(if idx == 1 { "E1" } else { "E2" }));
            }
            let mut d = eq.jacobian.eigenvector(l_hi.re);
            // Orient so the launch enters the region where the absent species is positive.
            let key = if source == Source::E1 { 1 } else { 0 };
            if d[key] < 0.0 {
                d = [-d[0], -d[1]];
            }
            Ok((eq.point, d))
        }
    }
}

/// Follows the unstable manifold of `source` and labels its ω-limit.
pub fn trace_heteroclinic(source: Source, p: &ModelParams, offset: f64, opts: &HeteroclinicOptions) -> Result<HeteroclinicReport> {
    p.validate()?;
    if !(1e-8..=1e-4).contains(&offset) {
        return Err(Error::InvalidParameter {
            name: "offset",
            reason: format!("must lie in [1e-8, 1e-4], got {offset}"),
        });
    }
    let (base, dir) = launch_direction(source, p)?;
    let launch = State2::new(base.u + offset * dir[0], base.v + offset * dir[1]);

    let interior: Vec<State2> = model::interior_equilibria(p)
        .points
        .iter()
        .filter(|e| e.kind == EquilibriumKind::Interior && e.stability.is_stable())
        .map(|e| e.point)
        .collect();
    let e1 = State2::new(1.0, 0.0);

    let f = field(p, Direction::Forward);
    let ode_opts = OdeOptions {
        h_max: 1.0,
        ..OdeOptions::with_tol(opts.rel_tol, opts.abs_tol.max(1e-14))
    };
    let mut times = vec![0.0];
    let mut states = vec![launch];
    let mut closest = launch.distance(&e1);
    let mut arrived = None;
    ode::integrate(&f, 0.0, launch.into(), opts.t_budget, &ode_opts, |s| {
        let x: State2 = s.y1.into();
        times.push(s.t1);
        states.push(x);
        closest = closest.min(x.distance(&e1));
        if let Some(e) = interior.iter().find(|e| e.distance(&x) < opts.arrival) {
            arrived = Some(*e);
            return Control::Stop;
        }
        Control::Continue
    })?;
    let last = *states.last().expect("trajectory starts with the launch point");

    let terminal = if let Some(e) = arrived {
        Terminal::InteriorPoint(e)
    } else {
        match detect_limit_cycle(p, last, Direction::Forward, &CycleOptions::default()) {
            Ok(c) if c.exists => Terminal::InteriorCycle {
                period: c.period,
                amplitude_u: c.amplitude_u,
            },
            Ok(LimitCycleReport {
                ending: CycleEnding::ConvergedToPoint(x),
                ..
            }) => match interior.iter().find(|e| e.distance(&x) < 1e-3) {
                Some(e) => Terminal::InteriorPoint(*e),
                None => Terminal::Other(x),
            },
            Ok(_) => Terminal::Other(last),
            Err(Error::Inconclusive(msg)) => return Err(Error::BudgetExhausted(msg)),
            Err(e) => return Err(e),
        }
    };

    Ok(HeteroclinicReport {
        source,
        launch,
        direction: dir,
        trajectory: Trajectory {
            times,
            states,
            params: *p,
        },
        terminal,
        closest_to_e1: closest,
    })
}

/// Symmetric Hausdorff distance between two sampled orbits, ignoring the
/// first `skip` samples of each.
pub fn hausdorff(a: &[State2], b: &[State2], skip: usize) -> f64 {
    let a = &a[skip.min(a.len())..];
    let b = &b[skip.min(b.len())..];
    let one_way = |x: &[State2], y: &[State2]| {
        x.iter()
            .map(|p| y.iter().map(|q| p.distance(q)).fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max)
    };
    one_way(a, b).max(one_way(b, a))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn baseline_converges_to_interior_point() {
        let p = ModelParams::baseline();
        let traj = integrate(State2::new(0.5, 5.0), &p, 5000.0, 1e-10, 1e-12).unwrap();
        let end = traj.last().unwrap();
        assert!((end.u - 0.443).abs() < 1e-3 && (end.v - 5.662).abs() < 1e-3, "{end:?}");
        assert!(traj.times.windows(2).all(|w| w[1] > w[0]));
    }

    #[test]
    fn equilibrium_is_invariant() {
        let p = ModelParams::baseline();
        let e = model::unique_interior(&p).unwrap().point;
        let traj = integrate(e, &p, 2000.0, 1e-10, 1e-12).unwrap();
        assert!(traj.states.iter().all(|x| x.distance(&e) < 1e-8));
    }

    #[test]
    fn sampled_output_hits_requested_times() {
        let p = ModelParams::baseline();
        let ts: Vec<f64> = (0..=10).map(|i| i as f64 * 10.0).collect();
        let tr = integrate_sampled(State2::new(0.5, 5.0), &p, &ts, &OdeOptions::default()).unwrap();
        assert_eq!(tr.times, ts);
        assert_eq!(tr.states[0], State2::new(0.5, 5.0));
    }

    #[test]
    fn launch_direction_from_prey_free_state() {
        let p = ModelParams::baseline();
        let (_, d) = launch_direction(Source::E2, &p).unwrap();
        assert!(d[0] > 0.0 && d[1] > 0.0);
        assert!((d[1] / d[0] - 0.643).abs() < 1e-3);
        let (_, d1) = launch_direction(Source::E1, &p).unwrap();
        assert!(d1[0] < 0.0 && d1[1] > 0.0);
    }

    #[test]
    fn stable_prey_free_state_is_not_a_source() {
        let p = ModelParams::baseline().with_c(0.8);
        assert_eq!(launch_direction(Source::E2, &p), Err(Error::NotASaddle("E2")));
    }

    #[test]
    fn csv_has_header_and_rows() {
        let p = ModelParams::baseline();
        let tr = integrate(State2::new(0.5, 5.0), &p, 1.0, 1e-8, 1e-12).unwrap();
        let mut buf = Vec::new();
        tr.write_csv(&mut buf).unwrap();
        let text = String::from_utf8(buf).unwrap();
        assert!(text.starts_with("t,u,v\n"));
        assert_eq!(text.lines().count(), tr.len() + 1);
    }
}
