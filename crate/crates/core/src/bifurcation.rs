//! One-parameter thresholds (Hopf, transcritical, saddle-node), numerical
//! Hopf criticality and branch diagrams.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::Stability;
use crate::model::{self, CubicCoefficients, EquilibriumReport};
use crate::par::Exec;
use crate::params::{ModelParams, Parameter, State2};
use crate::temporal::{self, CycleEnding, CycleOptions, Direction, LimitCycleReport};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum ThresholdKind {
    Hopf,
    Transcritical,
    SaddleNode,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ThresholdResult {
    pub parameter: Parameter,
    pub value: f64,
    pub kind: ThresholdKind,
    /// Defining-equation residual at `value`.
    pub residual: f64,
}

/// Negated trace of J(E*) and its determinant along the unique interior branch.
pub fn hopf_functions(p: &ModelParams) -> Result<(f64, f64)> {
    let e = model::unique_interior(p)?;
    Ok((-e.jacobian.trace(), e.jacobian.det()))
}

/// Root of D1 = −tr J(E*) in `bracket` for the chosen parameter.
pub fn hopf_threshold(p: &ModelParams, which: Parameter, bracket: (f64, f64)) -> Result<ThresholdResult> {
    p.validate()?;
    let (lo, hi) = bracket;
    if !(lo < hi) {
        return Err(Error::InvalidParameter {
            name: "bracket",
            reason: format!("need lo < hi, got ({lo}, {hi})"),
        });
    }
    let d1 = |x: f64| hopf_functions(&p.with(which, x)).map(|(d1, _)| d1);
    let x = find_root(d1, lo, hi, "D1")?;
    let (res, det) = hopf_functions(&p.with(which, x))?;
    if det <= 0.0 {
        return Err(Error::DegenerateHopf { value: x, det });
    }
    Ok(ThresholdResult {
        parameter: which,
        value: x,
        kind: ThresholdKind::Hopf,
        residual: res.abs(),
    })
}

/// Illinois-modified regula falsi with a bisection safeguard.
fn find_root(f: impl Fn(f64) -> Result<f64>, mut a: f64, mut b: f64, what: &'static str) -> Result<f64> {
    let mut fa = f(a)?;
    let mut fb = f(b)?;
    if fa == 0.0 {
        return Ok(a);
    }
    if fb == 0.0 {
        return Ok(b);
    }
    if fa.signum() == fb.signum() {
        return Err(Error::NoSignChange { what, lo: a, hi: b });
    }
    let mut side = 0i8;
    for it in 0..200 {
        let secant = (a * fb - b * fa) / (fb - fa);
        let mid = 0.5 * (a + b);
        // Every fourth iterate is a plain bisection to bound the worst case.
        let x = if it % 4 == 3 || !(secant > a.min(b) && secant < a.max(b)) { mid } else { secant };
        let fx = f(x)?;
        if fx == 0.0 || (b - a).abs() <= 4.0 * f64::EPSILON * x.abs().max(1e-300) {
            return Ok(x);
        }
        if fx.signum() == fb.signum() {
            b = x;
            fb = fx;
            if side == 1 {
                fa *= 0.5;
            }
            side = 1;
        } else {
            a = x;
            fa = fx;
            if side == -1 {
                fb *= 0.5;
            }
            side = -1;
        }
    }
    Ok(0.5 * (a + b))
}

/// All Hopf points along the interior branch in `range`, bracketed from
/// `samples` log-spaced evaluations of D1.
pub fn hopf_thresholds_in(p: &ModelParams, which: Parameter, range: (f64, f64), samples: usize) -> Vec<ThresholdResult> {
    let xs = log_grid(range, samples.max(2));
    let vals: Vec<Option<f64>> = xs
        .iter()
        .map(|&x| hopf_functions(&p.with(which, x)).ok().map(|(d1, _)| d1))
        .collect();
    let mut out = Vec::new();
    for i in 0..xs.len() - 1 {
        if let (Some(a), Some(b)) = (vals[i], vals[i + 1]) {
            if a.signum() != b.signum() {
                if let Ok(t) = hopf_threshold(p, which, (xs[i], xs[i + 1])) {
                    out.push(t);
                }
            }
        }
    }
    out
}

fn log_grid((lo, hi): (f64, f64), n: usize) -> Vec<f64> {
    let (a, b) = (lo.ln(), hi.ln());
    (0..n).map(|i| (a + (b - a) * i as f64 / (n - 1) as f64).exp()).collect()
}

/// Parameter value where mγ² = cβ(γ + αβ), i.e. where E2 exchanges stability
/// with the interior branch.
pub fn transcritical_threshold(p: &ModelParams, which: Parameter) -> Result<ThresholdResult> {
    p.validate()?;
    let ModelParams { c, m, gamma: g, beta: b, alpha: a, .. } = *p;
    let value = match which {
        Parameter::C => m * g * g / (b * (g + a * b)),
        Parameter::Gamma => {
            // mγ² − cβγ − cαβ² = 0; the product of the roots is negative, so
            // exactly one is positive.
            let (qa, qb, qc) = (m, -c * b, -c * a * b * b);
            let disc = qb * qb - 4.0 * qa * qc;
            let root = (-qb + disc.sqrt()) / (2.0 * qa);
            if !(root > 0.0) {
                return Err(Error::NoPositiveRoot(format!("gamma: discriminant {disc}")));
            }
            root
        }
        Parameter::Alpha => {
            let x = (m * g * g - c * b * g) / (c * b * b);
            if !(x >= 0.0) {
                return Err(Error::NoPositiveRoot(format!("alpha would be {x}")));
            }
            x
        }
    };
    let at = p.with(which, value);
    Ok(ThresholdResult {
        parameter: which,
        value,
        kind: ThresholdKind::Transcritical,
        residual: at.prey_free_margin().abs(),
    })
}

/// Values of α in `alpha_range` where two interior equilibria are born or
/// annihilate, from a scan of `n` uniform points refined on the double-root
/// condition R = R' = 0.
pub fn saddle_node_scan(p: &ModelParams, alpha_range: (f64, f64), n: usize) -> Result<Vec<ThresholdResult>> {
    p.validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least 2 samples, got {n}"),
        });
    }
    let (lo, hi) = alpha_range;
    let xs: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let counts: Vec<usize> = xs
        .iter()
        .map(|&a| model::interior_equilibria(&p.with_alpha(a)).points.len())
        .collect();
    let mut out = Vec::new();
    for i in 0..n - 1 {
        if counts[i] == counts[i + 1] {
            continue;
        }
        if let Some(t) = refine_saddle_node(p, xs[i], xs[i + 1]) {
            out.push(t);
        }
    }
    Ok(out)
}

/// R evaluated at each critical point of R inside (0, 1).
fn critical_values(p: &ModelParams, alpha: f64) -> Vec<(f64, f64)> {
    let coef = CubicCoefficients::new(&p.with_alpha(alpha));
    coef.critical_points()
        .into_iter()
        .filter(|&u| u > 0.0 && u < 1.0)
        .map(|u| (u, coef.eval(u)))
        .collect()
}

fn refine_saddle_node(p: &ModelParams, a: f64, b: f64) -> Option<ThresholdResult> {
    // A fold is where R at one of its critical points changes sign.
    let va = critical_values(p, a);
    let vb = critical_values(p, b);
    for slot in 0..va.len().min(vb.len()) {
        if va[slot].1.signum() == vb[slot].1.signum() {
            continue;
        }
        let g = |x: f64| -> Result<f64> {
            critical_values(p, x)
                .get(slot)
                .map(|c| c.1)
                .ok_or(Error::NoSignChange { what: "R at critical point", lo: a, hi: b })
        };
        let alpha = find_root(g, a, b, "R at critical point").ok()?;
        let coef = CubicCoefficients::new(&p.with_alpha(alpha));
        let u = critical_values(p, alpha).get(slot)?.0;
        return Some(ThresholdResult {
            parameter: Parameter::Alpha,
            value: alpha,
            kind: ThresholdKind::SaddleNode,
            residual: coef.eval(u).abs() + coef.deriv(u).abs(),
        });
    }
    None
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Criticality {
    Supercritical,
    Subcritical,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct CriticalityOptions {
    /// Relative offsets from the threshold; the sqrt-scaling fit uses all of them.
    pub offsets: [f64; 4],
    /// Seeds are E* with u scaled by these factors.
    pub seed_factors: [f64; 2],
    pub cycle: CycleOptions,
    pub slope_tolerance: f64,
}

impl CriticalityOptions {
    /// Offsets `base·{1, 2, 4, 8}` with the default cycle budget scaled for
    /// the slow growth rates near threshold.
    pub fn with_offset(base: f64) -> Self {
        Self {
            offsets: [base, 2.0 * base, 4.0 * base, 8.0 * base],
            seed_factors: [1.001, 1.01],
            cycle: CycleOptions::with_budget(6e4),
            slope_tolerance: 0.15,
        }
    }
}

impl Default for CriticalityOptions {
    fn default() -> Self {
        Self::with_offset(0.005)
    }
}

/// Evidence behind a criticality verdict.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CriticalityReport {
    pub criticality: Criticality,
    /// Parameter offset sign (±1) that makes E* stable.
    pub stable_side: f64,
    /// Unstable cycle found on the stable side, if any.
    pub unstable_cycle: Option<LimitCycleReport>,
    /// (relative offset, u-range) of stable cycles on the unstable side.
    pub amplitudes: Vec<(f64, f64)>,
    pub slope: Option<f64>,
}

/// Classifies a Hopf point from cycle geometry on both sides of it.
///
/// Subcritical when backward integration on the stable side finds a
/// repelling cycle around E*; supercritical when the only cycles are stable
/// ones on the unstable side whose size grows like the square root of the
/// distance to threshold.
pub fn hopf_criticality(p: &ModelParams, th: &ThresholdResult, opts: &CriticalityOptions) -> Result<CriticalityReport> {
    if th.kind != ThresholdKind::Hopf {
        return Err(Error::InvalidParameter {
            name: "th",
            reason: format!("expected a Hopf threshold, got {:?}", th.kind),
        });
    }
    let which = th.parameter;
    let at = |rel: f64| p.with(which, th.value * (1.0 + rel));
    let probe = opts.offsets[0];
    let (d1_plus, _) = hopf_functions(&at(probe))?;
    let (d1_minus, _) = hopf_functions(&at(-probe))?;
    if d1_plus.signum() == d1_minus.signum() {
        return Err(Error::Inconclusive(format!(
            "trace does not change sign across {} = {} at relative offset {probe}",
            which, th.value
        )));
    }
    // D1 > 0 means a negative trace, i.e. a stable focus.
    let stable_side = if d1_plus > 0.0 { 1.0 } else { -1.0 };

    let cycle_from = |q: &ModelParams, dir: Direction| -> Result<Option<LimitCycleReport>> {
        let e = model::unique_interior(q)?.point;
        for &f in &opts.seed_factors {
            match temporal::detect_limit_cycle(q, State2::new(e.u * f, e.v), dir, &opts.cycle) {
                Ok(r) if r.exists => return Ok(Some(r)),
                Ok(_) => {}
                Err(Error::Inconclusive(_)) => {}
                Err(e) => return Err(e),
            }
        }
        Ok(None)
    };

    let stable_q = at(stable_side * probe);
    if let Some(c) = cycle_from(&stable_q, Direction::Backward)? {
        return Ok(CriticalityReport {
            criticality: Criticality::Subcritical,
            stable_side,
            unstable_cycle: Some(c),
            amplitudes: Vec::new(),
            slope: None,
        });
    }

    let mut amplitudes = Vec::with_capacity(opts.offsets.len());
    for &rel in &opts.offsets {
        let q = at(-stable_side * rel);
        match cycle_from(&q, Direction::Forward)? {
            Some(c) => amplitudes.push((rel, c.amplitude())),
            None => {
                return Err(Error::Inconclusive(format!(
                    "no stable cycle on the unstable side at relative offset {rel}"
                )))
            }
        }
    }
    let slope = loglog_slope(&amplitudes);
    if (slope - 0.5).abs() <= opts.slope_tolerance {
        Ok(CriticalityReport {
            criticality: Criticality::Supercritical,
            stable_side,
            unstable_cycle: None,
            amplitudes,
            slope: Some(slope),
        })
    } else {
        Err(Error::Inconclusive(format!(
            "cycle amplitudes {amplitudes:?} scale with log-log slope {slope:.3}, not 0.5"
        )))
    }
}

fn loglog_slope(pts: &[(f64, f64)]) -> f64 {
    let n = pts.len() as f64;
    let xs: Vec<f64> = pts.iter().map(|p| p.0.ln()).collect();
    let ys: Vec<f64> = pts.iter().map(|p| p.1.ln()).collect();
    let mx = xs.iter().sum::<f64>() / n;
    let my = ys.iter().sum::<f64>() / n;
    let sxy: f64 = xs.iter().zip(&ys).map(|(x, y)| (x - mx) * (y - my)).sum();
    let sxx: f64 = xs.iter().map(|x| (x - mx) * (x - mx)).sum();
    sxy / sxx
}

/// All equilibria at one parameter value, plus the attracting cycle when the
/// interior point is unstable.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchPoint {
    pub param: f64,
    pub equilibria: Vec<EquilibriumReport>,
    pub cycle: Option<LimitCycleReport>,
    pub error: Option<String>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BranchDiagram {
    pub parameter: Parameter,
    pub points: Vec<BranchPoint>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BranchOptions {
    pub cycle: CycleOptions,
    /// Trisect grid cells within two cells of a stability change.
    pub refine: bool,
    pub exec: Exec,
}

impl Default for BranchOptions {
    fn default() -> Self {
        Self {
            cycle: CycleOptions::default(),
            refine: true,
            exec: Exec::default(),
        }
    }
}

fn branch_point(p: &ModelParams, which: Parameter, x: f64, opts: &BranchOptions) -> BranchPoint {
    let q = p.with(which, x);
    let equilibria = model::all_equilibria(&q);
    let mut cycle = None;
    let mut error = None;
    if let Some(e) = equilibria.iter().skip(3).find(|e| {
        matches!(e.stability, Stability::UnstableFocus | Stability::UnstableNode)
    }) {
        let seed = State2::new(e.point.u * 1.01, e.point.v);
        match temporal::detect_limit_cycle(&q, seed, Direction::Forward, &opts.cycle) {
            Ok(c) if c.exists => cycle = Some(c),
            Ok(c) => {
                if let CycleEnding::Escaped { t } = c.ending {
                    error = Some(format!("orbit left the positive box at t = {t}"));
                }
            }
            Err(err) => error = Some(err.to_string()),
        }
    }
    BranchPoint {
        param: x,
        equilibria,
        cycle,
        error,
    }
}

/// Stability signature used to detect regime changes between grid points.
fn signature(b: &BranchPoint) -> Vec<(usize, bool)> {
    b.equilibria
        .iter()
        .enumerate()
        .map(|(i, e)| (i, e.stability.is_stable()))
        .collect()
}

/// Equilibria and cycle extrema over a uniform grid of `n` values.
pub fn branch_diagram(p: &ModelParams, which: Parameter, range: (f64, f64), n: usize, opts: &BranchOptions) -> Result<BranchDiagram> {
    p.validate()?;
    if n < 10 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least 10 grid points, got {n}"),
        });
    }
    let (lo, hi) = range;
    let grid: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    let mut points = opts.exec.map(&grid, |&x| branch_point(p, which, x, opts));

    if opts.refine {
        let h = (hi - lo) / (n - 1) as f64;
        let mut extra = Vec::new();
        for i in 0..points.len() - 1 {
            if signature(&points[i]) != signature(&points[i + 1]) {
                let from = i.saturating_sub(2);
                let to = (i + 3).min(n - 1);
                for &x in &grid[from..to] {
                    extra.push(x + h / 3.0);
                    extra.push(x + 2.0 * h / 3.0);
                }
            }
        }
        extra.sort_by(f64::total_cmp);
        extra.dedup();
        points.extend(opts.exec.map(&extra, |&x| branch_point(p, which, x, opts)));
        points.sort_by(|a, b| a.param.total_cmp(&b.param));
    }
    Ok(BranchDiagram {
        parameter: which,
        points,
    })
}

impl BranchDiagram {
    /// CSV with columns param, branch_id, u, v, stability, cycle_umin,
    /// cycle_umax, cycle_vmin, cycle_vmax. Cycle columns are filled on the
    /// row of the unstable interior point they surround and empty elsewhere.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record([
            "param",
            "branch_id",
            "u",
            "v",
            "stability",
            "cycle_umin",
            "cycle_umax",
            "cycle_vmin",
            "cycle_vmax",
        ])?;
        for pt in &self.points {
            let mut interior = 0;
            for e in &pt.equilibria {
                let id = match e.kind {
                    model::EquilibriumKind::Interior => {
                        interior += 1;
                        format!("E*{interior}")
                    }
                    k => k.label().to_string(),
                };
                let with_cycle = e.kind == model::EquilibriumKind::Interior && !e.stability.is_stable();
                let cyc: [String; 4] = match (&pt.cycle, with_cycle) {
                    (Some(c), true) => [
                        c.amplitude_u.0.to_string(),
                        c.amplitude_u.1.to_string(),
                        c.amplitude_v.0.to_string(),
                        c.amplitude_v.1.to_string(),
                    ],
                    _ => Default::default(),
                };
                w.write_record([
                    pt.param.to_string(),
                    id,
                    e.point.u.to_string(),
                    e.point.v.to_string(),
                    e.stability.label().to_string(),
                    cyc[0].clone(),
                    cyc[1].clone(),
                    cyc[2].clone(),
                    cyc[3].clone(),
                ])?;
            }
        }
        w.flush()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn transcritical_in_c_zeroes_b11() {
        let p = ModelParams::baseline();
        let t = transcritical_threshold(&p, Parameter::C).unwrap();
        assert!((t.value - 0.637).abs() < 1e-3);
        assert!(p.with_c(t.value).b11().abs() < 1e-10);
        assert!(t.residual < 1e-8);
    }

    #[test]
    fn transcritical_in_gamma_and_alpha_round_trip() {
        let p = ModelParams::baseline();
        let g = transcritical_threshold(&p, Parameter::Gamma).unwrap();
        assert!((g.value - 0.0066).abs() < 1e-4);
        let q = p.with_gamma(0.02);
        let a = transcritical_threshold(&q, Parameter::Alpha).unwrap();
        assert!(q.with_alpha(a.value).prey_free_margin().abs() < 1e-12);
    }

    #[test]
    fn hopf_in_alpha() {
        let p = ModelParams::baseline();
        let t = hopf_threshold(&p, Parameter::Alpha, (0.01, 0.2)).unwrap();
        assert!((t.value - 0.0499).abs() < 1e-3);
        assert!(t.residual < 1e-8);
    }

    #[test]
    fn no_sign_change_is_reported() {
        let p = ModelParams::baseline();
        assert!(matches!(
            hopf_threshold(&p, Parameter::Alpha, (0.01, 0.03)),
            Err(Error::NoSignChange { .. })
        ));
    }

    #[test]
    fn loglog_slope_of_square_root() {
        let pts: Vec<(f64, f64)> = [1e-3, 2e-3, 4e-3, 8e-3].iter().map(|&x: &f64| (x, 3.0 * x.sqrt())).collect();
        assert!((loglog_slope(&pts) - 0.5).abs() < 1e-12);
    }
}
