//! Linear stability of the homogeneous coexistence state against spatial
//! modes: dispersion relations, Turing thresholds, unstable bands and
//! linear front-speed predictions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{quadratic_eigs, Mat2};
use crate::model;
use crate::par::Exec;
use crate::params::{ModelParams, SpatialParams};

/// Below this |x| the sinc helpers switch to their Taylor series.
const SINC_SERIES: f64 = 1e-4;

/// sin(x)/x with the removable singularity filled in.
pub fn sinc(x: f64) -> f64 {
    if x.abs() < SINC_SERIES {
        let x2 = x * x;
        1.0 - x2 / 6.0 + x2 * x2 / 120.0
    } else {
        x.sin() / x
    }
}

/// d/dx [sin(x)/x].
pub fn sinc_prime(x: f64) -> f64 {
    if x.abs() < SINC_SERIES {
        let x2 = x * x;
        -x / 3.0 + x * x2 / 30.0
    } else {
        (x * x.cos() - x.sin()) / (x * x)
    }
}

/// Complex continuation of sin(z)/z; equals sinh(y)/y on the imaginary axis.
pub fn csinc(z: Complex64) -> Complex64 {
    if z.norm() < SINC_SERIES {
        let z2 = z * z;
        Complex64::new(1.0, 0.0) - z2 / 6.0 + z2 * z2 / 120.0
    } else {
        z.sin() / z
    }
}

/// Linearization data of the homogeneous coexistence state.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Linearization {
    pub jacobian: Mat2,
    /// Part of a12 carried by the cooperation field, c·m·α·u*·v*/D².
    pub coop: f64,
}

impl Linearization {
    pub fn at_interior(p: &ModelParams) -> Result<Self> {
        p.validate()?;
        let e = model::unique_interior(p)?;
        Ok(Self {
            jacobian: e.jacobian,
            coop: model::cooperation_weight(e.point, p),
        })
    }

    /// Effective a12 for wavenumber k under a kernel of half-width δ.
    pub fn a12_eff(&self, k: f64, delta: f64) -> f64 {
        self.jacobian.a12() + self.coop * (1.0 - sinc(k * delta))
    }

    pub fn trace_k(&self, k: f64, sp: &SpatialParams) -> f64 {
        self.jacobian.trace() - (sp.d1 + sp.d2) * k * k
    }

    /// Δ(k) = d1d2k⁴ − (a11d2 + a22d1)k² + a11a22 − a21·A12(k). With δ = 0
    /// this is the local C(k²).
    pub fn det_k(&self, k: f64, sp: &SpatialParams) -> f64 {
        let j = &self.jacobian;
        let k2 = k * k;
        sp.d1 * sp.d2 * k2 * k2 - (j.a11() * sp.d2 + j.a22() * sp.d1) * k2 + j.a11() * j.a22()
            - j.a21() * self.a12_eff(k, sp.delta)
    }

    /// ∂Δ/∂k.
    pub fn det_k_prime(&self, k: f64, sp: &SpatialParams) -> f64 {
        let j = &self.jacobian;
        4.0 * sp.d1 * sp.d2 * k.powi(3) - 2.0 * (j.a11() * sp.d2 + j.a22() * sp.d1) * k
            + j.a21() * self.coop * sp.delta * sinc_prime(k * sp.delta)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum Mode {
    Local,
    Nonlocal,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DispersionSample {
    pub k: f64,
    /// Trace of the mode matrix, B(k²) or Γ(k).
    pub trace: f64,
    /// Determinant of the mode matrix, C(k²) or Δ(k).
    pub det: f64,
    /// Larger real part first.
    pub lambda: [Complex64; 2],
}

impl DispersionSample {
    pub fn growth(&self) -> f64 {
        self.lambda[0].re
    }

    pub fn unstable(&self) -> bool {
        self.growth() > 0.0
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DispersionCurve {
    pub mode: Mode,
    pub samples: Vec<DispersionSample>,
}

impl DispersionCurve {
    /// Sample with the largest growth rate.
    pub fn most_unstable(&self) -> Option<&DispersionSample> {
        self.samples.iter().max_by(|a, b| a.growth().total_cmp(&b.growth()))
    }

    pub fn has_unstable(&self) -> bool {
        self.samples.iter().any(|s| s.k > 0.0 && s.unstable())
    }

    /// CSV with columns k, re_lambda_max, im_lambda_at_max, trace, det, unstable.
    pub fn write_csv<W: std::io::Write>(&self, out: W) -> std::io::Result<()> {
        let mut w = csv::Writer::from_writer(out);
        w.write_record(["k", "re_lambda_max", "im_lambda_at_max", "trace", "det", "unstable"])?;
        for s in &self.samples {
            w.write_record([
                s.k.to_string(),
                s.lambda[0].re.to_string(),
                s.lambda[0].im.to_string(),
                s.trace.to_string(),
                s.det.to_string(),
                (s.unstable() as u8).to_string(),
            ])?;
        }
        w.flush()
    }
}

fn curve(lin: &Linearization, sp: &SpatialParams, k_grid: &[f64], mode: Mode) -> Result<DispersionCurve> {
    if let Some(&k) = k_grid.iter().find(|k| !(k.is_finite() && **k >= 0.0)) {
        return Err(Error::InvalidParameter {
            name: "k_grid",
            reason: format!("wavenumbers must be finite and >= 0, got {k}"),
        });
    }
    let samples = k_grid
        .iter()
        .map(|&k| {
            let trace = lin.trace_k(k, sp);
            let det = lin.det_k(k, sp);
            DispersionSample {
                k,
                trace,
                det,
                lambda: quadratic_eigs(trace, det),
            }
        })
        .collect();
    Ok(DispersionCurve { mode, samples })
}

/// Growth rates of Fourier modes for the local model.
pub fn local_dispersion(p: &ModelParams, sp: &SpatialParams, k_grid: &[f64]) -> Result<DispersionCurve> {
    sp.validate()?;
    if sp.delta != 0.0 {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "local dispersion requires delta = 0".into(),
        });
    }
    curve(&Linearization::at_interior(p)?, sp, k_grid, Mode::Local)
}

/// Growth rates of Fourier modes for the nonlocal model (δ > 0).
pub fn nonlocal_dispersion(p: &ModelParams, sp: &SpatialParams, k_grid: &[f64]) -> Result<DispersionCurve> {
    sp.validate()?;
    if !(sp.delta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: "nonlocal dispersion requires delta > 0".into(),
        });
    }
    curve(&Linearization::at_interior(p)?, sp, k_grid, Mode::Nonlocal)
}

/// Dispatches on δ.
pub fn dispersion(p: &ModelParams, sp: &SpatialParams, k_grid: &[f64]) -> Result<DispersionCurve> {
    if sp.delta > 0.0 {
        nonlocal_dispersion(p, sp, k_grid)
    } else {
        local_dispersion(p, sp, k_grid)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TuringResult {
    pub d1_critical: f64,
    pub k_critical: f64,
    pub mode: Mode,
    /// |Δ| and |∂Δ/∂k| at the tangency.
    pub certificate: (f64, f64),
}

fn require_stable(lin: &Linearization) -> Result<()> {
    let j = &lin.jacobian;
    if !(j.trace() < 0.0 && j.det() > 0.0) {
        return Err(Error::TuringImpossible(format!(
            "homogeneous state is not temporally stable (trace {}, det {})",
            j.trace(),
            j.det()
        )));
    }
    Ok(())
}

/// Closed-form local threshold from the linearization, without checking
/// temporal stability.
pub fn local_threshold_from(lin: &Linearization, d2: f64) -> Result<TuringResult> {
    let j = &lin.jacobian;
    let (a11, a12, a21, a22) = (j.a11(), j.a12(), j.a21(), j.a22());
    if a11 <= 0.0 {
        return Err(Error::TuringImpossible(format!("a11 = {a11} <= 0")));
    }
    if a22 >= 0.0 {
        return Err(Error::TuringImpossible(format!("a22 = {a22} >= 0")));
    }
    let m = a11 * a22 - 2.0 * a12 * a21;
    let disc = d2 * d2 * (m * m - a11 * a11 * a22 * a22);
    if disc < 0.0 {
        return Err(Error::TuringImpossible(format!("negative discriminant {disc}")));
    }
    let d1c = (d2 * m - disc.sqrt()) / (a22 * a22);
    if !(d1c > 0.0) {
        return Err(Error::TuringImpossible(format!("critical d1 = {d1c} is not positive")));
    }
    let k2 = (d2 * a11 + d1c * a22) / (2.0 * d1c * d2);
    if !(k2 > 0.0) {
        return Err(Error::TuringImpossible(format!("critical k² = {k2} is not positive")));
    }
    let k = k2.sqrt();
    let sp = SpatialParams::local(d1c, d2);
    Ok(TuringResult {
        d1_critical: d1c,
        k_critical: k,
        mode: Mode::Local,
        certificate: (lin.det_k(k, &sp).abs(), lin.det_k_prime(k, &sp).abs()),
    })
}

/// Critical prey diffusivity below which the local model is Turing unstable.
pub fn turing_threshold_local(p: &ModelParams, d2: f64) -> Result<TuringResult> {
    SpatialParams::local(1.0, d2).validate()?;
    let lin = Linearization::at_interior(p)?;
    require_stable(&lin)?;
    local_threshold_from(&lin, d2)
}

/// Roots (ζ−, ζ+) in k² of C(k²) = 0, or `None` when there is no band.
pub fn unstable_band(p: &ModelParams, sp: &SpatialParams) -> Result<Option<(f64, f64)>> {
    sp.validate()?;
    let lin = Linearization::at_interior(p)?;
    let j = &lin.jacobian;
    let a = sp.d1 * sp.d2;
    let b = sp.d2 * j.a11() + sp.d1 * j.a22();
    let c = j.det();
    let disc = b * b - 4.0 * a * c;
    if b <= 0.0 || disc < 0.0 {
        return Ok(None);
    }
    let q = 0.5 * (b + disc.sqrt());
    let (hi, lo) = (q / a, c / q);
    if !(lo > 0.0) {
        return Ok(None);
    }
    Ok(Some((lo, hi)))
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TangencyScan {
    /// k_max = this factor times the local critical wavenumber.
    pub k_max_factor: f64,
    pub samples: usize,
}

impl Default for TangencyScan {
    fn default() -> Self {
        Self {
            k_max_factor: 4.0,
            samples: 20_000,
        }
    }
}

/// d1 at which Δ(k) = 0 for a given k (Δ is linear in d1).
fn d1_on_curve(lin: &Linearization, k: f64, d2: f64, delta: f64) -> f64 {
    let j = &lin.jacobian;
    let k2 = k * k;
    let det_k = j.a11() * j.a22() - j.a21() * lin.a12_eff(k, delta);
    (j.a11() * d2 * k2 - det_k) / (k2 * (d2 * k2 - j.a22()))
}

/// Numerator of d(d1)/dk; its zeros are the tangency candidates.
fn d1_slope(lin: &Linearization, k: f64, d2: f64, delta: f64) -> f64 {
    let j = &lin.jacobian;
    let k2 = k * k;
    let det_k = j.a11() * j.a22() - j.a21() * lin.a12_eff(k, delta);
    let n = j.a11() * d2 * k2 - det_k;
    let n_prime = 2.0 * j.a11() * d2 * k - j.a21() * lin.coop * delta * sinc_prime(k * delta);
    let den = d2 * k2 * k2 - j.a22() * k2;
    let den_prime = 4.0 * d2 * k2 * k - 2.0 * j.a22() * k;
    n_prime * den - n * den_prime
}

/// Nonlocal threshold from the linearization, without checking temporal
/// stability.
pub fn nonlocal_threshold_from(lin: &Linearization, d2: f64, delta: f64, scan: &TangencyScan) -> Result<TuringResult> {
    let local = local_threshold_from(lin, d2)?;
    let k_max = scan.k_max_factor * local.k_critical;
    let n = scan.samples.max(16);
    let ks: Vec<f64> = (1..=n).map(|i| k_max * i as f64 / n as f64).collect();
    let slopes: Vec<f64> = ks.iter().map(|&k| d1_slope(lin, k, d2, delta)).collect();

    let mut best: Option<(f64, f64)> = None;
    for i in 0..n - 1 {
        // A local maximum of d1(k): slope goes from positive to non-positive.
        if !(slopes[i] > 0.0 && slopes[i + 1] <= 0.0) {
            continue;
        }
        let (mut a, mut b) = (ks[i], ks[i + 1]);
        for _ in 0..200 {
            let m = 0.5 * (a + b);
            if m <= a || m >= b {
                break;
            }
            if d1_slope(lin, m, d2, delta) > 0.0 {
                a = m;
            } else {
                b = m;
            }
        }
        let k = 0.5 * (a + b);
        let d1 = d1_on_curve(lin, k, d2, delta);
        if d1 > 0.0 && best.is_none_or(|(_, d)| d1 > d) {
            best = Some((k, d1));
        }
    }
    let (k, d1) = best.ok_or(Error::NoTangency { k_max, scanned: n })?;
    let sp = SpatialParams::new(d1, d2, delta);
    Ok(TuringResult {
        d1_critical: d1,
        k_critical: k,
        mode: Mode::Nonlocal,
        certificate: (lin.det_k(k, &sp).abs(), lin.det_k_prime(k, &sp).abs()),
    })
}

/// Largest d1 at which Δ(k) acquires a double zero for the nonlocal model.
pub fn turing_threshold_nonlocal(p: &ModelParams, d2: f64, delta: f64) -> Result<TuringResult> {
    SpatialParams::new(1.0, d2, delta).validate()?;
    if !(delta > 0.0) {
        return Err(Error::InvalidParameter {
            name: "delta",
            reason: format!("must be > 0, got {delta}"),
        });
    }
    let lin = Linearization::at_interior(p)?;
    require_stable(&lin)?;
    nonlocal_threshold_from(&lin, d2, delta, &TangencyScan::default())
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TuringCurvePoint {
    pub alpha: f64,
    pub d1_critical: Option<f64>,
    pub k_critical: Option<f64>,
    /// The homogeneous state is a temporally unstable focus here.
    pub oscillatory: bool,
    pub error: Option<String>,
}

/// Critical d1 over a uniform α grid. Points beyond the Hopf line are still
/// computed from the same tangency condition and flagged as oscillatory.
pub fn turing_curve(p: &ModelParams, d2: f64, delta: f64, alpha_range: (f64, f64), n: usize, exec: Exec) -> Result<Vec<TuringCurvePoint>> {
    p.validate()?;
    SpatialParams::new(1.0, d2, delta).validate()?;
    if n < 2 {
        return Err(Error::InvalidParameter {
            name: "n",
            reason: format!("need at least 2 points, got {n}"),
        });
    }
    let (lo, hi) = alpha_range;
    let alphas: Vec<f64> = (0..n).map(|i| lo + (hi - lo) * i as f64 / (n - 1) as f64).collect();
    Ok(exec.map(&alphas, |&alpha| {
        let q = p.with_alpha(alpha);
        let res = Linearization::at_interior(&q).map(|lin| {
            let osc = lin.jacobian.trace() > 0.0;
            let t = if delta > 0.0 {
                nonlocal_threshold_from(&lin, d2, delta, &TangencyScan::default())
            } else {
                local_threshold_from(&lin, d2)
            };
            (osc, t)
        });
        match res {
            Ok((osc, Ok(t))) => TuringCurvePoint {
                alpha,
                d1_critical: Some(t.d1_critical),
                k_critical: Some(t.k_critical),
                oscillatory: osc,
                error: None,
            },
            Ok((osc, Err(e))) => TuringCurvePoint {
                alpha,
                d1_critical: None,
                k_critical: None,
                oscillatory: osc,
                error: Some(e.to_string()),
            },
            Err(e) => TuringCurvePoint {
                alpha,
                d1_critical: None,
                k_critical: None,
                oscillatory: false,
                error: Some(e.to_string()),
            },
        }
    }))
}

/// CSV with columns alpha, d1c, k_c, oscillatory, error.
pub fn write_turing_curve_csv<W: std::io::Write>(pts: &[TuringCurvePoint], out: W) -> std::io::Result<()> {
    let opt = |x: Option<f64>| x.map(|v| v.to_string()).unwrap_or_default();
    let mut w = csv::Writer::from_writer(out);
    w.write_record(["alpha", "d1c", "k_c", "oscillatory", "error"])?;
    for p in pts {
        w.write_record([
            p.alpha.to_string(),
            opt(p.d1_critical),
            opt(p.k_critical),
            (p.oscillatory as u8).to_string(),
            p.error.clone().unwrap_or_default(),
        ])?;
    }
    w.flush()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum WaveTarget {
    PredatorFreeFront,
    PreyFreeFront,
    CoexistenceEnvelope,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct WaveSpeedPrediction {
    pub target: WaveTarget,
    pub speed_min: f64,
    #[serde(rename = "K_at_min")]
    pub k_at_min: f64,
    /// Zero for the real-exponent cases.
    pub q_at_min: f64,
}

/// Minimum linear speed of fronts invading E1 (by predators) or E2 (by prey).
pub fn wavespeed_boundary(p: &ModelParams, sp: &SpatialParams, target: WaveTarget) -> Result<WaveSpeedPrediction> {
    p.validate()?;
    sp.validate()?;
    let (growth, diff) = match target {
        WaveTarget::PredatorFreeFront => (p.s, sp.d2),
        WaveTarget::PreyFreeFront => {
            let b11 = p.b11();
            if b11 <= 0.0 {
                return Err(Error::PreyFreeFrontUndefined { b11 });
            }
            (b11, sp.d1)
        }
        WaveTarget::CoexistenceEnvelope => {
            return Err(Error::InvalidParameter {
                name: "target",
                reason: "use wavespeed_coexistence for the coexistence state".into(),
            })
        }
    };
    Ok(WaveSpeedPrediction {
        target,
        speed_min: 2.0 * (growth * diff).sqrt(),
        k_at_min: (growth / diff).sqrt(),
        q_at_min: 0.0,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SaddleSearch {
    pub k_max: f64,
    pub q_max: f64,
    pub grid: usize,
}

impl Default for SaddleSearch {
    fn default() -> Self {
        Self {
            k_max: 5.0,
            q_max: 5.0,
            grid: 200,
        }
    }
}

/// c̄(K, q) = Re λ̃ / K for the complexified wavenumber Q = q + iK, using the
/// complex continuation of the kernel symbol.
pub fn complex_speed(lin: &Linearization, sp: &SpatialParams, k: f64, q: f64) -> f64 {
    let j = &lin.jacobian;
    let z = Complex64::new(q, k);
    let z2 = z * z;
    let gamma = j.trace() - (sp.d1 + sp.d2) * z2;
    let symbol = if sp.delta > 0.0 { csinc(z * sp.delta) } else { Complex64::new(1.0, 0.0) };
    let a12 = j.a12() + lin.coop * (1.0 - symbol);
    let delta = sp.d1 * sp.d2 * z2 * z2 - (sp.d2 * j.a11() + sp.d1 * j.a22()) * z2 + j.a11() * j.a22() - j.a21() * a12;
    let root = (gamma * gamma - 4.0 * delta).sqrt();
    let l1 = 0.5 * (gamma + root);
    let l2 = 0.5 * (gamma - root);
    l1.re.max(l2.re) / k
}

/// The same quantity for δ = 0 in split real/imaginary arithmetic.
pub fn local_form_speed(lin: &Linearization, sp: &SpatialParams, k: f64, q: f64) -> f64 {
    let j = &lin.jacobian;
    let (d1, d2) = (sp.d1, sp.d2);
    let b = d2 * j.a11() + d1 * j.a22();
    let x = q * q - k * k;
    let y = 2.0 * q * k;
    let g_r = j.trace() - (d1 + d2) * x;
    let g_i = -(d1 + d2) * y;
    let q4_r = x * x - y * y;
    let q4_i = 2.0 * x * y;
    let del_r = d1 * d2 * q4_r - b * x + j.det();
    let del_i = d1 * d2 * q4_i - b * y;
    // Γ² − 4Δ and its principal square root.
    let s_r = g_r * g_r - g_i * g_i - 4.0 * del_r;
    let s_i = 2.0 * g_r * g_i - 4.0 * del_i;
    let r = s_r.hypot(s_i);
    let sq_r = (0.5 * (r + s_r)).max(0.0).sqrt();
    0.5 * (g_r + sq_r) / k
}

fn golden_max(f: impl Fn(f64) -> f64, mut a: f64, mut b: f64) -> (f64, f64) {
    let g = 0.5 * (5f64.sqrt() - 1.0);
    let mut x1 = b - g * (b - a);
    let mut x2 = a + g * (b - a);
    let mut f1 = f(x1);
    let mut f2 = f(x2);
    for _ in 0..120 {
        if (b - a).abs() < 1e-12 * (1.0 + a.abs()) {
            break;
        }
        if f1 < f2 {
            a = x1;
            x1 = x2;
            f1 = f2;
            x2 = a + g * (b - a);
            f2 = f(x2);
        } else {
            b = x2;
            x2 = x1;
            f2 = f1;
            x1 = b - g * (b - a);
            f1 = f(x1);
        }
    }
    let x = 0.5 * (a + b);
    (x, f(x))
}

/// Saddle point of c̄(K, q): minimum over K of the maximum over q.
///
/// The (K, q) box is scanned on a uniform grid and the best cell refined by
/// nested golden-section searches. The point must be interior to the box,
/// have a positive speed and the right curvature signs.
pub fn coexistence_saddle(lin: &Linearization, sp: &SpatialParams, box_: &SaddleSearch) -> Result<WaveSpeedPrediction> {
    let n = box_.grid.max(8);
    let no_saddle = || Error::NoSaddlePoint {
        k_max: box_.k_max,
        q_max: box_.q_max,
    };
    let speed = |k: f64, q: f64| {
        if sp.delta > 0.0 {
            complex_speed(lin, sp, k, q)
        } else {
            local_form_speed(lin, sp, k, q)
        }
    };
    let ks: Vec<f64> = (1..=n).map(|i| box_.k_max * i as f64 / n as f64).collect();
    let dq = box_.q_max / n as f64;
    let qs: Vec<f64> = (0..=n).map(|i| dq * i as f64).collect();

    let mut rows = Vec::with_capacity(n);
    for &k in &ks {
        let (jq, best) = qs
            .iter()
            .enumerate()
            .map(|(j, &q)| (j, speed(k, q)))
            .fold((0, f64::NEG_INFINITY), |acc, x| if x.1 > acc.1 { x } else { acc });
        rows.push((jq, best));
    }
    let (ik, _) = rows
        .iter()
        .enumerate()
        .fold((0, f64::INFINITY), |acc, (i, r)| if r.1 < acc.1 { (i, r.1) } else { acc });
    if ik == 0 || ik == n - 1 {
        return Err(no_saddle());
    }

    let q_of = |k: f64, near: f64| -> (f64, f64) {
        let lo = (near - 2.0 * dq).max(0.0);
        let hi = (near + 2.0 * dq).min(box_.q_max);
        let (q, v) = golden_max(|q| speed(k, q), lo, hi);
        // q = 0 is a legitimate maximizer (real exponent); compare explicitly.
        let v0 = speed(k, 0.0);
        if lo == 0.0 && v0 >= v {
            (0.0, v0)
        } else {
            (q, v)
        }
    };
    let near_q = qs[rows[ik].0];
    let (k_star, neg) = golden_max(|k| -q_of(k, near_q).1, ks[ik - 1], ks[ik + 1]);
    let c_star = -neg;
    let (q_star, _) = q_of(k_star, near_q);
    if !(c_star > 0.0) || q_star >= box_.q_max - dq {
        return Err(no_saddle());
    }

    // Curvature certificate: a minimum in K and a maximum in q.
    let h = 1e-4 * k_star.max(1e-3);
    let g = |k: f64| q_of(k, q_star).1;
    if !(g(k_star + h) + g(k_star - h) - 2.0 * c_star > -1e-12) {
        return Err(no_saddle());
    }
    if q_star > h {
        let sq = speed(k_star, q_star + h) + speed(k_star, q_star - h) - 2.0 * speed(k_star, q_star);
        if sq > 1e-12 {
            return Err(no_saddle());
        }
    }
    Ok(WaveSpeedPrediction {
        target: WaveTarget::CoexistenceEnvelope,
        speed_min: c_star,
        k_at_min: k_star,
        q_at_min: q_star,
    })
}

/// Linear spreading speed of perturbations of the coexistence state.
///
/// When the state oscillates in time (positive trace) the real-exponent
/// branch gives c̄(K) = Γ̂/(2K), minimized at K² = tr/(d1 + d2); otherwise
/// the saddle point of the complexified dispersion relation is used.
pub fn wavespeed_coexistence(p: &ModelParams, sp: &SpatialParams) -> Result<WaveSpeedPrediction> {
    sp.validate()?;
    let lin = Linearization::at_interior(p)?;
    let tr = lin.jacobian.trace();
    if tr > 0.0 {
        let dsum = sp.d1 + sp.d2;
        let k = (tr / dsum).sqrt();
        Ok(WaveSpeedPrediction {
            target: WaveTarget::CoexistenceEnvelope,
            speed_min: (dsum * k * k + tr) / (2.0 * k),
            k_at_min: k,
            q_at_min: 0.0,
        })
    } else {
        coexistence_saddle(&lin, sp, &SaddleSearch::default())
    }
}
