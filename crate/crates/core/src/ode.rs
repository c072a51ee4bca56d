//! Adaptive Dormand–Prince 5(4) integrator for planar autonomous systems,
//! with the standard fourth-order continuous extension.

use crate::error::{Error, Result};

pub type Vec2 = [f64; 2];

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeOptions {
    pub rel_tol: f64,
    pub abs_tol: f64,
    /// First trial step; chosen automatically when `None`.
    pub h_init: Option<f64>,
    pub h_max: f64,
    pub max_steps: usize,
}

impl Default for OdeOptions {
    fn default() -> Self {
        Self {
            rel_tol: 1e-9,
            abs_tol: 1e-12,
            h_init: None,
            h_max: 10.0,
            max_steps: 50_000_000,
        }
    }
}

impl OdeOptions {
    pub fn with_tol(rel_tol: f64, abs_tol: f64) -> Self {
        Self {
            rel_tol,
            abs_tol,
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        for (name, v) in [("rel_tol", self.rel_tol), ("abs_tol", self.abs_tol)] {
            if !(v.is_finite() && (1e-14..=1e-3).contains(&v)) {
                return Err(Error::InvalidParameter {
                    name,
                    reason: format!("must lie in [1e-14, 1e-3], got {v}"),
                });
            }
        }
        if !(self.h_max > 0.0) {
            return Err(Error::InvalidParameter {
                name: "h_max",
                reason: format!("must be > 0, got {}", self.h_max),
            });
        }
        Ok(())
    }
}

/// One accepted step, carrying enough data to interpolate inside it.
#[derive(Debug, Clone, Copy)]
pub struct StepData {
    pub t0: f64,
    pub t1: f64,
    pub y0: Vec2,
    pub y1: Vec2,
    cont: [Vec2; 5],
}

impl StepData {
    /// Dense output at `t` in [t0, t1].
    pub fn interpolate(&self, t: f64) -> Vec2 {
        let h = self.t1 - self.t0;
        let th = if h == 0.0 { 1.0 } else { (t - self.t0) / h };
        let th1 = 1.0 - th;
        let r = &self.cont;
        std::array::from_fn(|i| {
            r[0][i] + th * (r[1][i] + th1 * (r[2][i] + th * (r[3][i] + th1 * r[4][i])))
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Control {
    Continue,
    Stop,
}

/// Outcome of [`integrate`]: the last accepted state and why integration ended.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct OdeEnd {
    pub t: f64,
    pub y: Vec2,
    pub steps: usize,
    pub stopped: bool,
}

// Dormand–Prince coefficients. The system is autonomous, so the nodes c_i
// are not needed.
const A21: f64 = 1.0 / 5.0;
const A31: f64 = 3.0 / 40.0;
const A32: f64 = 9.0 / 40.0;
const A41: f64 = 44.0 / 45.0;
const A42: f64 = -56.0 / 15.0;
const A43: f64 = 32.0 / 9.0;
const A51: f64 = 19372.0 / 6561.0;
const A52: f64 = -25360.0 / 2187.0;
const A53: f64 = 64448.0 / 6561.0;
const A54: f64 = -212.0 / 729.0;
const A61: f64 = 9017.0 / 3168.0;
const A62: f64 = -355.0 / 33.0;
const A63: f64 = 46732.0 / 5247.0;
const A64: f64 = 49.0 / 176.0;
const A65: f64 = -5103.0 / 18656.0;
const A71: f64 = 35.0 / 384.0;
const A73: f64 = 500.0 / 1113.0;
const A74: f64 = 125.0 / 192.0;
const A75: f64 = -2187.0 / 6784.0;
const A76: f64 = 11.0 / 84.0;
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;
const D1: f64 = -12715105075.0 / 11282082432.0;
const D3: f64 = 87487479700.0 / 32700410799.0;
const D4: f64 = -10690763975.0 / 1880347072.0;
const D5: f64 = 701980252875.0 / 199316789632.0;
const D6: f64 = -1453857185.0 / 822651844.0;
const D7: f64 = 69997945.0 / 29380423.0;

#[inline]
fn axpy(y: Vec2, h: f64, terms: &[(f64, &Vec2)]) -> Vec2 {
    std::array::from_fn(|i| y[i] + h * terms.iter().map(|(a, k)| a * k[i]).sum::<f64>())
}

fn finite(y: &Vec2) -> bool {
    y[0].is_finite() && y[1].is_finite()
}

/// Integrates y' = f(y) from `t0` to `t_end > t0`.
///
/// `observer` sees every accepted step in order and may stop the run early.
pub fn integrate<F, O>(
    f: F,
    t0: f64,
    y0: Vec2,
    t_end: f64,
    opts: &OdeOptions,
    mut observer: O,
) -> Result<OdeEnd>
where
    F: Fn(&Vec2) -> Vec2,
    O: FnMut(&StepData) -> Control,
{
    opts.validate()?;
    if !finite(&y0) {
        return Err(Error::NonFinite {
            context: format!("initial state {y0:?}"),
        });
    }
    if !(t_end > t0) {
        return Err(Error::InvalidParameter {
            name: "t_end",
            reason: format!("must exceed start time {t0}, got {t_end}"),
        });
    }

    let scale = |a: &Vec2, b: &Vec2, i: usize| opts.abs_tol + opts.rel_tol * a[i].abs().max(b[i].abs());

    let mut t = t0;
    let mut y = y0;
    let mut k1 = f(&y);
    if !finite(&k1) {
        return Err(Error::NonFinite {
            context: format!("vector field at t = {t}"),
        });
    }
    let mut h = opts.h_init.unwrap_or_else(|| {
        let d0 = ((y[0] / scale(&y, &y, 0)).powi(2) + (y[1] / scale(&y, &y, 1)).powi(2)).sqrt();
        let d1 = ((k1[0] / scale(&y, &y, 0)).powi(2) + (k1[1] / scale(&y, &y, 1)).powi(2)).sqrt();
        let h0 = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h0.min(opts.h_max)
    });
    let mut steps = 0usize;
    let mut last_rejected = false;

    while t < t_end {
        if steps >= opts.max_steps {
            return Err(Error::BudgetExhausted(format!(
                "{} steps reached at t = {t}",
                opts.max_steps
            )));
        }
        let h_floor = 1e-14 * t.abs().max(1.0);
        if h < h_floor {
            return Err(Error::StepSizeUnderflow { t });
        }
        let last = t + h >= t_end;
        if last {
            h = t_end - t;
        }

        let k2 = f(&axpy(y, h, &[(A21, &k1)]));
        let k3 = f(&axpy(y, h, &[(A31, &k1), (A32, &k2)]));
        let k4 = f(&axpy(y, h, &[(A41, &k1), (A42, &k2), (A43, &k3)]));
        let k5 = f(&axpy(y, h, &[(A51, &k1), (A52, &k2), (A53, &k3), (A54, &k4)]));
        let y6 = axpy(y, h, &[(A61, &k1), (A62, &k2), (A63, &k3), (A64, &k4), (A65, &k5)]);
        let k6 = f(&y6);
        let y1 = axpy(y, h, &[(A71, &k1), (A73, &k3), (A74, &k4), (A75, &k5), (A76, &k6)]);
        let k7 = f(&y1);

        let mut err = 0.0;
        for i in 0..2 {
            let e = h * (E1 * k1[i] + E3 * k3[i] + E4 * k4[i] + E5 * k5[i] + E6 * k6[i] + E7 * k7[i]);
            let r = e / scale(&y, &y1, i);
            err += r * r;
        }
        err = (0.5 * err).sqrt();

        if !err.is_finite() || !finite(&y1) || !finite(&k7) {
            // Treat as a hard rejection and shrink aggressively.
            h *= 0.1;
            last_rejected = true;
            continue;
        }

        let fac = if err == 0.0 { 10.0 } else { 0.9 * err.powf(-0.2) };
        if err <= 1.0 {
            let ydiff = [y1[0] - y[0], y1[1] - y[1]];
            let bspl: Vec2 = std::array::from_fn(|i| h * k1[i] - ydiff[i]);
            let step = StepData {
                t0: t,
                t1: if last { t_end } else { t + h },
                y0: y,
                y1,
                cont: [
                    y,
                    ydiff,
                    bspl,
                    std::array::from_fn(|i| ydiff[i] - h * k7[i] - bspl[i]),
                    std::array::from_fn(|i| {
                        h * (D1 * k1[i] + D3 * k3[i] + D4 * k4[i] + D5 * k5[i] + D6 * k6[i] + D7 * k7[i])
                    }),
                ],
            };
            t = step.t1;
            y = y1;
            k1 = k7;
            steps += 1;
            if observer(&step) == Control::Stop {
                return Ok(OdeEnd {
                    t,
                    y,
                    steps,
                    stopped: true,
                });
            }
            let grow = if last_rejected { fac.min(1.0) } else { fac.min(10.0) };
            h = (h * grow.max(0.2)).min(opts.h_max);
            last_rejected = false;
        } else {
            h *= fac.clamp(0.2, 1.0);
            last_rejected = true;
        }
    }

    Ok(OdeEnd {
        t,
        y,
        steps,
        stopped: false,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn harmonic_oscillator_is_accurate() {
        let f = |y: &Vec2| [y[1], -y[0]];
        let opts = OdeOptions::with_tol(1e-10, 1e-12);
        let end = integrate(f, 0.0, [1.0, 0.0], 20.0, &opts, |_| Control::Continue).unwrap();
        assert!((end.y[0] - 20f64.cos()).abs() < 1e-8);
        assert!((end.y[1] + 20f64.sin()).abs() < 1e-8);
        assert_eq!(end.t, 20.0);
    }

    #[test]
    fn dense_output_tracks_solution_between_steps() {
        let f = |y: &Vec2| [-y[0], -2.0 * y[1]];
        let opts = OdeOptions::with_tol(1e-8, 1e-12);
        let mut worst = 0.0f64;
        integrate(f, 0.0, [1.0, 1.0], 5.0, &opts, |s| {
            for j in 1..4 {
                let t = s.t0 + (s.t1 - s.t0) * j as f64 / 4.0;
                let y = s.interpolate(t);
                worst = worst.max((y[0] - (-t).exp()).abs()).max((y[1] - (-2.0 * t).exp()).abs());
            }
            Control::Continue
        })
        .unwrap();
        assert!(worst < 1e-7, "{worst}");
    }

    #[test]
    fn observer_can_stop() {
        let f = |_: &Vec2| [1.0, 0.0];
        let end = integrate(f, 0.0, [0.0, 0.0], 100.0, &OdeOptions::default(), |s| {
            if s.y1[0] > 1.0 {
                Control::Stop
            } else {
                Control::Continue
            }
        })
        .unwrap();
        assert!(end.stopped && end.t < 100.0);
    }

    #[test]
    fn rejects_bad_tolerances_and_blowup() {
        let f = |y: &Vec2| [y[0], y[1]];
        assert!(integrate(f, 0.0, [1.0, 1.0], 1.0, &OdeOptions::with_tol(1e-2, 1e-12), |_| Control::Continue).is_err());
        let blow = |y: &Vec2| [y[0] * y[0], 0.0];
        let r = integrate(blow, 0.0, [1.0, 0.0], 2.0, &OdeOptions::default(), |_| Control::Continue);
        assert!(matches!(r, Err(Error::StepSizeUnderflow { .. }) | Err(Error::BudgetExhausted(_))));
    }
}
