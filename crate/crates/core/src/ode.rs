//! Explicit one-step integrators for `y' = F(y)` systems.

use crate::error::{CbeError, Result};

/// Time-stepping configuration.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Stepper {
    /// Dormand-Prince 5(4) with error-per-unit control.
    Adaptive { atol: f64, rtol: f64 },
    /// Classical fourth-order Runge-Kutta with a fixed step.
    FixedRk4 { dt: f64 },
}

impl Default for Stepper {
    fn default() -> Self {
        Self::Adaptive {
            atol: 1e-8,
            rtol: 1e-6,
        }
    }
}

/// Smallest accepted adaptive step before the run is declared stiff.
pub const MIN_STEP: f64 = 1e-12;

/// Counters accumulated across `advance` calls.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq)]
pub struct StepStats {
    pub accepted: usize,
    pub rejected: usize,
    pub rhs_evals: usize,
}

// Dormand-Prince tableau; the right-hand side is autonomous so the nodes c_i are not needed
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
const B1: f64 = 35.0 / 384.0;
const B3: f64 = 500.0 / 1113.0;
const B4: f64 = 125.0 / 192.0;
const B5: f64 = -2187.0 / 6784.0;
const B6: f64 = 11.0 / 84.0;
// b - b*, the difference between the 5th and embedded 4th order weights
const E1: f64 = 71.0 / 57600.0;
const E3: f64 = -71.0 / 16695.0;
const E4: f64 = 71.0 / 1920.0;
const E5: f64 = -17253.0 / 339200.0;
const E6: f64 = 22.0 / 525.0;
const E7: f64 = -1.0 / 40.0;

/// Integrator state for an autonomous system.
pub struct Integrator<F>
where
    F: FnMut(&[f64], &mut [f64]),
{
    rhs: F,
    stepper: Stepper,
    h: Option<f64>,
    pub stats: StepStats,
}

impl<F> Integrator<F>
where
    F: FnMut(&[f64], &mut [f64]),
{
    pub fn new(rhs: F, stepper: Stepper) -> Self {
        Self {
            rhs,
            stepper,
            h: None,
            stats: StepStats::default(),
        }
    }

    /// Advances `y` from `t0` to `t1` in place.
    pub fn advance(&mut self, y: &mut [f64], t0: f64, t1: f64) -> Result<()> {
        if t1 <= t0 {
            return Ok(());
        }
        match self.stepper {
            Stepper::Adaptive { atol, rtol } => self.advance_dopri(y, t0, t1, atol, rtol),
            Stepper::FixedRk4 { dt } => self.advance_rk4(y, t0, t1, dt),
        }
    }

    fn eval(&mut self, y: &[f64], out: &mut [f64]) {
        (self.rhs)(y, out);
        self.stats.rhs_evals += 1;
    }

    fn advance_rk4(&mut self, y: &mut [f64], t0: f64, t1: f64, dt: f64) -> Result<()> {
        if !(dt > 0.0) {
            return Err(CbeError::InvalidArgument(format!(
                "RK4 step must be positive, got {dt}"
            )));
        }
        let n = y.len();
        let steps = ((t1 - t0) / dt).ceil().max(1.0) as usize;
        let h = (t1 - t0) / steps as f64;
        let (mut k1, mut k2, mut k3, mut k4, mut tmp) = (
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
            vec![0.0; n],
        );
        for s in 0..steps {
            self.eval(y, &mut k1);
            axpy(&mut tmp, y, 0.5 * h, &k1);
            self.eval(&tmp, &mut k2);
            axpy(&mut tmp, y, 0.5 * h, &k2);
            self.eval(&tmp, &mut k3);
            axpy(&mut tmp, y, h, &k3);
            self.eval(&tmp, &mut k4);
            for i in 0..n {
                y[i] += h / 6.0 * (k1[i] + 2.0 * k2[i] + 2.0 * k3[i] + k4[i]);
            }
            self.stats.accepted += 1;
            if y.iter().any(|v| !v.is_finite()) {
                return Err(CbeError::Divergence {
                    time: t0 + (s + 1) as f64 * h,
                });
            }
        }
        Ok(())
    }

    fn advance_dopri(
        &mut self,
        y: &mut [f64],
        t0: f64,
        t1: f64,
        atol: f64,
        rtol: f64,
    ) -> Result<()> {
        let n = y.len();
        let mut k = vec![vec![0.0; n]; 7];
        let mut tmp = vec![0.0; n];
        let mut ynew = vec![0.0; n];
        let mut t = t0;

        let mut h = match self.h {
            Some(h) => h,
            None => {
                self.eval(y, &mut k[0]);
                initial_step(y, &k[0], atol, rtol, t1 - t0)
            }
        };

        while t < t1 {
            let last = t + h >= t1;
            let step = if last { t1 - t } else { h };

            self.eval(y, &mut k[0]);
            for i in 0..n {
                tmp[i] = y[i] + step * A21 * k[0][i];
            }
            self.eval(&tmp, &mut k[1]);
            for i in 0..n {
                tmp[i] = y[i] + step * (A31 * k[0][i] + A32 * k[1][i]);
            }
            self.eval(&tmp, &mut k[2]);
            for i in 0..n {
                tmp[i] = y[i] + step * (A41 * k[0][i] + A42 * k[1][i] + A43 * k[2][i]);
            }
            self.eval(&tmp, &mut k[3]);
            for i in 0..n {
                tmp[i] =
                    y[i] + step * (A51 * k[0][i] + A52 * k[1][i] + A53 * k[2][i] + A54 * k[3][i]);
            }
            self.eval(&tmp, &mut k[4]);
            for i in 0..n {
                tmp[i] = y[i]
                    + step
                        * (A61 * k[0][i]
                            + A62 * k[1][i]
                            + A63 * k[2][i]
                            + A64 * k[3][i]
                            + A65 * k[4][i]);
            }
            self.eval(&tmp, &mut k[5]);
            for i in 0..n {
                ynew[i] = y[i]
                    + step
                        * (B1 * k[0][i]
                            + B3 * k[2][i]
                            + B4 * k[3][i]
                            + B5 * k[4][i]
                            + B6 * k[5][i]);
            }
            self.eval(&ynew, &mut k[6]);

            let mut err = 0.0;
            for i in 0..n {
                let e = step
                    * (E1 * k[0][i]
                        + E3 * k[2][i]
                        + E4 * k[3][i]
                        + E5 * k[4][i]
                        + E6 * k[5][i]
                        + E7 * k[6][i]);
                let sc = atol + rtol * y[i].abs().max(ynew[i].abs());
                err += (e / sc) * (e / sc);
            }
            let err = (err / n as f64).sqrt();

            if !err.is_finite() || ynew.iter().any(|v| !v.is_finite()) {
                // a NaN in the error estimate may just mean the step was far too large
                if step > MIN_STEP && y.iter().all(|v| v.is_finite()) && !err.is_nan() {
                    h = step * 0.1;
                    self.stats.rejected += 1;
                    continue;
                }
                return Err(CbeError::Divergence { time: t + step });
            }

            let factor = if err == 0.0 {
                5.0
            } else {
                (0.9 * err.powf(-0.2)).clamp(0.2, 5.0)
            };
            if err <= 1.0 {
                t = if last { t1 } else { t + step };
                y.copy_from_slice(&ynew);
                self.stats.accepted += 1;
                if !last || factor < 1.0 {
                    h = step * factor;
                }
            } else {
                self.stats.rejected += 1;
                h = step * factor.min(1.0);
                if h < MIN_STEP {
                    return Err(CbeError::Stiffness { time: t, step: h });
                }
            }
        }
        self.h = Some(h);
        Ok(())
    }
}

fn axpy(out: &mut [f64], y: &[f64], a: f64, x: &[f64]) {
    for ((o, yi), xi) in out.iter_mut().zip(y).zip(x) {
        *o = yi + a * xi;
    }
}

fn initial_step(y: &[f64], f0: &[f64], atol: f64, rtol: f64, span: f64) -> f64 {
    let n = y.len().max(1) as f64;
    let (mut d0, mut d1) = (0.0, 0.0);
    for (yi, fi) in y.iter().zip(f0) {
        let sc = atol + rtol * yi.abs();
        d0 += (yi / sc) * (yi / sc);
        d1 += (fi / sc) * (fi / sc);
    }
    let (d0, d1) = ((d0 / n).sqrt(), (d1 / n).sqrt());
    let h = if d0 < 1e-5 || d1 < 1e-5 {
        1e-6
    } else {
        0.01 * d0 / d1
    };
    h.min(span)
}
