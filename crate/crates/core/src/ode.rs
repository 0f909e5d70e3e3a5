//! Dormand-Prince 5(4) embedded Runge-Kutta pair with adaptive step control.

use crate::error::{Error, Result};

/// Right-hand side of `y' = f(t, y)`.
pub trait OdeSystem {
    fn dim(&self) -> usize;
    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]);
}

const C2: f64 = 1.0 / 5.0;
const C3: f64 = 3.0 / 10.0;
const C4: f64 = 4.0 / 5.0;
const C5: f64 = 8.0 / 9.0;

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

/// Returned by step callbacks to continue or halt integration.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Flow {
    Continue,
    Stop,
}

/// Adaptive stepper. Keeps stage buffers and the FSAL derivative between calls.
#[derive(Debug, Clone)]
pub struct DormandPrince {
    pub rel_tol: f64,
    /// Per-component absolute tolerance.
    pub abs_tol: Vec<f64>,
    /// Smallest step, relative to `1 + |t|`, before declaring failure.
    pub min_step_rel: f64,
    pub max_steps: usize,
    h: f64,
    k: [Vec<f64>; 7],
    y_stage: Vec<f64>,
    y_new: Vec<f64>,
    fsal_valid: bool,
    pub accepted: usize,
    pub rejected: usize,
}

impl DormandPrince {
    pub fn new(dim: usize, rel_tol: f64, abs_tol: Vec<f64>) -> Self {
        assert_eq!(abs_tol.len(), dim);
        let z = vec![0.0; dim];
        Self {
            rel_tol,
            abs_tol,
            min_step_rel: 1e-14,
            max_steps: 50_000_000,
            h: 0.0,
            k: [z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone(), z.clone()],
            y_stage: z.clone(),
            y_new: z,
            fsal_valid: false,
            accepted: 0,
            rejected: 0,
        }
    }

    /// Drops the cached derivative, e.g. after the state was modified externally.
    pub fn reset(&mut self) {
        self.fsal_valid = false;
    }

    pub fn last_step(&self) -> f64 {
        self.h
    }

    /// Advances `y` from `*t` to exactly `t_end`.
    ///
    /// `cap(t)` bounds the step size at time `t`. `on_step` runs after every
    /// accepted step and may stop early; the returned flag reports that.
    pub fn advance<S, C, G>(
        &mut self,
        sys: &mut S,
        t: &mut f64,
        y: &mut [f64],
        t_end: f64,
        cap: C,
        mut on_step: G,
    ) -> Result<Flow>
    where
        S: OdeSystem,
        C: Fn(f64) -> f64,
        G: FnMut(f64, &[f64]) -> Flow,
    {
        let n = y.len();
        if *t >= t_end {
            return Ok(Flow::Continue);
        }
        if !self.fsal_valid {
            sys.rhs(*t, y, &mut self.k[0]);
            self.fsal_valid = true;
        }
        if self.h <= 0.0 {
            self.h = self.initial_step(*t, y, t_end - *t).min(cap(*t));
        }
        let mut steps = 0usize;
        while *t < t_end {
            steps += 1;
            if steps > self.max_steps {
                return Err(Error::InvalidArgument(format!("step budget exhausted at t = {t}")));
            }
            let cap_t = cap(*t);
            let mut h = self.h.min(cap_t);
            let remaining = t_end - *t;
            let last = h >= remaining * (1.0 - 1e-12);
            if last {
                h = remaining;
            }
            let h_min = self.min_step_rel * (1.0 + t.abs());
            if h < h_min {
                return Err(Error::ModeStiffness {
                    xi: f64::NAN,
                    reason: format!("step size underflow (h = {h:e}) at t = {t}"),
                });
            }
            let err = self.try_step(sys, *t, y, h);
            if err.is_finite() && err <= 1.0 {
                *t = if last { t_end } else { *t + h };
                y.copy_from_slice(&self.y_new[..n]);
                self.k.swap(0, 6);
                self.accepted += 1;
                let factor = if err == 0.0 { 5.0 } else { (0.9 * err.powf(-0.2)).clamp(0.2, 5.0) };
                // a step shortened to land on t_end says nothing about the natural size
                if !last || h >= self.h {
                    self.h = h * factor;
                }
                if on_step(*t, y) == Flow::Stop {
                    return Ok(Flow::Stop);
                }
            } else {
                self.rejected += 1;
                let factor = if err.is_finite() { (0.9 * err.powf(-0.2)).clamp(0.1, 0.9) } else { 0.1 };
                self.h = h * factor;
            }
        }
        Ok(Flow::Continue)
    }

    fn initial_step(&self, t: f64, y: &[f64], span: f64) -> f64 {
        let mut d0: f64 = 0.0;
        let mut d1: f64 = 0.0;
        for i in 0..y.len() {
            let sc = self.abs_tol[i] + self.rel_tol * y[i].abs();
            d0 = d0.max((y[i] / sc).abs());
            d1 = d1.max((self.k[0][i] / sc).abs());
        }
        let _ = t;
        let h = if d0 < 1e-5 || d1 < 1e-5 { 1e-6 } else { 0.01 * d0 / d1 };
        h.min(span).max(1e-12 * span)
    }

    fn try_step<S: OdeSystem>(&mut self, sys: &mut S, t: f64, y: &[f64], h: f64) -> f64 {
        let n = y.len();
        macro_rules! stage {
            ($dst:expr, $c:expr, [$(($a:expr, $j:expr)),*]) => {{
                for i in 0..n {
                    let mut acc = 0.0;
                    $( acc += $a * self.k[$j][i]; )*
                    self.y_stage[i] = y[i] + h * acc;
                }
                let (ys, kd) = (&self.y_stage, &mut self.k[$dst]);
                sys.rhs(t + $c * h, ys, kd);
            }};
        }
        stage!(1, C2, [(A21, 0)]);
        stage!(2, C3, [(A31, 0), (A32, 1)]);
        stage!(3, C4, [(A41, 0), (A42, 1), (A43, 2)]);
        stage!(4, C5, [(A51, 0), (A52, 1), (A53, 2), (A54, 3)]);
        stage!(5, 1.0, [(A61, 0), (A62, 1), (A63, 2), (A64, 3), (A65, 4)]);
        for i in 0..n {
            self.y_new[i] = y[i]
                + h * (A71 * self.k[0][i]
                    + A73 * self.k[2][i]
                    + A74 * self.k[3][i]
                    + A75 * self.k[4][i]
                    + A76 * self.k[5][i]);
        }
        {
            let (yn, k6) = (&self.y_new, &mut self.k[6]);
            sys.rhs(t + h, yn, k6);
        }
        let mut err: f64 = 0.0;
        for i in 0..n {
            let e = h
                * (E1 * self.k[0][i]
                    + E3 * self.k[2][i]
                    + E4 * self.k[3][i]
                    + E5 * self.k[4][i]
                    + E6 * self.k[5][i]
                    + E7 * self.k[6][i]);
            let sc = self.abs_tol[i] + self.rel_tol * y[i].abs().max(self.y_new[i].abs());
            let r = (e / sc).abs();
            if r.is_nan() {
                return f64::INFINITY;
            }
            err = err.max(r);
        }
        err
    }
}
