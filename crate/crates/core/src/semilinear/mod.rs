//! Pseudospectral solver for
//!
//! ```text
//! u_tt + (-Delta)^sigma u + b(t) (-Delta)^delta u_t = | |D|^gamma u |^p
//! ```
//!
//! on a periodic box in one or two dimensions, with blow-up detection and
//! the sign condition on the data that forces blow-up.

pub mod grid;
mod solver;

use log::warn;
use rustfft::num_complex::Complex64;
use serde::{Deserialize, Serialize};

pub use self::grid::{apply_fractional, GridSpec, Spectral};
pub use self::solver::abs_power;
use self::solver::{pack, unpack, SpectralSystem};
use crate::damping::{DampingSpec, Trend, Verdict};
use crate::decay_character::SpectralProfile;
use crate::decay_verify::{self, DecayFitReport};
use crate::error::{invalid, Error, Result};
pub use crate::exponents::critical_p;
use crate::ode::{DormandPrince, Flow};

/// Real fields on the grid at one time.
#[derive(Debug, Clone, PartialEq)]
pub struct FieldState {
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub t: f64,
}

impl FieldState {
    /// Samples the functions whose Fourier transforms are `u0` and `u1`.
    pub fn from_profiles(grid: GridSpec, u0: &SpectralProfile, u1: &SpectralProfile) -> Result<Self> {
        let mut s = Spectral::new(grid)?;
        let a = s.from_profile(u0)?;
        let b = s.from_profile(u1)?;
        Ok(Self { u: s.inverse_real(&a), ut: s.inverse_real(&b), t: 0.0 })
    }

    pub fn is_finite(&self) -> bool {
        self.u.iter().chain(&self.ut).all(|v| v.is_finite())
    }
}

/// Parameters of one semilinear run.
#[derive(Debug, Clone)]
pub struct SemilinearConfig {
    pub spec: DampingSpec,
    pub gamma: f64,
    pub p: f64,
    /// Multiplier of the nonlinearity; `0` gives the linear equation.
    pub coefficient: f64,
    pub grid: GridSpec,
    pub horizon: f64,
    /// Blow-up once `||u||_{L^2}` exceeds this multiple of `||u0|| + ||u1||`.
    pub escape_threshold: f64,
    pub dt_safety: f64,
    pub rel_tol: f64,
    /// Times at which norms are recorded, increasing, within `(0, horizon]`.
    pub outputs: Vec<f64>,
}

impl SemilinearConfig {
    pub fn new(spec: DampingSpec, gamma: f64, p: f64, grid: GridSpec, horizon: f64) -> Self {
        Self {
            spec,
            gamma,
            p,
            coefficient: 1.0,
            grid,
            horizon,
            escape_threshold: 1e6,
            dt_safety: 1.0,
            rel_tol: 1e-8,
            outputs: default_outputs(horizon, 160),
        }
    }

    pub fn validate(&self) -> Result<()> {
        self.grid.validate()?;
        if !(self.p > 1.0) {
            return invalid(format!("p must exceed 1, got {}", self.p));
        }
        if !(self.gamma >= 0.0 && self.gamma < self.spec.sigma) {
            return invalid(format!("gamma must lie in [0, sigma), got {}", self.gamma));
        }
        if !(self.horizon > 0.0) || self.horizon > self.spec.t_max() {
            return invalid(format!("horizon {} outside (0, {}]", self.horizon, self.spec.t_max()));
        }
        if !(self.escape_threshold > 1.0) || !(self.dt_safety > 0.0) {
            return invalid("escape threshold must exceed 1 and dt_safety must be positive");
        }
        if !(1e-12..=1e-3).contains(&self.rel_tol) {
            return invalid(format!("rel_tol must lie in [1e-12, 1e-3], got {}", self.rel_tol));
        }
        if self.outputs.windows(2).any(|w| !(w[1] > w[0]))
            || self.outputs.first().is_some_and(|&t| !(t > 0.0))
            || self.outputs.last().is_some_and(|&t| t > self.horizon)
        {
            return invalid("output times must increase within (0, horizon]");
        }
        Ok(())
    }
}

/// `count` geometric times ending at `horizon`, starting at `horizon / 10^4` or `0.01`.
pub fn default_outputs(horizon: f64, count: usize) -> Vec<f64> {
    let first = (horizon * 1e-4).max(0.01).min(horizon);
    let m = count.max(2);
    (0..m).map(|k| first * (horizon / first).powf(k as f64 / (m - 1) as f64)).collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum RunStatus {
    Decayed,
    BlownUp,
    Inconclusive,
}

impl RunStatus {
    pub fn as_str(self) -> &'static str {
        match self {
            RunStatus::Decayed => "decayed",
            RunStatus::BlownUp => "blown_up",
            RunStatus::Inconclusive => "inconclusive",
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunOutcome {
    pub status: RunStatus,
    pub blowup_time: Option<f64>,
    /// `||u0||_{L^2} + ||u1||_{L^2}`.
    pub reference: f64,
    pub times: Vec<f64>,
    pub l2: Vec<f64>,
    pub h_sigma: Vec<f64>,
    pub ut_l2: Vec<f64>,
    /// Slope of `||u||_{L^2}` against `1 + B(0,t)` over the last decade.
    pub l2_fit: Option<DecayFitReport>,
    pub steps: usize,
    pub note: String,
}

/// Share of spectral energy in the outer third of the frequency box.
fn spectral_tail(grid: &GridSpec, coeffs: &[Complex64]) -> f64 {
    let m = grid.points;
    let cut = (m / 3) as i64;
    let mut total = 0.0;
    let mut tail = 0.0;
    for (j, c) in coeffs.iter().enumerate() {
        let e = c.norm_sqr();
        total += e;
        let outer = match grid.n {
            1 => grid.index(j).abs() > cut,
            _ => grid.index(j / m).abs() > cut || grid.index(j % m).abs() > cut,
        };
        if outer {
            tail += e;
        }
    }
    if total == 0.0 {
        0.0
    } else {
        tail / total
    }
}

/// Largest `|u|` on the faces `x_i = -L` relative to the peak.
fn boundary_ratio(grid: &GridSpec, field: &[f64]) -> f64 {
    let peak = field.iter().fold(0.0f64, |a, v| a.max(v.abs()));
    if peak == 0.0 {
        return 0.0;
    }
    let m = grid.points;
    let edge = match grid.n {
        1 => field[0].abs(),
        _ => (0..m).map(|j| field[j].abs().max(field[j * m].abs())).fold(0.0, f64::max),
    };
    edge / peak
}

/// Largest tolerated boundary ratio of the initial data.
pub const BOUNDARY_MAX: f64 = 1e-12;
/// Largest tolerated spectral tail share of the initial data.
pub const TAIL_MAX: f64 = 1e-6;

fn check_resolution(
    grid: &GridSpec,
    spectral: &mut Spectral,
    state: &FieldState,
) -> Result<(Vec<Complex64>, Vec<Complex64>)> {
    let u = spectral.forward_real(&state.u);
    let w = spectral.forward_real(&state.ut);
    for (name, field, coeffs) in [("u0", &state.u, &u), ("u1", &state.ut, &w)] {
        let tail = spectral_tail(grid, coeffs);
        if tail > TAIL_MAX {
            return Err(Error::Resolution(format!(
                "{name}: {tail:.3e} of the spectral energy lies in the outer third of the frequency box; increase M"
            )));
        }
        if tail > 1e-10 {
            warn!("{name}: spectral tail share {tail:.3e} exceeds 1e-10");
        }
        let edge = boundary_ratio(grid, field);
        if edge > BOUNDARY_MAX {
            return Err(Error::Resolution(format!("{name}: boundary value is {edge:.3e} of the peak; increase L")));
        }
    }
    Ok((u, w))
}

/// Solves from profile data.
pub fn solve_semilinear(cfg: &SemilinearConfig, u0: &SpectralProfile, u1: &SpectralProfile) -> Result<RunOutcome> {
    let state = FieldState::from_profiles(cfg.grid, u0, u1)?;
    solve_from_state(cfg, &state)
}

/// Solves from real fields sampled on the grid at `t = 0`.
pub fn solve_from_state(cfg: &SemilinearConfig, state: &FieldState) -> Result<RunOutcome> {
    cfg.validate()?;
    let grid = cfg.grid;
    if state.u.len() != grid.len() || state.ut.len() != grid.len() || state.t != 0.0 {
        return invalid("initial state must match the grid and sit at t = 0");
    }
    if !state.is_finite() {
        return invalid("initial state is not finite");
    }
    if cfg.coefficient != 0.0 {
        if let Ok(report) = cfg.spec.validate_effective(cfg.horizon) {
            if report.b_l.verdict == Verdict::Fail {
                warn!("condition B-L fails for this damping; blow-up is still detected numerically");
            }
        }
    }
    let mut spectral = Spectral::new(grid)?;
    let (u_hat, w_hat) = check_resolution(&grid, &mut spectral, state)?;
    let l2_of = |s: &Spectral, c: &[Complex64]| s.weighted_norm(c, |_| 1.0);
    let reference = l2_of(&spectral, &u_hat) + l2_of(&spectral, &w_hat);
    let sigma = cfg.spec.sigma;

    let mut times = vec![0.0];
    let mut l2 = vec![l2_of(&spectral, &u_hat)];
    let mut h_sigma = vec![spectral.weighted_norm(&u_hat, |k| k.powf(2.0 * sigma))];
    let mut ut_l2 = vec![l2_of(&spectral, &w_hat)];
    if reference == 0.0 {
        for &t in &cfg.outputs {
            times.push(t);
            l2.push(0.0);
            h_sigma.push(0.0);
            ut_l2.push(0.0);
        }
        return Ok(RunOutcome {
            status: RunStatus::Decayed,
            blowup_time: None,
            reference,
            times,
            l2,
            h_sigma,
            ut_l2,
            l2_fit: None,
            steps: 0,
            note: "zero data".into(),
        });
    }

    let scale = u_hat.iter().chain(&w_hat).fold(0.0f64, |a, z| a.max(z.norm()));
    let mut y = pack(&u_hat, &w_hat);
    let dim = y.len();
    let k_max = grid.k_max();
    let spec = &cfg.spec;
    let mut sys = SpectralSystem::new(spec, spectral, cfg.gamma, cfg.p, cfg.coefficient);
    let mut dp = DormandPrince::new(dim, cfg.rel_tol, vec![1e-3 * cfg.rel_tol * scale; dim]);
    let cap = |t: f64| {
        let b = spec.value(t).unwrap_or(f64::INFINITY);
        cfg.dt_safety / (k_max.powf(sigma) + b * k_max.powf(2.0 * spec.delta))
    };
    let limit = cfg.escape_threshold * reference;
    let mut t = 0.0;
    let mut blowup_time = None;
    let mut note = String::new();
    for &target in &cfg.outputs {
        let escape = |tt: f64, yy: &[f64], hit: &mut Option<f64>| {
            let (u, _) = unpack(yy);
            let n = sys_norm(&grid, &u);
            if !n.is_finite() || n > limit {
                *hit = Some(tt);
                Flow::Stop
            } else {
                Flow::Continue
            }
        };
        let mut hit = None;
        let res = dp.advance(&mut sys, &mut t, &mut y, target, cap, |tt, yy| escape(tt, yy, &mut hit));
        match res {
            Ok(_) => {}
            Err(Error::ModeStiffness { reason, .. }) | Err(Error::InvalidArgument(reason)) => {
                let (u, _) = unpack(&y);
                let n = sys_norm(&grid, &u);
                if !n.is_finite() || n > 10.0 * reference {
                    note = format!("integration stalled while ||u|| grew to {n:.3e}: {reason}");
                    hit = Some(t);
                } else {
                    return Err(Error::ModeStiffness { xi: f64::NAN, reason: format!("semilinear run: {reason}") });
                }
            }
            Err(e) => return Err(e),
        }
        let (u, w) = unpack(&y);
        times.push(t);
        l2.push(sys_norm(&grid, &u));
        h_sigma.push(sys.spectral.weighted_norm(&u, |k| k.powf(2.0 * sigma)));
        ut_l2.push(sys.spectral.weighted_norm(&w, |_| 1.0));
        if hit.is_some() {
            blowup_time = hit;
            break;
        }
    }
    let steps = dp.accepted + dp.rejected;

    let status = if blowup_time.is_some() {
        RunStatus::BlownUp
    } else {
        let last = *l2.last().expect("non-empty");
        let t_end = *times.last().expect("non-empty");
        let quarter: Vec<f64> = times.iter().zip(&l2).filter(|(tt, _)| **tt >= 0.75 * t_end).map(|(_, v)| *v).collect();
        let monotone = quarter.windows(2).all(|w| w[1] <= w[0]);
        if last < 0.5 * reference && monotone {
            RunStatus::Decayed
        } else {
            RunStatus::Inconclusive
        }
    };
    let l2_fit = if status == RunStatus::Decayed { fit_l2(spec, &times, &l2).ok() } else { None };
    Ok(RunOutcome { status, blowup_time, reference, times, l2, h_sigma, ut_l2, l2_fit, steps, note })
}

fn sys_norm(grid: &GridSpec, u: &[Complex64]) -> f64 {
    let total: f64 = u.iter().map(|c| c.norm_sqr()).sum();
    (total * grid.dx().powi(grid.n as i32) / grid.len() as f64).sqrt()
}

fn fit_l2(spec: &DampingSpec, times: &[f64], l2: &[f64]) -> Result<DecayFitReport> {
    let keep: Vec<usize> = (0..times.len()).filter(|&i| times[i] > 0.0 && l2[i] > 0.0).collect();
    let t: Vec<f64> = keep.iter().map(|&i| times[i]).collect();
    let v: Vec<f64> = keep.iter().map(|&i| l2[i]).collect();
    let clock = decay_verify::clock_values(spec, decay_verify::Abscissa::B, &t)?;
    decay_verify::fit_observed_rate(&t, &v, &clock, None, None, decay_verify::SLOPE_TOL)
}

/// Right-hand side `(u_t, -(-Delta)^sigma u - b (-Delta)^delta u_t + | |D|^gamma u |^p)` on real fields.
pub fn rhs(state: &FieldState, spec: &DampingSpec, gamma: f64, p: f64, grid: GridSpec) -> Result<(Vec<f64>, Vec<f64>)> {
    if !(p > 1.0) {
        return invalid(format!("p must exceed 1, got {p}"));
    }
    let mut s = Spectral::new(grid)?;
    let u = s.forward_real(&state.u);
    let w = s.forward_real(&state.ut);
    let mut sys = SpectralSystem::new(spec, s, gamma, p, 1.0);
    let (du, dw) = sys.spectral_rhs(state.t, &u, &w);
    Ok((sys.spectral.inverse_real(&du), sys.spectral.inverse_real(&dw)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum DataBranch {
    BNondecreasing,
    BDecreasing,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DataCondition {
    pub satisfied: bool,
    pub value: f64,
    pub branch: DataBranch,
}

/// Sign condition on the data under which no global solution exists.
///
/// Integrals come from the zero Fourier mode, where `(-Delta)^delta` vanishes for `delta > 0`.
pub fn check_blowup_data_condition(
    spec: &DampingSpec,
    u0: &SpectralProfile,
    u1: &SpectralProfile,
    grid: GridSpec,
) -> Result<DataCondition> {
    let s = Spectral::new(grid)?;
    let i0 = s.mean_integral(&s.from_profile(u0)?);
    let i1 = s.mean_integral(&s.from_profile(u1)?);
    let frictional = spec.delta == 0.0;
    let (value, branch) = match spec.trend() {
        Trend::Decreasing => {
            let frac = if frictional { spec.value(0.0)? * i0 } else { 0.0 };
            (i1 + frac, DataBranch::BDecreasing)
        }
        Trend::NonDecreasing => {
            let b0 = spec.b_zero_constant()?;
            let a0 = spec.value(0.0)? * b0 - 1.0;
            let frac = if frictional { a0 * i0 + i0 } else { 0.0 };
            (-a0 * i0 + b0 * i1 + frac, DataBranch::BNondecreasing)
        }
    };
    Ok(DataCondition { satisfied: value > 0.0, value, branch })
}
