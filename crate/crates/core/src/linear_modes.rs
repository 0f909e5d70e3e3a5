//! Frequency-by-frequency solution of the linear equation.
//!
//! For radial data every quantity depends on `|xi|` only, so the linear
//! problem reduces to the scalar ODE
//!
//! ```text
//! u'' + |xi|^(2 sigma) u + b(t) |xi|^(2 delta) u' = 0
//! ```
//!
//! per frequency magnitude, integrated with an adaptive Dormand-Prince pair.
//! Norms of the solution are assembled by Gauss-Legendre panels in `log |xi|`.

use serde::Serialize;

use crate::damping::DampingSpec;
use crate::decay_character::{unit_sphere_area, SpectralProfile};
use crate::error::{invalid, Error, Result};
use crate::ode::{DormandPrince, Flow, OdeSystem};
use crate::par::{self, Execution};
use crate::quadrature;

/// Relative size below which a mode is treated as extinct.
pub const FREEZE_LEVEL: f64 = 1e-14;

struct Mode<'a> {
    spec: &'a DampingSpec,
    stiffness: f64,
    friction: f64,
}

impl OdeSystem for Mode<'_> {
    fn dim(&self) -> usize {
        2
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let b = self.spec.value(t).unwrap_or(f64::NAN);
        dy[0] = y[1];
        dy[1] = -self.stiffness * y[0] - b * self.friction * y[1];
    }
}

#[derive(Debug, Clone, Serialize)]
pub struct ModeTrajectory {
    pub xi: f64,
    pub times: Vec<f64>,
    pub u: Vec<f64>,
    pub ut: Vec<f64>,
    pub rel_tol: f64,
    /// Time after which the mode was set to zero, if it was.
    pub frozen_at: Option<f64>,
    pub steps: usize,
}

impl ModeTrajectory {
    /// `E = u_t^2/2 + |xi|^(2 sigma) u^2 / 2` at every sample.
    pub fn energy(&self, sigma: f64) -> Vec<f64> {
        let w = self.xi.powf(2.0 * sigma);
        self.u.iter().zip(&self.ut).map(|(u, v)| 0.5 * v * v + 0.5 * w * u * u).collect()
    }
}

fn check_grid(spec: &DampingSpec, grid: &[f64], rel_tol: f64) -> Result<()> {
    if !(1e-12..=1e-4).contains(&rel_tol) {
        return invalid(format!("rel_tol must lie in [1e-12, 1e-4], got {rel_tol}"));
    }
    if grid.is_empty() || !(grid[0] >= 0.0) {
        return invalid("time grid must be non-empty and start at t >= 0");
    }
    if grid.windows(2).any(|w| !(w[1] > w[0])) {
        return invalid("time grid must be strictly increasing");
    }
    let last = *grid.last().expect("non-empty");
    if last > spec.t_max() {
        return Err(Error::OutOfRange { t: last, lo: 0.0, hi: spec.t_max() });
    }
    Ok(())
}

/// Solves the mode ODE at `|xi| = xi` from `t_grid[0]` with data `(u, u_t) = init`.
pub fn integrate_mode(
    spec: &DampingSpec,
    xi: f64,
    init: (f64, f64),
    t_grid: &[f64],
    rel_tol: f64,
) -> Result<ModeTrajectory> {
    check_grid(spec, t_grid, rel_tol)?;
    if !(xi >= 0.0) || !xi.is_finite() {
        return invalid(format!("|xi| must be finite and nonnegative, got {xi}"));
    }
    let (u0, u1) = init;
    let t0 = t_grid[0];
    let mut traj = ModeTrajectory {
        xi,
        times: t_grid.to_vec(),
        u: Vec::with_capacity(t_grid.len()),
        ut: Vec::with_capacity(t_grid.len()),
        rel_tol,
        frozen_at: None,
        steps: 0,
    };
    if xi == 0.0 {
        for &t in t_grid {
            traj.u.push(u0 + u1 * (t - t0));
            traj.ut.push(u1);
        }
        return Ok(traj);
    }
    let omega = xi.powf(spec.sigma);
    let scale_u = u0.abs().max(u1.abs() / omega);
    let scale_v = u1.abs().max(omega * u0.abs());
    if scale_u == 0.0 {
        traj.u = vec![0.0; t_grid.len()];
        traj.ut = vec![0.0; t_grid.len()];
        return Ok(traj);
    }
    let mut sys = Mode { spec, stiffness: omega * omega, friction: xi.powf(2.0 * spec.delta) };
    let atol = vec![1e-3 * rel_tol * scale_u, 1e-3 * rel_tol * scale_v];
    let mut dp = DormandPrince::new(2, rel_tol, atol);
    let cap = 2.0 * std::f64::consts::PI / omega / 20.0;
    let mut y = [u0, u1];
    let mut t = t0;
    let extinct = |y: &[f64]| {
        let e2 = (y[1] * y[1] + omega * omega * y[0] * y[0]).sqrt();
        e2 / omega <= FREEZE_LEVEL * scale_u && e2 <= FREEZE_LEVEL * scale_v
    };
    traj.u.push(u0);
    traj.ut.push(u1);
    for &target in &t_grid[1..] {
        if traj.frozen_at.is_none() {
            let mut died = false;
            let flow = dp
                .advance(
                    &mut sys,
                    &mut t,
                    &mut y,
                    target,
                    |_| cap,
                    |_, y| {
                        if extinct(y) {
                            died = true;
                            Flow::Stop
                        } else {
                            Flow::Continue
                        }
                    },
                )
                .map_err(|e| match e {
                    Error::ModeStiffness { reason, .. } => Error::ModeStiffness { xi, reason },
                    other => other,
                })?;
            if flow == Flow::Stop && died {
                traj.frozen_at = Some(t);
            }
        }
        if traj.frozen_at.is_some() {
            traj.u.push(0.0);
            traj.ut.push(0.0);
        } else {
            traj.u.push(y[0]);
            traj.ut.push(y[1]);
        }
    }
    traj.steps = dp.accepted + dp.rejected;
    Ok(traj)
}

/// `K1(t, s, xi)` and its time derivative: data `(0, 1)` at `t = s = t_grid[0]`.
pub fn kernel_k1(spec: &DampingSpec, xi: f64, s: f64, t_grid: &[f64], rel_tol: f64) -> Result<ModeTrajectory> {
    if t_grid.first() != Some(&s) {
        return invalid("K1 time grid must start at s");
    }
    integrate_mode(spec, xi, (0.0, 1.0), t_grid, rel_tol)
}

/// `K0(t, 0, xi)` and its time derivative: data `(1, 0)` at `t = 0`.
pub fn kernel_k0(spec: &DampingSpec, xi: f64, t_grid: &[f64], rel_tol: f64) -> Result<ModeTrajectory> {
    if t_grid.first() != Some(&0.0) {
        return invalid("K0 time grid must start at 0");
    }
    integrate_mode(spec, xi, (1.0, 0.0), t_grid, rel_tol)
}

/// Radial quadrature window and node count.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, serde::Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct RadialGrid {
    pub xi_min: f64,
    pub xi_max: f64,
    /// Requested node count; rounded up to a multiple of the panel order.
    pub nodes: usize,
}

impl Default for RadialGrid {
    fn default() -> Self {
        Self { xi_min: 1e-4, xi_max: 32.0, nodes: 96 }
    }
}

const PANEL_ORDER: usize = 8;

/// Nodes `rho_j` and weights `w_j` with `int_{xi_min}^{xi_max} f(rho) drho ~ sum w_j f(rho_j)`.
pub fn log_gauss_nodes(xi_min: f64, xi_max: f64, nodes: usize) -> (Vec<f64>, Vec<f64>) {
    log_gauss_nodes_split(xi_min, xi_max, nodes, &[])
}

/// As [`log_gauss_nodes`], with panel edges forced at every interior `breaks` point.
pub fn log_gauss_nodes_split(xi_min: f64, xi_max: f64, nodes: usize, breaks: &[f64]) -> (Vec<f64>, Vec<f64>) {
    let panels = nodes.div_ceil(PANEL_ORDER).max(1);
    let (gx, gw) = quadrature::gauss_legendre(PANEL_ORDER);
    let (a, b) = (xi_min.ln(), xi_max.ln());
    let mut edges: Vec<f64> = breaks.iter().filter(|&&c| c > xi_min && c < xi_max).map(|c| c.ln()).collect();
    edges.push(a);
    edges.push(b);
    edges.sort_by(f64::total_cmp);
    edges.dedup();
    let segments = edges.len() - 1;
    let spare = panels.saturating_sub(segments);
    let mut rho = Vec::with_capacity(panels.max(segments) * PANEL_ORDER);
    let mut w = Vec::with_capacity(rho.capacity());
    let mut used = 0usize;
    for (k, seg) in edges.windows(2).enumerate() {
        let share = if k + 1 == segments {
            spare - used
        } else {
            ((seg[1] - seg[0]) / (b - a) * spare as f64).round() as usize
        }
        .min(spare - used);
        used += share;
        let count = share + 1;
        let h = (seg[1] - seg[0]) / count as f64;
        for p in 0..count {
            let mid = seg[0] + (p as f64 + 0.5) * h;
            for (x, wt) in gx.iter().zip(&gw) {
                let r = (mid + 0.5 * h * x).exp();
                rho.push(r);
                w.push(0.5 * h * wt * r);
            }
        }
    }
    (rho, w)
}

#[derive(Debug, Clone, Serialize)]
pub struct LinearRunResult {
    pub times: Vec<f64>,
    /// `B(0, t)` at every time.
    pub clock: Vec<f64>,
    pub alphas: Vec<f64>,
    /// `norms[k][i]`: homogeneous Sobolev norm of order `alphas[k]` at `times[i]`.
    pub norms: Vec<Vec<f64>>,
    pub ut_norm: Vec<f64>,
    /// Bound on the norm mass beyond `xi_max`, per alpha, then for `u_t`.
    pub tail_bound: Vec<f64>,
    /// Disagreement between the Gauss rule and a trapezoid rule on the same samples, per time.
    pub quad_error: Vec<f64>,
    pub xi_min: f64,
    pub xi_max: f64,
    pub nodes: usize,
}

/// Solves the linear problem for radial data and assembles the norms.
#[allow(clippy::too_many_arguments)]
pub fn reconstruct_norms(
    spec: &DampingSpec,
    u0: &SpectralProfile,
    u1: &SpectralProfile,
    alphas: &[f64],
    t_grid: &[f64],
    grid: RadialGrid,
    rel_tol: f64,
    exec: Execution,
) -> Result<LinearRunResult> {
    if u0.n != u1.n {
        return invalid(format!("profiles have dimensions {} and {}", u0.n, u1.n));
    }
    if grid.nodes < 64 {
        return invalid(format!("need at least 64 radial nodes, got {}", grid.nodes));
    }
    if !(grid.xi_min > 0.0 && grid.xi_max > grid.xi_min) {
        return invalid("radial window must satisfy 0 < xi_min < xi_max");
    }
    if alphas.iter().any(|a| !(*a >= 0.0)) {
        return invalid("Sobolev orders must be nonnegative");
    }
    check_grid(spec, t_grid, rel_tol)?;
    let n = u0.n;
    let nf = n as f64;
    let cn = unit_sphere_area(n);
    let support = match (u0.is_zero(), u1.is_zero()) {
        (true, true) => Some(0.0),
        (true, false) => u1.cutoff(),
        (false, true) => u0.cutoff(),
        (false, false) => u0.cutoff().zip(u1.cutoff()).map(|(a, b)| a.max(b)),
    };
    let xi_max = support.map_or(grid.xi_max, |c| c.min(grid.xi_max));
    let nt = t_grid.len();
    let clock: Vec<f64> = t_grid.iter().map(|&t| spec.inv_integral(0.0, t)).collect::<Result<_>>()?;
    if xi_max <= grid.xi_min {
        let zeros = vec![0.0; nt];
        return Ok(LinearRunResult {
            times: t_grid.to_vec(),
            clock,
            alphas: alphas.to_vec(),
            norms: vec![zeros.clone(); alphas.len()],
            ut_norm: zeros.clone(),
            tail_bound: vec![0.0; alphas.len() + 1],
            quad_error: zeros,
            xi_min: grid.xi_min,
            xi_max,
            nodes: 0,
        });
    }
    let breaks: Vec<f64> = [u0, u1].iter().filter_map(|p| p.cutoff()).collect();
    let (rho, w) = log_gauss_nodes_split(grid.xi_min, xi_max, grid.nodes, &breaks);
    // node 0 is the cap frequency xi_min itself
    let freqs: Vec<f64> = std::iter::once(grid.xi_min).chain(rho.iter().copied()).collect();
    let modes: Vec<Result<ModeTrajectory>> =
        par::map_slice(exec, &freqs, |&r| integrate_mode(spec, r, (u0.amplitude(r), u1.amplitude(r)), t_grid, rel_tol));
    let modes: Vec<ModeTrajectory> = modes.into_iter().collect::<Result<_>>()?;

    // [0, xi_min] with |u^|^2 ~ rho^(2e) below the window
    let e = [u0, u1].iter().filter(|p| !p.is_zero()).filter_map(|p| p.near_zero_exponent()).fold(0.0f64, f64::min);
    let cap = |power: f64| {
        let d = nf + power + 2.0 * e;
        if d > 0.0 {
            grid.xi_min.powf(nf + power) / d
        } else {
            0.0
        }
    };

    let assemble = |power: f64, take_u: bool| -> (Vec<f64>, Vec<f64>) {
        let mut out = vec![0.0; nt];
        let mut err = vec![0.0; nt];
        let xi_pow: Vec<f64> = freqs.iter().map(|r| r.powf(nf - 1.0 + power)).collect();
        for i in 0..nt {
            let val = |j: usize| {
                let m = &modes[j];
                let v = if take_u { m.u[i] } else { m.ut[i] };
                v * v
            };
            let mut acc = cap(power) * val(0);
            for j in 0..rho.len() {
                acc += w[j] * xi_pow[j + 1] * val(j + 1);
            }
            // trapezoid in log rho over the same samples
            let mut trap = cap(power) * val(0);
            for j in 0..freqs.len() - 1 {
                let dx = (freqs[j + 1] / freqs[j]).ln();
                let f0 = freqs[j] * xi_pow[j] * val(j);
                let f1 = freqs[j + 1] * xi_pow[j + 1] * val(j + 1);
                trap += 0.5 * dx * (f0 + f1);
            }
            out[i] = (cn * acc).sqrt();
            err[i] = (out[i] - (cn * trap).max(0.0).sqrt()).abs();
        }
        (out, err)
    };

    let mut norms = Vec::with_capacity(alphas.len());
    let mut quad_error = vec![0.0f64; nt];
    for &a in alphas {
        let (v, er) = assemble(2.0 * a, true);
        for i in 0..nt {
            quad_error[i] = quad_error[i].max(er[i]);
        }
        norms.push(v);
    }
    let (ut_norm, er) = assemble(0.0, false);
    for i in 0..nt {
        quad_error[i] = quad_error[i].max(er[i]);
    }

    let mut tail_bound = Vec::with_capacity(alphas.len() + 1);
    let sigma = spec.sigma;
    let tail = |f: &dyn Fn(f64) -> f64| -> Result<f64> {
        if support.is_some_and(|c| c <= xi_max) {
            return Ok(0.0);
        }
        Ok((cn * quadrature::integrate_to_infinity(f, xi_max, 1e-8)?).sqrt())
    };
    for (k, &a) in alphas.iter().enumerate() {
        let tb = tail(&|r: f64| {
            let (p, q) = (u0.amplitude(r), u1.amplitude(r));
            r.powf(nf - 1.0 + 2.0 * a) * (p * p + q * q * r.powf(-2.0 * sigma))
        })?;
        if tb > 0.01 * norms[k][0] && tb > 0.0 {
            return Err(Error::Quadrature(format!(
                "tail beyond xi_max = {xi_max} bounds {tb:e}, over 1% of the norm {:e}; raise xi_max",
                norms[k][0]
            )));
        }
        tail_bound.push(tb);
    }
    let tb = tail(&|r: f64| {
        let (p, q) = (u0.amplitude(r), u1.amplitude(r));
        r.powf(nf - 1.0) * (q * q + p * p * r.powf(2.0 * sigma))
    })?;
    tail_bound.push(tb);

    Ok(LinearRunResult {
        times: t_grid.to_vec(),
        clock,
        alphas: alphas.to_vec(),
        norms,
        ut_norm,
        tail_bound,
        quad_error,
        xi_min: grid.xi_min,
        xi_max,
        nodes: rho.len(),
    })
}

/// `0` followed by `count - 1` geometric points on `[first, last]`.
pub fn time_grid(first: f64, last: f64, count: usize) -> Vec<f64> {
    let mut g = vec![0.0];
    let m = count.max(2) - 1;
    for k in 0..m {
        g.push(first * (last / first).powf(k as f64 / (m.max(2) - 1) as f64));
    }
    g
}
