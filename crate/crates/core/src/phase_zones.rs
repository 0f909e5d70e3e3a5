//! Geometry of the extended phase space `(t, |xi|)`.
//!
//! The curve `Gamma: |xi|^(sigma-2 delta) = b(t)/2` splits the phase space
//! into a hyperbolic and an elliptic part, which are refined into five zones.
//! The module also evaluates the pointwise bounds for the kernels `K0`, `K1`
//! in each frequency regime, with every implicit constant set to 1.

use serde::{Deserialize, Serialize};

use crate::damping::{DampingFamily, DampingSpec};
use crate::error::{invalid, Error, Result};
use crate::par::{self, Execution};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ZoneParams {
    #[serde(rename = "N")]
    pub n_big: f64,
    pub eps: f64,
    pub d0: f64,
    /// Frequency split used when `delta = sigma/2`.
    #[serde(rename = "M")]
    pub m_split: f64,
    /// Exponent loss in the hyperbolic bound, `lambda^-(1 - 2 beta)`.
    pub beta: f64,
}

impl Default for ZoneParams {
    fn default() -> Self {
        Self { n_big: 2.0, eps: 0.1, d0: 2.0, m_split: 1.0, beta: 0.1 }
    }
}

impl ZoneParams {
    pub fn validate(&self) -> Result<()> {
        if !(self.eps >= 0.0 && self.eps < 1.0) {
            return invalid(format!("eps must lie in [0, 1), got {}", self.eps));
        }
        if !(self.n_big >= 1.0) {
            return invalid(format!("N must be >= 1, got {}", self.n_big));
        }
        if !(self.d0 > 0.0) || !(self.m_split > 0.0) {
            return invalid("d0 and M must be positive");
        }
        if !(self.beta >= 0.0 && self.beta < 0.5) {
            return invalid(format!("beta must lie in [0, 1/2), got {}", self.beta));
        }
        Ok(())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
pub enum ZoneLabel {
    Diss,
    Ell,
    Red,
    Pd,
    Hyp,
}

impl ZoneLabel {
    pub fn as_str(self) -> &'static str {
        match self {
            ZoneLabel::Diss => "diss",
            ZoneLabel::Ell => "ell",
            ZoneLabel::Red => "red",
            ZoneLabel::Pd => "pd",
            ZoneLabel::Hyp => "hyp",
        }
    }
}

fn check_point(t: f64, xi: f64) -> Result<()> {
    if !(t >= 0.0) || !(xi >= 0.0) {
        return invalid(format!("need t >= 0 and |xi| >= 0, got t = {t}, xi = {xi}"));
    }
    Ok(())
}

/// `|xi|^(2 sigma) - |xi|^(4 delta) b^2 / 4`.
fn discriminant(spec: &DampingSpec, b: f64, xi: f64) -> f64 {
    xi.powf(2.0 * spec.sigma) - xi.powf(4.0 * spec.delta) * b * b / 4.0
}

/// `<xi>_b(t) = sqrt(| |xi|^(2 sigma) - |xi|^(4 delta) b(t)^2 / 4 |)`.
pub fn weight(spec: &DampingSpec, t: f64, xi: f64) -> Result<f64> {
    check_point(t, xi)?;
    Ok(discriminant(spec, spec.value(t)?, xi).abs().sqrt())
}

/// `m(t, xi) = |xi|^(2 sigma) - |xi|^(4 delta) b^2/4 - |xi|^(2 delta) b'/2`.
pub fn mass(spec: &DampingSpec, t: f64, xi: f64) -> Result<f64> {
    check_point(t, xi)?;
    let b = spec.value(t)?;
    Ok(discriminant(spec, b, xi) - xi.powf(2.0 * spec.delta) * spec.derivative(t)? / 2.0)
}

pub fn classify(spec: &DampingSpec, params: &ZoneParams, t: f64, xi: f64) -> Result<ZoneLabel> {
    check_point(t, xi)?;
    let b = spec.value(t)?;
    let (sigma, delta) = (spec.sigma, spec.delta);
    let lhs = xi.powf(sigma - 2.0 * delta);
    let hyp_side = lhs > b / 2.0;
    let ell_side = lhs < b / 2.0;
    let w = discriminant(spec, b, xi).abs().sqrt();
    let scale = xi.powf(2.0 * delta) * b / 2.0;
    let dissipative = xi.powf(2.0 * delta) <= params.d0 / ((1.0 + t) * b);
    // with delta = 0 the dissipative inequality no longer depends on xi; fold it into Ell
    let with_diss = delta > 0.0;
    if with_diss && ell_side && dissipative {
        return Ok(ZoneLabel::Diss);
    }
    if ell_side && w >= params.eps * scale && (!with_diss || !dissipative) {
        return Ok(ZoneLabel::Ell);
    }
    if w <= params.eps * scale {
        return Ok(ZoneLabel::Red);
    }
    if hyp_side && w <= params.n_big * scale {
        return Ok(ZoneLabel::Pd);
    }
    if hyp_side {
        return Ok(ZoneLabel::Hyp);
    }
    Err(Error::Regime(format!("point (t, xi) = ({t}, {xi}) fell outside every zone")))
}

/// One row of a zone map.
#[derive(Debug, Clone, Copy, Serialize)]
pub struct ZoneSample {
    pub t: f64,
    pub xi: f64,
    pub label: ZoneLabel,
    pub weight: f64,
    pub mass: f64,
}

/// Classifies every point of `times x xis` (row-major in `t`).
pub fn zone_grid(
    spec: &DampingSpec,
    params: &ZoneParams,
    times: &[f64],
    xis: &[f64],
    exec: Execution,
) -> Result<Vec<ZoneSample>> {
    params.validate()?;
    let nx = xis.len();
    par::map_indexed(exec, times.len() * nx, |k| {
        let (t, xi) = (times[k / nx], xis[k % nx]);
        Ok(ZoneSample {
            t,
            xi,
            label: classify(spec, params, t, xi)?,
            weight: weight(spec, t, xi)?,
            mass: mass(spec, t, xi)?,
        })
    })
    .into_iter()
    .collect()
}

fn monotone_table(spec: &DampingSpec) -> Result<()> {
    if let DampingFamily::Tabulated(tab) = &spec.family {
        let signs: Vec<f64> = tab
            .times()
            .iter()
            .filter_map(|&t| tab.eval(t).ok().map(|v| v.1))
            .filter(|d| *d != 0.0)
            .map(f64::signum)
            .collect();
        if signs.windows(2).any(|w| w[0] != w[1]) {
            return invalid("curve inversion needs a monotone tabulated coefficient");
        }
    }
    Ok(())
}

/// Smallest root of the increasing function `f` on `[0, hi]`, given `f(0) < 0 <= f(hi)`.
fn bisect(f: impl Fn(f64) -> Result<f64>, mut lo: f64, mut hi: f64) -> Result<f64> {
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if f(mid)? >= 0.0 {
            hi = mid;
        } else {
            lo = mid;
        }
        if hi - lo <= 1e-14 * (1.0 + hi) {
            break;
        }
    }
    Ok(0.5 * (lo + hi))
}

/// Time where `b(t) = 2 |xi|^(sigma - 2 delta) / sqrt(1 - eps^2)`, the boundary of the elliptic part.
pub fn curve_t_ell(spec: &DampingSpec, params: &ZoneParams, xi: f64, horizon: f64) -> Result<Option<f64>> {
    if !(xi > 0.0) {
        return invalid(format!("|xi| must be positive, got {xi}"));
    }
    params.validate()?;
    monotone_table(spec)?;
    let target = 2.0 * xi.powf(spec.sigma - 2.0 * spec.delta) / (1.0 - params.eps * params.eps).sqrt();
    if let DampingFamily::PowerLaw { mu, kappa } = spec.family {
        if kappa == 0.0 {
            return Ok((mu == target).then_some(0.0));
        }
        let t = (target / mu).powf(1.0 / kappa) - 1.0;
        return Ok((t >= 0.0 && t <= horizon).then_some(t));
    }
    let hi = horizon.min(spec.t_max());
    let (b0, b1) = (spec.value(0.0)?, spec.value(hi)?);
    let sign = if b1 >= b0 { 1.0 } else { -1.0 };
    let f = |t: f64| Ok(sign * (spec.value(t)? - target));
    if f(0.0)? > 0.0 || f(hi)? < 0.0 {
        return Ok(None);
    }
    Ok(Some(bisect(f, 0.0, hi)?))
}

/// Time where `|xi|^(2 delta) (1+t) b(t) = d0`, the boundary of the dissipative zone.
pub fn curve_t_diss(spec: &DampingSpec, params: &ZoneParams, xi: f64, horizon: f64) -> Result<Option<f64>> {
    if !(xi > 0.0) {
        return invalid(format!("|xi| must be positive, got {xi}"));
    }
    if spec.delta == 0.0 {
        return Err(Error::Regime("the dissipative boundary is undefined for delta = 0".into()));
    }
    params.validate()?;
    let w = xi.powf(2.0 * spec.delta);
    let f = |t: f64| Ok(w * (1.0 + t) * spec.value(t)? - params.d0);
    if f(0.0)? >= 0.0 {
        return Ok(None);
    }
    let hi = horizon.min(spec.t_max());
    if f(hi)? < 0.0 {
        return Ok(None);
    }
    Ok(Some(bisect(f, 0.0, hi)?))
}

/// `Omega(s,t) = (max{b(s), b(t)} sqrt(1 - eps^2) / 2)^(1/(sigma - 2 delta))`.
pub fn omega_threshold(spec: &DampingSpec, params: &ZoneParams, s: f64, t: f64) -> Result<f64> {
    let e = spec.sigma - 2.0 * spec.delta;
    if e <= 0.0 {
        return Err(Error::Regime("Omega is undefined for delta = sigma/2; use the split M".into()));
    }
    let b = spec.value(s)?.max(spec.value(t)?);
    Ok((b * (1.0 - params.eps * params.eps).sqrt() / 2.0).powf(1.0 / e))
}

/// `Lambda(t) = (d0 / ((1+t) b(t)))^(1/(2 delta))`.
pub fn lambda_threshold(spec: &DampingSpec, params: &ZoneParams, t: f64) -> Result<f64> {
    if spec.delta == 0.0 {
        return Err(Error::Regime("Lambda is undefined for delta = 0".into()));
    }
    Ok((params.d0 / ((1.0 + t) * spec.value(t)?)).powf(1.0 / (2.0 * spec.delta)))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Regime {
    High,
    Mid,
    Low,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub enum EnvelopeKind {
    K1,
    DtK1,
    K0,
    DtK0,
}

impl EnvelopeKind {
    fn starts_at_zero(self) -> bool {
        matches!(self, EnvelopeKind::K0 | EnvelopeKind::DtK0)
    }
}

/// Frequency regime of `(s, t, xi)`. `K0` bounds use `s = 0`.
pub fn regime(spec: &DampingSpec, params: &ZoneParams, s: f64, t: f64, xi: f64) -> Result<Regime> {
    if spec.delta == spec.sigma / 2.0 {
        return Ok(if xi >= params.m_split { Regime::High } else { Regime::Low });
    }
    if xi >= omega_threshold(spec, params, s, t)? {
        return Ok(Regime::High);
    }
    if spec.delta == 0.0 || xi >= lambda_threshold(spec, params, t)? {
        return Ok(Regime::Mid);
    }
    Ok(Regime::Low)
}

/// Right-hand side of the kernel bound for `kind` at `(s, t, xi)`.
pub fn bound_envelope(
    kind: EnvelopeKind,
    spec: &DampingSpec,
    params: &ZoneParams,
    t: f64,
    s: f64,
    xi: f64,
) -> Result<f64> {
    let s = if kind.starts_at_zero() { 0.0 } else { s };
    if !(s <= t) || !(xi > 0.0) {
        return invalid(format!("need 0 <= s <= t and |xi| > 0, got s = {s}, t = {t}, xi = {xi}"));
    }
    let reg = regime(spec, params, s, t, xi)?;
    envelope_in(kind, reg, spec, params, t, s, xi)
}

/// Envelope for an explicitly chosen regime.
pub fn envelope_in(
    kind: EnvelopeKind,
    reg: Regime,
    spec: &DampingSpec,
    params: &ZoneParams,
    t: f64,
    s: f64,
    xi: f64,
) -> Result<f64> {
    use EnvelopeKind::*;
    let (sigma, delta) = (spec.sigma, spec.delta);
    let loss = 1.0 - 2.0 * params.beta;
    let (bs, bt) = (spec.value(s)?, spec.value(t)?);
    let w2 = xi.powf(2.0 * delta);
    let slow = xi.powf(2.0 * sigma - 2.0 * delta);
    if reg == Regime::High {
        // lambda(s)/lambda(t) = exp(-|xi|^(2 delta) Bhat(s,t) / 2)
        let ratio = (-0.5 * w2 * spec.integral(s, t)? * loss).exp();
        return Ok(match kind {
            K1 => xi.powf(-sigma) * ratio,
            DtK1 => ratio,
            K0 => ratio,
            DtK0 => xi.powf(sigma) * ratio,
        });
    }
    if delta == sigma / 2.0 {
        // here |xi|^(2 sigma - 2 delta) = |xi|^sigma
        let xs = xi.powf(sigma);
        let e_t = (-xs * (t - s)).exp();
        let e_b = (-xs * spec.inv_integral(s, t)?).exp();
        return Ok(match kind {
            K1 => (e_t + e_b) / (xs * bt),
            DtK1 => {
                let e_hat = (-xs * spec.integral(s, t)?).exp();
                e_hat.min(e_t) + (1.0 / bs + 1.0 / bt) / bt * e_b
            }
            K0 => e_t + e_b,
            DtK0 => xs / bt * (e_t + e_b),
        });
    }
    match reg {
        Regime::Mid => {
            let e = (-slow * spec.inv_integral(s, t)?).exp();
            Ok(match kind {
                K1 => e / (bt * w2),
                DtK1 => (1.0 / bs + 1.0 / bt) * xi.powf(2.0 * sigma - 4.0 * delta) / bt * e,
                K0 => e,
                DtK0 => slow / bt * e,
            })
        }
        Regime::Low => {
            let e = (-slow * (t - s)).exp();
            Ok(match kind {
                K1 => e / (w2 * bt),
                DtK1 => (-w2 * spec.integral(s, t)?).exp().min((-xi.powf(sigma) * (t - s)).exp()),
                K0 => e,
                DtK0 => slow / bt * e,
            })
        }
        Regime::High => unreachable!(),
    }
}
