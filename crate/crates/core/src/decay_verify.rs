//! Predicted decay exponents, observed-slope fits and envelope constants.
//!
//! Every bound in the theory holds up to an unknown constant, so the checks
//! here compare exponents (log-log slopes) and the boundedness of ratios,
//! never absolute values.

use serde::{Deserialize, Serialize};

use crate::damping::{DampingFamily, DampingSpec};
use crate::decay_character::{unit_sphere_area, Amplitude, SpectralProfile};
use crate::error::{invalid, Error, Result};
use crate::linear_modes;
use crate::par::{self, Execution};
use crate::phase_zones::{self, EnvelopeKind, Regime, ZoneParams};
use crate::quadrature;
use crate::stats;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Statement {
    /// Linear estimates for structural damping, `delta > 0`.
    LinearStructural,
    /// Linear estimates for frictional damping, `delta = 0`.
    LinearFrictional,
    /// Small-data global solutions, `delta > 0`, non-decreasing `b`.
    GlobalIncreasing,
    /// Small-data global solutions, `delta > 0`, decreasing `b`.
    GlobalDecreasing,
    /// Small-data global solutions, `delta = 0`.
    GlobalFrictional,
    /// Two-sided heat-flow decay `v_t = -a(t) (-Delta)^sigma v`.
    Heat,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Abscissa {
    /// `B(0,t) = int 1/b`; for the heat flow `int a`.
    B,
    /// `Bhat(0,t) = int b`.
    Bhat,
    T,
}

/// Which norm a prediction is about.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case", tag = "norm")]
pub enum Quantity {
    /// `||u||` in the homogeneous Sobolev space of order `alpha`.
    U { alpha: f64 },
    /// `||u_t||_{L^2}`.
    Ut,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub abscissa: Abscissa,
    pub exponent: f64,
    /// Power of `b(t)` multiplying the branch.
    pub b_power: i32,
    /// `0` for the `u0` term, `1` for the `u1` term, `2` when both are merged.
    pub datum: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RatePrediction {
    pub statement: Statement,
    pub quantity: Quantity,
    pub abscissa: Abscissa,
    pub exponent: f64,
    pub b_power: i32,
    pub branches: Vec<Branch>,
    pub note: String,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RateInputs {
    pub sigma: f64,
    pub delta: f64,
    pub n: usize,
    /// Decay character of `u0` (of `v0` for the heat flow).
    pub r0: f64,
    /// Decay character of `u1`; unused for the heat flow.
    #[serde(default)]
    pub r1: f64,
}

/// Dominant exponent for `quantity` under `statement`.
///
/// Branches on the statement's primary clock are compared by exponent, then
/// by `b_power`. Branches on other clocks are listed but not selected; for
/// non-decreasing `b` they decay at least as fast since `B <= t/b(0)`.
pub fn predicted_rate(statement: Statement, quantity: Quantity, inp: RateInputs) -> Result<RatePrediction> {
    use Abscissa::*;
    let RateInputs { sigma, delta, n, r0, r1 } = inp;
    let nh = n as f64 / 2.0;
    if !(sigma > 0.0) || n == 0 {
        return invalid("need sigma > 0 and n >= 1");
    }
    if let Quantity::U { alpha } = quantity {
        if !(0.0..=sigma).contains(&alpha) {
            return invalid(format!("alpha = {alpha} must lie in [0, sigma]"));
        }
    }
    let hyp = |ok: bool, what: &str| if ok { Ok(()) } else { Err(Error::Hypothesis(what.to_string())) };
    let br = |abscissa, exponent, b_power, datum| Branch { abscissa, exponent, b_power, datum };
    let mut primary = B;
    let branches: Vec<Branch> = match statement {
        Statement::Heat => {
            hyp(r0 > -nh, "decay character must exceed -n/2")?;
            let s = match quantity {
                Quantity::U { alpha } => alpha,
                Quantity::Ut => return invalid("the heat flow has no u_t norm"),
            };
            vec![br(B, -(2.0 * r0 + n as f64 + 2.0 * s) / (4.0 * sigma), 0, 0)]
        }
        _ => {
            hyp(r0 > -nh && r1 - 2.0 * delta > -nh, "need -n/2 < r*(u0) and -n/2 < r*(u1) - 2 delta")?;
            if !(0.0..=sigma / 2.0).contains(&delta) {
                return invalid(format!("delta = {delta} must lie in [0, sigma/2]"));
            }
            let frictional = matches!(statement, Statement::LinearFrictional | Statement::GlobalFrictional);
            hyp(frictional == (delta == 0.0), "statement does not match the sign of delta")?;
            let d = 2.0 * sigma - 2.0 * delta;
            match (statement, quantity) {
                (Statement::LinearStructural, Quantity::U { alpha }) => vec![
                    br(B, -(r1 + nh + alpha - 2.0 * delta) / d, -1, 1),
                    br(B, -(r0 + nh + alpha) / d, 0, 0),
                    br(T, -(r1 + nh + alpha - 2.0 * delta) / d, -1, 1),
                    br(T, -(r0 + nh + alpha) / d, 0, 0),
                ],
                (Statement::LinearStructural, Quantity::Ut) => vec![
                    br(B, -(r1 + nh + 2.0 * sigma - 4.0 * delta) / d, -1, 1),
                    br(B, -(r0 + nh + 2.0 * sigma - 2.0 * delta) / d, -1, 0),
                    br(Bhat, -(r1 + nh + 2.0 * sigma - 4.0 * delta) / d, 0, 1),
                    br(T, -(r0 + nh + 2.0 * sigma - 2.0 * delta) / d, -1, 0),
                ],
                (Statement::LinearFrictional, Quantity::U { alpha }) => vec![
                    br(B, -(r1 + nh + alpha) / (2.0 * sigma), 0, 1),
                    br(B, -(r0 + nh + alpha) / (2.0 * sigma), 0, 0),
                ],
                (Statement::LinearFrictional, Quantity::Ut) => vec![
                    br(B, -(r1 + nh + 2.0 * sigma) / (2.0 * sigma), -1, 1),
                    br(B, -(r0 + nh + 2.0 * sigma) / (2.0 * sigma), -1, 0),
                ],
                (global, q) => {
                    let (m, clock, ut_power, ut_d) = match global {
                        Statement::GlobalIncreasing => (r0.min(r1 - 2.0 * delta), B, -1, d),
                        Statement::GlobalDecreasing => (r0.min(r1 - 2.0 * delta), Bhat, 1, d),
                        _ => (r0.min(r1), B, -1, 2.0 * sigma),
                    };
                    primary = clock;
                    match q {
                        Quantity::U { alpha: 0.0 } => vec![br(clock, -(nh + m) / d, 0, 2)],
                        Quantity::U { alpha } if alpha == sigma => vec![br(clock, -(nh + sigma + m) / d, 0, 2)],
                        Quantity::U { alpha } => {
                            return invalid(format!("global estimates cover alpha in {{0, sigma}}, got {alpha}"))
                        }
                        Quantity::Ut => {
                            let extra = if global == Statement::GlobalFrictional { 2.0 * sigma } else { d };
                            vec![br(clock, -(nh + extra + m) / ut_d, ut_power, 2)]
                        }
                    }
                }
            }
        }
    };
    let dominant = branches
        .iter()
        .filter(|b| b.abscissa == primary)
        .copied()
        .reduce(
            |a, b| {
                if b.exponent > a.exponent || (b.exponent == a.exponent && b.b_power > a.b_power) {
                    b
                } else {
                    a
                }
            },
        )
        .expect("every statement has a branch on its primary clock");
    let note = if branches.len() == 1 {
        String::new()
    } else {
        let who = match dominant.datum {
            0 => "u0",
            1 => "u1",
            _ => "merged",
        };
        let mut s = format!("dominant {who} branch on clock {:?}", dominant.abscissa);
        if branches.iter().any(|b| b.abscissa != primary) {
            s.push_str("; branches on other clocks are dominated only for non-decreasing b");
        }
        s
    };
    Ok(RatePrediction {
        statement,
        quantity,
        abscissa: dominant.abscissa,
        exponent: dominant.exponent,
        b_power: dominant.b_power,
        branches,
        note,
    })
}

/// Default slope tolerance.
pub const SLOPE_TOL: f64 = 0.1;
/// Largest RMS residual of `log(value)` accepted for a verdict.
pub const FIT_RMS_MAX: f64 = 0.1;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum FitVerdict {
    Consistent,
    Violated,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecayFitReport {
    pub slope: f64,
    /// Half-width of the 95% interval on the slope.
    pub confidence: f64,
    pub rms: f64,
    pub window_t: (f64, f64),
    pub window_abscissa: (f64, f64),
    pub points: usize,
    pub predicted: Option<f64>,
    pub tolerance: f64,
    pub verdict: FitVerdict,
}

/// Slope of `log(value)` against `log(1 + abscissa)` on the tail of the data.
///
/// `window_fraction` is the share of the `log(1 + abscissa)` range kept;
/// `None` keeps the last decade.
pub fn fit_observed_rate(
    times: &[f64],
    values: &[f64],
    abscissa: &[f64],
    window_fraction: Option<f64>,
    predicted: Option<f64>,
    tolerance: f64,
) -> Result<DecayFitReport> {
    let len = values.len();
    if times.len() != len || abscissa.len() != len {
        return Err(Error::Fit("times, values and abscissa differ in length".into()));
    }
    if len < 20 {
        return Err(Error::Fit(format!("need at least 20 samples, got {len}")));
    }
    if values.iter().any(|v| !(*v > 0.0)) {
        return Err(Error::Fit("values must be positive".into()));
    }
    if abscissa.windows(2).any(|w| !(w[1] > w[0])) || !(abscissa[0] > -1.0) {
        return Err(Error::Fit("abscissa must be increasing and exceed -1".into()));
    }
    let x: Vec<f64> = abscissa.iter().map(|a| a.ln_1p()).collect();
    let (x_lo, x_hi) = (x[0], x[len - 1]);
    let start = match window_fraction {
        None => x_hi - std::f64::consts::LN_10,
        Some(f) if f > 0.0 && f <= 1.0 => x_hi - f * (x_hi - x_lo),
        Some(f) => return Err(Error::Fit(format!("window fraction {f} outside (0, 1]"))),
    };
    let keep: Vec<usize> = (0..len).filter(|&i| x[i] >= start).collect();
    if keep.len() < 3 {
        return Err(Error::Fit(format!("only {} samples inside the fit window", keep.len())));
    }
    let xs: Vec<f64> = keep.iter().map(|&i| x[i]).collect();
    let ys: Vec<f64> = keep.iter().map(|&i| values[i].ln()).collect();
    let fit = stats::fit_line(&xs, &ys)?;
    let confidence = 1.96 * fit.slope_se;
    let verdict = match predicted {
        None => FitVerdict::Inconclusive,
        Some(_) if fit.rms > FIT_RMS_MAX => FitVerdict::Inconclusive,
        Some(p) if (fit.slope - p).abs() <= tolerance => FitVerdict::Consistent,
        Some(p) if (fit.slope - p).abs() > tolerance + confidence => FitVerdict::Violated,
        Some(_) => FitVerdict::Inconclusive,
    };
    let (a, b) = (keep[0], keep[keep.len() - 1]);
    Ok(DecayFitReport {
        slope: fit.slope,
        confidence,
        rms: fit.rms,
        window_t: (times[a], times[b]),
        window_abscissa: (abscissa[a], abscissa[b]),
        points: keep.len(),
        predicted,
        tolerance,
        verdict,
    })
}

/// Divides `values[i]` by `b(times[i])^b_power`.
pub fn remove_prefactor(spec: &DampingSpec, times: &[f64], values: &[f64], b_power: i32) -> Result<Vec<f64>> {
    if b_power == 0 {
        return Ok(values.to_vec());
    }
    times.iter().zip(values).map(|(&t, &v)| Ok(v / spec.value(t)?.powi(b_power))).collect()
}

/// Values of the clock `abscissa` from `0` to every time.
pub fn clock_values(spec: &DampingSpec, abscissa: Abscissa, times: &[f64]) -> Result<Vec<f64>> {
    times
        .iter()
        .map(|&t| match abscissa {
            Abscissa::B => spec.inv_integral(0.0, t),
            Abscissa::Bhat => spec.integral(0.0, t),
            Abscissa::T => Ok(t),
        })
        .collect()
}

/// Coefficient of the heat flow, expressed through a damping coefficient.
#[derive(Debug, Clone, Copy)]
pub enum HeatCoefficient<'a> {
    /// `a = b`.
    Damping(&'a DampingSpec),
    /// `a = 1/b`, the parabolic model of effective damping.
    Reciprocal(&'a DampingSpec),
}

impl HeatCoefficient<'_> {
    fn spec(&self) -> &DampingSpec {
        match self {
            HeatCoefficient::Damping(s) | HeatCoefficient::Reciprocal(s) => s,
        }
    }

    /// `int_0^t a`.
    pub fn clock(&self, t: f64) -> Result<f64> {
        match self {
            HeatCoefficient::Damping(s) => s.integral(0.0, t),
            HeatCoefficient::Reciprocal(s) => s.inv_integral(0.0, t),
        }
    }

    /// Whether `int_0^inf a` diverges, judged from the growth exponent of `b`.
    pub fn diverges(&self) -> bool {
        let k = match &self.spec().family {
            DampingFamily::PowerLaw { kappa, .. } => *kappa,
            DampingFamily::Tabulated(_) => self.spec().growth_exponent(),
        };
        match self {
            HeatCoefficient::Damping(_) => k >= -1.0,
            HeatCoefficient::Reciprocal(_) => k <= 1.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HeatNorms {
    pub times: Vec<f64>,
    /// `int_0^t a` at every time.
    pub clock: Vec<f64>,
    pub orders: Vec<f64>,
    /// `norms[k][i]`: Sobolev norm of order `orders[k]` at `times[i]`.
    pub norms: Vec<Vec<f64>>,
}

/// Norms of the exact solution `v^ = exp(-|xi|^(2 alpha) int_0^t a) v0^`.
pub fn heat_oracle(
    coeff: HeatCoefficient<'_>,
    heat_order: f64,
    profile: &SpectralProfile,
    orders: &[f64],
    t_grid: &[f64],
) -> Result<HeatNorms> {
    if !(heat_order > 0.0) {
        return invalid(format!("heat order must be positive, got {heat_order}"));
    }
    if !coeff.diverges() {
        return Err(Error::Hypothesis("heat coefficient is integrable on [0, inf)".into()));
    }
    let clock: Vec<f64> = t_grid.iter().map(|&t| coeff.clock(t)).collect::<Result<_>>()?;
    let n = profile.n as f64;
    let cn = unit_sphere_area(profile.n);
    let support = profile.cutoff().unwrap_or(f64::INFINITY);
    let mut norms = Vec::with_capacity(orders.len());
    for &s in orders {
        let mut row = Vec::with_capacity(t_grid.len());
        for &a in &clock {
            if profile.is_zero() {
                row.push(0.0);
                continue;
            }
            let f = |r: f64| {
                let v = profile.amplitude(r);
                if v == 0.0 {
                    return 0.0;
                }
                r.powf(n - 1.0 + 2.0 * s) * v * v * (-2.0 * r.powf(2.0 * heat_order) * a).exp()
            };
            // the mass sits near the heat scale a^(-1/(2 alpha))
            let scale = if a > 0.0 { a.powf(-0.5 / heat_order) } else { 1.0 };
            let width = match profile.amplitude {
                Amplitude::GaussianHat { width, .. } => width,
                _ => 1.0,
            };
            let split = scale.min(width).min(support);
            let head = quadrature::integrate_to_zero(f, split, 1e-10)?;
            let tail = if support.is_finite() {
                if support > split {
                    quadrature::integrate(f, split, support, 1e-10, 0.0)?
                } else {
                    0.0
                }
            } else {
                quadrature::integrate_to_infinity(f, split, 1e-10)?
            };
            row.push((cn * (head + tail)).sqrt());
        }
        norms.push(row);
    }
    Ok(HeatNorms { times: t_grid.to_vec(), clock, orders: orders.to_vec(), norms })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeSample {
    pub t: f64,
    pub s: f64,
    pub xi: f64,
    pub kernel: f64,
    pub envelope: f64,
    pub regime: Regime,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnvelopeFit {
    pub regime: Regime,
    /// Largest `|kernel| / envelope` over the samples.
    pub c_fit: f64,
    pub samples: usize,
    /// The sample attaining `c_fit`.
    pub worst: Option<(f64, f64, f64)>,
}

/// Fits one multiplicative constant to samples that all lie in `regime`.
pub fn fit_envelope_constant(samples: &[EnvelopeSample], regime: Regime) -> Result<EnvelopeFit> {
    let mut c_fit = 0.0f64;
    let mut worst = None;
    for p in samples {
        if p.regime != regime {
            return Err(Error::Regime(format!(
                "sample (t = {}, s = {}, xi = {}) lies in {:?}, not {:?}",
                p.t, p.s, p.xi, p.regime, regime
            )));
        }
        let k = p.kernel.abs();
        if k == 0.0 {
            continue;
        }
        if !(p.envelope > 0.0) {
            return Err(Error::Fit(format!(
                "envelope vanishes at (t = {}, s = {}, xi = {}) where the kernel is {k:e}",
                p.t, p.s, p.xi
            )));
        }
        let r = k / p.envelope;
        if r > c_fit {
            c_fit = r;
            worst = Some((p.t, p.s, p.xi));
        }
    }
    Ok(EnvelopeFit { regime, c_fit, samples: samples.len(), worst })
}

/// Splits samples by regime and fits each group.
pub fn fit_by_regime(samples: &[EnvelopeSample]) -> Result<Vec<EnvelopeFit>> {
    let mut out = Vec::new();
    for reg in [Regime::High, Regime::Mid, Regime::Low] {
        let group: Vec<EnvelopeSample> = samples.iter().filter(|p| p.regime == reg).copied().collect();
        if !group.is_empty() {
            out.push(fit_envelope_constant(&group, reg)?);
        }
    }
    Ok(out)
}

/// Kernel values and their envelopes on every `(t, s, xi)` with `s < t`.
///
/// For `K0` and `DtK0` the starts are ignored and `s = 0`.
#[allow(clippy::too_many_arguments)]
pub fn sample_envelopes(
    spec: &DampingSpec,
    params: &ZoneParams,
    kind: EnvelopeKind,
    times: &[f64],
    starts: &[f64],
    xis: &[f64],
    rel_tol: f64,
    exec: Execution,
) -> Result<Vec<EnvelopeSample>> {
    let from_zero = matches!(kind, EnvelopeKind::K0 | EnvelopeKind::DtK0);
    let starts: Vec<f64> = if from_zero { vec![0.0] } else { starts.to_vec() };
    let jobs: Vec<(f64, f64)> = starts.iter().flat_map(|&s| xis.iter().map(move |&x| (s, x))).collect();
    let chunks = par::map_slice(exec, &jobs, |&(s, xi)| -> Result<Vec<EnvelopeSample>> {
        let mut grid = vec![s];
        grid.extend(times.iter().copied().filter(|&t| t > s));
        if grid.len() < 2 {
            return Ok(Vec::new());
        }
        let init = if from_zero { (1.0, 0.0) } else { (0.0, 1.0) };
        let m = linear_modes::integrate_mode(spec, xi, init, &grid, rel_tol)?;
        let mut out = Vec::with_capacity(grid.len() - 1);
        for i in 1..grid.len() {
            let t = grid[i];
            let kernel = match kind {
                EnvelopeKind::K1 | EnvelopeKind::K0 => m.u[i],
                EnvelopeKind::DtK1 | EnvelopeKind::DtK0 => m.ut[i],
            };
            let regime = phase_zones::regime(spec, params, s, t, xi)?;
            let envelope = phase_zones::envelope_in(kind, regime, spec, params, t, s, xi)?;
            out.push(EnvelopeSample { t, s, xi, kernel, envelope, regime });
        }
        Ok(out)
    });
    let mut all = Vec::new();
    for c in chunks {
        all.extend(c?);
    }
    Ok(all)
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn inputs(sigma: f64, delta: f64, n: usize, r0: f64, r1: f64) -> RateInputs {
        RateInputs { sigma, delta, n, r0, r1 }
    }

    #[test]
    fn frictional_linear_rate() {
        let p = predicted_rate(Statement::LinearFrictional, Quantity::U { alpha: 0.0 }, inputs(1.0, 0.0, 1, 0.0, 0.0))
            .unwrap();
        assert_eq!(p.abscissa, Abscissa::B);
        assert_relative_eq!(p.exponent, -0.25);
        let ut = predicted_rate(Statement::LinearFrictional, Quantity::Ut, inputs(1.0, 0.0, 1, 0.0, 0.0)).unwrap();
        assert_relative_eq!(ut.exponent, -1.25);
        assert_eq!(ut.b_power, -1);
    }

    #[test]
    fn structural_linear_rate_ties() {
        let p = predicted_rate(Statement::LinearStructural, Quantity::U { alpha: 0.0 }, inputs(2.0, 0.5, 2, 0.0, 1.0))
            .unwrap();
        let on_b: Vec<f64> = p.branches.iter().filter(|b| b.abscissa == Abscissa::B).map(|b| b.exponent).collect();
        assert_eq!(on_b.len(), 2);
        for e in on_b {
            assert_relative_eq!(e, -1.0 / 3.0, max_relative = 1e-15);
        }
        assert_relative_eq!(p.exponent, -1.0 / 3.0, max_relative = 1e-15);
        assert_eq!(p.b_power, 0);
    }

    #[test]
    fn global_frictional_rates() {
        let i = inputs(1.0, 0.0, 2, 0.0, 0.0);
        let l2 = predicted_rate(Statement::GlobalFrictional, Quantity::U { alpha: 0.0 }, i).unwrap();
        assert_relative_eq!(l2.exponent, -0.5);
        let hs = predicted_rate(Statement::GlobalFrictional, Quantity::U { alpha: 1.0 }, i).unwrap();
        assert_relative_eq!(hs.exponent, -1.0);
        let ut = predicted_rate(Statement::GlobalFrictional, Quantity::Ut, i).unwrap();
        assert_relative_eq!(ut.exponent, -1.5);
        assert!(predicted_rate(Statement::GlobalFrictional, Quantity::U { alpha: 0.5 }, i).is_err());
    }

    #[test]
    fn decreasing_branch_uses_bhat() {
        let p = predicted_rate(Statement::GlobalDecreasing, Quantity::Ut, inputs(1.0, 0.25, 2, -0.5, 0.0)).unwrap();
        assert_eq!(p.abscissa, Abscissa::Bhat);
        assert_eq!(p.b_power, 1);
    }

    #[test]
    fn hypotheses_are_enforced() {
        let bad =
            predicted_rate(Statement::LinearFrictional, Quantity::U { alpha: 0.0 }, inputs(1.0, 0.0, 2, -1.0, 0.0));
        assert!(matches!(bad, Err(Error::Hypothesis(_))));
        let mismatch = predicted_rate(Statement::LinearStructural, Quantity::Ut, inputs(1.0, 0.0, 2, 0.0, 0.0));
        assert!(matches!(mismatch, Err(Error::Hypothesis(_))));
        let r1 = predicted_rate(Statement::LinearStructural, Quantity::Ut, inputs(1.0, 0.5, 1, 0.0, 0.4));
        assert!(matches!(r1, Err(Error::Hypothesis(_))));
    }

    #[test]
    fn matsumura_rates_for_constant_damping() {
        for n in 1..=3 {
            for alpha in [0.0, 0.5, 1.0] {
                let p =
                    predicted_rate(Statement::LinearFrictional, Quantity::U { alpha }, inputs(1.0, 0.0, n, 0.0, 0.0))
                        .unwrap();
                assert_relative_eq!(p.exponent, -(n as f64 / 4.0 + alpha / 2.0), max_relative = 1e-15);
            }
        }
    }

    #[test]
    fn heat_prediction() {
        let p = predicted_rate(Statement::Heat, Quantity::U { alpha: 0.0 }, inputs(1.0, 0.0, 1, 1.0, 0.0)).unwrap();
        // squared norm decays like (1+A)^(-3/2)
        assert_relative_eq!(2.0 * p.exponent, -1.5);
    }

    fn power(t: &[f64], e: f64) -> Vec<f64> {
        t.iter().map(|t| (1.0 + t).powf(e)).collect()
    }

    #[test]
    fn fit_synthetic_power_law() {
        let t: Vec<f64> = (0..60).map(|k| 10f64.powf(k as f64 / 15.0)).collect();
        let r = fit_observed_rate(&t, &power(&t, -0.5), &t, None, Some(-0.5), SLOPE_TOL).unwrap();
        assert_relative_eq!(r.slope, -0.5, epsilon = 1e-12);
        assert_eq!(r.verdict, FitVerdict::Consistent);
        let flat = fit_observed_rate(&t, &vec![3.0; 60], &t, None, None, SLOPE_TOL).unwrap();
        assert!(flat.slope.abs() < 1e-12);
        assert_eq!(flat.verdict, FitVerdict::Inconclusive);
        let wrong = fit_observed_rate(&t, &power(&t, -0.5), &t, None, Some(-1.0), SLOPE_TOL).unwrap();
        assert_eq!(wrong.verdict, FitVerdict::Violated);
    }

    #[test]
    fn fit_rejects_bad_input() {
        let t: Vec<f64> = (0..10).map(|k| k as f64).collect();
        assert!(fit_observed_rate(&t, &power(&t, -1.0), &t, None, None, 0.1).is_err());
        let t: Vec<f64> = (0..30).map(|k| k as f64).collect();
        let mut v = power(&t, -1.0);
        v[3] = 0.0;
        assert!(fit_observed_rate(&t, &v, &t, None, None, 0.1).is_err());
    }

    #[test]
    fn heat_oracle_indicator_profile() {
        let spec = DampingSpec::constant(1.0, 0.0).unwrap();
        let prof = SpectralProfile::power_cutoff(1, 1.0, 0.0, 1.0).unwrap();
        let t = [0.0, 0.5, 4.0];
        let h = heat_oracle(HeatCoefficient::Damping(&spec), 1.0, &prof, &[0.0], &t).unwrap();
        assert_relative_eq!(h.norms[0][0], prof.sobolev_norm(0.0).unwrap(), max_relative = 1e-10);
        for (i, &tt) in t.iter().enumerate().skip(1) {
            // int_0^1 2 exp(-2 xi^2 t) = sqrt(pi/(2t)) erf(sqrt(2t))
            let exact = quadrature::integrate(|x| 2.0 * (-2.0 * x * x * tt).exp(), 0.0, 1.0, 1e-13, 0.0).unwrap();
            assert_relative_eq!(h.norms[0][i] * h.norms[0][i], exact, max_relative = 1e-9);
        }
    }

    #[test]
    fn heat_rejects_integrable_coefficient() {
        let spec = DampingSpec::power_law(1.0, 2.0, 1.0, 0.0).unwrap();
        let prof = SpectralProfile::gaussian_hat(1, 1.0, 1.0).unwrap();
        assert!(heat_oracle(HeatCoefficient::Reciprocal(&spec), 1.0, &prof, &[0.0], &[0.0, 1.0]).is_err());
    }

    #[test]
    fn envelope_fit_examples() {
        let s = EnvelopeSample { t: 1.0, s: 1.0, xi: 2.0, kernel: 0.0, envelope: 0.5, regime: Regime::High };
        let f = fit_envelope_constant(&[s], Regime::High).unwrap();
        assert_eq!(f.c_fit, 0.0);
        assert!(fit_envelope_constant(&[s], Regime::Mid).is_err());
        let z = EnvelopeSample { kernel: 1.0, envelope: 0.0, ..s };
        assert!(fit_envelope_constant(&[z], Regime::High).is_err());
    }

    #[test]
    fn constant_damping_mid_envelope_is_bounded() {
        let spec = DampingSpec::constant(1.0, 0.0).unwrap();
        let p = ZoneParams::default();
        let times: Vec<f64> = (0..=40).map(|k| 1.0 + 99.0 * k as f64 / 40.0).collect();
        let xis: Vec<f64> = (0..8).map(|k| 0.05 + 0.05 * k as f64).collect();
        let s = sample_envelopes(&spec, &p, EnvelopeKind::K0, &times, &[], &xis, 1e-10, Execution::Parallel).unwrap();
        assert!(s.iter().all(|x| x.regime == Regime::Mid));
        let f = fit_envelope_constant(&s, Regime::Mid).unwrap();
        assert!(f.c_fit.is_finite() && f.c_fit > 0.0);
    }
}
