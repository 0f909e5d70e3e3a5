//! Time-dependent damping coefficients `b(t)`.
//!
//! A [`DampingSpec`] bundles the coefficient family with the operator orders
//! `sigma` and `delta` of the equation it damps. It provides the two clocks
//! `B(s,t) = int_s^t 1/b` and `Bhat(s,t) = int_s^t b`, the structural
//! condition checks of an effective damping, and the auxiliary ODE
//! `-g' + b g = 1` used by the blow-up data condition.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::error::{invalid, Error, Result};
use crate::quadrature;

/// Relative accuracy of every clock evaluated by quadrature.
pub const CLOCK_REL_TOL: f64 = 1e-10;

/// Monotone (Fritsch-Carlson) piecewise cubic through `(t, b)` samples.
#[derive(Debug, Clone, PartialEq)]
pub struct Tabulated {
    t: Vec<f64>,
    b: Vec<f64>,
    slope: Vec<f64>,
}

impl Tabulated {
    pub fn new(t: Vec<f64>, b: Vec<f64>) -> Result<Self> {
        if t.len() != b.len() || t.len() < 2 {
            return invalid("tabulated damping needs at least two (t, b) samples of equal length");
        }
        if t[0] != 0.0 {
            return invalid(format!("tabulated damping must start at t = 0, got {}", t[0]));
        }
        if t.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("tabulated times must be strictly increasing");
        }
        if b.iter().any(|&v| !(v > 0.0) || !v.is_finite()) {
            return invalid("tabulated damping values must be positive and finite");
        }
        let slope = pchip_slopes(&t, &b);
        Ok(Self { t, b, slope })
    }

    /// Reads a two-column `t,b` CSV file; a header line is optional.
    pub fn from_csv(path: &Path) -> Result<Self> {
        let (t, b) = read_two_columns(path)?;
        Self::new(t, b)
    }

    pub fn times(&self) -> &[f64] {
        &self.t
    }

    pub fn values(&self) -> &[f64] {
        &self.b
    }

    pub fn t_max(&self) -> f64 {
        *self.t.last().expect("non-empty")
    }

    fn locate(&self, t: f64) -> Result<usize> {
        if !(0.0..=self.t_max()).contains(&t) {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: self.t_max() });
        }
        let k = self.t.partition_point(|&x| x <= t);
        Ok(k.saturating_sub(1).min(self.t.len() - 2))
    }

    /// Value and first two derivatives of the interpolant.
    pub fn eval(&self, t: f64) -> Result<(f64, f64, f64)> {
        let k = self.locate(t)?;
        let h = self.t[k + 1] - self.t[k];
        let s = (t - self.t[k]) / h;
        let (y0, y1) = (self.b[k], self.b[k + 1]);
        let (d0, d1) = (self.slope[k], self.slope[k + 1]);
        let s2 = s * s;
        let s3 = s2 * s;
        let value = y0 * (2.0 * s3 - 3.0 * s2 + 1.0)
            + h * d0 * (s3 - 2.0 * s2 + s)
            + y1 * (-2.0 * s3 + 3.0 * s2)
            + h * d1 * (s3 - s2);
        let first = (y0 * (6.0 * s2 - 6.0 * s) + y1 * (-6.0 * s2 + 6.0 * s)) / h
            + d0 * (3.0 * s2 - 4.0 * s + 1.0)
            + d1 * (3.0 * s2 - 2.0 * s);
        let second = (y0 * (12.0 * s - 6.0) + y1 * (-12.0 * s + 6.0)) / (h * h)
            + (d0 * (6.0 * s - 4.0) + d1 * (6.0 * s - 2.0)) / h;
        Ok((value, first, second))
    }
}

fn pchip_slopes(t: &[f64], y: &[f64]) -> Vec<f64> {
    let n = t.len();
    let h: Vec<f64> = t.windows(2).map(|w| w[1] - w[0]).collect();
    let del: Vec<f64> = (0..n - 1).map(|k| (y[k + 1] - y[k]) / h[k]).collect();
    let mut d = vec![0.0; n];
    if n == 2 {
        d[0] = del[0];
        d[1] = del[0];
        return d;
    }
    for k in 1..n - 1 {
        if del[k - 1] * del[k] > 0.0 {
            let w1 = 2.0 * h[k] + h[k - 1];
            let w2 = h[k] + 2.0 * h[k - 1];
            d[k] = (w1 + w2) / (w1 / del[k - 1] + w2 / del[k]);
        }
    }
    let end = |h0: f64, h1: f64, m0: f64, m1: f64| {
        let mut e = ((2.0 * h0 + h1) * m0 - h0 * m1) / (h0 + h1);
        if e.signum() != m0.signum() {
            e = 0.0;
        } else if m0.signum() != m1.signum() && e.abs() > 3.0 * m0.abs() {
            e = 3.0 * m0;
        }
        e
    };
    d[0] = end(h[0], h[1], del[0], del[1]);
    d[n - 1] = end(h[n - 2], h[n - 3], del[n - 2], del[n - 3]);
    d
}

pub(crate) fn read_two_columns(path: &Path) -> Result<(Vec<f64>, Vec<f64>)> {
    let mut rdr =
        csv::ReaderBuilder::new().has_headers(false).comment(Some(b'#')).trim(csv::Trim::All).from_path(path)?;
    let (mut xs, mut ys) = (Vec::new(), Vec::new());
    for (i, rec) in rdr.records().enumerate() {
        let rec = rec?;
        if rec.len() < 2 {
            return Err(Error::Config(format!("{}: row {} has fewer than two columns", path.display(), i + 1)));
        }
        match (rec[0].parse::<f64>(), rec[1].parse::<f64>()) {
            (Ok(x), Ok(y)) => {
                xs.push(x);
                ys.push(y);
            }
            // tolerate a single header row
            _ if i == 0 => continue,
            _ => return Err(Error::Config(format!("{}: row {} is not numeric", path.display(), i + 1))),
        }
    }
    Ok((xs, ys))
}

/// Coefficient family of `b(t)`.
#[derive(Debug, Clone, PartialEq)]
pub enum DampingFamily {
    /// `b(t) = mu (1+t)^kappa`.
    PowerLaw {
        mu: f64,
        kappa: f64,
    },
    Tabulated(Tabulated),
}

/// Sign behaviour of `b'`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Trend {
    NonDecreasing,
    Decreasing,
}

#[derive(Debug, Clone, PartialEq)]
pub struct DampingSpec {
    pub family: DampingFamily,
    pub sigma: f64,
    pub delta: f64,
}

fn check_orders(sigma: f64, delta: f64) -> Result<()> {
    if !(sigma >= 1.0) || !sigma.is_finite() {
        return invalid(format!("sigma must be >= 1, got {sigma}"));
    }
    if !(0.0..=sigma / 2.0).contains(&delta) {
        return invalid(format!("delta must lie in [0, sigma/2] = [0, {}], got {delta}", sigma / 2.0));
    }
    Ok(())
}

impl DampingSpec {
    pub fn power_law(mu: f64, kappa: f64, sigma: f64, delta: f64) -> Result<Self> {
        if !(mu > 0.0) || !mu.is_finite() {
            return invalid(format!("mu must be positive, got {mu}"));
        }
        if !kappa.is_finite() {
            return invalid("kappa must be finite");
        }
        check_orders(sigma, delta)?;
        Ok(Self { family: DampingFamily::PowerLaw { mu, kappa }, sigma, delta })
    }

    /// `b = 1` with the given operator orders.
    pub fn constant(sigma: f64, delta: f64) -> Result<Self> {
        Self::power_law(1.0, 0.0, sigma, delta)
    }

    pub fn tabulated(table: Tabulated, sigma: f64, delta: f64) -> Result<Self> {
        check_orders(sigma, delta)?;
        Ok(Self { family: DampingFamily::Tabulated(table), sigma, delta })
    }

    fn check_time(t: f64) -> Result<()> {
        if !(t >= 0.0) {
            return invalid(format!("time must be nonnegative, got {t}"));
        }
        Ok(())
    }

    /// `b(t)`.
    pub fn value(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(match &self.family {
            DampingFamily::PowerLaw { mu, kappa } => mu * (1.0 + t).powf(*kappa),
            DampingFamily::Tabulated(tab) => tab.eval(t)?.0,
        })
    }

    /// `b'(t)`, analytic or from the interpolant.
    pub fn derivative(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(match &self.family {
            DampingFamily::PowerLaw { mu, kappa } => mu * kappa * (1.0 + t).powf(kappa - 1.0),
            DampingFamily::Tabulated(tab) => tab.eval(t)?.1,
        })
    }

    pub fn second_derivative(&self, t: f64) -> Result<f64> {
        Self::check_time(t)?;
        Ok(match &self.family {
            DampingFamily::PowerLaw { mu, kappa } => mu * kappa * (kappa - 1.0) * (1.0 + t).powf(kappa - 2.0),
            DampingFamily::Tabulated(tab) => tab.eval(t)?.2,
        })
    }

    /// Largest time at which `b` is defined.
    pub fn t_max(&self) -> f64 {
        match &self.family {
            DampingFamily::PowerLaw { .. } => f64::INFINITY,
            DampingFamily::Tabulated(tab) => tab.t_max(),
        }
    }

    pub fn trend(&self) -> Trend {
        match &self.family {
            DampingFamily::PowerLaw { kappa, .. } => {
                if *kappa >= 0.0 {
                    Trend::NonDecreasing
                } else {
                    Trend::Decreasing
                }
            }
            DampingFamily::Tabulated(tab) => {
                if tab.values().last() >= tab.values().first() {
                    Trend::NonDecreasing
                } else {
                    Trend::Decreasing
                }
            }
        }
    }

    /// Asymptotic growth exponent `kappa` with `b ~ (1+t)^kappa`.
    ///
    /// For tabulated data this is the log-log slope across the last half of the table.
    pub fn growth_exponent(&self) -> f64 {
        match &self.family {
            DampingFamily::PowerLaw { kappa, .. } => *kappa,
            DampingFamily::Tabulated(tab) => {
                let t1 = tab.t_max();
                let t0 = 0.5 * t1;
                let b0 = tab.eval(t0).map(|v| v.0).unwrap_or(1.0);
                let b1 = tab.eval(t1).map(|v| v.0).unwrap_or(1.0);
                (b1 / b0).ln() / ((1.0 + t1) / (1.0 + t0)).ln()
            }
        }
    }

    fn check_pair(&self, s: f64, t: f64) -> Result<()> {
        Self::check_time(s)?;
        if s > t {
            return invalid(format!("expected s <= t, got s = {s}, t = {t}"));
        }
        if t > self.t_max() {
            return Err(Error::OutOfRange { t, lo: 0.0, hi: self.t_max() });
        }
        Ok(())
    }

    /// `B(s,t) = int_s^t dtau / b(tau)`.
    pub fn inv_integral(&self, s: f64, t: f64) -> Result<f64> {
        self.check_pair(s, t)?;
        if s == t {
            return Ok(0.0);
        }
        match &self.family {
            DampingFamily::PowerLaw { mu, kappa } => Ok(power_primitive(-kappa, s, t) / mu),
            DampingFamily::Tabulated(tab) => tabulated_integral(tab, s, t, |b| 1.0 / b),
        }
    }

    /// `Bhat(s,t) = int_s^t b(tau) dtau`.
    pub fn integral(&self, s: f64, t: f64) -> Result<f64> {
        self.check_pair(s, t)?;
        if s == t {
            return Ok(0.0);
        }
        match &self.family {
            DampingFamily::PowerLaw { mu, kappa } => Ok(mu * power_primitive(*kappa, s, t)),
            DampingFamily::Tabulated(tab) => tabulated_integral(tab, s, t, |b| b),
        }
    }

    /// `B(s,t)` by adaptive quadrature regardless of family.
    pub fn inv_integral_quadrature(&self, s: f64, t: f64) -> Result<f64> {
        self.check_pair(s, t)?;
        quadrature::integrate(|x| 1.0 / self.value(x).unwrap_or(f64::NAN), s, t, 1e-12, 0.0)
    }

    /// `Bhat(s,t)` by adaptive quadrature regardless of family.
    pub fn integral_quadrature(&self, s: f64, t: f64) -> Result<f64> {
        self.check_pair(s, t)?;
        quadrature::integrate(|x| self.value(x).unwrap_or(f64::NAN), s, t, 1e-12, 0.0)
    }

    /// `lambda(t) = exp(|xi|^{2 delta} Bhat(0,t) / 2)`.
    pub fn lambda(&self, t: f64, xi: f64, delta: f64) -> Result<f64> {
        if !(xi >= 0.0) {
            return invalid(format!("frequency magnitude must be nonnegative, got {xi}"));
        }
        Ok((0.5 * xi.powf(2.0 * delta) * self.integral(0.0, t)?).exp())
    }

    /// `limsup |b'| / b^2`, analytic for power laws, a tail supremum otherwise.
    pub fn b_l_limit(&self) -> f64 {
        match &self.family {
            DampingFamily::PowerLaw { mu, kappa } => {
                if *kappa > -1.0 {
                    0.0
                } else if *kappa == -1.0 {
                    1.0 / mu
                } else {
                    f64::INFINITY
                }
            }
            DampingFamily::Tabulated(tab) => {
                let t1 = tab.t_max();
                tail_sup(t1, |t| {
                    let (b, db, _) = tab.eval(t).ok()?;
                    Some(db.abs() / (b * b))
                })
            }
        }
    }
}

/// `int_s^t (1+tau)^a dtau`, cancellation-free.
fn power_primitive(a: f64, s: f64, t: f64) -> f64 {
    let ls = (1.0 + s).ln();
    let gap = ((t - s) / (1.0 + s)).ln_1p();
    if (a + 1.0).abs() < 1e-14 {
        return gap;
    }
    let e = a + 1.0;
    (e * ls).exp() * (e * gap).exp_m1() / e
}

fn tabulated_integral(tab: &Tabulated, s: f64, t: f64, g: impl Fn(f64) -> f64) -> Result<f64> {
    let knots = tab.times();
    let mut total = 0.0;
    let mut lo = s;
    let start = knots.partition_point(|&x| x <= s);
    for &k in knots[start..].iter().chain(std::iter::once(&t)) {
        let hi = k.min(t);
        if hi > lo {
            total +=
                quadrature::integrate(|x| g(tab.eval(x).map(|v| v.0).unwrap_or(f64::NAN)), lo, hi, CLOCK_REL_TOL, 0.0)?;
            lo = hi;
        }
        if hi >= t {
            break;
        }
    }
    Ok(total)
}

fn tail_sup(t1: f64, f: impl Fn(f64) -> Option<f64>) -> f64 {
    let t0 = 0.5 * t1;
    (0..=200).filter_map(|i| f(t0 + (t1 - t0) * i as f64 / 200.0)).fold(0.0, f64::max)
}

/// Outcome of one structural check.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "kebab-case")]
pub enum Verdict {
    Pass,
    Fail,
    NumericOnly,
}

#[derive(Debug, Clone, Serialize)]
pub struct ConditionCheck {
    pub verdict: Verdict,
    /// Diagnostic quantity backing the verdict.
    pub witness: f64,
    pub note: String,
}

impl ConditionCheck {
    fn analytic(pass: bool, witness: f64, note: impl Into<String>) -> Self {
        Self { verdict: if pass { Verdict::Pass } else { Verdict::Fail }, witness, note: note.into() }
    }

    fn numeric(witness: f64, note: impl Into<String>) -> Self {
        Self { verdict: Verdict::NumericOnly, witness, note: note.into() }
    }
}

/// Verdicts for the structural conditions B1..B6 and B-L.
#[derive(Debug, Clone, Serialize)]
pub struct ValidationReport {
    pub horizon: f64,
    pub b1: ConditionCheck,
    pub b2: ConditionCheck,
    pub b3: ConditionCheck,
    pub b4: ConditionCheck,
    pub b5: ConditionCheck,
    pub b6: ConditionCheck,
    pub b_l: ConditionCheck,
}

impl ValidationReport {
    /// True when none of B1..B6 failed.
    pub fn effective(&self) -> bool {
        [&self.b1, &self.b2, &self.b3, &self.b4, &self.b5, &self.b6].iter().all(|c| c.verdict != Verdict::Fail)
    }

    pub fn checks(&self) -> [(&'static str, &ConditionCheck); 7] {
        [
            ("B1", &self.b1),
            ("B2", &self.b2),
            ("B3", &self.b3),
            ("B4", &self.b4),
            ("B5", &self.b5),
            ("B6", &self.b6),
            ("B-L", &self.b_l),
        ]
    }
}

impl DampingSpec {
    /// Checks the effective-damping conditions over `[0, horizon]`.
    pub fn validate_effective(&self, horizon: f64) -> Result<ValidationReport> {
        if !(horizon > 0.0) {
            return invalid(format!("horizon must be positive, got {horizon}"));
        }
        let (sigma, delta) = (self.sigma, self.delta);
        let interior_delta = delta > 0.0 && delta < sigma / 2.0;
        match &self.family {
            DampingFamily::PowerLaw { mu, kappa } => {
                let (mu, kappa) = (*mu, *kappa);
                let h = horizon;
                let b2 = if interior_delta {
                    let e = (sigma - 2.0 * delta) / sigma;
                    ConditionCheck::analytic(
                        kappa > -e,
                        h.powf(e) * self.value(h)?,
                        format!("needs t^{e:.4} b(t) -> inf, i.e. kappa > {:.4}", -e),
                    )
                } else {
                    ConditionCheck::analytic(kappa > -1.0, h * self.value(h)?, "needs t b(t) -> inf, i.e. kappa > -1")
                };
                let b3_witness = kappa.abs().max((kappa * (kappa - 1.0)).abs());
                let b5_witness = if (kappa + 1.0).abs() < 1e-14 {
                    (1.0 + h).ln() / mu
                } else {
                    (1.0 - (1.0 + h).powf(-1.0 - kappa)) / (mu * (1.0 + kappa))
                };
                let bl = self.b_l_limit();
                Ok(ValidationReport {
                    horizon,
                    b1: ConditionCheck::analytic(true, self.value(h)?, "power law is smooth"),
                    b2,
                    b3: ConditionCheck::analytic(true, b3_witness, "sup (1+t)^k |b^(k)|/b for k = 1, 2"),
                    b4: ConditionCheck::analytic(
                        kappa <= 1.0,
                        self.inv_integral(0.0, h)?,
                        "1/b not integrable iff kappa <= 1",
                    ),
                    b5: ConditionCheck::analytic(kappa > -1.0, b5_witness, "((1+t)^2 b)^-1 integrable iff kappa > -1"),
                    b6: ConditionCheck::analytic(true, kappa, "b' has the sign of kappa"),
                    b_l: ConditionCheck::analytic(bl < 1.0, bl, "limsup |b'|/b^2 < 1"),
                })
            }
            DampingFamily::Tabulated(tab) => {
                let h = horizon.min(tab.t_max());
                let b_h = self.value(h)?;
                let e = if interior_delta { (sigma - 2.0 * delta) / sigma } else { 1.0 };
                let b3 = tail_sup(h, |t| {
                    let (b, d1, d2) = tab.eval(t).ok()?;
                    Some(((1.0 + t) * d1.abs() / b).max((1.0 + t).powi(2) * d2.abs() / b))
                });
                let b5 = quadrature::integrate(
                    |t| 1.0 / ((1.0 + t).powi(2) * tab.eval(t).map(|v| v.0).unwrap_or(f64::NAN)),
                    0.0,
                    h,
                    1e-8,
                    0.0,
                )?;
                let derivs: Vec<f64> = tab
                    .times()
                    .iter()
                    .filter(|&&t| t <= h)
                    .filter_map(|&t| tab.eval(t).ok().map(|v| v.1))
                    .filter(|d| *d != 0.0)
                    .collect();
                let changes = derivs.windows(2).filter(|w| w[0].signum() != w[1].signum()).count();
                let b6 = if changes > 0 {
                    ConditionCheck::analytic(false, changes as f64, "b' changes sign on the table")
                } else {
                    ConditionCheck::numeric(0.0, "no sign change of b' on the table")
                };
                Ok(ValidationReport {
                    horizon,
                    b1: ConditionCheck::numeric(b_h, "monotone cubic interpolant is only C^1"),
                    b2: ConditionCheck::numeric(h.powf(e) * b_h, format!("t^{e:.4} b(t) at the end of the table")),
                    b3: ConditionCheck::numeric(b3, "tail sup of (1+t)^k |b^(k)|/b"),
                    b4: ConditionCheck::numeric(self.inv_integral(0.0, h)?, "B(0, T) on the table"),
                    b5: ConditionCheck::numeric(b5, "int_0^T ((1+t)^2 b)^-1"),
                    b6,
                    b_l: ConditionCheck::numeric(self.b_l_limit(), "tail sup of |b'|/b^2"),
                })
            }
        }
    }
}

/// Min and max of one ratio over a sample.
#[derive(Debug, Clone, Copy, Serialize, PartialEq)]
pub struct RatioRange {
    pub min: f64,
    pub max: f64,
}

impl RatioRange {
    fn new() -> Self {
        Self { min: f64::INFINITY, max: f64::NEG_INFINITY }
    }

    fn push(&mut self, v: f64) {
        self.min = self.min.min(v);
        self.max = self.max.max(v);
    }

    pub fn spread(&self) -> f64 {
        self.max / self.min
    }

    pub fn within(&self, lo: f64, hi: f64) -> bool {
        self.min >= lo && self.max <= hi
    }
}

/// Ratio statistics for the asymptotic equivalences of the clocks.
#[derive(Debug, Clone, Serialize)]
pub struct EquivalenceStats {
    /// `B(s,t) / (t/b(t) - s/b(s))`
    pub clock_vs_linear: RatioRange,
    /// `(1+t) / (b(t) (1 + B(0,t)))`
    pub time_vs_clock: RatioRange,
    /// `(1 + B(0,t)) b(t)^2 / (1 + Bhat(0,t))`
    pub clock_vs_dual: RatioRange,
    pub pairs_used: usize,
}

impl DampingSpec {
    /// Evaluates the three clock equivalence ratios over `(s, t)` pairs.
    ///
    /// Pairs with `s == t` are skipped for the first ratio.
    pub fn check_equivalences(&self, pairs: &[(f64, f64)]) -> Result<EquivalenceStats> {
        let mut a = RatioRange::new();
        let mut b = RatioRange::new();
        let mut c = RatioRange::new();
        let mut used = 0;
        for &(s, t) in pairs {
            if s > t || s < 0.0 {
                return invalid(format!("degenerate pair (s, t) = ({s}, {t})"));
            }
            let bt = self.value(t)?;
            let b0t = self.inv_integral(0.0, t)?;
            if s < t {
                let denom = t / bt - s / self.value(s)?;
                if denom > 0.0 {
                    a.push(self.inv_integral(s, t)? / denom);
                    used += 1;
                }
            }
            b.push((1.0 + t) / (bt * (1.0 + b0t)));
            c.push((1.0 + b0t) * bt * bt / (1.0 + self.integral(0.0, t)?));
        }
        if used == 0 {
            return invalid("degenerate grid: no pair with s < t");
        }
        Ok(EquivalenceStats { clock_vs_linear: a, time_vs_clock: b, clock_vs_dual: c, pairs_used: used })
    }
}

/// `(s, t)` pairs with `t` geometric on `[t_min, t_max]` and `s` uniform on `[0, s_frac t]`.
pub fn geometric_pairs(t_min: f64, t_max: f64, nt: usize, ns: usize, s_frac: f64) -> Vec<(f64, f64)> {
    let mut out = Vec::with_capacity(nt * ns);
    for i in 0..nt {
        let t = t_min * (t_max / t_min).powf(i as f64 / (nt.max(2) - 1) as f64);
        for j in 0..ns {
            let s = s_frac * t * j as f64 / (ns.max(2) - 1) as f64;
            out.push((s, t));
        }
    }
    out
}

/// Solution of `-g' + b g = 1` with the bounded-solution initial value.
#[derive(Debug, Clone, Serialize)]
pub struct GTrajectory {
    pub times: Vec<f64>,
    pub g: Vec<f64>,
    /// `g' = b g - 1`.
    pub g_prime: Vec<f64>,
    /// `int_0^inf exp(-Bhat(0,t)) dt`
    pub b_zero: f64,
    /// `b(0) b_zero - 1`
    pub a_zero: f64,
    /// Largest `|-g' + b g - 1|` with `g'` from finite differences of the samples.
    pub max_residual: f64,
    /// `|g(0) - b_zero|` between the backward sweep and the direct quadrature.
    pub initial_mismatch: f64,
    pub band: BandCheck,
    pub slope: SlopeCheck,
}

/// `b(t) g(t)` stays in `[lower, upper]` for `t >= t0`.
#[derive(Debug, Clone, Serialize)]
pub struct BandCheck {
    pub t0: f64,
    pub lower: f64,
    pub upper: f64,
    pub limit: f64,
    pub passes: bool,
}

/// `|g'| <= (1 + B_inf)/(1 - B_inf)` for `t >= t1`.
#[derive(Debug, Clone, Serialize)]
pub struct SlopeCheck {
    pub b_inf: f64,
    pub bound: f64,
    pub t1: Option<f64>,
    /// Largest `|g'|` on `[t1, horizon]`, or on the whole grid if `t1` was not found.
    pub sup_after: f64,
    pub passes: bool,
}

impl DampingSpec {
    /// Time `T` with `Bhat(s, T) >= level`, found by doubling.
    fn time_for_integral(&self, s: f64, level: f64) -> Result<f64> {
        let mut t = s + 1.0;
        for _ in 0..200 {
            if t > self.t_max() {
                return Err(Error::Quadrature(format!(
                    "Bhat grows too slowly: Bhat({s}, T) < {level} within the damping range"
                )));
            }
            if self.integral(s, t)? >= level {
                return Ok(t);
            }
            t = s + 2.0 * (t - s);
        }
        Err(Error::Quadrature(format!("Bhat({s}, T) stays below {level}")))
    }

    /// `int_0^inf exp(-Bhat(0,t)) dt`, truncated where `Bhat >= 25` and the tail is negligible.
    pub fn b_zero_constant(&self) -> Result<f64> {
        let mut t_end = self.time_for_integral(0.0, 25.0)?;
        let f = |t: f64| (-self.integral(0.0, t).unwrap_or(f64::INFINITY)).exp();
        let mut value = quadrature::integrate(f, 0.0, t_end, 1e-13, 0.0)?;
        for _ in 0..60 {
            let tail = f(t_end) / self.value(t_end)?;
            if tail < 1e-10 * value {
                return Ok(value);
            }
            let next = t_end * 2.0;
            if next > self.t_max() {
                return Err(Error::Quadrature("tail of exp(-Bhat) does not vanish on the damping range".into()));
            }
            value += quadrature::integrate(f, t_end, next, 1e-13, 0.0)?;
            t_end = next;
        }
        Err(Error::Quadrature("tail of exp(-Bhat) does not vanish".into()))
    }

    /// Solves `-g' + b g = 1, g(0) = b_zero` on `[0, horizon]`.
    ///
    /// Forward integration amplifies any error in `g(0)` by `exp(Bhat)`, so the
    /// bounded solution is built by an exact variation-of-constants sweep run
    /// backwards from a far time, where `g ~ 1/b`. The result is checked
    /// against the quadrature value of `g(0)`.
    pub fn solve_g(&self, horizon: f64, points: usize) -> Result<GTrajectory> {
        if !(horizon > 0.0) || points < 3 {
            return invalid("solve_g needs a positive horizon and at least 3 points");
        }
        let b_zero = self.b_zero_constant()?;
        let a_zero = self.value(0.0)? * b_zero - 1.0;

        let times: Vec<f64> = (0..points).map(|k| (1.0 + horizon).powf(k as f64 / (points - 1) as f64) - 1.0).collect();
        let t_far = self.time_for_integral(horizon, 40.0)?;
        // one exact step from the far time back to the horizon
        let step = |a: f64, c: f64, g_c: f64| -> Result<f64> {
            let decay = (-self.integral(a, c)?).exp();
            let source = quadrature::integrate(
                |tau| (-self.integral(a, tau).unwrap_or(f64::INFINITY)).exp(),
                a,
                c,
                1e-12,
                1e-300,
            )?;
            Ok(decay * g_c + source)
        };
        let mut g = vec![0.0; points];
        g[points - 1] = step(horizon, t_far, 1.0 / self.value(t_far)?)?;
        for k in (0..points - 1).rev() {
            g[k] = step(times[k], times[k + 1], g[k + 1])?;
        }
        let bvals: Vec<f64> = times.iter().map(|&t| self.value(t)).collect::<Result<_>>()?;
        let g_prime: Vec<f64> = bvals.iter().zip(&g).map(|(b, g)| b * g - 1.0).collect();

        let mut max_residual: f64 = 0.0;
        for k in 1..points - 1 {
            let h1 = times[k] - times[k - 1];
            let h2 = times[k + 1] - times[k];
            let d = -h2 / (h1 * (h1 + h2)) * g[k - 1] + (h2 - h1) / (h1 * h2) * g[k] + h1 / (h2 * (h1 + h2)) * g[k + 1];
            max_residual = max_residual.max((-d + bvals[k] * g[k] - 1.0).abs());
        }

        let bg: Vec<f64> = bvals.iter().zip(&g).map(|(b, g)| b * g).collect();
        let limit = *bg.last().expect("non-empty");
        let mut start = points - 1;
        while start > 0 && (bg[start - 1] - limit).abs() <= 0.5 * limit {
            start -= 1;
        }
        let lower = bg[start..].iter().cloned().fold(f64::INFINITY, f64::min);
        let upper = bg[start..].iter().cloned().fold(f64::NEG_INFINITY, f64::max);
        let band = BandCheck { t0: times[start], lower, upper, limit, passes: lower > 0.0 && upper.is_finite() };

        let b_inf = self.b_l_limit();
        let bound = if b_inf < 1.0 { (1.0 + b_inf) / (1.0 - b_inf) } else { f64::INFINITY };
        let mut first = points;
        while first > 0 && g_prime[first - 1].abs() <= bound {
            first -= 1;
        }
        let (t1, sup_after) = if first < points {
            (Some(times[first]), g_prime[first..].iter().fold(0.0f64, |m, v| m.max(v.abs())))
        } else {
            (None, g_prime.iter().fold(0.0f64, |m, v| m.max(v.abs())))
        };
        let slope = SlopeCheck { b_inf, bound, t1, sup_after, passes: t1.is_some() && bound.is_finite() };

        Ok(GTrajectory {
            initial_mismatch: (g[0] - b_zero).abs(),
            times,
            g,
            g_prime,
            b_zero,
            a_zero,
            max_residual,
            band,
            slope,
        })
    }
}

/// Serializable description of a damping coefficient.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "family", rename_all = "snake_case", deny_unknown_fields)]
pub enum DampingConfig {
    PowerLaw {
        #[serde(default = "one")]
        mu: f64,
        #[serde(default)]
        kappa: f64,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        delta: f64,
    },
    Tabulated {
        path: String,
        #[serde(default = "one")]
        sigma: f64,
        #[serde(default)]
        delta: f64,
    },
}

fn one() -> f64 {
    1.0
}

impl DampingConfig {
    /// Builds the `DampingSpec`; relative table paths resolve against `base`.
    pub fn build(&self, base: &Path) -> Result<DampingSpec> {
        match self {
            DampingConfig::PowerLaw { mu, kappa, sigma, delta } => DampingSpec::power_law(*mu, *kappa, *sigma, *delta),
            DampingConfig::Tabulated { path, sigma, delta } => {
                let p = base.join(path);
                DampingSpec::tabulated(Tabulated::from_csv(&p)?, *sigma, *delta)
            }
        }
    }
}
