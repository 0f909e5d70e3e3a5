//! Closed-form exponents of the semilinear theory.
//!
//! Every calculator is generic over [`Field`], implemented for `f64` and for
//! exact rationals `Ratio<i64>`, so exponent tables built from rational
//! inputs carry no rounding.

use std::fmt::Debug;
use std::ops::{Add, Div, Mul, Neg, Sub};

use num_rational::Ratio;
use serde::{Deserialize, Serialize};

use crate::damping::Trend;
use crate::error::{Error, Result};

pub trait Field:
    Copy
    + PartialOrd
    + Debug
    + Add<Output = Self>
    + Sub<Output = Self>
    + Mul<Output = Self>
    + Div<Output = Self>
    + Neg<Output = Self>
{
    fn int(v: i64) -> Self;
    fn to_f64(self) -> f64;
    /// Exact text, `a/b` for rationals.
    fn display(self) -> String;

    fn half() -> Self {
        Self::int(1) / Self::int(2)
    }

    fn min_of(self, other: Self) -> Self {
        if other < self {
            other
        } else {
            self
        }
    }

    fn max_of(self, other: Self) -> Self {
        if other > self {
            other
        } else {
            self
        }
    }
}

impl Field for f64 {
    fn int(v: i64) -> Self {
        v as f64
    }

    fn to_f64(self) -> f64 {
        self
    }

    fn display(self) -> String {
        format!("{self}")
    }
}

impl Field for Ratio<i64> {
    fn int(v: i64) -> Self {
        Ratio::from_integer(v)
    }

    fn to_f64(self) -> f64 {
        *self.numer() as f64 / *self.denom() as f64
    }

    fn display(self) -> String {
        format!("{self}")
    }
}

/// Rational with denominator at most `10^6` that rounds to exactly `x`.
pub fn exact_rational(x: f64) -> Option<Ratio<i64>> {
    let r = Ratio::<i64>::approximate_float(x)?;
    (*r.denom() <= 1_000_000 && r.to_f64() == x).then_some(r)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct ExponentInputs<F> {
    pub sigma: F,
    pub delta: F,
    pub gamma: F,
    pub n: u32,
    /// Decay character of `u0`.
    pub r0: F,
    /// Decay character of `u1`.
    pub r1: F,
}

fn hypothesis<T>(msg: impl Into<String>) -> Result<T> {
    Err(Error::Hypothesis(msg.into()))
}

impl<F: Field> ExponentInputs<F> {
    pub fn validate(&self) -> Result<()> {
        let zero = F::int(0);
        if !(self.sigma >= F::int(1)) {
            return hypothesis(format!("sigma = {} must be at least 1", self.sigma.display()));
        }
        if !(self.delta >= zero && self.delta <= self.sigma * F::half()) {
            return hypothesis(format!("delta = {} must lie in [0, sigma/2]", self.delta.display()));
        }
        if !(self.gamma >= zero && self.gamma < self.sigma) {
            return hypothesis(format!("gamma = {} must lie in [0, sigma)", self.gamma.display()));
        }
        if self.n == 0 {
            return hypothesis("n must be at least 1");
        }
        Ok(())
    }

    fn nf(&self) -> F {
        F::int(self.n as i64)
    }

    /// `min{r0, r1 - 2 delta}`.
    pub fn m(&self) -> F {
        self.r0.min_of(self.r1 - F::int(2) * self.delta)
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ChainCheck {
    pub holds: bool,
    /// No decay characters at all can satisfy the chain.
    pub vacuous: bool,
    pub detail: String,
}

/// Sign conditions on the decay characters for global existence.
pub fn hypothesis_chain<F: Field>(inp: &ExponentInputs<F>, trend: Trend) -> Result<ChainCheck> {
    inp.validate()?;
    let zero = F::int(0);
    let two = F::int(2);
    let lower = -(inp.nf() * F::half());
    let (holds, vacuous, detail) = if inp.delta == zero {
        let m = inp.r0.min_of(inp.r1);
        (lower < m && m <= zero, false, format!("-n/2 < min(r0, r1) = {} <= 0", m.display()))
    } else {
        let m = inp.m();
        let top = -(two * inp.delta);
        let vac = !(lower < top);
        match trend {
            Trend::NonDecreasing => {
                (lower < m && m <= top, vac, format!("-n/2 < min(r0, r1 - 2 delta) = {} <= -2 delta", m.display()))
            }
            Trend::Decreasing => {
                let m2 = inp.r0.min_of(inp.r1 - two * inp.sigma - two * inp.delta);
                (
                    lower < m2 && m2 <= m && m <= top,
                    vac,
                    format!(
                        "-n/2 < min(r0, r1 - 2 sigma - 2 delta) = {} <= min(r0, r1 - 2 delta) = {} <= -2 delta",
                        m2.display(),
                        m.display()
                    ),
                )
            }
        }
    };
    Ok(ChainCheck { holds, vacuous, detail })
}

/// `omega = n / (n + min{r0, r1 - 2 delta} + 2 delta)`.
pub fn omega<F: Field>(inp: &ExponentInputs<F>, trend: Trend) -> Result<F> {
    let chain = hypothesis_chain(inp, trend)?;
    if !chain.holds {
        return hypothesis(format!("violated: {}", chain.detail));
    }
    let n = inp.nf();
    Ok(n / (n + inp.m() + F::int(2) * inp.delta))
}

/// `p* = (n + 2 omega (sigma - delta)) / (omega (n + min{r0, r1 - 2 delta} + gamma))`.
pub fn p_star<F: Field>(inp: &ExponentInputs<F>, trend: Trend) -> Result<F> {
    let w = omega(inp, trend)?;
    let n = inp.nf();
    let den = w * n + w * inp.m() + w * inp.gamma;
    if !(den > F::int(0)) {
        return hypothesis(format!("denominator of p* is {}", den.display()));
    }
    Ok((n + F::int(2) * w * (inp.sigma - inp.delta)) / den)
}

/// `1 + 2 sigma / (n - 2 delta)`.
pub fn critical_p<F: Field>(sigma: F, delta: F, n: u32) -> Result<F> {
    let d = F::int(n as i64) - F::int(2) * delta;
    if !(d > F::int(0)) {
        return hypothesis(format!("need n > 2 delta, got n = {n}, delta = {}", delta.display()));
    }
    Ok(F::int(1) + F::int(2) * sigma / d)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PInterval<F> {
    pub lo: F,
    pub lo_open: bool,
    /// `None` means unbounded above.
    pub hi: Option<F>,
}

impl<F: Field> PInterval<F> {
    pub fn contains(&self, p: F) -> bool {
        let above = if self.lo_open { p > self.lo } else { p >= self.lo };
        above && self.hi.is_none_or(|h| p <= h)
    }

    pub fn display(&self) -> String {
        let hi = self.hi.map_or("inf)".to_string(), |h| format!("{}]", h.display()));
        format!("{}{}, {hi}", if self.lo_open { "(" } else { "[" }, self.lo.display())
    }
}

/// Exponents `p` admitted by the global existence result, or `None`.
pub fn admissible_p_range<F: Field>(inp: &ExponentInputs<F>, trend: Trend) -> Result<Option<PInterval<F>>> {
    let w = omega(inp, trend)?;
    let ps = p_star(inp, trend)?;
    let two = F::int(2);
    let n = inp.nf();
    let gap = two * inp.sigma - two * inp.gamma;
    let lo_base = two / w;
    let hi = if n <= gap {
        None
    } else if n * (two - w) <= two * gap {
        Some(n / (n - gap))
    } else {
        return Ok(None);
    };
    let (lo, lo_open) = if ps >= lo_base { (ps, true) } else { (lo_base, false) };
    if let Some(h) = hi {
        if h < lo || (h == lo && lo_open) {
            return Ok(None);
        }
    }
    Ok(Some(PInterval { lo, lo_open, hi }))
}

/// Gagliardo-Nirenberg exponent `theta` for `||D^kappa f||_q <~ ||f||_q0^(1-theta) ||D^r f||_q1^theta`.
pub fn gn_theta<F: Field>(kappa: F, r: F, q: F, q0: F, q1: F, n: u32) -> Result<F> {
    let one = F::int(1);
    let zero = F::int(0);
    for (name, v) in [("q", q), ("q0", q0), ("q1", q1)] {
        if !(v > one) {
            return hypothesis(format!("{name} = {} must exceed 1", v.display()));
        }
    }
    if !(kappa >= zero && kappa < r) {
        return hypothesis(format!("need 0 <= kappa < r, got kappa = {}, r = {}", kappa.display(), r.display()));
    }
    let nf = F::int(n as i64);
    let num = one / q0 - one / q + kappa / nf;
    let den = one / q0 - one / q1 + r / nf;
    if den == zero {
        return hypothesis("theta is undefined: vanishing denominator");
    }
    let theta = num / den;
    if !(theta >= kappa / r && theta <= one) {
        return hypothesis(format!("theta = {} outside [kappa/r, 1]", theta.display()));
    }
    Ok(theta)
}

/// `r* >= eta - n/2` for data in the negative Sobolev space of order `eta`.
pub fn r_star_lower_bound<F: Field>(eta: F, n: u32) -> Result<F> {
    let half_n = F::int(n as i64) * F::half();
    if !(eta > F::int(0) && eta < half_n) {
        return hypothesis(format!("eta = {} must lie in (0, n/2)", eta.display()));
    }
    Ok(eta - half_n)
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ExponentTable {
    pub exact: bool,
    pub chain: ChainCheck,
    pub omega: Option<f64>,
    pub p_star: Option<f64>,
    pub critical_p: Option<f64>,
    pub admissible: Option<String>,
    /// The same quantities as exact text where available.
    pub text: std::collections::BTreeMap<String, String>,
}

/// Every exponent that is defined for `inp`.
pub fn exponent_table<F: Field>(inp: &ExponentInputs<F>, trend: Trend, exact: bool) -> Result<ExponentTable> {
    let chain = hypothesis_chain(inp, trend)?;
    let mut text = std::collections::BTreeMap::new();
    let mut put = |k: &str, v: Option<F>| {
        if let Some(v) = v {
            text.insert(k.to_string(), v.display());
        }
        v.map(F::to_f64)
    };
    let w = omega(inp, trend).ok();
    let ps = p_star(inp, trend).ok();
    let cp = critical_p(inp.sigma, inp.delta, inp.n).ok();
    let omega = put("omega", w);
    let p_star = put("p_star", ps);
    let critical_p = put("critical_p", cp);
    let admissible = match admissible_p_range(inp, trend) {
        Ok(Some(iv)) => Some(iv.display()),
        Ok(None) => Some("empty".to_string()),
        Err(_) => None,
    };
    Ok(ExponentTable { exact, chain, omega, p_star, critical_p, admissible, text })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    type Q = Ratio<i64>;

    fn q(a: i64, b: i64) -> Q {
        Ratio::new(a, b)
    }

    fn qi(sigma: i64, delta: Q, gamma: i64, n: u32, r0: Q, r1: Q) -> ExponentInputs<Q> {
        ExponentInputs { sigma: Q::int(sigma), delta, gamma: Q::int(gamma), n, r0, r1 }
    }

    const UP: Trend = Trend::NonDecreasing;

    #[test]
    fn omega_examples() {
        let z = Q::int(0);
        assert_eq!(omega(&qi(1, z, 0, 2, z, z), UP).unwrap(), Q::int(1));
        let bad = qi(2, Q::int(1), 0, 4, z, Q::int(2));
        assert!(matches!(omega(&bad, UP), Err(Error::Hypothesis(_))));
        let ok = qi(2, Q::int(1), 0, 6, Q::int(-2), z);
        assert_eq!(omega(&ok, UP).unwrap(), Q::int(1));
    }

    #[test]
    fn p_star_examples() {
        let z = Q::int(0);
        assert_eq!(p_star(&qi(1, z, 0, 2, z, z), UP).unwrap(), Q::int(2));
        assert_eq!(p_star(&qi(1, z, 0, 1, z, z), UP).unwrap(), Q::int(3));
        let mut g = ExponentInputs { sigma: 1.0, delta: 0.0, gamma: 0.0, n: 2, r0: 0.0, r1: 0.0 };
        let base = p_star(&g, UP).unwrap();
        // gamma enters the denominator
        g.gamma = 0.9;
        assert!(p_star(&g, UP).unwrap() < base);
    }

    #[test]
    fn critical_p_examples() {
        assert_eq!(critical_p(Q::int(1), Q::int(0), 2).unwrap(), Q::int(2));
        assert_eq!(critical_p(Q::int(2), q(1, 2), 3).unwrap(), Q::int(3));
        assert!(critical_p(Q::int(1), Q::int(1), 2).is_err());
    }

    #[test]
    fn admissible_examples() {
        let z = Q::int(0);
        let one = admissible_p_range(&qi(1, z, 0, 1, z, z), UP).unwrap().unwrap();
        assert_eq!((one.lo, one.lo_open, one.hi), (Q::int(3), true, None));
        let three = admissible_p_range(&qi(1, z, 0, 3, z, z), UP).unwrap().unwrap();
        assert_eq!(p_star(&qi(1, z, 0, 3, z, z), UP).unwrap(), q(5, 3));
        assert_eq!((three.lo, three.lo_open, three.hi), (Q::int(2), false, Some(Q::int(3))));
        assert!(three.contains(Q::int(3)) && !three.contains(q(19, 10)));
        assert!(admissible_p_range(&qi(1, z, 0, 5, z, z), UP).unwrap().is_none());
    }

    #[test]
    fn gn_theta_examples() {
        let f = |v: i64| Q::int(v);
        assert_eq!(gn_theta(f(0), f(1), f(2), f(2), f(3), 1).unwrap(), f(0));
        // q beyond q1 with r = n (1/q1 - 1/q)
        assert_eq!(gn_theta(f(0), q(1, 4), f(4), f(3), f(2), 1).unwrap(), f(1));
        let p = f(4);
        let theta = gn_theta(f(0), f(1), f(2) * p, f(2), f(2), 1).unwrap();
        assert_eq!(theta, q(3, 8));
        assert!(gn_theta(f(0), f(1), f(1), f(2), f(2), 1).is_err());
    }

    #[test]
    fn negative_sobolev_bound() {
        assert!((r_star_lower_bound(1e-12, 3).unwrap() + 1.5).abs() < 1e-11);
        assert_eq!(r_star_lower_bound(q(1, 2), 2).unwrap(), q(-1, 2));
        assert_eq!(r_star_lower_bound(Q::int(1), 4).unwrap(), Q::int(-1));
        assert!(r_star_lower_bound(Q::int(1), 2).is_err());
    }

    #[test]
    fn decreasing_chain_and_vacuity() {
        let d = qi(1, q(1, 4), 0, 2, q(-3, 4), Q::int(2));
        let c = hypothesis_chain(&d, Trend::Decreasing).unwrap();
        assert!(c.holds && !c.vacuous);
        let edge = qi(1, q(1, 2), 0, 2, q(-9, 10), Q::int(0));
        assert!(hypothesis_chain(&edge, Trend::Decreasing).unwrap().vacuous);
        let v = qi(2, Q::int(1), 0, 4, Q::int(-2), Q::int(0));
        assert!(hypothesis_chain(&v, UP).unwrap().vacuous);
    }

    #[test]
    fn exact_rational_roundtrip() {
        assert_eq!(exact_rational(0.25), Some(q(1, 4)));
        assert_eq!(exact_rational(-3.0), Some(Q::int(-3)));
        assert!(exact_rational(std::f64::consts::PI).is_none());
    }

    proptest! {
        #[test]
        fn fujita_consistency(sigma in 1i64..6, n in 1u32..12) {
            prop_assume!((n as i64) <= 2 * sigma);
            let z = Q::int(0);
            let i = qi(sigma, z, 0, n, z, z);
            prop_assert_eq!(p_star(&i, UP).unwrap(), critical_p(Q::int(sigma), z, n).unwrap());
        }

        #[test]
        fn omega_in_range(sigma in 1.0f64..4.0, dfrac in 0.0f64..1.0, n in 1u32..8, a in 0.001f64..0.999, extra in 0.0f64..3.0) {
            let delta = dfrac * sigma / 2.0;
            let lo = -(n as f64) / 2.0;
            let top = if delta == 0.0 { 0.0 } else { -2.0 * delta };
            prop_assume!(lo < top);
            let m = lo + a * (top - lo);
            let i = ExponentInputs { sigma, delta, gamma: 0.0, n, r0: m, r1: m + 2.0 * delta + extra };
            let w = omega(&i, UP).unwrap();
            prop_assert!((1.0..2.0).contains(&w));
        }

        #[test]
        fn theta_stays_in_range(kappa in 0.0f64..1.0, q0 in 1.1f64..6.0, q1 in 1.1f64..6.0, q in 1.1f64..6.0, n in 1u32..5) {
            if let Ok(t) = gn_theta(kappa, 1.0, q, q0, q1, n) {
                prop_assert!(t >= kappa - 1e-12 && t <= 1.0 + 1e-12);
            }
        }
    }
}
