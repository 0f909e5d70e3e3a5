//! Decay indicators and decay characters of radial Fourier profiles.
//!
//! A profile is the radial magnitude `rho -> |u^(rho)|` of a datum on `R^n`
//! under the unitary Fourier transform. Only magnitudes matter for every
//! quantity here.

use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::damping::read_two_columns;
use crate::error::{invalid, Error, Result};
use crate::quadrature;
use crate::stats::fit_line;

/// Relative accuracy of radial quadratures.
pub const RADIAL_REL_TOL: f64 = 1e-10;

/// Surface area of the unit sphere in `R^n`.
pub fn unit_sphere_area(n: usize) -> f64 {
    use std::f64::consts::PI;
    match n {
        0 => 0.0,
        1 => 2.0,
        2 => 2.0 * PI,
        _ => 2.0 * PI * unit_sphere_area(n - 2) / (n - 2) as f64,
    }
}

/// Volume of the unit ball in `R^n`.
pub fn unit_ball_volume(n: usize) -> f64 {
    unit_sphere_area(n) / n as f64
}

#[derive(Debug, Clone, PartialEq)]
pub enum Amplitude {
    /// `a rho^r_exp` on `[0, cutoff]`, zero beyond.
    PowerCutoff { a: f64, r_exp: f64, cutoff: f64 },
    /// `a exp(-rho^2 / (2 width^2))`.
    GaussianHat { a: f64, width: f64 },
    /// Samples `(rho, |u^|)`, log-log interpolated, zero past the last sample.
    TabulatedRadial { rho: Vec<f64>, amp: Vec<f64> },
}

#[derive(Debug, Clone, PartialEq)]
pub struct SpectralProfile {
    pub n: usize,
    pub amplitude: Amplitude,
    /// Extra factor `rho^-shift` applied on top of the amplitude.
    pub shift: f64,
}

impl SpectralProfile {
    pub fn power_cutoff(n: usize, a: f64, r_exp: f64, cutoff: f64) -> Result<Self> {
        check_dim(n)?;
        if !(a >= 0.0) || !(cutoff > 0.0) {
            return invalid("power-cutoff profile needs a >= 0 and cutoff > 0");
        }
        if !(r_exp > -(n as f64) / 2.0) {
            return invalid(format!("r_exp = {r_exp} must exceed -n/2 = {}", -(n as f64) / 2.0));
        }
        Ok(Self { n, amplitude: Amplitude::PowerCutoff { a, r_exp, cutoff }, shift: 0.0 })
    }

    pub fn gaussian_hat(n: usize, a: f64, width: f64) -> Result<Self> {
        check_dim(n)?;
        if !(a >= 0.0) || !(width > 0.0) {
            return invalid("gaussian profile needs a >= 0 and width > 0");
        }
        Ok(Self { n, amplitude: Amplitude::GaussianHat { a, width }, shift: 0.0 })
    }

    /// Transform of the real-space Gaussian `a exp(-|x|^2 / (2 w^2))`.
    pub fn gaussian_real(n: usize, a: f64, w: f64) -> Result<Self> {
        if !(w > 0.0) {
            return invalid("gaussian width must be positive");
        }
        Self::gaussian_hat(n, a * w.powi(n as i32), 1.0 / w)
    }

    pub fn zero(n: usize) -> Result<Self> {
        Self::power_cutoff(n, 0.0, 0.0, 1.0)
    }

    pub fn tabulated(n: usize, rho: Vec<f64>, amp: Vec<f64>) -> Result<Self> {
        check_dim(n)?;
        if rho.len() != amp.len() || rho.len() < 2 {
            return invalid("tabulated profile needs at least two samples");
        }
        if rho[0] <= 0.0 || rho.windows(2).any(|w| !(w[1] > w[0])) {
            return invalid("tabulated radii must be positive and strictly increasing");
        }
        if amp.iter().any(|&v| !(v >= 0.0) || !v.is_finite()) {
            return invalid("tabulated amplitudes must be nonnegative and finite");
        }
        Ok(Self { n, amplitude: Amplitude::TabulatedRadial { rho, amp }, shift: 0.0 })
    }

    pub fn from_csv(n: usize, path: &Path) -> Result<Self> {
        let (rho, amp) = read_two_columns(path)?;
        Self::tabulated(n, rho, amp)
    }

    /// `|u^(rho)|`.
    pub fn amplitude(&self, rho: f64) -> f64 {
        let base = match &self.amplitude {
            Amplitude::PowerCutoff { a, r_exp, cutoff } => {
                if rho > *cutoff || *a == 0.0 {
                    0.0
                } else if *r_exp == 0.0 {
                    *a
                } else {
                    a * rho.powf(*r_exp)
                }
            }
            Amplitude::GaussianHat { a, width } => a * (-0.5 * (rho / width).powi(2)).exp(),
            Amplitude::TabulatedRadial { rho: xs, amp } => interpolate_loglog(xs, amp, rho),
        };
        if self.shift == 0.0 || base == 0.0 {
            base
        } else {
            base * rho.powf(-self.shift)
        }
    }

    /// Right end of the support, if bounded.
    pub fn cutoff(&self) -> Option<f64> {
        match &self.amplitude {
            Amplitude::PowerCutoff { cutoff, .. } => Some(*cutoff),
            Amplitude::GaussianHat { .. } => None,
            Amplitude::TabulatedRadial { rho, .. } => rho.last().copied(),
        }
    }

    pub fn is_zero(&self) -> bool {
        match &self.amplitude {
            Amplitude::PowerCutoff { a, .. } | Amplitude::GaussianHat { a, .. } => *a == 0.0,
            Amplitude::TabulatedRadial { amp, .. } => amp.iter().all(|&v| v == 0.0),
        }
    }

    /// Same profile with the amplitude multiplied by `factor >= 0`.
    pub fn scaled(&self, factor: f64) -> Self {
        let mut out = self.clone();
        match &mut out.amplitude {
            Amplitude::PowerCutoff { a, .. } | Amplitude::GaussianHat { a, .. } => *a *= factor,
            Amplitude::TabulatedRadial { amp, .. } => amp.iter_mut().for_each(|v| *v *= factor),
        }
        out
    }

    /// Power `e` with `|u^(rho)| ~ rho^e` as `rho -> 0`, when known.
    pub fn near_zero_exponent(&self) -> Option<f64> {
        let e = match &self.amplitude {
            Amplitude::PowerCutoff { r_exp, .. } => *r_exp,
            Amplitude::GaussianHat { .. } => 0.0,
            Amplitude::TabulatedRadial { rho, amp } => {
                if amp[0] > 0.0 && amp[1] > 0.0 {
                    (amp[1] / amp[0]).ln() / (rho[1] / rho[0]).ln()
                } else {
                    return None;
                }
            }
        };
        Some(e - self.shift)
    }

    fn upper_support(&self) -> f64 {
        self.cutoff().unwrap_or(f64::INFINITY)
    }

    /// Integral of `c_n rho^(n-1+2 eta) |u^|^2` over `(0, upper]`.
    fn weighted_mass(&self, eta: f64, upper: f64) -> Result<f64> {
        if self.is_zero() {
            return Ok(0.0);
        }
        if let Some(e) = self.near_zero_exponent() {
            if !(e + eta > -(self.n as f64) / 2.0) {
                return Err(Error::Quadrature(format!(
                    "profile ~ rho^{e} is not square integrable near 0 with weight rho^{}",
                    2.0 * eta
                )));
            }
        }
        let cn = unit_sphere_area(self.n);
        let p = (self.n as f64) - 1.0 + 2.0 * eta;
        let f = |r: f64| {
            let a = self.amplitude(r);
            if a == 0.0 {
                0.0
            } else {
                cn * r.powf(p) * a * a
            }
        };
        let top = upper.min(self.upper_support());
        if top.is_finite() {
            return quadrature::integrate_to_zero(f, top, RADIAL_REL_TOL);
        }
        let split = match &self.amplitude {
            Amplitude::GaussianHat { width, .. } => *width,
            _ => 1.0,
        };
        let head = quadrature::integrate_to_zero(f, split, RADIAL_REL_TOL)?;
        let tail = quadrature::integrate_to_infinity(f, split, RADIAL_REL_TOL)?;
        Ok(head + tail)
    }

    /// `c_n int_0^rho s^(n-1) |u^(s)|^2 ds`.
    pub fn low_freq_energy(&self, rho: f64) -> Result<f64> {
        if !(rho > 0.0) {
            return invalid(format!("rho must be positive, got {rho}"));
        }
        self.weighted_mass(0.0, rho)
    }

    /// `rho^(-2r-n)` times the low-frequency energy.
    pub fn decay_indicator(&self, r: f64, rho: f64) -> Result<f64> {
        let n = self.n as f64;
        if !(r > -n / 2.0) {
            return invalid(format!("r = {r} must exceed -n/2 = {}", -n / 2.0));
        }
        Ok(rho.powf(-2.0 * r - n) * self.low_freq_energy(rho)?)
    }

    /// `||u||^2` in the homogeneous Sobolev space of order `eta`.
    pub fn sobolev_norm_sq(&self, eta: f64) -> Result<f64> {
        self.weighted_mass(eta, f64::INFINITY)
    }

    pub fn sobolev_norm(&self, eta: f64) -> Result<f64> {
        Ok(self.sobolev_norm_sq(eta)?.sqrt())
    }
}

fn check_dim(n: usize) -> Result<()> {
    if n == 0 {
        return invalid("dimension must be at least 1");
    }
    Ok(())
}

fn interpolate_loglog(xs: &[f64], ys: &[f64], x: f64) -> f64 {
    let last = xs.len() - 1;
    if x > xs[last] {
        return 0.0;
    }
    let k = if x <= xs[0] { 0 } else { (xs.partition_point(|&v| v <= x)).saturating_sub(1).min(last - 1) };
    let (x0, x1, y0, y1) = (xs[k], xs[k + 1], ys[k], ys[k + 1]);
    if y0 > 0.0 && y1 > 0.0 {
        let s = (y1 / y0).ln() / (x1 / x0).ln();
        y0 * (x / x0).powf(s)
    } else if x < x0 {
        y0
    } else {
        y0 + (y1 - y0) * (x - x0) / (x1 - x0)
    }
}

/// Outcome class of the decay character estimator.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum CharacterStatus {
    /// A finite character with `0 < P < inf`.
    Determined,
    /// Indicator vanishes for every `r`; the character is `+inf`.
    Zero,
    /// Indicator is infinite for every `r`; the character is `-n/2`.
    Infinite,
    /// The log-log ladder is not a straight line.
    Indeterminate,
    /// Identically zero profile.
    Degenerate,
}

#[derive(Debug, Clone, Serialize)]
pub struct DecayCharacterEstimate {
    pub status: CharacterStatus,
    /// Estimated character; `None` unless `Determined`, `Zero` (`+inf` by convention
    /// is reported as `None`) or `Infinite` (reported as `-n/2`).
    pub r_star: Option<f64>,
    /// Indicator at the smallest radius of the ladder.
    pub p_value: Option<f64>,
    pub slope: f64,
    pub residual: f64,
    pub rho_range: (f64, f64),
    pub points: usize,
}

/// Ladder `rho_max 2^-k` used by the estimator.
pub const LADDER: std::ops::RangeInclusive<i32> = 4..=16;
/// RMS residual of the log-log fit above which the estimate is indeterminate.
pub const FIT_RESIDUAL_MAX: f64 = 0.05;

pub fn estimate_decay_character(profile: &SpectralProfile) -> Result<DecayCharacterEstimate> {
    let n = profile.n as f64;
    let rho_max = profile.cutoff().map_or(1.0, |c| c.min(1.0));
    let rhos: Vec<f64> = LADDER.map(|k| rho_max * 2f64.powi(-k)).collect();
    let range = (*rhos.last().expect("non-empty"), rhos[0]);
    let points = rhos.len();
    let empty = |status, r_star| DecayCharacterEstimate {
        status,
        r_star,
        p_value: Some(0.0),
        slope: f64::NAN,
        residual: f64::NAN,
        rho_range: range,
        points,
    };
    if profile.is_zero() {
        return Ok(empty(CharacterStatus::Degenerate, None));
    }
    let energy: Vec<f64> = rhos.iter().map(|&r| profile.low_freq_energy(r)).collect::<Result<_>>()?;
    if energy.iter().all(|&e| e == 0.0) {
        return Ok(empty(CharacterStatus::Zero, None));
    }
    if energy.contains(&0.0) {
        // vanishes on the small end of the ladder but not the large end
        return Ok(empty(CharacterStatus::Zero, None));
    }
    let x: Vec<f64> = rhos.iter().map(|r| r.ln()).collect();
    let y: Vec<f64> = energy.iter().map(|e| e.ln()).collect();
    let fit = fit_line(&x, &y)?;
    let r_hat = (fit.slope - n) / 2.0;
    let indicator: Vec<f64> = rhos.iter().zip(&energy).map(|(r, e)| r.powf(-2.0 * r_hat - n) * e).collect();
    // successive halvings move towards rho -> 0
    let tail: Vec<f64> = indicator[indicator.len() - 4..].windows(2).map(|w| w[1] / w[0]).collect();
    let p_last = *indicator.last().expect("non-empty");
    let mut est = DecayCharacterEstimate {
        status: CharacterStatus::Determined,
        r_star: Some(r_hat),
        p_value: Some(p_last),
        slope: fit.slope,
        residual: fit.rms,
        rho_range: range,
        points,
    };
    if tail.iter().all(|&q| q < 0.25) {
        est.status = CharacterStatus::Zero;
        est.r_star = None;
        est.p_value = Some(0.0);
    } else if tail.iter().all(|&q| q > 4.0) || r_hat <= -n / 2.0 {
        est.status = CharacterStatus::Infinite;
        est.r_star = Some(-n / 2.0);
        est.p_value = None;
    } else if fit.rms > FIT_RESIDUAL_MAX {
        est.status = CharacterStatus::Indeterminate;
        est.r_star = None;
        est.p_value = None;
    }
    Ok(est)
}

/// Profile with amplitude `rho^-s |u^(rho)|`, whose character is `r* - s`.
pub fn shift_character(profile: &SpectralProfile, s: f64) -> Result<SpectralProfile> {
    if !(s >= 0.0) {
        return invalid(format!("shift must be nonnegative, got {s}"));
    }
    if s == 0.0 {
        return Ok(profile.clone());
    }
    let est = estimate_decay_character(profile)?;
    let r = match (est.status, est.r_star) {
        (CharacterStatus::Determined, Some(r)) => r,
        (CharacterStatus::Zero, _) => f64::INFINITY,
        _ => return Err(Error::Hypothesis(format!("shift needs a determined character, got {:?}", est.status))),
    };
    let n = profile.n as f64;
    if !(r - s > -n / 2.0) {
        return Err(Error::Hypothesis(format!("shifted character r* - s = {} must exceed -n/2 = {}", r - s, -n / 2.0)));
    }
    let mut out = profile.clone();
    out.shift += s;
    Ok(out)
}

#[derive(Debug, Clone, Serialize)]
pub struct PNorm {
    pub value: f64,
    pub sobolev: f64,
    pub indicator: f64,
    pub status: CharacterStatus,
}

/// Homogeneous Sobolev norm of order `eta` plus the square root of the indicator at the character.
pub fn p_norm(profile: &SpectralProfile, eta: f64) -> Result<PNorm> {
    if !(eta >= 0.0) {
        return invalid(format!("eta must be nonnegative, got {eta}"));
    }
    let est = estimate_decay_character(profile)?;
    let indicator = match est.status {
        CharacterStatus::Degenerate => {
            return Ok(PNorm { value: 0.0, sobolev: 0.0, indicator: 0.0, status: est.status });
        }
        CharacterStatus::Determined | CharacterStatus::Zero => est.p_value.unwrap_or(0.0),
        other => return Err(Error::Hypothesis(format!("indicator undefined for status {other:?}"))),
    };
    let sobolev = profile.sobolev_norm(eta)?;
    Ok(PNorm { value: sobolev + indicator.sqrt(), sobolev, indicator, status: est.status })
}

/// Serializable profile description.
#[derive(Debug, Clone, Serialize, Deserialize, PartialEq)]
#[serde(tag = "kind", rename_all = "snake_case", deny_unknown_fields)]
pub enum ProfileConfig {
    PowerCutoff {
        #[serde(alias = "A", default = "one")]
        amplitude: f64,
        #[serde(default)]
        r_exp: f64,
        #[serde(default = "one")]
        cutoff: f64,
    },
    GaussianHat {
        #[serde(alias = "A", default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
    },
    /// Real-space Gaussian `A exp(-|x|^2 / (2 width^2))`.
    Gaussian {
        #[serde(alias = "A", default = "one")]
        amplitude: f64,
        #[serde(default = "one")]
        width: f64,
    },
    Tabulated {
        path: String,
    },
    Zero,
}

fn one() -> f64 {
    1.0
}

impl ProfileConfig {
    pub fn build(&self, n: usize, base: &Path) -> Result<SpectralProfile> {
        match self {
            ProfileConfig::PowerCutoff { amplitude, r_exp, cutoff } => {
                SpectralProfile::power_cutoff(n, *amplitude, *r_exp, *cutoff)
            }
            ProfileConfig::GaussianHat { amplitude, width } => SpectralProfile::gaussian_hat(n, *amplitude, *width),
            ProfileConfig::Gaussian { amplitude, width } => SpectralProfile::gaussian_real(n, *amplitude, *width),
            ProfileConfig::Tabulated { path } => SpectralProfile::from_csv(n, &base.join(path)),
            ProfileConfig::Zero => SpectralProfile::zero(n),
        }
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;
    use proptest::prelude::*;
    use std::f64::consts::PI;

    fn cutoff(n: usize, r: f64) -> SpectralProfile {
        SpectralProfile::power_cutoff(n, 1.0, r, 1.0).unwrap()
    }

    #[test]
    fn sphere_areas() {
        assert_eq!(unit_sphere_area(1), 2.0);
        assert_relative_eq!(unit_sphere_area(2), 2.0 * PI);
        assert_relative_eq!(unit_sphere_area(3), 4.0 * PI);
        assert_relative_eq!(unit_sphere_area(4), 2.0 * PI * PI);
        assert_relative_eq!(unit_ball_volume(3), 4.0 * PI / 3.0);
    }

    #[test]
    fn low_frequency_energy_examples() {
        assert_relative_eq!(cutoff(1, 0.0).low_freq_energy(0.5).unwrap(), 1.0, max_relative = 1e-8);
        for rho in [0.1, 0.5, 0.9] {
            assert_relative_eq!(cutoff(2, 0.0).low_freq_energy(rho).unwrap(), PI * rho * rho, max_relative = 1e-8);
            assert_relative_eq!(
                cutoff(1, 1.0).low_freq_energy(rho).unwrap(),
                2.0 * rho.powi(3) / 3.0,
                max_relative = 1e-8
            );
        }
        // past the cutoff nothing is added
        assert_relative_eq!(cutoff(1, 0.0).low_freq_energy(3.0).unwrap(), 2.0, max_relative = 1e-8);
    }

    #[test]
    fn indicator_examples() {
        for rho in [0.01, 0.3, 0.7] {
            assert_relative_eq!(cutoff(1, 0.0).decay_indicator(0.0, rho).unwrap(), 2.0, max_relative = 1e-8);
            assert_relative_eq!(cutoff(2, 1.0).decay_indicator(1.0, rho).unwrap(), PI / 2.0, max_relative = 1e-8);
        }
        assert_relative_eq!(cutoff(1, 0.0).decay_indicator(1.0, 0.1).unwrap(), 200.0, max_relative = 1e-8);
        assert!(cutoff(1, 0.0).decay_indicator(-0.5, 0.1).is_err());
    }

    #[test]
    fn character_examples() {
        let e = estimate_decay_character(&cutoff(1, 0.0)).unwrap();
        assert_eq!(e.status, CharacterStatus::Determined);
        assert!((e.r_star.unwrap()).abs() <= 0.02);
        assert!((e.p_value.unwrap() - 2.0).abs() <= 0.02);
        let e = estimate_decay_character(&cutoff(3, 1.0)).unwrap();
        assert!((e.r_star.unwrap() - 1.0).abs() <= 0.02);
        for n in 1..=3 {
            let g = SpectralProfile::gaussian_hat(n, 1.0, 1.0).unwrap();
            let e = estimate_decay_character(&g).unwrap();
            assert!(e.r_star.unwrap().abs() <= 0.02);
            assert_relative_eq!(e.p_value.unwrap(), unit_ball_volume(n), max_relative = 0.01);
        }
    }

    #[test]
    fn character_across_exponents_and_dimensions() {
        for n in 1..=3 {
            for r in [0.0, 0.5, 1.0, 2.0] {
                let e = estimate_decay_character(&cutoff(n, r)).unwrap();
                assert!((e.r_star.unwrap() - r).abs() <= 0.05, "n={n} r={r} got {:?}", e.r_star);
            }
        }
    }

    #[test]
    fn zero_infinite_and_degenerate() {
        let z = SpectralProfile::zero(2).unwrap();
        assert_eq!(estimate_decay_character(&z).unwrap().status, CharacterStatus::Degenerate);
        // supported away from the origin
        let t = SpectralProfile::tabulated(1, vec![0.5, 0.6, 1.0], vec![0.0, 1.0, 1.0]).unwrap();
        assert_eq!(estimate_decay_character(&t).unwrap().status, CharacterStatus::Zero);
        // vanishing faster than any power
        let rho: Vec<f64> = (1..=400).map(|k| 1e-3 * k as f64 / 400.0 * 1000.0).map(|r: f64| r.max(1e-6)).collect();
        let amp: Vec<f64> = rho.iter().map(|r| (-1.0 / r).exp()).collect();
        let t = SpectralProfile::tabulated(1, rho, amp).unwrap();
        let e = estimate_decay_character(&t).unwrap();
        assert!(matches!(e.status, CharacterStatus::Zero | CharacterStatus::Indeterminate), "{e:?}");
    }

    #[test]
    fn log_periodic_profile_is_indeterminate() {
        let rho: Vec<f64> = (0..2000).map(|k| 1e-7 * 10f64.powf(k as f64 * 7.0 / 1999.0)).collect();
        let amp: Vec<f64> = rho.iter().map(|r| (3.0 * (2.0 * PI * r.ln() / 2f64.ln() / 4.0).sin()).exp()).collect();
        let t = SpectralProfile::tabulated(1, rho, amp).unwrap();
        let e = estimate_decay_character(&t).unwrap();
        assert_eq!(e.status, CharacterStatus::Indeterminate, "{e:?}");
        assert!(e.r_star.is_none());
    }

    #[test]
    fn shift_examples() {
        let p = cutoff(1, 2.0);
        assert_eq!(shift_character(&p, 0.0).unwrap(), p);
        let q = shift_character(&p, 1.0).unwrap();
        let e = estimate_decay_character(&q).unwrap();
        assert!((e.r_star.unwrap() - 1.0).abs() <= 0.05);
        assert!(shift_character(&cutoff(1, 0.0), 1.0).is_err());
    }

    #[test]
    fn p_norm_examples() {
        let p = cutoff(1, 0.0);
        let v = p_norm(&p, 0.0).unwrap();
        assert!((v.value - 2.0 * 2f64.sqrt()).abs() < 1e-3);
        let v = p_norm(&p, 1.0).unwrap();
        assert!((v.value - ((2.0f64 / 3.0).sqrt() + 2f64.sqrt())).abs() < 1e-3);
        let v = p_norm(&SpectralProfile::zero(1).unwrap(), 0.0).unwrap();
        assert_eq!(v.value, 0.0);
        assert_eq!(v.status, CharacterStatus::Degenerate);
    }

    #[test]
    fn real_space_gaussian_norms_agree() {
        // ||A exp(-x^2/(2w^2))||^2 = A^2 w sqrt(pi) in one dimension
        let g = SpectralProfile::gaussian_real(1, 0.5, 2.0).unwrap();
        assert_relative_eq!(g.sobolev_norm_sq(0.0).unwrap(), 0.25 * 2.0 * PI.sqrt(), max_relative = 1e-9);
    }

    #[test]
    fn negative_sobolev_bound() {
        // rho^-eta |u^| square integrable near 0 forces r* >= eta - n/2
        for (n, r) in [(1usize, -0.3), (2, -0.6), (3, 0.2)] {
            let p = cutoff(n, r);
            let eta = r + n as f64 / 2.0 - 0.01;
            let e = estimate_decay_character(&p).unwrap();
            assert!(e.r_star.unwrap() >= eta - n as f64 / 2.0 - 0.05);
        }
    }

    proptest! {
        #[test]
        fn scaling_multiplies_indicator(lambda in 0.1f64..10.0, r in 0.0f64..2.0, n in 1usize..4) {
            let p = cutoff(n, r);
            let q = p.scaled(lambda);
            let a = p.decay_indicator(r, 0.05).unwrap();
            let b = q.decay_indicator(r, 0.05).unwrap();
            prop_assert!(((b / a) / (lambda * lambda) - 1.0).abs() < 1e-8);
            let ea = estimate_decay_character(&p).unwrap().r_star.unwrap();
            let eb = estimate_decay_character(&q).unwrap().r_star.unwrap();
            prop_assert!((ea - eb).abs() < 1e-6);
        }
    }
}
