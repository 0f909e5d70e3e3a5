//! Periodic box, discrete frequencies and FFT-based operators.

use std::sync::Arc;

use rustfft::num_complex::Complex64;
use rustfft::{Fft, FftPlanner};
use serde::{Deserialize, Serialize};

use crate::decay_character::SpectralProfile;
use crate::error::{invalid, Result};

/// Box `[-L, L)^n` sampled with `M` points per axis.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct GridSpec {
    pub n: usize,
    #[serde(rename = "L")]
    pub half_width: f64,
    #[serde(rename = "M")]
    pub points: usize,
}

impl GridSpec {
    pub fn new(n: usize, half_width: f64, points: usize) -> Result<Self> {
        let g = Self { n, half_width, points };
        g.validate()?;
        Ok(g)
    }

    /// `L = 40` with `M = 1024` in one dimension and `M = 256` in two.
    pub fn default_for(n: usize) -> Result<Self> {
        Self::new(n, 40.0, if n == 1 { 1024 } else { 256 })
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.n == 1 || self.n == 2) {
            return invalid(format!("the periodic solver supports n = 1, 2, got {}", self.n));
        }
        if !(self.half_width > 0.0 && self.half_width.is_finite()) {
            return invalid(format!("half width must be positive, got {}", self.half_width));
        }
        if self.points < 64 || !self.points.is_power_of_two() {
            return invalid(format!("points per axis must be a power of two >= 64, got {}", self.points));
        }
        Ok(())
    }

    /// Number of grid values.
    pub fn len(&self) -> usize {
        self.points.pow(self.n as u32)
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    pub fn dx(&self) -> f64 {
        2.0 * self.half_width / self.points as f64
    }

    /// Signed frequency index of DFT slot `j`.
    pub fn index(&self, j: usize) -> i64 {
        let m = self.points as i64;
        let j = j as i64;
        if j < m / 2 {
            j
        } else {
            j - m
        }
    }

    /// `pi/L` times the signed index.
    pub fn wavenumber(&self, j: usize) -> f64 {
        std::f64::consts::PI / self.half_width * self.index(j) as f64
    }

    /// `|k|` at every flat DFT slot.
    pub fn magnitudes(&self) -> Vec<f64> {
        let m = self.points;
        match self.n {
            1 => (0..m).map(|j| self.wavenumber(j).abs()).collect(),
            _ => {
                let mut out = Vec::with_capacity(m * m);
                for a in 0..m {
                    let ka = self.wavenumber(a);
                    for b in 0..m {
                        let kb = self.wavenumber(b);
                        out.push((ka * ka + kb * kb).sqrt());
                    }
                }
                out
            }
        }
    }

    pub fn k_max(&self) -> f64 {
        std::f64::consts::PI / self.half_width * (self.points / 2) as f64 * (self.n as f64).sqrt()
    }

    /// `(-1)^(sum of signed indices)`: the phase of a grid starting at `-L`.
    fn parity(&self, flat: usize) -> f64 {
        let m = self.points;
        let s: i64 = match self.n {
            1 => self.index(flat),
            _ => self.index(flat / m) + self.index(flat % m),
        };
        if s.rem_euclid(2) == 0 {
            1.0
        } else {
            -1.0
        }
    }

    /// Sample positions along one axis.
    pub fn axis(&self) -> Vec<f64> {
        (0..self.points).map(|j| -self.half_width + j as f64 * self.dx()).collect()
    }
}

/// FFT plans for one grid and its 3/2-padded companion.
pub struct Spectral {
    pub grid: GridSpec,
    forward: Arc<dyn Fft<f64>>,
    inverse: Arc<dyn Fft<f64>>,
    pad_forward: Arc<dyn Fft<f64>>,
    pad_inverse: Arc<dyn Fft<f64>>,
    pad: usize,
    /// `|k|` per flat slot.
    pub k: Vec<f64>,
    scratch: Vec<Complex64>,
}

impl std::fmt::Debug for Spectral {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.debug_struct("Spectral").field("grid", &self.grid).field("pad", &self.pad).finish()
    }
}

impl Spectral {
    pub fn new(grid: GridSpec) -> Result<Self> {
        grid.validate()?;
        let mut planner = FftPlanner::new();
        let m = grid.points;
        let pad = 3 * m / 2;
        Ok(Self {
            grid,
            forward: planner.plan_fft_forward(m),
            inverse: planner.plan_fft_inverse(m),
            pad_forward: planner.plan_fft_forward(pad),
            pad_inverse: planner.plan_fft_inverse(pad),
            pad,
            k: grid.magnitudes(),
            scratch: Vec::new(),
        })
    }

    fn transform(&mut self, data: &mut [Complex64], size: usize, inverse: bool, padded: bool) {
        let plan = match (padded, inverse) {
            (false, false) => Arc::clone(&self.forward),
            (false, true) => Arc::clone(&self.inverse),
            (true, false) => Arc::clone(&self.pad_forward),
            (true, true) => Arc::clone(&self.pad_inverse),
        };
        if self.grid.n == 1 {
            plan.process(data);
            return;
        }
        // rows, then columns through a transpose
        plan.process(data);
        self.scratch.resize(size * size, Complex64::new(0.0, 0.0));
        transpose(data, &mut self.scratch, size);
        plan.process(&mut self.scratch);
        transpose(&self.scratch, data, size);
    }

    /// Unnormalised DFT of a real field.
    pub fn forward_real(&mut self, field: &[f64]) -> Vec<Complex64> {
        let mut c: Vec<Complex64> = field.iter().map(|&v| Complex64::new(v, 0.0)).collect();
        let m = self.grid.points;
        self.transform(&mut c, m, false, false);
        c
    }

    /// Real part of the normalised inverse DFT.
    pub fn inverse_real(&mut self, coeffs: &[Complex64]) -> Vec<f64> {
        let mut c = coeffs.to_vec();
        let m = self.grid.points;
        self.transform(&mut c, m, true, false);
        let scale = 1.0 / self.grid.len() as f64;
        c.iter().map(|z| z.re * scale).collect()
    }

    /// Evaluates a pointwise map of the field with DFT `coeffs` on the padded grid
    /// and returns the DFT of the result truncated back to the base grid.
    pub fn padded_pointwise(&mut self, coeffs: &[Complex64], f: impl Fn(f64) -> f64) -> Vec<Complex64> {
        let (m, p, n) = (self.grid.points, self.pad, self.grid.n);
        let zero = Complex64::new(0.0, 0.0);
        let grid = self.grid;
        let slot = move |j: usize| -> Option<usize> {
            let i = grid.index(j);
            if i == -(m as i64) / 2 {
                None
            } else if i >= 0 {
                Some(i as usize)
            } else {
                Some((p as i64 + i) as usize)
            }
        };
        let mut big = vec![zero; p.pow(n as u32)];
        match n {
            1 => {
                for j in 0..m {
                    if let Some(s) = slot(j) {
                        big[s] = coeffs[j];
                    }
                }
            }
            _ => {
                for a in 0..m {
                    for b in 0..m {
                        if let (Some(sa), Some(sb)) = (slot(a), slot(b)) {
                            big[sa * p + sb] = coeffs[a * m + b];
                        }
                    }
                }
            }
        }
        self.transform(&mut big, p, true, true);
        let inv = 1.0 / self.grid.len() as f64;
        for z in big.iter_mut() {
            *z = Complex64::new(f(z.re * inv), 0.0);
        }
        self.transform(&mut big, p, false, true);
        let back = (m as f64 / p as f64).powi(n as i32);
        let mut out = vec![zero; self.grid.len()];
        match n {
            1 => {
                for j in 0..m {
                    if let Some(s) = slot(j) {
                        out[j] = big[s] * back;
                    }
                }
            }
            _ => {
                for a in 0..m {
                    for b in 0..m {
                        if let (Some(sa), Some(sb)) = (slot(a), slot(b)) {
                            out[a * m + b] = big[sa * p + sb] * back;
                        }
                    }
                }
            }
        }
        out
    }

    /// `sqrt(dx^n / M^n sum w(|k|) |c|^2)`: the continuous norm with weight `w`.
    pub fn weighted_norm(&self, coeffs: &[Complex64], weight: impl Fn(f64) -> f64) -> f64 {
        let total: f64 = coeffs.iter().zip(&self.k).map(|(c, &k)| weight(k) * c.norm_sqr()).sum();
        (total * self.grid.dx().powi(self.grid.n as i32) / self.grid.len() as f64).sqrt()
    }

    /// `int u dx` from the zero mode.
    pub fn mean_integral(&self, coeffs: &[Complex64]) -> f64 {
        coeffs[0].re * self.grid.dx().powi(self.grid.n as i32)
    }

    /// DFT of the grid samples of the function whose Fourier transform is `profile`.
    pub fn from_profile(&self, profile: &SpectralProfile) -> Result<Vec<Complex64>> {
        if profile.n != self.grid.n {
            return invalid(format!("profile dimension {} differs from grid dimension {}", profile.n, self.grid.n));
        }
        let n = self.grid.n as i32;
        let c = (self.grid.len() as f64)
            * (2.0 * std::f64::consts::PI).powf(-0.5 * n as f64)
            * (std::f64::consts::PI / self.grid.half_width).powi(n);
        Ok(self
            .k
            .iter()
            .enumerate()
            .map(|(j, &k)| Complex64::new(c * self.grid.parity(j) * profile.amplitude(k), 0.0))
            .collect())
    }
}

fn transpose(src: &[Complex64], dst: &mut [Complex64], m: usize) {
    for a in 0..m {
        for b in 0..m {
            dst[b * m + a] = src[a * m + b];
        }
    }
}

/// `|D|^order` applied to a real field.
pub fn apply_fractional(field: &[f64], order: f64, spectral: &mut Spectral) -> Result<Vec<f64>> {
    if !(order >= 0.0) {
        return invalid(format!("order must be nonnegative, got {order}"));
    }
    if field.len() != spectral.grid.len() {
        return invalid("field does not match the grid");
    }
    let mut c = spectral.forward_real(field);
    if order > 0.0 {
        for (z, &k) in c.iter_mut().zip(&spectral.k) {
            *z *= k.powf(order);
        }
    }
    Ok(spectral.inverse_real(&c))
}

#[cfg(test)]
mod tests {
    use super::*;

    fn one_d() -> Spectral {
        Spectral::new(GridSpec::new(1, std::f64::consts::PI, 64).unwrap()).unwrap()
    }

    #[test]
    fn grid_validation() {
        assert!(GridSpec::new(3, 1.0, 64).is_err());
        assert!(GridSpec::new(1, 1.0, 48).is_err());
        assert!(GridSpec::new(1, 1.0, 32).is_err());
        assert!(GridSpec::new(2, 1.0, 64).is_ok());
    }

    #[test]
    fn fractional_identity_and_harmonic() {
        let mut s = one_d();
        let x = s.grid.axis();
        let f: Vec<f64> = x.iter().map(|&x| (3.0 * x).sin() + 0.5).collect();
        let same = apply_fractional(&f, 0.0, &mut s).unwrap();
        for (a, b) in f.iter().zip(&same) {
            assert!((a - b).abs() < 1e-13);
        }
        let g = apply_fractional(&f, 2.0, &mut s).unwrap();
        for (xv, gv) in x.iter().zip(&g) {
            assert!((gv - 9.0 * (3.0 * xv).sin()).abs() < 1e-11);
        }
        let mean: f64 = apply_fractional(&f, 0.5, &mut s).unwrap().iter().sum::<f64>() / 64.0;
        assert!(mean.abs() < 1e-13);
    }

    #[test]
    fn two_dimensional_harmonic() {
        let mut s = Spectral::new(GridSpec::new(2, std::f64::consts::PI, 64).unwrap()).unwrap();
        let x = s.grid.axis();
        let mut f = Vec::new();
        for &a in &x {
            for &b in &x {
                f.push((2.0 * a).cos() * (b).sin());
            }
        }
        let g = apply_fractional(&f, 1.0, &mut s).unwrap();
        for (fv, gv) in f.iter().zip(&g) {
            assert!((gv - 5f64.sqrt() * fv).abs() < 1e-11);
        }
    }

    #[test]
    fn padded_square_is_exact_for_low_modes() {
        let mut s = one_d();
        let x = s.grid.axis();
        let f: Vec<f64> = x.iter().map(|&x| (5.0 * x).cos()).collect();
        let c = s.forward_real(&f);
        let sq = s.padded_pointwise(&c, |v| v * v);
        let back = s.inverse_real(&sq);
        for (xv, v) in x.iter().zip(&back) {
            assert!((v - (5.0 * xv).cos().powi(2)).abs() < 1e-12);
        }
    }

    #[test]
    fn profile_synthesis_matches_real_gaussian() {
        let g = GridSpec::new(1, 20.0, 256).unwrap();
        let mut s = Spectral::new(g).unwrap();
        let prof = SpectralProfile::gaussian_real(1, 2.0, 1.5).unwrap();
        let c = s.from_profile(&prof).unwrap();
        let u = s.inverse_real(&c);
        for (x, v) in g.axis().iter().zip(&u) {
            assert!((v - 2.0 * (-x * x / (2.0 * 1.5 * 1.5)).exp()).abs() < 1e-12);
        }
        let l2 = s.weighted_norm(&c, |_| 1.0);
        assert!((l2 / prof.sobolev_norm(0.0).unwrap() - 1.0).abs() < 1e-12);
        let mass = s.mean_integral(&c);
        assert!((mass - 2.0 * 1.5 * (2.0 * std::f64::consts::PI).sqrt()).abs() < 1e-10);
    }
}
