//! Time stepping of the semilinear equation in Fourier variables.

use rustfft::num_complex::Complex64;

use super::grid::Spectral;
use crate::damping::DampingSpec;
use crate::ode::OdeSystem;

/// `|v|^p` with the sign discarded and `0` at `v = 0`.
pub fn abs_power(v: f64, p: f64) -> f64 {
    if v == 0.0 {
        0.0
    } else {
        (p * v.abs().ln()).exp()
    }
}

/// State layout: `[Re U, Im U]` interleaved, then the same for `W = U_t`.
pub(crate) struct SpectralSystem<'a> {
    pub spec: &'a DampingSpec,
    pub spectral: Spectral,
    k_sigma2: Vec<f64>,
    k_delta2: Vec<f64>,
    k_gamma: Vec<f64>,
    pub p: f64,
    pub coeff: f64,
    buf: Vec<Complex64>,
}

impl<'a> SpectralSystem<'a> {
    pub fn new(spec: &'a DampingSpec, spectral: Spectral, gamma: f64, p: f64, coeff: f64) -> Self {
        let pw = |e: f64| -> Vec<f64> { spectral.k.iter().map(|k| k.powf(e)).collect() };
        let k_sigma2 = pw(2.0 * spec.sigma);
        let k_delta2 = pw(2.0 * spec.delta);
        let k_gamma = pw(gamma);
        Self { spec, spectral, k_sigma2, k_delta2, k_gamma, p, coeff, buf: Vec::new() }
    }

    pub fn modes(&self) -> usize {
        self.k_sigma2.len()
    }

    /// `coeff * DFT(| |D|^gamma u |^p)` for `u` with DFT `u_hat`.
    pub fn nonlinear(&mut self, u_hat: &[Complex64]) -> Vec<Complex64> {
        let n = u_hat.len();
        if self.coeff == 0.0 {
            return vec![Complex64::new(0.0, 0.0); n];
        }
        self.buf.clear();
        self.buf.extend(u_hat.iter().zip(&self.k_gamma).map(|(c, k)| c * k));
        let p = self.p;
        let buf = std::mem::take(&mut self.buf);
        let mut out = self.spectral.padded_pointwise(&buf, |v| abs_power(v, p));
        self.buf = buf;
        for z in out.iter_mut() {
            *z *= self.coeff;
        }
        out
    }

    /// Right-hand side in Fourier variables.
    pub fn spectral_rhs(&mut self, t: f64, u: &[Complex64], w: &[Complex64]) -> (Vec<Complex64>, Vec<Complex64>) {
        let b = self.spec.value(t).unwrap_or(f64::NAN);
        let nl = self.nonlinear(u);
        let dw = (0..u.len()).map(|j| -self.k_sigma2[j] * u[j] - b * self.k_delta2[j] * w[j] + nl[j]).collect();
        (w.to_vec(), dw)
    }
}

pub(crate) fn pack(u: &[Complex64], w: &[Complex64]) -> Vec<f64> {
    let mut y = Vec::with_capacity(4 * u.len());
    for z in u.iter().chain(w) {
        y.push(z.re);
        y.push(z.im);
    }
    y
}

pub(crate) fn unpack(y: &[f64]) -> (Vec<Complex64>, Vec<Complex64>) {
    let n = y.len() / 4;
    let c: Vec<Complex64> = y.chunks_exact(2).map(|p| Complex64::new(p[0], p[1])).collect();
    let (u, w) = c.split_at(n);
    (u.to_vec(), w.to_vec())
}

impl OdeSystem for SpectralSystem<'_> {
    fn dim(&self) -> usize {
        4 * self.modes()
    }

    fn rhs(&mut self, t: f64, y: &[f64], dy: &mut [f64]) {
        let (u, w) = unpack(y);
        let (du, dw) = self.spectral_rhs(t, &u, &w);
        for (i, z) in du.iter().chain(&dw).enumerate() {
            dy[2 * i] = z.re;
            dy[2 * i + 1] = z.im;
        }
    }
}
