//! Adaptive Gauss-Kronrod quadrature and Gauss-Legendre rules.

use crate::error::{Error, Result};

// 15-point Kronrod extension of the 7-point Gauss rule (QUADPACK qk15).
const XGK: [f64; 8] = [
    0.991_455_371_120_812_6,
    0.949_107_912_342_758_5,
    0.864_864_423_359_769_1,
    0.741_531_185_599_394_4,
    0.586_087_235_467_691_1,
    0.405_845_151_377_397_2,
    0.207_784_955_007_898_5,
    0.0,
];
const WGK: [f64; 8] = [
    0.022_935_322_010_529_22,
    0.063_092_092_629_978_55,
    0.104_790_010_322_250_2,
    0.140_653_259_715_525_9,
    0.169_004_726_639_267_9,
    0.190_350_578_064_785_4,
    0.204_432_940_075_298_9,
    0.209_482_141_084_727_8,
];
const WG: [f64; 4] =
    [0.129_484_966_168_869_7, 0.279_705_391_489_276_7, 0.381_830_050_505_118_9, 0.417_959_183_673_469_4];

const MAX_INTERVALS: usize = 4000;

#[derive(Debug, Clone, Copy)]
struct Panel {
    a: f64,
    b: f64,
    value: f64,
    error: f64,
}

fn gk15<F: Fn(f64) -> f64>(f: &F, a: f64, b: f64) -> Panel {
    let center = 0.5 * (a + b);
    let half = 0.5 * (b - a);
    let fc = f(center);
    let mut kronrod = fc * WGK[7];
    let mut gauss = fc * WG[3];
    for j in 0..7 {
        let dx = half * XGK[j];
        let pair = f(center - dx) + f(center + dx);
        kronrod += WGK[j] * pair;
        if j % 2 == 1 {
            gauss += WG[j / 2] * pair;
        }
    }
    Panel { a, b, value: kronrod * half, error: ((kronrod - gauss) * half).abs() }
}

/// Globally adaptive G7-K15 integration of `f` over `[a, b]`.
///
/// Stops when the summed error estimate is below `max(abs_tol, rel_tol * |I|)`.
pub fn integrate<F: Fn(f64) -> f64>(f: F, a: f64, b: f64, rel_tol: f64, abs_tol: f64) -> Result<f64> {
    if a == b {
        return Ok(0.0);
    }
    if !(a.is_finite() && b.is_finite()) {
        return Err(Error::Quadrature(format!("non-finite bounds [{a}, {b}]")));
    }
    let mut panels = vec![gk15(&f, a, b)];
    loop {
        let total: f64 = panels.iter().map(|p| p.value).sum();
        let err: f64 = panels.iter().map(|p| p.error).sum();
        let magnitude: f64 = panels.iter().map(|p| p.value.abs()).sum();
        if !total.is_finite() {
            return Err(Error::Quadrature(format!("non-finite integrand on [{a}, {b}]")));
        }
        // below this the error estimate is round-off
        let floor = 50.0 * f64::EPSILON * magnitude;
        if err <= abs_tol.max(rel_tol * total.abs()).max(floor) {
            return Ok(total);
        }
        if panels.len() >= MAX_INTERVALS {
            return Err(Error::Quadrature(format!(
                "no convergence on [{a}, {b}] after {MAX_INTERVALS} panels (err {err:e}, value {total:e})"
            )));
        }
        let (worst, _) = panels.iter().enumerate().max_by(|x, y| x.1.error.total_cmp(&y.1.error)).expect("non-empty");
        let p = panels.swap_remove(worst);
        let mid = 0.5 * (p.a + p.b);
        if mid <= p.a || mid >= p.b {
            // interval cannot be split further; accept what we have
            let total: f64 = panels.iter().map(|q| q.value).sum::<f64>() + p.value;
            return Ok(total);
        }
        panels.push(gk15(&f, p.a, mid));
        panels.push(gk15(&f, mid, p.b));
    }
}

/// Integrates `f` over `(0, upper]` using dyadic panels `[upper 2^-(k+1), upper 2^-k]`.
///
/// Suited to integrands with an integrable power-type singularity or a sharp
/// feature near the origin. Once successive panel contributions shrink by a
/// stable ratio the remaining geometric tail is summed in closed form.
pub fn integrate_to_zero<F: Fn(f64) -> f64>(f: F, upper: f64, rel_tol: f64) -> Result<f64> {
    if upper <= 0.0 {
        return Err(Error::Quadrature(format!("upper limit {upper} must be positive")));
    }
    let mut total = 0.0;
    let mut hi = upper;
    let mut prev: Option<f64> = None;
    let mut prev_ratio: Option<f64> = None;
    let mut stable = 0usize;
    for _ in 0..1100 {
        let lo = 0.5 * hi;
        let piece = integrate(&f, lo, hi, rel_tol * 0.1, 0.0)?;
        total += piece;
        if total != 0.0 && piece.abs() <= 1e-3 * rel_tol * total.abs() {
            return Ok(total);
        }
        if let Some(p) = prev {
            if p != 0.0 && piece != 0.0 {
                let ratio = piece / p;
                if let Some(pr) = prev_ratio {
                    if ratio > 0.0 && ratio < 0.98 && ((ratio - pr) / pr).abs() < 1e-6 {
                        stable += 1;
                    } else {
                        stable = 0;
                    }
                }
                prev_ratio = Some(ratio);
                if stable >= 3 {
                    return Ok(total + piece * ratio / (1.0 - ratio));
                }
            }
        }
        prev = Some(piece);
        hi = lo;
        if hi < f64::MIN_POSITIVE {
            break;
        }
    }
    if total.is_finite() {
        Ok(total)
    } else {
        Err(Error::Quadrature("integral towards zero diverges".into()))
    }
}

/// Integrates `f` over `[lower, inf)` with doubling panels until contributions vanish.
pub fn integrate_to_infinity<F: Fn(f64) -> f64>(f: F, lower: f64, rel_tol: f64) -> Result<f64> {
    let mut total = 0.0;
    let mut lo = lower;
    let mut width = lower.abs().max(1.0);
    let mut quiet = 0usize;
    for _ in 0..2000 {
        let hi = lo + width;
        let piece = integrate(&f, lo, hi, rel_tol * 0.1, 0.0)?;
        total += piece;
        if piece.abs() <= 1e-3 * rel_tol * total.abs() || (piece == 0.0 && total == 0.0) {
            quiet += 1;
            if quiet >= 3 {
                return Ok(total);
            }
        } else {
            quiet = 0;
        }
        lo = hi;
        width *= 2.0;
        if !lo.is_finite() {
            break;
        }
    }
    Err(Error::Quadrature("integral towards infinity does not converge".into()))
}

/// Gauss-Legendre nodes and weights on `[-1, 1]`.
pub fn gauss_legendre(order: usize) -> (Vec<f64>, Vec<f64>) {
    let n = order;
    let mut nodes = vec![0.0; n];
    let mut weights = vec![0.0; n];
    for i in 0..n.div_ceil(2) {
        let mut x = (std::f64::consts::PI * (i as f64 + 0.75) / (n as f64 + 0.5)).cos();
        let mut dp = 1.0;
        for _ in 0..100 {
            let (mut p0, mut p1) = (1.0, x);
            for k in 2..=n {
                let p2 = ((2 * k - 1) as f64 * x * p1 - (k - 1) as f64 * p0) / k as f64;
                p0 = p1;
                p1 = p2;
            }
            let p = if n == 0 {
                1.0
            } else if n == 1 {
                x
            } else {
                p1
            };
            let pm1 = if n == 1 { 1.0 } else { p0 };
            dp = n as f64 * (x * p - pm1) / (x * x - 1.0);
            let dx = p / dp;
            x -= dx;
            if dx.abs() < 1e-16 {
                break;
            }
        }
        let w = 2.0 / ((1.0 - x * x) * dp * dp);
        nodes[i] = -x;
        nodes[n - 1 - i] = x;
        weights[i] = w;
        weights[n - 1 - i] = w;
    }
    (nodes, weights)
}
