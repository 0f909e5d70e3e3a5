//! End-to-end acceptance criteria. Prints one PASS/FAIL line per criterion.

use std::fs;
use std::path::Path;
use std::process::ExitCode;
use std::time::{Duration, Instant};

use dampwave::cli::manifest::parse_table;
use dampwave::cli::run_table;
use dampwave::damping::DampingSpec;
use dampwave::damping::Trend;
use dampwave::decay_character::{estimate_decay_character, SpectralProfile};
use dampwave::decay_verify::{
    fit_by_regime, fit_observed_rate, heat_oracle, remove_prefactor, sample_envelopes, HeatCoefficient,
};
use dampwave::exponents::{critical_p, hypothesis_chain, omega, p_star, ExponentInputs};
use dampwave::linear_modes::{integrate_mode, reconstruct_norms, time_grid, RadialGrid};
use dampwave::par::Execution;
use dampwave::phase_zones::{EnvelopeKind, ZoneParams};
use dampwave::semilinear::{solve_semilinear, GridSpec, RunStatus, SemilinearConfig};
use num_rational::Ratio;
use rand::{rngs::StdRng, Rng, SeedableRng};

type Outcome = Result<String, String>;
type Criterion = (&'static str, fn() -> Outcome, Duration);

fn check(cond: bool, detail: String) -> Outcome {
    if cond {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn err(e: impl std::fmt::Display) -> String {
    e.to_string()
}

/// `u'' + u' + xi^2 u = 0` from `(u0, u1)`.
fn damped_oscillator(xi: f64, u0: f64, u1: f64, t: f64) -> f64 {
    let d = 0.25 - xi * xi;
    let e = (-0.5 * t).exp();
    if d > 0.0 {
        let w = d.sqrt();
        let (l1, l2) = (-0.5 + w, -0.5 - w);
        let c1 = (u1 - l2 * u0) / (l1 - l2);
        let c2 = u0 - c1;
        c1 * (l1 * t).exp() + c2 * (l2 * t).exp()
    } else if d < 0.0 {
        let w = (-d).sqrt();
        e * (u0 * (w * t).cos() + (u1 + 0.5 * u0) / w * (w * t).sin())
    } else {
        e * (u0 + (u1 + 0.5 * u0) * t)
    }
}

fn c1_mode_oracle() -> Outcome {
    let spec = DampingSpec::constant(1.0, 0.0).map_err(err)?;
    let grid: Vec<f64> = (0..=1000).map(|k| 0.05 * k as f64).collect();
    let mut worst = 0.0f64;
    for xi in [0.1, 0.5, 1.0, 4.0] {
        for init in [(1.0, 0.0), (0.0, 1.0)] {
            let m = integrate_mode(&spec, xi, init, &grid, 1e-10).map_err(err)?;
            for (t, u) in grid.iter().zip(&m.u) {
                worst = worst.max((u - damped_oscillator(xi, init.0, init.1, *t)).abs());
            }
        }
    }
    check(worst <= 1e-6, format!("max abs error {worst:.2e} (limit 1e-6)"))
}

fn window(times: &[f64], vals: &[f64], lo: f64, hi: f64) -> (Vec<f64>, Vec<f64>) {
    times.iter().zip(vals).filter(|(t, _)| **t >= lo && **t <= hi * (1.0 + 1e-12)).map(|(t, v)| (*t, *v)).unzip()
}

/// Fitted slopes of `||u||` and `b ||u_t||` against `1 + B` and of `||u||` against `t` on `[1e2, 1e4]`.
fn linear_slopes(spec: &DampingSpec) -> Result<(f64, f64, f64), String> {
    let u0 = SpectralProfile::gaussian_hat(1, 1.0, 1.0).map_err(err)?;
    let u1 = SpectralProfile::power_cutoff(1, 1.0, 0.0, 1.0).map_err(err)?;
    for p in [&u0, &u1] {
        let r = estimate_decay_character(p).map_err(err)?.r_star.ok_or("character undefined")?;
        if r.abs() > 0.05 {
            return Err(format!("datum has character {r}"));
        }
    }
    let t_grid = time_grid(1.0, 1e4, 161);
    let res = reconstruct_norms(spec, &u0, &u1, &[0.0], &t_grid, RadialGrid::default(), 1e-8, Execution::Parallel)
        .map_err(err)?;
    let (t, u) = window(&res.times, &res.norms[0], 1e2, 1e4);
    let (_, ut) = window(&res.times, &res.ut_norm, 1e2, 1e4);
    let ut = remove_prefactor(spec, &t, &ut, -1).map_err(err)?;
    let clock: Vec<f64> = t.iter().map(|&s| spec.inv_integral(0.0, s)).collect::<Result<_, _>>().map_err(err)?;
    let fit = |x: &[f64], y: &[f64]| fit_observed_rate(&t, y, x, Some(1.0), None, 0.1).map(|r| r.slope).map_err(err);
    Ok((fit(&clock, &u)?, fit(&clock, &ut)?, fit(&t, &u)?))
}

fn c2_matsumura() -> Outcome {
    let spec = DampingSpec::constant(1.0, 0.0).map_err(err)?;
    let (su, sut, _) = linear_slopes(&spec)?;
    check(
        (su + 0.25).abs() <= 0.1 && (sut + 1.25).abs() <= 0.15,
        format!("L2 slope {su:.4} (-0.25 +- 0.1), u_t slope {sut:.4} (-1.25 +- 0.15)"),
    )
}

fn c3_time_dependent() -> Outcome {
    let spec = DampingSpec::power_law(1.0, 0.5, 1.0, 0.0).map_err(err)?;
    let (sb, _, st) = linear_slopes(&spec)?;
    check(
        (sb + 0.25).abs() <= 0.1 && (st + 0.125).abs() <= 0.05,
        format!("slope vs 1+B {sb:.4} (-0.25 +- 0.1), vs t {st:.4} (-0.125 +- 0.05)"),
    )
}

fn c4_heat() -> Outcome {
    let spec = DampingSpec::constant(1.0, 0.0).map_err(err)?;
    let t_grid = time_grid(1.0, 1e6, 121);
    let mut worst = 0.0f64;
    let mut lines = Vec::new();
    for r in [0.0, 1.0] {
        for n in [1, 2] {
            for alpha in [1.0, 2.0] {
                let v0 = SpectralProfile::power_cutoff(n, 1.0, r, 1.0).map_err(err)?;
                let h = heat_oracle(HeatCoefficient::Damping(&spec), alpha, &v0, &[0.0], &t_grid).map_err(err)?;
                let sq: Vec<f64> = h.norms[0][1..].iter().map(|v| v * v).collect();
                let fit = fit_observed_rate(&h.times[1..], &sq, &h.clock[1..], None, None, 0.05).map_err(err)?;
                let expected = -(2.0 * r + n as f64) / (2.0 * alpha);
                let dev = (fit.slope - expected).abs();
                worst = worst.max(dev);
                lines.push(format!("r={r},n={n},a={alpha}:{:.4}/{expected:.4}", fit.slope));
            }
        }
    }
    check(worst <= 0.05, format!("worst deviation {worst:.2e}; {}", lines.join(" ")))
}

fn c5_character() -> Outcome {
    let mut worst = 0.0f64;
    for n in [1, 2, 3] {
        for r in [0.0, 0.5, 1.0, 2.0] {
            let p = SpectralProfile::power_cutoff(n, 1.0, r, 1.0).map_err(err)?;
            let est = estimate_decay_character(&p).map_err(err)?;
            let got = est.r_star.ok_or_else(|| format!("n={n}, r={r}: status {:?}", est.status))?;
            worst = worst.max((got - r).abs());
        }
    }
    check(worst <= 0.05, format!("worst |r_hat - r_exp| = {worst:.2e} (limit 0.05)"))
}

fn geometric(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| lo * (hi / lo).powf(k as f64 / (count - 1) as f64)).collect()
}

fn uniform(lo: f64, hi: f64, count: usize) -> Vec<f64> {
    (0..count).map(|k| lo + (hi - lo) * k as f64 / (count - 1) as f64).collect()
}

fn max_ratio(spec: &DampingSpec, refine: usize) -> Result<f64, String> {
    // refined grids contain the coarse ones
    let times = geometric(1.0, 100.0, 19 * refine + 1);
    let starts = uniform(0.0, 50.0, 19 * refine + 1);
    let xis = geometric(1e-2, 10.0, 9 * refine + 1);
    let params = ZoneParams::default();
    let samples = sample_envelopes(spec, &params, EnvelopeKind::K1, &times, &starts, &xis, 1e-8, Execution::Parallel)
        .map_err(err)?;
    let fits = fit_by_regime(&samples).map_err(err)?;
    Ok(fits.iter().map(|f| f.c_fit).fold(0.0, f64::max))
}

fn c6_envelopes() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for (name, kappa) in [("const", 0.0), ("sqrt", 0.5)] {
        for delta in [0.0, 0.25] {
            let spec = DampingSpec::power_law(1.0, kappa, 1.0, delta).map_err(err)?;
            let coarse = max_ratio(&spec, 1)?;
            let fine = max_ratio(&spec, 2)?;
            let growth = fine / coarse - 1.0;
            ok &= coarse.is_finite() && fine.is_finite() && coarse > 0.0 && growth < 0.05;
            lines.push(format!("{name},d={delta}: {coarse:.3e}->{fine:.3e} (+{:.2}%)", 100.0 * growth));
        }
    }
    check(ok, lines.join("; "))
}

fn c7_threshold() -> Outcome {
    let spec = DampingSpec::constant(1.0, 0.0).map_err(err)?;
    let grid = GridSpec::new(1, 40.0, 1024).map_err(err)?;
    let zero = SpectralProfile::zero(1).map_err(err)?;
    let mut ok = true;
    let mut lines = Vec::new();
    for (p, amplitude, horizon) in [(2.0, 1.0, 20.0), (2.5, 1.0, 20.0), (3.5, 1e-3, 100.0), (4.0, 1e-3, 100.0)] {
        let u1 = SpectralProfile::gaussian_real(1, amplitude, 1.0).map_err(err)?;
        let cfg = SemilinearConfig::new(spec.clone(), 0.0, p, grid, horizon);
        let out = solve_semilinear(&cfg, &zero, &u1).map_err(err)?;
        if p < 3.0 {
            ok &= out.status == RunStatus::BlownUp;
            lines.push(format!(
                "p={p}: {} T*={:?}",
                out.status.as_str(),
                out.blowup_time.map(|t| (t * 1e3).round() / 1e3)
            ));
        } else {
            let slope = out.l2_fit.as_ref().map(|f| f.slope);
            ok &= out.status == RunStatus::Decayed && slope.is_some_and(|s| (s + 0.25).abs() <= 0.15);
            lines.push(format!("p={p}: {} slope={:?}", out.status.as_str(), slope.map(|s| (s * 1e4).round() / 1e4)));
        }
    }
    check(ok, lines.join("; "))
}

fn c8_exponents() -> Outcome {
    let q = |a: i64| Ratio::from_integer(a);
    let inp = ExponentInputs { sigma: q(1), delta: q(0), gamma: q(0), n: 2, r0: q(0), r1: q(0) };
    let ps = p_star(&inp, Trend::NonDecreasing).map_err(err)?;
    let cp = critical_p(q(1), q(0), 2).map_err(err)?;
    let mut rng = StdRng::seed_from_u64(7);
    let mut accepted = 0;
    let mut bad = Vec::new();
    let mut tries = 0;
    while accepted < 1000 && tries < 100_000 {
        tries += 1;
        let n: u32 = rng.gen_range(1..=4);
        let sigma: f64 = rng.gen_range(1.0..3.0);
        let delta: f64 = rng.gen_range(0.0..(sigma / 2.0).min(n as f64 / 4.0));
        let gamma: f64 = rng.gen_range(0.0..sigma);
        let lo = -(n as f64) / 2.0;
        let r0: f64 = rng.gen_range(lo + 1e-6..=-2.0 * delta);
        let r1 = r0 + 2.0 * delta + rng.gen_range(0.0..1.0);
        let inp = ExponentInputs { sigma, delta, gamma, n, r0, r1 };
        let trend = if rng.gen_bool(0.5) { Trend::NonDecreasing } else { Trend::Decreasing };
        if !hypothesis_chain(&inp, trend).is_ok_and(|c| c.holds) {
            continue;
        }
        let Ok(w) = omega(&inp, trend) else { continue };
        accepted += 1;
        if !(1.0..2.0).contains(&w) {
            bad.push(w);
        }
    }
    check(
        ps == q(2) && cp == q(2) && accepted == 1000 && bad.is_empty(),
        format!("p_star = {ps}, critical_p = {cp}, omega in [1,2) for {}/{accepted} inputs", accepted - bad.len()),
    )
}

fn c9_g_ode() -> Outcome {
    let mut ok = true;
    let mut lines = Vec::new();
    for kappa in [0.0, 0.5, 1.0] {
        let spec = DampingSpec::power_law(1.0, kappa, 1.0, 0.0).map_err(err)?;
        let g = spec.solve_g(1e3, 2000).map_err(err)?;
        // b'/b^2 = kappa (1+t)^(-kappa-1) -> 0
        let bound = 1.0 + 0.05;
        let after: Vec<usize> = (0..g.times.len()).filter(|&i| g.times[i] >= g.band.t0).collect();
        let bg = after.iter().map(|&i| spec.value(g.times[i]).unwrap() * g.g[i]);
        let (lo, hi) = bg.fold((f64::INFINITY, 0.0f64), |(a, b), v| (a.min(v), b.max(v)));
        let sup = after.iter().map(|&i| g.g_prime[i].abs()).fold(0.0, f64::max);
        ok &= lo > 0.0 && hi.is_finite() && sup <= bound;
        lines.push(format!("k={kappa}: T0={:.3} bg in [{lo:.4}, {hi:.4}] sup|g'|={sup:.4}", g.band.t0));
    }
    check(ok, lines.join("; "))
}

const MANIFESTS: [(&str, &str); 5] = [
    (
        "zones",
        "id = \"d-zones\"\nsubcommand = \"zones\"\n[damping]\nfamily = \"power_law\"\nkappa = 0.5\ndelta = 0.25\n[grid]\nt_max = 50.0\nnt = 30\nnxi = 30\n",
    ),
    (
        "linear",
        "id = \"d-linear\"\nsubcommand = \"solve-linear\"\n[damping]\nfamily = \"power_law\"\nkappa = 0.5\n[problem]\nalphas = [0.0, 1.0]\n[data]\nu0 = { kind = \"gaussian_hat\" }\nu1 = { kind = \"power_cutoff\" }\n[run]\nhorizon = 1000.0\nsamples = 80\n",
    ),
    (
        "verify",
        "id = \"d-verify\"\nsubcommand = \"verify-decay\"\n[damping]\nfamily = \"power_law\"\n[data]\nu1 = { kind = \"power_cutoff\" }\n[run]\nhorizon = 10000.0\nsamples = 120\n",
    ),
    (
        "g",
        "id = \"d-g\"\nsubcommand = \"validate-damping\"\n[damping]\nfamily = \"power_law\"\nkappa = 1.0\n[run]\nhorizon = 1000.0\nsolve_g = true\n",
    ),
    (
        "semilinear",
        "id = \"d-semi\"\nsubcommand = \"solve-semilinear\"\n[damping]\nfamily = \"power_law\"\n[problem]\np = 2.0\n[data]\nu1 = { kind = \"gaussian\" }\n[grid]\nM = 256\n[run]\nhorizon = 3.0\nsamples = 40\n",
    ),
];

fn csv_bodies(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<(String, Vec<u8>)> = fs::read_dir(dir)
        .into_iter()
        .flatten()
        .flatten()
        .map(|e| e.path())
        .filter(|p| p.extension().is_some_and(|x| x == "csv"))
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()))
        .collect();
    v.sort();
    v
}

fn c10_determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(err)?;
    let mut files = 0;
    for (name, text) in MANIFESTS {
        let mut bodies = Vec::new();
        for (k, exec) in [Execution::Parallel, Execution::Sequential, Execution::Parallel].into_iter().enumerate() {
            let out = tmp.path().join(format!("run{k}"));
            let w = run_table(parse_table(text).map_err(err)?, None, tmp.path(), &out, exec)
                .map_err(|e| format!("{name}: {e}"))?;
            bodies.push(csv_bodies(&w.dir));
        }
        if bodies[0].is_empty() || bodies.iter().any(|b| *b != bodies[0]) {
            return Err(format!("{name}: CSV bodies differ between runs"));
        }
        files += bodies[0].len();
    }
    Ok(format!("{files} CSV files identical across 3 runs (parallel, sequential, parallel)"))
}

fn main() -> ExitCode {
    let criteria: [Criterion; 10] = [
        ("1 mode oracle", c1_mode_oracle, Duration::from_secs(1)),
        ("2 frictional rates", c2_matsumura, Duration::from_secs(60)),
        ("3 time-dependent damping", c3_time_dependent, Duration::from_secs(60)),
        ("4 heat flow", c4_heat, Duration::from_secs(10)),
        ("5 decay character", c5_character, Duration::from_secs(10)),
        ("6 envelope boundedness", c6_envelopes, Duration::from_secs(300)),
        ("7 blow-up threshold", c7_threshold, Duration::from_secs(600)),
        ("8 exponent tables", c8_exponents, Duration::from_secs(1)),
        ("9 g-ODE", c9_g_ode, Duration::from_secs(5)),
        ("10 determinism", c10_determinism, Duration::from_secs(600)),
    ];
    let mut failed = 0;
    for (name, f, budget) in criteria {
        let t0 = Instant::now();
        let outcome = f();
        let took = t0.elapsed();
        let (tag, detail) = match outcome {
            Ok(d) if took <= budget => ("PASS", d),
            Ok(d) => ("FAIL", format!("{d}; over time budget {budget:?}")),
            Err(d) => ("FAIL", d),
        };
        if tag == "FAIL" {
            failed += 1;
        }
        println!("criterion {name}: {tag} [{:.2}s] {detail}", took.as_secs_f64());
    }
    println!("acceptance: {} passed, {failed} failed", 10 - failed);
    if failed == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
