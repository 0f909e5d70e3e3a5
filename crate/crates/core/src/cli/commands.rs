//! One function per subcommand, each turning a manifest into artifacts.

use std::collections::BTreeMap;
use std::path::Path;

use serde::{Deserialize, Serialize};

use super::manifest::{csv_bytes, num, Artifacts, Manifest};
use crate::damping::{geometric_pairs, DampingConfig, DampingSpec, Trend};
use crate::decay_character::{estimate_decay_character, p_norm, CharacterStatus, SpectralProfile};
use crate::decay_verify::{
    clock_values, fit_observed_rate, heat_oracle, predicted_rate, remove_prefactor, DecayFitReport, FitVerdict,
    HeatCoefficient, Quantity, RateInputs, RatePrediction, Statement, SLOPE_TOL,
};
use crate::error::{Error, Result};
use crate::exponents::{exact_rational, exponent_table, ExponentInputs, ExponentTable, Field};
use crate::linear_modes::{reconstruct_norms, time_grid, LinearRunResult, RadialGrid};
use crate::par::{self, Execution};
use crate::phase_zones::{curve_t_diss, curve_t_ell, zone_grid};
use crate::semilinear::{
    check_blowup_data_condition, critical_p, default_outputs, solve_semilinear, GridSpec, SemilinearConfig,
};

fn schema(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

/// Runs `name` on `m`; relative paths resolve against `base`.
pub fn dispatch(name: &str, m: &Manifest, base: &Path, exec: Execution) -> Result<Artifacts> {
    match name {
        "validate-damping" => validate_damping(m, base),
        "decay-character" => decay_character(m, base),
        "zones" => zones(m, base, exec),
        "solve-linear" => solve_linear(m, base, exec),
        "verify-decay" => verify_decay(m, base, exec),
        "solve-semilinear" => solve_semilinear_cmd(m, base),
        "exponents" => exponents(m, base),
        other => Err(schema(format!("subcommand {other:?} cannot run here"))),
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct DimProblem {
    #[serde(default = "one_dim")]
    n: usize,
    #[serde(default)]
    eta: f64,
}

fn one_dim() -> usize {
    1
}

fn spec_of(m: &Manifest, base: &Path) -> Result<DampingSpec> {
    m.damping()?.build(base)
}

fn profiles(m: &Manifest, n: usize, base: &Path) -> Result<(SpectralProfile, SpectralProfile)> {
    let d = m.data();
    let build = |c: &Option<crate::decay_character::ProfileConfig>| match c {
        Some(c) => c.build(n, base),
        None => SpectralProfile::zero(n),
    };
    Ok((build(&d.u0)?, build(&d.u1)?))
}

fn validate_damping(m: &Manifest, base: &Path) -> Result<Artifacts> {
    let spec = spec_of(m, base)?;
    let run = m.run();
    let horizon = run.horizon.unwrap_or(1e3).min(spec.t_max());
    let report = spec.validate_effective(horizon)?;
    let equiv = spec.check_equivalences(&geometric_pairs(1.0, horizon, 40, 8, 0.5))?;
    let mut art = Artifacts::default();
    let g = if run.solve_g {
        let traj = spec.solve_g(horizon, run.g_points.unwrap_or(400))?;
        let rows = (0..traj.times.len()).map(|i| vec![num(traj.times[i]), num(traj.g[i]), num(traj.g_prime[i])]);
        art.push("g.csv", csv_bytes(&["t".into(), "g".into(), "g_prime".into()], rows)?);
        Some(serde_json::json!({
            "b_zero": traj.b_zero,
            "a_zero": traj.a_zero,
            "max_residual": traj.max_residual,
            "initial_mismatch": traj.initial_mismatch,
            "band": traj.band,
            "slope": traj.slope,
        }))
    } else {
        None
    };
    let effective = report.effective();
    art.push_json(
        "validation.json",
        &serde_json::json!({
            "effective": effective,
            "report": report,
            "equivalences": equiv,
            "b_l_limit": finite_or_null(spec.b_l_limit()),
            "g": g,
        }),
    )?;
    art.verdict = Some(if effective { "effective" } else { "not_effective" }.into());
    Ok(art)
}

fn finite_or_null(v: f64) -> serde_json::Value {
    if v.is_finite() {
        serde_json::json!(v)
    } else {
        serde_json::Value::Null
    }
}

fn decay_character(m: &Manifest, base: &Path) -> Result<Artifacts> {
    let prob: DimProblem = m.problem()?;
    let d = m.data();
    let mut entries = BTreeMap::new();
    let mut first = None;
    for (name, cfg) in [("u0", &d.u0), ("u1", &d.u1)] {
        let Some(cfg) = cfg else { continue };
        let profile = cfg.build(prob.n, base)?;
        let est = estimate_decay_character(&profile)?;
        first.get_or_insert(est.status);
        let pn = match p_norm(&profile, prob.eta) {
            Ok(v) => serde_json::to_value(v).map_err(|e| schema(e.to_string()))?,
            Err(e) => serde_json::json!({ "error": e.to_string() }),
        };
        entries.insert(name, serde_json::json!({ "estimate": est, "p_norm": pn }));
    }
    let status = first.ok_or_else(|| schema("[data] needs u0 or u1"))?;
    let mut art = Artifacts::default();
    art.push_json("character.json", &serde_json::json!({ "n": prob.n, "eta": prob.eta, "profiles": entries }))?;
    art.verdict = Some(status_name(status).into());
    Ok(art)
}

fn status_name(s: CharacterStatus) -> &'static str {
    match s {
        CharacterStatus::Determined => "determined",
        CharacterStatus::Zero => "zero",
        CharacterStatus::Infinite => "infinite",
        CharacterStatus::Indeterminate => "indeterminate",
        CharacterStatus::Degenerate => "degenerate",
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields, default)]
struct ZoneGrid {
    t_min: f64,
    t_max: f64,
    nt: usize,
    xi_min: f64,
    xi_max: f64,
    nxi: usize,
}

impl Default for ZoneGrid {
    fn default() -> Self {
        Self { t_min: 0.0, t_max: 100.0, nt: 50, xi_min: 1e-3, xi_max: 10.0, nxi: 50 }
    }
}

fn zones(m: &Manifest, base: &Path, exec: Execution) -> Result<Artifacts> {
    let spec = spec_of(m, base)?;
    let g: ZoneGrid = m.grid()?;
    if !(g.t_min >= 0.0 && g.t_max > g.t_min && g.xi_min > 0.0 && g.xi_max > g.xi_min && g.nt >= 2 && g.nxi >= 2) {
        return Err(schema("[grid] needs 0 <= t_min < t_max, 0 < xi_min < xi_max, nt >= 2, nxi >= 2"));
    }
    let params = m.zones.unwrap_or_default();
    let times: Vec<f64> = (0..g.nt).map(|i| g.t_min + (g.t_max - g.t_min) * i as f64 / (g.nt - 1) as f64).collect();
    let xis: Vec<f64> =
        (0..g.nxi).map(|j| g.xi_min * (g.xi_max / g.xi_min).powf(j as f64 / (g.nxi - 1) as f64)).collect();
    let samples = zone_grid(&spec, &params, &times, &xis, exec)?;
    let mut counts: BTreeMap<&str, usize> = BTreeMap::new();
    let rows: Vec<Vec<String>> = samples
        .iter()
        .map(|s| {
            *counts.entry(s.label.as_str()).or_default() += 1;
            vec![num(s.t), num(s.xi), s.label.as_str().to_string(), num(s.weight), num(s.mass)]
        })
        .collect();
    let mut art = Artifacts::default();
    let header: Vec<String> = ["t", "xi", "zone", "weight", "mass"].map(String::from).into();
    art.push("zones.csv", csv_bytes(&header, rows)?);
    let cell = |v: Result<Option<f64>>| match v {
        Ok(Some(t)) => num(t),
        Ok(None) => String::new(),
        Err(e) => {
            log::warn!("curve inversion failed: {e}");
            String::new()
        }
    };
    let curves = par::map_slice(exec, &xis, |&xi| {
        vec![num(xi), cell(curve_t_ell(&spec, &params, xi, g.t_max)), cell(curve_t_diss(&spec, &params, xi, g.t_max))]
    });
    art.push("curves.csv", csv_bytes(&["xi".into(), "t_ell".into(), "t_diss".into()], curves)?);
    art.push_json("zones.json", &serde_json::json!({ "params": params, "counts": counts }))?;
    Ok(art)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct LinearProblem {
    #[serde(default = "one_dim")]
    n: usize,
    #[serde(default = "zero_alpha")]
    alphas: Vec<f64>,
}

fn zero_alpha() -> Vec<f64> {
    vec![0.0]
}

fn run_linear(
    m: &Manifest,
    base: &Path,
    exec: Execution,
) -> Result<(DampingSpec, SpectralProfile, SpectralProfile, LinearRunResult)> {
    let spec = spec_of(m, base)?;
    let prob: LinearProblem = m.problem()?;
    let grid: RadialGrid = m.grid()?;
    let (u0, u1) = profiles(m, prob.n, base)?;
    let run = m.run();
    let horizon = run.horizon.unwrap_or(1e4);
    let t_grid = time_grid(run.t_first.unwrap_or(0.1), horizon, run.samples.unwrap_or(200));
    let res = reconstruct_norms(&spec, &u0, &u1, &prob.alphas, &t_grid, grid, run.rel_tol.unwrap_or(1e-8), exec)?;
    Ok((spec, u0, u1, res))
}

fn norm_column(alpha: f64) -> String {
    format!("norm_{alpha}")
}

fn linear_csv(res: &LinearRunResult) -> Result<Vec<u8>> {
    let mut header = vec!["t".to_string(), "B".to_string()];
    header.extend(res.alphas.iter().map(|&a| norm_column(a)));
    header.extend(["ut_norm".to_string(), "quad_error".to_string()]);
    let rows = (0..res.times.len()).map(|i| {
        let mut r = vec![num(res.times[i]), num(res.clock[i])];
        r.extend(res.norms.iter().map(|row| num(row[i])));
        r.extend([num(res.ut_norm[i]), num(res.quad_error[i])]);
        r
    });
    csv_bytes(&header, rows)
}

fn solve_linear(m: &Manifest, base: &Path, exec: Execution) -> Result<Artifacts> {
    let (_, _, _, res) = run_linear(m, base, exec)?;
    let mut art = Artifacts::default();
    art.push("norms.csv", linear_csv(&res)?);
    art.push_json(
        "summary.json",
        &serde_json::json!({
            "alphas": res.alphas,
            "tail_bound": res.tail_bound,
            "max_quad_error": res.quad_error.iter().cloned().fold(0.0, f64::max),
            "xi_min": res.xi_min,
            "xi_max": res.xi_max,
            "nodes": res.nodes,
        }),
    )?;
    Ok(art)
}

/// Norm series keyed by quantity.
struct Series {
    times: Vec<f64>,
    columns: Vec<(Quantity, Vec<f64>)>,
}

fn read_series(path: &Path) -> Result<Series> {
    let mut rdr = csv::Reader::from_path(path)?;
    let header = rdr.headers()?.clone();
    let mut t_col = None;
    let mut cols: Vec<(usize, Quantity)> = Vec::new();
    for (i, h) in header.iter().enumerate() {
        if h == "t" {
            t_col = Some(i);
        } else if h == "ut_norm" {
            cols.push((i, Quantity::Ut));
        } else if let Some(a) = h.strip_prefix("norm_") {
            let alpha = a.parse().map_err(|_| schema(format!("bad column {h:?}")))?;
            cols.push((i, Quantity::U { alpha }));
        }
    }
    let t_col = t_col.ok_or_else(|| schema(format!("{} has no t column", path.display())))?;
    let mut times = Vec::new();
    let mut values = vec![Vec::new(); cols.len()];
    for rec in rdr.records() {
        let rec = rec?;
        let get = |i: usize| -> Result<f64> {
            rec.get(i).and_then(|s| s.trim().parse().ok()).ok_or_else(|| schema(format!("bad number in row {rec:?}")))
        };
        times.push(get(t_col)?);
        for (k, (i, _)) in cols.iter().enumerate() {
            values[k].push(get(*i)?);
        }
    }
    Ok(Series { times, columns: cols.into_iter().map(|(_, q)| q).zip(values).collect() })
}

/// Character used for prediction; a vanishing datum gets one large enough to never dominate.
fn character_of(profile: &SpectralProfile) -> Result<f64> {
    let est = estimate_decay_character(profile)?;
    match est.status {
        CharacterStatus::Determined => est.r_star.ok_or_else(|| Error::Fit("estimate lacks a value".into())),
        CharacterStatus::Zero | CharacterStatus::Degenerate => Ok(ABSENT_CHARACTER),
        other => Err(Error::Hypothesis(format!("decay character is {}", status_name(other)))),
    }
}

const ABSENT_CHARACTER: f64 = 1e3;

#[derive(Debug, Serialize)]
struct QuantityFit {
    quantity: Quantity,
    prediction: RatePrediction,
    fit: DecayFitReport,
}

fn verify_decay(m: &Manifest, base: &Path, exec: Execution) -> Result<Artifacts> {
    let spec = spec_of(m, base)?;
    let v = m.verify.clone().unwrap_or_default();
    let prob: LinearProblem = m.problem()?;
    let statement =
        v.statement.unwrap_or(if spec.delta > 0.0 { Statement::LinearStructural } else { Statement::LinearFrictional });
    let mut art = Artifacts::default();
    let (u0, u1) = profiles(m, prob.n, base)?;
    let series = if let Some(input) = &v.input {
        read_series(&base.join(input))?
    } else if statement == Statement::Heat {
        let run = m.run();
        let t_grid = time_grid(run.t_first.unwrap_or(0.1), run.horizon.unwrap_or(1e4), run.samples.unwrap_or(200));
        let h = heat_oracle(HeatCoefficient::Damping(&spec), spec.sigma, &u0, &prob.alphas, &t_grid)?;
        let cols = h.orders.iter().map(|&alpha| Quantity::U { alpha }).zip(h.norms).collect();
        Series { times: h.times, columns: cols }
    } else {
        let (_, _, _, res) = run_linear(m, base, exec)?;
        art.push("norms.csv", linear_csv(&res)?);
        let mut cols: Vec<(Quantity, Vec<f64>)> =
            res.alphas.iter().map(|&alpha| Quantity::U { alpha }).zip(res.norms.clone()).collect();
        cols.push((Quantity::Ut, res.ut_norm.clone()));
        Series { times: res.times, columns: cols }
    };
    let data_given = m.data.as_ref().is_some_and(|d| d.u0.is_some() || d.u1.is_some());
    let r_of = |given: Option<f64>, p: &SpectralProfile, name: &str| match given {
        Some(r) => Ok(r),
        None if data_given => character_of(p),
        None => Err(schema(format!("[verify] needs {name} when [data] is absent"))),
    };
    let r0 = r_of(v.r0, &u0, "r0")?;
    let r1 = if statement == Statement::Heat { 0.0 } else { r_of(v.r1, &u1, "r1")? };
    let inputs = RateInputs { sigma: spec.sigma, delta: spec.delta, n: prob.n, r0, r1 };
    let tolerance = v.tolerance.unwrap_or(SLOPE_TOL);
    let keep: Vec<usize> = (0..series.times.len()).filter(|&i| series.times[i] > 0.0).collect();
    let times: Vec<f64> = keep.iter().map(|&i| series.times[i]).collect();
    let mut fits = Vec::new();
    for (q, values) in &series.columns {
        let prediction = predicted_rate(statement, *q, inputs)?;
        let vals: Vec<f64> = keep.iter().map(|&i| values[i]).collect();
        let vals = remove_prefactor(&spec, &times, &vals, prediction.b_power)?;
        let x = if statement == Statement::Heat {
            times.iter().map(|&t| HeatCoefficient::Damping(&spec).clock(t)).collect::<Result<Vec<_>>>()?
        } else {
            clock_values(&spec, prediction.abscissa, &times)?
        };
        // heat norms are checked through their square
        let (vals, target) = if statement == Statement::Heat {
            (vals.iter().map(|v| v * v).collect(), 2.0 * prediction.exponent)
        } else {
            (vals, prediction.exponent)
        };
        let fit = fit_observed_rate(&times, &vals, &x, v.window_fraction, Some(target), tolerance)?;
        fits.push(QuantityFit { quantity: *q, prediction, fit });
    }
    let verdict = if fits.iter().any(|f| f.fit.verdict == FitVerdict::Violated) {
        FitVerdict::Violated
    } else if !fits.is_empty() && fits.iter().all(|f| f.fit.verdict == FitVerdict::Consistent) {
        FitVerdict::Consistent
    } else {
        FitVerdict::Inconclusive
    };
    let name = match verdict {
        FitVerdict::Consistent => "consistent",
        FitVerdict::Violated => "violated",
        FitVerdict::Inconclusive => "inconclusive",
    };
    art.push_json(
        "verdict.json",
        &serde_json::json!({ "statement": statement, "inputs": inputs, "fits": fits, "verdict": name }),
    )?;
    art.verdict = Some(name.into());
    Ok(art)
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct SemilinearProblem {
    #[serde(default = "one_dim")]
    n: usize,
    #[serde(default)]
    gamma: f64,
    p: f64,
    #[serde(default = "unit")]
    coefficient: f64,
}

fn unit() -> f64 {
    1.0
}

#[derive(Debug, Default, Deserialize)]
#[serde(deny_unknown_fields)]
struct BoxGrid {
    #[serde(rename = "L")]
    half_width: Option<f64>,
    #[serde(rename = "M")]
    points: Option<usize>,
}

fn solve_semilinear_cmd(m: &Manifest, base: &Path) -> Result<Artifacts> {
    let spec = spec_of(m, base)?;
    let prob: SemilinearProblem = m.problem()?;
    let g: BoxGrid = m.grid()?;
    let d = GridSpec::default_for(prob.n)?;
    let grid = GridSpec::new(prob.n, g.half_width.unwrap_or(d.half_width), g.points.unwrap_or(d.points))?;
    let (u0, u1) = profiles(m, prob.n, base)?;
    let run = m.run();
    let horizon = run.horizon.unwrap_or(100.0);
    let mut cfg = SemilinearConfig::new(spec.clone(), prob.gamma, prob.p, grid, horizon);
    cfg.coefficient = prob.coefficient;
    if let Some(e) = run.escape_threshold {
        cfg.escape_threshold = e;
    }
    if let Some(s) = run.dt_safety {
        cfg.dt_safety = s;
    }
    if let Some(r) = run.rel_tol {
        cfg.rel_tol = r;
    }
    cfg.outputs = default_outputs(horizon, run.samples.unwrap_or(160));
    let condition = check_blowup_data_condition(&spec, &u0, &u1, grid)?;
    let out = solve_semilinear(&cfg, &u0, &u1)?;
    let mut art = Artifacts::default();
    let rows =
        (0..out.times.len()).map(|i| vec![num(out.times[i]), num(out.l2[i]), num(out.h_sigma[i]), num(out.ut_l2[i])]);
    art.push("history.csv", csv_bytes(&["t".into(), "l2".into(), "h_sigma".into(), "ut_l2".into()], rows)?);
    art.push_json(
        "outcome.json",
        &serde_json::json!({
            "status": out.status,
            "blowup_time": out.blowup_time,
            "reference": out.reference,
            "l2_fit": out.l2_fit,
            "steps": out.steps,
            "note": out.note,
            "data_condition": condition,
            "critical_p": critical_p(spec.sigma, spec.delta, prob.n as u32).ok(),
        }),
    )?;
    art.verdict = Some(out.status.as_str().into());
    Ok(art)
}

/// A number given as a TOML float, integer or `"a/b"` string.
#[derive(Debug, Clone, Deserialize)]
#[serde(untagged)]
enum Num {
    Int(i64),
    Float(f64),
    Text(String),
}

impl Num {
    fn exact(&self) -> Option<num_rational::Ratio<i64>> {
        match self {
            Num::Int(v) => Some(num_rational::Ratio::from_integer(*v)),
            Num::Float(v) => exact_rational(*v),
            Num::Text(s) => s.trim().parse().ok(),
        }
    }

    fn float(&self) -> Result<f64> {
        match self {
            Num::Int(v) => Ok(*v as f64),
            Num::Float(v) => Ok(*v),
            Num::Text(s) => match s.trim().parse::<num_rational::Ratio<i64>>() {
                Ok(r) => Ok(Field::to_f64(r)),
                Err(_) => s.trim().parse().map_err(|_| schema(format!("{s:?} is not a number"))),
            },
        }
    }
}

#[derive(Debug, Deserialize)]
#[serde(deny_unknown_fields)]
struct ExponentProblem {
    n: u32,
    sigma: Option<Num>,
    delta: Option<Num>,
    #[serde(default = "zero_num")]
    gamma: Num,
    r0: Num,
    r1: Num,
    trend: Option<Trend>,
}

fn zero_num() -> Num {
    Num::Int(0)
}

fn exponents(m: &Manifest, base: &Path) -> Result<Artifacts> {
    let prob: ExponentProblem = m.problem()?;
    let (sigma, delta, trend) = match (&m.damping, &prob.sigma, &prob.delta) {
        (_, Some(s), Some(d)) => {
            let trend = match &m.damping {
                Some(c) => c.build(base)?.trend(),
                None => prob.trend.unwrap_or(Trend::NonDecreasing),
            };
            (s.clone(), d.clone(), trend)
        }
        (Some(c), _, _) => {
            let (s, d) = match c {
                DampingConfig::PowerLaw { sigma, delta, .. } | DampingConfig::Tabulated { sigma, delta, .. } => {
                    (*sigma, *delta)
                }
            };
            let s = prob.sigma.clone().unwrap_or(Num::Float(s));
            let d = prob.delta.clone().unwrap_or(Num::Float(d));
            (s, d, c.build(base)?.trend())
        }
        _ => return Err(schema("exponents need sigma and delta in [problem] or a [damping] block")),
    };
    let nums = [&sigma, &delta, &prob.gamma, &prob.r0, &prob.r1];
    let exact: Option<Vec<_>> = nums.iter().map(|v| v.exact()).collect();
    let table: ExponentTable = match exact {
        Some(q) => table_for(
            ExponentInputs { sigma: q[0], delta: q[1], gamma: q[2], n: prob.n, r0: q[3], r1: q[4] },
            trend,
            true,
        )?,
        None => {
            let f: Vec<f64> = nums.iter().map(|v| v.float()).collect::<Result<_>>()?;
            table_for(
                ExponentInputs { sigma: f[0], delta: f[1], gamma: f[2], n: prob.n, r0: f[3], r1: f[4] },
                trend,
                false,
            )?
        }
    };
    let mut art =
        Artifacts { verdict: Some(if table.chain.holds { "holds" } else { "fails" }.into()), ..Default::default() };
    art.push_json("exponents.json", &serde_json::json!({ "trend": trend, "table": table }))?;
    Ok(art)
}

fn table_for<F: Field>(inp: ExponentInputs<F>, trend: Trend, exact: bool) -> Result<ExponentTable> {
    inp.validate()?;
    exponent_table(&inp, trend, exact)
}
