//! Cartesian parameter scans over a base manifest.

use std::path::Path;

use super::manifest::{csv_bytes, set_path, Artifacts, Manifest, ScanBlock, Written};
use super::run_table;
use crate::error::{Error, Result};
use crate::par::{self, Execution};

/// Largest number of points a scan may expand to.
pub const MAX_POINTS: usize = 10_000;

/// One point of the expanded grid: dotted key, value.
pub type Point = Vec<(String, toml::Value)>;

/// Expands the grid in key order, the last key varying fastest.
pub fn expand(scan: &ScanBlock) -> Result<Vec<Point>> {
    let mut total: usize = 1;
    for (k, vals) in &scan.grid {
        if vals.is_empty() {
            return Err(Error::Config(format!("scan key {k:?} has no values")));
        }
        total = total
            .checked_mul(vals.len())
            .filter(|&t| t <= MAX_POINTS)
            .ok_or_else(|| Error::Config(format!("scan expands to more than {MAX_POINTS} points")))?;
    }
    let mut points = vec![Vec::new()];
    for (k, vals) in &scan.grid {
        points = points
            .into_iter()
            .flat_map(|p: Point| {
                vals.iter().map(move |v| {
                    let mut q = p.clone();
                    q.push((k.clone(), v.clone()));
                    q
                })
            })
            .collect();
    }
    Ok(points)
}

fn point_id(k: usize) -> String {
    format!("p{k:04}")
}

fn show(v: &toml::Value) -> String {
    match v {
        toml::Value::String(s) => s.clone(),
        other => other.to_string(),
    }
}

/// Runs every point under `out/<id>/` and writes `summary.csv`.
pub fn run(
    raw: &toml::Table,
    m: &Manifest,
    base: &Path,
    out: &Path,
    exec: Execution,
) -> Result<(Artifacts, Option<bool>)> {
    let scan = m.scan.as_ref().ok_or_else(|| Error::Config("scan needs a [scan] block".into()))?;
    if scan.target == "scan" {
        return Err(Error::Config("scan target cannot be scan".into()));
    }
    let points = expand(scan)?;
    let mut base_table = raw.clone();
    base_table.remove("scan");
    base_table.insert("subcommand".into(), toml::Value::String(scan.target.clone()));
    let dir = out.join(&m.id);
    let results: Vec<Result<Written>> = par::map_indexed(exec, points.len(), |k| {
        let mut t = base_table.clone();
        t.insert("id".into(), toml::Value::String(point_id(k)));
        for (key, v) in &points[k] {
            set_path(&mut t, key, v.clone())?;
        }
        run_table(t, None, base, &dir, exec)
    });
    let mut header = vec!["point".to_string()];
    header.extend(scan.grid.keys().cloned());
    header.extend(["status", "verdict", "expectation_met", "message"].map(String::from));
    let mut all_met = None;
    let rows: Vec<Vec<String>> = points
        .iter()
        .zip(&results)
        .enumerate()
        .map(|(k, (p, r))| {
            let mut row = vec![point_id(k)];
            row.extend(p.iter().map(|(_, v)| show(v)));
            match r {
                Ok(w) => {
                    if let Some(met) = w.expectation_met {
                        all_met = Some(all_met.unwrap_or(true) && met);
                    }
                    row.extend([
                        "ok".into(),
                        w.verdict.clone().unwrap_or_default(),
                        w.expectation_met.map(|b| b.to_string()).unwrap_or_default(),
                        String::new(),
                    ]);
                }
                Err(e) => {
                    log::warn!("scan point {} failed: {e}", point_id(k));
                    row.extend(["error".into(), String::new(), String::new(), e.to_string()]);
                }
            }
            row
        })
        .collect();
    let failed = results.iter().filter(|r| r.is_err()).count();
    let mut art = Artifacts::default();
    art.push("summary.csv", csv_bytes(&header, rows)?);
    art.verdict = Some(if failed == 0 { "complete".into() } else { format!("{failed}_failed") });
    Ok((art, all_met))
}

#[cfg(test)]
mod tests {
    use super::*;
    use std::collections::BTreeMap;

    #[test]
    fn expansion_order_and_cap() {
        let mut grid = BTreeMap::new();
        grid.insert("a.x".to_string(), vec![toml::Value::Integer(1), toml::Value::Integer(2)]);
        grid.insert("b.y".to_string(), vec![toml::Value::Float(0.5), toml::Value::Float(1.5), toml::Value::Float(2.5)]);
        let pts = expand(&ScanBlock { target: "exponents".into(), grid: grid.clone() }).unwrap();
        assert_eq!(pts.len(), 6);
        assert_eq!(pts[1][1].1, toml::Value::Float(1.5));
        assert_eq!(pts[3][0].1, toml::Value::Integer(2));
        grid.insert("c".to_string(), (0..2000).map(toml::Value::Integer).collect());
        assert!(expand(&ScanBlock { target: "exponents".into(), grid }).is_err());
    }
}
