//! Experiment manifests and their output directories.

use std::collections::BTreeMap;
use std::fs;
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};
use sha2::{Digest, Sha256};

use crate::damping::DampingConfig;
use crate::decay_character::ProfileConfig;
use crate::decay_verify::Statement;
use crate::error::{Error, Result};
use crate::phase_zones::ZoneParams;

/// Names accepted for `subcommand`.
pub const SUBCOMMANDS: [&str; 8] = [
    "validate-damping",
    "decay-character",
    "zones",
    "solve-linear",
    "verify-decay",
    "solve-semilinear",
    "exponents",
    "scan",
];

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct DataBlock {
    pub u0: Option<ProfileConfig>,
    pub u1: Option<ProfileConfig>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct RunBlock {
    pub horizon: Option<f64>,
    /// First positive output time.
    pub t_first: Option<f64>,
    pub samples: Option<usize>,
    pub rel_tol: Option<f64>,
    /// Verdict or status the run is expected to produce.
    pub expect: Option<String>,
    pub escape_threshold: Option<f64>,
    pub dt_safety: Option<f64>,
    #[serde(default)]
    pub solve_g: bool,
    pub g_points: Option<usize>,
}

#[derive(Debug, Clone, Default, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct VerifyBlock {
    /// CSV written by `solve-linear`; solved in place when absent.
    pub input: Option<String>,
    pub statement: Option<Statement>,
    pub r0: Option<f64>,
    pub r1: Option<f64>,
    pub window_fraction: Option<f64>,
    pub tolerance: Option<f64>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct ScanBlock {
    pub target: String,
    /// Dotted key path to the list of values it takes.
    pub grid: BTreeMap<String, Vec<toml::Value>>,
}

#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
pub struct Manifest {
    pub id: String,
    pub subcommand: Option<String>,
    pub damping: Option<DampingConfig>,
    pub problem: Option<toml::Table>,
    pub grid: Option<toml::Table>,
    pub data: Option<DataBlock>,
    pub run: Option<RunBlock>,
    pub zones: Option<ZoneParams>,
    pub verify: Option<VerifyBlock>,
    pub scan: Option<ScanBlock>,
}

fn schema(msg: impl Into<String>) -> Error {
    Error::Config(msg.into())
}

impl Manifest {
    pub fn from_table(table: &toml::Table) -> Result<Self> {
        if table.is_empty() {
            return Err(schema("manifest is empty"));
        }
        let m: Manifest =
            toml::Value::Table(table.clone()).try_into().map_err(|e: toml::de::Error| schema(e.to_string()))?;
        if m.id.is_empty()
            || !m.id.chars().all(|c| c.is_ascii_alphanumeric() || "-_.".contains(c))
            || m.id.starts_with('.')
        {
            return Err(schema(format!("id {:?} must be non-empty and use [A-Za-z0-9_.-]", m.id)));
        }
        if let Some(s) = &m.subcommand {
            if !SUBCOMMANDS.contains(&s.as_str()) {
                return Err(schema(format!("unknown subcommand {s:?}")));
            }
        }
        Ok(m)
    }

    pub fn run(&self) -> RunBlock {
        self.run.clone().unwrap_or_default()
    }

    pub fn data(&self) -> DataBlock {
        self.data.clone().unwrap_or_default()
    }

    pub fn damping(&self) -> Result<&DampingConfig> {
        self.damping.as_ref().ok_or_else(|| schema("missing [damping] block"))
    }

    /// Deserializes `[problem]` into `T`; an absent block reads as empty.
    pub fn problem<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        block(&self.problem, "problem")
    }

    pub fn grid<T: serde::de::DeserializeOwned>(&self) -> Result<T> {
        block(&self.grid, "grid")
    }
}

fn block<T: serde::de::DeserializeOwned>(t: &Option<toml::Table>, name: &str) -> Result<T> {
    toml::Value::Table(t.clone().unwrap_or_default())
        .try_into()
        .map_err(|e: toml::de::Error| schema(format!("[{name}]: {e}")))
}

/// Parses manifest text into a raw table.
pub fn parse_table(text: &str) -> Result<toml::Table> {
    text.parse::<toml::Table>().map_err(|e| schema(e.to_string()))
}

/// Sets `path` (dotted) to `value`, creating intermediate tables.
pub fn set_path(table: &mut toml::Table, path: &str, value: toml::Value) -> Result<()> {
    let mut parts: Vec<&str> = path.split('.').collect();
    let last = parts.pop().filter(|s| !s.is_empty()).ok_or_else(|| schema(format!("bad key path {path:?}")))?;
    let mut cur = table;
    for p in parts {
        let entry = cur.entry(p.to_string()).or_insert_with(|| toml::Value::Table(toml::Table::new()));
        cur = entry.as_table_mut().ok_or_else(|| schema(format!("{p} in {path:?} is not a table")))?;
    }
    cur.insert(last.to_string(), value);
    Ok(())
}

/// Files produced by one command, in write order.
#[derive(Debug, Clone, Default)]
pub struct Artifacts {
    pub files: Vec<(String, Vec<u8>)>,
    /// Verdict or status, compared against `run.expect`.
    pub verdict: Option<String>,
}

impl Artifacts {
    pub fn push(&mut self, name: &str, bytes: Vec<u8>) {
        self.files.push((name.to_string(), bytes));
    }

    pub fn push_json<T: Serialize>(&mut self, name: &str, value: &T) -> Result<()> {
        let mut bytes = serde_json::to_vec_pretty(value).map_err(|e| Error::Config(e.to_string()))?;
        bytes.push(b'\n');
        self.push(name, bytes);
        Ok(())
    }
}

pub fn sha256_hex(bytes: &[u8]) -> String {
    hex::encode(Sha256::digest(bytes))
}

#[derive(Debug, Clone, Serialize)]
struct Record<'a> {
    id: &'a str,
    subcommand: &'a str,
    version: &'a str,
    config_sha256: String,
    artifacts: BTreeMap<&'a str, String>,
    verdict: Option<&'a str>,
    expect: Option<&'a str>,
    expectation_met: Option<bool>,
}

/// Outcome of writing one experiment.
#[derive(Debug, Clone)]
pub struct Written {
    pub dir: PathBuf,
    pub verdict: Option<String>,
    /// `Some(false)` when an expectation was declared and missed.
    pub expectation_met: Option<bool>,
}

/// Writes `config.toml`, the artifacts and `manifest.json` under `out/<id>/`.
pub fn write_outputs(
    out: &Path,
    manifest: &Manifest,
    subcommand: &str,
    config: &toml::Table,
    art: &Artifacts,
) -> Result<Written> {
    let dir = out.join(&manifest.id);
    fs::create_dir_all(&dir)?;
    let config_text = toml::to_string(config).map_err(|e| schema(e.to_string()))?;
    fs::write(dir.join("config.toml"), &config_text)?;
    let mut digests = BTreeMap::new();
    for (name, bytes) in &art.files {
        fs::write(dir.join(name), bytes)?;
        digests.insert(name.as_str(), sha256_hex(bytes));
    }
    let expect = manifest.run.as_ref().and_then(|r| r.expect.as_deref());
    let expectation_met = expect.map(|e| art.verdict.as_deref() == Some(e));
    let record = Record {
        id: &manifest.id,
        subcommand,
        version: env!("CARGO_PKG_VERSION"),
        config_sha256: sha256_hex(config_text.as_bytes()),
        artifacts: digests,
        verdict: art.verdict.as_deref(),
        expect,
        expectation_met,
    };
    let mut bytes = serde_json::to_vec_pretty(&record).map_err(|e| schema(e.to_string()))?;
    bytes.push(b'\n');
    fs::write(dir.join("manifest.json"), bytes)?;
    Ok(Written { dir, verdict: art.verdict.clone(), expectation_met })
}

/// CSV bytes from a header and rows of numbers.
pub fn csv_bytes(header: &[String], rows: impl IntoIterator<Item = Vec<String>>) -> Result<Vec<u8>> {
    let mut w = csv::Writer::from_writer(Vec::new());
    w.write_record(header)?;
    for r in rows {
        w.write_record(&r)?;
    }
    w.into_inner().map_err(|e| Error::Config(e.to_string()))
}

pub fn num(v: f64) -> String {
    format!("{v:e}")
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn empty_manifest_is_schema_error() {
        assert!(matches!(Manifest::from_table(&toml::Table::new()), Err(Error::Config(_))));
        let t = parse_table("id = \"x\"\nbogus = 1\n").unwrap();
        assert!(Manifest::from_table(&t).is_err());
        let t = parse_table("id = \"../up\"\n").unwrap();
        assert!(Manifest::from_table(&t).is_err());
    }

    #[test]
    fn dotted_paths() {
        let mut t = parse_table("id = \"a\"\n[problem]\np = 2.0\n").unwrap();
        set_path(&mut t, "problem.p", toml::Value::Float(3.0)).unwrap();
        set_path(&mut t, "damping.kappa", toml::Value::Float(0.5)).unwrap();
        assert_eq!(t["problem"]["p"].as_float(), Some(3.0));
        assert_eq!(t["damping"]["kappa"].as_float(), Some(0.5));
        assert!(set_path(&mut t, "id.x", toml::Value::Integer(1)).is_err());
    }
}
