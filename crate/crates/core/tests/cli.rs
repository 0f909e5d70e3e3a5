use std::fs;
use std::path::Path;
use std::process::Command;

use dampwave::cli::manifest::parse_table;
use dampwave::cli::{exit_code, run_table};
use dampwave::par::Execution;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_dampwave"))
}

fn write(dir: &Path, name: &str, text: &str) -> std::path::PathBuf {
    let p = dir.join(name);
    fs::write(&p, text).unwrap();
    p
}

fn status(args: &[&str]) -> i32 {
    bin().args(args).output().unwrap().status.code().unwrap()
}

const ZONES: &str = r#"
id = "z"
[damping]
family = "power_law"
kappa = 0.5
sigma = 1.0
delta = 0.25
[grid]
t_max = 20.0
nt = 12
nxi = 12
"#;

#[test]
fn empty_manifest_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "empty.toml", "");
    let out = dir.path().join("out");
    assert_eq!(status(&["zones", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
    assert!(!out.exists());
}

#[test]
fn unknown_key_exits_one() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "bad.toml", &format!("{ZONES}\n[run]\nhorizn = 3.0\n"));
    let out = dir.path().join("out");
    assert_eq!(status(&["zones", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
}

#[test]
fn missed_expectation_exits_two() {
    let dir = tempfile::tempdir().unwrap();
    let text = "id = \"v\"\n[damping]\nfamily = \"power_law\"\nkappa = 0.5\n[run]\nhorizon = 100.0\nexpect = \"not_effective\"\n";
    let cfg = write(dir.path(), "v.toml", text);
    let out = dir.path().join("out");
    assert_eq!(status(&["validate-damping", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 2);
    let rec = fs::read_to_string(out.join("v/manifest.json")).unwrap();
    assert!(rec.contains("\"expectation_met\": false"));
}

#[test]
fn subcommand_conflict_is_an_error() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.toml", &format!("subcommand = \"exponents\"\n{ZONES}"));
    let out = dir.path().join("out");
    assert_eq!(status(&["zones", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
    assert_eq!(status(&["run", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap()]), 1);
}

fn tree(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut v: Vec<_> = fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .flat_map(|p| {
            if p.is_dir() {
                tree(&p)
            } else {
                vec![(p.strip_prefix(dir).unwrap().display().to_string(), fs::read(&p).unwrap())]
            }
        })
        .collect();
    v.sort();
    v
}

#[test]
fn reruns_are_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write(dir.path(), "z.toml", ZONES);
    for (k, threads) in ["1", "4"].iter().enumerate() {
        let out = dir.path().join(format!("out{k}"));
        let args = ["zones", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--threads", threads];
        assert_eq!(status(&args), 0);
    }
    let a = tree(&dir.path().join("out0"));
    let b = tree(&dir.path().join("out1"));
    assert_eq!(a.len(), 5);
    assert_eq!(a, b);
}

#[test]
fn tol_override_lands_in_config_copy() {
    let dir = tempfile::tempdir().unwrap();
    let text = "id = \"l\"\n[damping]\nfamily = \"power_law\"\n[data]\nu0 = { kind = \"gaussian_hat\" }\n[run]\nhorizon = 10.0\nsamples = 30\n";
    let cfg = write(dir.path(), "l.toml", text);
    let out = dir.path().join("out");
    let args = ["solve-linear", "--config", cfg.to_str().unwrap(), "--out", out.to_str().unwrap(), "--tol", "1e-6"];
    assert_eq!(status(&args), 0);
    let copy = parse_table(&fs::read_to_string(out.join("l/config.toml")).unwrap()).unwrap();
    assert_eq!(copy["run"]["rel_tol"].as_float(), Some(1e-6));
    let csv = fs::read_to_string(out.join("l/norms.csv")).unwrap();
    assert!(csv.starts_with("t,B,norm_0,ut_norm,quad_error\n"));
    assert_eq!(csv.lines().count(), 31);
}

#[test]
fn verify_reads_solver_csv() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let solve = "id = \"s\"\n[damping]\nfamily = \"power_law\"\n[data]\nu1 = { kind = \"power_cutoff\" }\n[run]\nhorizon = 10000.0\nsamples = 120\n";
    let written =
        run_table(parse_table(solve).unwrap(), Some("solve-linear"), dir.path(), &out, Execution::Parallel).unwrap();
    let verify = format!(
        "id = \"v\"\n[damping]\nfamily = \"power_law\"\n[verify]\ninput = \"{}\"\nr0 = 1000.0\nr1 = 0.0\n",
        written.dir.join("norms.csv").display()
    );
    let w =
        run_table(parse_table(&verify).unwrap(), Some("verify-decay"), dir.path(), &out, Execution::Parallel).unwrap();
    assert_eq!(w.verdict.as_deref(), Some("consistent"));
    assert_eq!(exit_code(&Ok(w)), 0);
}

#[test]
fn scan_records_failed_points_and_continues() {
    let dir = tempfile::tempdir().unwrap();
    let text = r#"
id = "sc"
[damping]
family = "power_law"
[problem]
n = 1
r0 = 0
r1 = 0
[scan]
target = "exponents"
[scan.grid]
"problem.gamma" = [0.0, 0.5, 2.0]
"#;
    let out = dir.path().join("out");
    let w = run_table(parse_table(text).unwrap(), None, dir.path(), &out, Execution::Parallel);
    assert_eq!(exit_code(&w), 1);
    let text = text.replacen("id = \"sc\"", "id = \"sc\"\nsubcommand = \"scan\"", 1);
    let w = run_table(parse_table(&text).unwrap(), None, dir.path(), &out, Execution::Parallel).unwrap();
    assert_eq!(w.verdict.as_deref(), Some("1_failed"));
    let summary = fs::read_to_string(out.join("sc/summary.csv")).unwrap();
    let lines: Vec<&str> = summary.lines().collect();
    assert_eq!(lines[0], "point,problem.gamma,status,verdict,expectation_met,message");
    assert!(lines[1].starts_with("p0000,0.0,ok,"));
    assert!(lines[3].starts_with("p0002,2.0,error,"));
    assert!(out.join("sc/p0001/exponents.json").exists());
}
