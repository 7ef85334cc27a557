use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use xyz_dynamics::closed::TimeGrid;
use xyz_dynamics::metrics::{detect_freezing, std_dev, time_average, EntanglementSeries, FreezingConfig};
use xyz_dynamics::operator::SiteIndex;
use xyz_dynamics::sweep::{read_series, read_summary, SERIES_DIR, SUMMARY_FILE, SUMMARY_HEADER};

const SMOKE: &str = r#"
schema_version = 1
mode = "closed"
nsites = 4
lambda = [1.0, 0.3]
delta = [0.8, -1.0]
coordination = [3, 1]
decay_kind = "power"
decay_rate = 1.0
beta = 200.0
t_final = 3.0
pairs = ["2:3", "1:3"]
"#;

fn bin() -> Command {
    let mut cmd = Command::new(env!("CARGO_BIN_EXE_xyz-sweep"));
    cmd.env_remove("XYZ_SWEEP_WORKERS");
    cmd
}

fn write_config(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    fs::write(&path, text).unwrap();
    path
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(out: &Output) -> i32 {
    out.status.code().unwrap()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).into_owned()
}

fn snapshot(dir: &Path) -> Vec<(String, Vec<u8>)> {
    let mut files = vec![(SUMMARY_FILE.to_string(), fs::read(dir.join(SUMMARY_FILE)).unwrap())];
    let mut series: Vec<_> = fs::read_dir(dir.join(SERIES_DIR)).unwrap().map(|e| e.unwrap().path()).collect();
    series.sort();
    for p in series {
        files.push((p.file_name().unwrap().to_string_lossy().into_owned(), fs::read(&p).unwrap()));
    }
    files
}

#[test]
fn closed_run_writes_the_documented_files() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMOKE);
    let out_dir = tmp.path().join("out");
    let out = run(&["closed", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let summary = fs::read_to_string(out_dir.join(SUMMARY_FILE)).unwrap();
    let mut lines = summary.lines();
    assert_eq!(lines.next().unwrap(), SUMMARY_HEADER.join(","));
    // 2 lambdas x 2 deltas x 2 Z x 2 pairs
    assert_eq!(lines.count(), 16);

    let rows = read_summary(&out_dir.join(SUMMARY_FILE)).unwrap();
    let keys: Vec<(usize, f64, f64)> = rows.iter().map(|r| (r.coordination, r.delta, r.lambda_or_a)).collect();
    let mut sorted = keys.clone();
    sorted.sort_by(|a, b| a.0.cmp(&b.0).then(a.1.total_cmp(&b.1)).then(a.2.total_cmp(&b.2)));
    assert_eq!(keys, sorted, "rows follow the parameter order");

    // every summary number is recoverable from its series file
    let grid = TimeGrid::new(0.0, 3.0, 0.01).unwrap();
    for row in &rows {
        let (ts, vs) = read_series(&out_dir.join(SERIES_DIR).join(row.series_file_name())).unwrap();
        assert_eq!(ts.len(), grid.len());
        assert_eq!(ts[0], 0.0);
        assert_eq!(*ts.last().unwrap(), 3.0);
        assert!((time_average(&vs).unwrap() - row.l_avg).abs() < 1e-10);
        assert!((std_dev(&vs).unwrap() - row.l_sigma).abs() < 1e-10);
        let pair = (SiteIndex::new(row.pair_i).unwrap(), SiteIndex::new(row.pair_j).unwrap());
        let rep = detect_freezing(&EntanglementSeries::new(pair, grid, vs).unwrap(), &FreezingConfig::default());
        assert!((rep.tau_f - row.tau_f).abs() < 1e-10);
        assert!((rep.l_f - row.l_f).abs() < 1e-10);
        assert_eq!(rep.unterminated, row.unterminated);
    }
}

#[test]
fn reruns_are_byte_identical_across_worker_counts() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMOKE);
    let a = tmp.path().join("a");
    let b = tmp.path().join("b");
    let out = run(&["closed", "--config", cfg.to_str().unwrap(), "--out", a.to_str().unwrap(), "--workers", "1"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = bin()
        .args(["closed", "--config", cfg.to_str().unwrap(), "--out", b.to_str().unwrap()])
        .env("XYZ_SWEEP_WORKERS", "3")
        .output()
        .unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    assert_eq!(snapshot(&a), snapshot(&b));
}

#[test]
fn pairs_flag_overrides_config() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMOKE);
    let out_dir = tmp.path().join("out");
    let out = run(&["closed", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--pairs", "1:4"]);
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let rows = read_summary(&out_dir.join(SUMMARY_FILE)).unwrap();
    assert!(rows.iter().all(|r| (r.pair_i, r.pair_j) == (1, 4)));
    assert_eq!(rows.len(), 8);

    let bad = run(&["closed", "--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap(), "--pairs", "1:9"]);
    assert_eq!(code(&bad), 2);
}

#[test]
fn config_errors_exit_with_2() {
    let tmp = tempfile::tempdir().unwrap();
    let cases = [
        ("empty.toml", SMOKE.replace("lambda = [1.0, 0.3]", "lambda = []"), "lambda"),
        ("broken.toml", "schema_version = ".to_string(), "configuration"),
        ("version.toml", SMOKE.replace("schema_version = 1", "schema_version = 9"), "schema_version"),
    ];
    for (name, text, needle) in cases {
        let cfg = write_config(tmp.path(), name, &text);
        for sub in ["closed", "validate-config"] {
            let out = run(&[sub, "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
            assert_eq!(code(&out), 2, "{name} {sub}");
            assert!(stderr(&out).contains(needle), "{name}: {}", stderr(&out));
        }
    }
    let missing = run(&["validate-config", "--config", tmp.path().join("nope.toml").to_str().unwrap()]);
    assert_eq!(code(&missing), 2);

    // a closed config handed to the open subcommand
    let cfg = write_config(tmp.path(), "c.toml", SMOKE);
    let out = run(&["open", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 2);
    assert!(stderr(&out).contains("closed"));
}

#[test]
fn validate_config_reports_the_grid() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = write_config(tmp.path(), "c.toml", SMOKE);
    let out = run(&["validate-config", "--config", cfg.to_str().unwrap()]);
    assert_eq!(code(&out), 0);
    assert!(String::from_utf8_lossy(&out.stdout).contains("8 points x 2 pairs"));
}

#[test]
fn shipped_configs_validate() {
    let dir = Path::new(env!("CARGO_MANIFEST_DIR")).join("configs");
    let mut n = 0;
    for entry in fs::read_dir(dir).unwrap() {
        let path = entry.unwrap().path();
        let out = run(&["validate-config", "--config", path.to_str().unwrap()]);
        assert_eq!(code(&out), 0, "{}: {}", path.display(), stderr(&out));
        n += 1;
    }
    assert!(n >= 4);
}

#[test]
fn numerical_abort_exits_with_3_and_names_the_point() {
    let tmp = tempfile::tempdir().unwrap();
    // large Ohmicity makes the late-time dephasing rate negative
    let text = r#"
schema_version = 1
mode = "open"
nsites = 4
lambda = 0.5
delta = 0.8
coordination = 3
decay_rate = 2.0
t_final = 30.0
pairs = ["3:4"]
positivity_stride = 10

[bath]
kind = "bosonic"
ohmicity = 3.0
attached = [1, 2]
"#;
    let cfg = write_config(tmp.path(), "o.toml", text);
    let out = run(&["open", "--config", cfg.to_str().unwrap(), "--out", tmp.path().join("o").to_str().unwrap()]);
    assert_eq!(code(&out), 3, "{}", stderr(&out));
    let err = stderr(&out);
    assert!(err.contains("Z=3") && err.contains("lambda=0.5") && err.contains("positivity"), "{err}");
}

#[test]
fn freeze_report_reads_summary_and_writes_table() {
    let tmp = tempfile::tempdir().unwrap();
    let text = r#"
schema_version = 1
mode = "open"
nsites = 6
lambda = 2.4
delta = 0.2
coordination = [2, 5]
decay_rate = 2.0
t_final = 0.4
pairs = ["3:4", "3:5", "3:6"]

[bath]
kind = "repetitive"
attached = [1, 2]
"#;
    let cfg = write_config(tmp.path(), "o.toml", text);
    let out_dir = tmp.path().join("out");
    let args = ["--config", cfg.to_str().unwrap(), "--out", out_dir.to_str().unwrap()];

    let early = bin().arg("freeze-report").args(args).output().unwrap();
    assert_eq!(code(&early), 2, "missing summary must be an input error");

    let out = bin().arg("open").args(args).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));
    let out = bin().arg("freeze-report").args(args).output().unwrap();
    assert_eq!(code(&out), 0, "{}", stderr(&out));

    let table = fs::read_to_string(out_dir.join("freeze_table.csv")).unwrap();
    let mut lines = table.lines();
    assert_eq!(lines.next().unwrap(), "check,pair_i,pair_j,params,value,bound,status");
    let rows: Vec<Vec<String>> = lines.map(|l| l.split(',').map(str::to_string).collect()).collect();
    // 3 bound rows, then 2 points x 2 neighbours x 2 checks
    assert_eq!(rows.len(), 3 + 8);
    assert!(rows[..3].iter().all(|r| r[0] == "bound" && r[3] == "all"));
    assert!(rows.iter().all(|r| ["pass", "fail", "skipped"].contains(&r[6].as_str())));
}
