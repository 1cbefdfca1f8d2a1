use std::path::Path;
use std::process::{Command, Output};

use serde_json::Value;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_kelly-tails"));
    c.env_remove("KELLY_TAILS_THREADS");
    c
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().expect("binary runs")
}

fn stdout(args: &[&str]) -> String {
    let out = run(args);
    assert!(
        out.status.success(),
        "{args:?} failed: {}",
        String::from_utf8_lossy(&out.stderr)
    );
    String::from_utf8(out.stdout).unwrap()
}

fn code(args: &[&str]) -> i32 {
    run(args).status.code().expect("exit code")
}

/// Rows of the CSV table `name` as (header, records).
fn csv_table(text: &str, name: &str) -> (Vec<String>, Vec<Vec<String>>) {
    let marker = format!("# {name}\n");
    let start = text.find(&marker).expect("table present") + marker.len();
    let block = text[start..].split("\n\n").next().unwrap();
    let mut r = csv::ReaderBuilder::new().from_reader(block.as_bytes());
    let header = r.headers().unwrap().iter().map(String::from).collect();
    let rows = r
        .records()
        .map(|rec| rec.unwrap().iter().map(String::from).collect())
        .collect();
    (header, rows)
}

fn column(text: &str, table: &str, name: &str) -> Vec<String> {
    let (header, rows) = csv_table(text, table);
    let j = header.iter().position(|h| h == name).expect("column present");
    rows.into_iter().map(|r| r[j].clone()).collect()
}

fn json(args: &[&str]) -> Value {
    let mut all = args.to_vec();
    all.extend(["--output", "json"]);
    serde_json::from_str(&stdout(&all)).unwrap()
}

#[test]
fn single_gaussian_limit() {
    let v = json(&["single", "--mu", "0.004", "--sigma", "0.10"]);
    let row = &v["tables"]["single"][0];
    let f0 = row["f0"].as_f64().unwrap();
    let g0 = row["g0"].as_f64().unwrap();
    assert!((f0 - 0.4).abs() < 1e-3);
    assert!((g0 - 0.0008).abs() < 1e-6);
}

#[test]
fn single_with_left_tail() {
    let v = json(&[
        "single", "--mu", "0.004", "--sigma", "0.10", "--alpha", "0.02", "--etl", "0.10",
    ]);
    let f = v["tables"]["single"][0]["f1_exact"].as_f64().unwrap();
    assert!((f - 0.190).abs() < 5e-3, "{f}");
}

#[test]
fn exit_codes() {
    assert_eq!(code(&["single", "--mu", "0.004", "--sigma", "0.004"]), 2);
    assert_eq!(code(&["single", "--sigma", "0.1"]), 2);
    assert_eq!(code(&["single", "--mu", "0.004", "--sigma", "0.1", "--bogus", "1"]), 2);
    // well-formed inputs describing an infeasible model
    assert_eq!(
        code(&[
            "parity",
            "--premiums",
            "0.05,0.05",
            "--covariance",
            "0.04,0.04,0.04,0.04"
        ]),
        3
    );
    assert_eq!(
        code(&[
            "simulate",
            "--mu",
            "0.004",
            "--sigma",
            "0.1",
            "--alpha",
            "0.02",
            "--etl",
            "0.1",
            "--leverage",
            "12"
        ]),
        3
    );
    assert_eq!(code(&["estimate", "--input", "/nonexistent/returns.csv"]), 4);
    assert_eq!(code(&["--config", "/nonexistent/config.toml", "single"]), 4);
    assert_eq!(
        code(&[
            "single",
            "--mu",
            "0.004",
            "--sigma",
            "0.1",
            "--out",
            "/nonexistent-dir/x.csv"
        ]),
        4
    );
}

#[test]
fn bad_thread_setting_is_invalid() {
    let out = bin()
        .env("KELLY_TAILS_THREADS", "many")
        .args(["scenario"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(2));
    let ok = bin()
        .env("KELLY_TAILS_THREADS", "2")
        .args(["scenario"])
        .output()
        .unwrap();
    assert!(ok.status.success());
}

#[test]
fn errors_are_one_line_without_backtrace() {
    let out = run(&["single", "--mu", "0.004", "--sigma", "0.004"]);
    let err = String::from_utf8(out.stderr).unwrap();
    assert_eq!(err.lines().count(), 1);
    assert!(!err.contains("panicked"));
}

#[test]
fn brown_preset() {
    let text = stdout(&["scenario", "--preset", "brown", "--bet", "0.2", "--output", "csv"]);
    let cases = column(&text, "scenarios", "case");
    assert_eq!(cases, ["base", "TL", "TW", "BT"]);
    let base: f64 = column(&text, "scenarios", "multiple")[0].parse().unwrap();
    assert!((base - 7.49).abs() < 0.005);
}

#[test]
fn sweep_csv_has_requested_grid() {
    let text = stdout(&[
        "sweep",
        "--mu0",
        "0.00192",
        "--sigma0",
        "0.0999",
        "--alpha",
        "0.02",
        "--etl-max",
        "0.20",
        "--steps",
        "40",
        "--output",
        "csv",
    ]);
    let etl = column(&text, "sweep", "etl");
    assert_eq!(etl.len(), 41);
    assert_eq!(etl[0], "0");
    assert_eq!(etl[40], "0.2");
    let f: Vec<f64> = column(&text, "sweep", "f_exact")
        .iter()
        .map(|s| s.parse().unwrap())
        .collect();
    assert!(f.windows(2).all(|w| w[1] <= w[0]));
    assert!(f[0] > 0.0 && f[40] < 0.0);
}

#[test]
fn csv_numbers_use_twelve_significant_digits() {
    let text = stdout(&["single", "--mu", "0.004", "--sigma", "0.10", "--output", "csv"]);
    let f0 = &column(&text, "single", "f0")[0];
    assert_eq!(f0, "0.400641025641");
    let text = stdout(&["single", "--mu", "0.004", "--sigma", "0.10"]);
    assert!(text
        .lines()
        .any(|l| l.split_whitespace().collect::<Vec<_>>() == ["f0", "0.400641"]));
}

#[test]
fn parity_config_shows_equivalence() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("two_asset.toml");
    std::fs::write(
        &cfg,
        "[parity]\npremiums = [0.05, 0.03]\ncovariance = [0.04, 0.006, 0.006, 0.01]\n",
    )
    .unwrap();
    let text = stdout(&["--config", cfg.to_str().unwrap(), "parity", "--output", "csv"]);
    let normalized = column(&text, "equivalence", "normalized_kelly");
    let tangency = column(&text, "equivalence", "tangency_weight");
    for (a, b) in normalized.iter().zip(&tangency) {
        let (a, b): (f64, f64) = (a.parse().unwrap(), b.parse().unwrap());
        assert!((a - b).abs() < 1e-11);
    }
    assert_eq!(column(&text, "allocation", "asset").len(), 2);
}

#[test]
fn config_rejects_unknown_keys() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.toml");
    std::fs::write(&cfg, "[single]\nmu = 0.004\nsigma = 0.1\nleverage = 2\n").unwrap();
    assert_eq!(code(&["--config", cfg.to_str().unwrap(), "single"]), 2);
    std::fs::write(&cfg, "[single\nmu = 0.004\n").unwrap();
    assert_eq!(code(&["--config", cfg.to_str().unwrap(), "single"]), 2);
}

#[test]
fn flags_override_config() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("c.toml");
    std::fs::write(&cfg, "output = \"json\"\n[single]\nmu = 0.004\nsigma = 0.2\n").unwrap();
    let v: Value = serde_json::from_str(&stdout(&[
        "--config",
        cfg.to_str().unwrap(),
        "single",
        "--sigma",
        "0.1",
    ]))
    .unwrap();
    assert_eq!(v["tables"]["single"][0]["sigma"].as_f64(), Some(0.1));
}

fn write_run(dir: &Path, name: &str, args: &[&str]) -> (Vec<u8>, Value) {
    let out = dir.join(name);
    let mut all = args.to_vec();
    all.extend(["--out", out.to_str().unwrap()]);
    stdout(&all);
    let bytes = std::fs::read(&out).unwrap();
    let meta: Value = serde_json::from_slice(&std::fs::read(dir.join(format!("{name}.meta.json"))).unwrap()).unwrap();
    (bytes, meta)
}

#[test]
fn seeded_output_is_byte_identical() {
    let dir = tempfile::tempdir().unwrap();
    let args = [
        "--seed",
        "42",
        "--output",
        "csv",
        "simulate",
        "--mu",
        "0.004",
        "--sigma",
        "0.1",
        "--alpha",
        "0.02",
        "--etl",
        "0.1",
        "--paths",
        "500",
        "--periods",
        "200",
        "--crossover",
        "1,20",
    ];
    let (a, meta_a) = write_run(dir.path(), "a.csv", &args);
    let (b, meta_b) = write_run(dir.path(), "b.csv", &args);
    assert_eq!(a, b);
    assert_eq!(meta_a, meta_b);
    let one = bin()
        .env("KELLY_TAILS_THREADS", "1")
        .args(args)
        .output()
        .unwrap()
        .stdout;
    assert_eq!(one, a);
    let other = stdout(&[&args[..1], &["43"], &args[2..]].concat());
    assert_ne!(other.as_bytes(), &a[..]);
}

#[test]
fn sidecar_records_config_seed_and_version() {
    let dir = tempfile::tempdir().unwrap();
    let (_, meta) = write_run(
        dir.path(),
        "frontier.json",
        &["--seed", "9", "--output", "json", "frontier", "--horizon", "2"],
    );
    assert_eq!(meta["seed"], 9);
    assert_eq!(meta["command"], "frontier");
    assert_eq!(meta["output"], "json");
    assert_eq!(meta["version"], env!("CARGO_PKG_VERSION"));
    assert_eq!(meta["config"]["horizon"], 2);
    assert_eq!(meta["config"]["mu0"], 0.06);
}

#[test]
fn estimate_reads_cli_output_round_trip() {
    // returns emitted as CSV by one tool run feed the estimator
    let dir = tempfile::tempdir().unwrap();
    let returns = dir.path().join("returns.csv");
    let mut body = String::from("return\n");
    for i in 0..400 {
        let x = ((i * 37) % 101) as f64 / 101.0 - 0.5;
        body.push_str(&format!("{}\n", 0.04 * x + if i % 50 == 0 { -0.2 } else { 0.0 }));
    }
    std::fs::write(&returns, body).unwrap();
    let text = stdout(&["estimate", "--input", returns.to_str().unwrap(), "--output", "csv"]);
    let n: usize = column(&text, "estimate", "n_observations")[0].parse().unwrap();
    assert_eq!(n, 400);
    let alpha: f64 = column(&text, "estimate", "alpha")[0].parse().unwrap();
    assert!(alpha > 0.0);
}

#[test]
fn every_numeric_csv_table_reloads() {
    let cases: [&[&str]; 5] = [
        &[
            "single", "--mu", "0.004", "--sigma", "0.1", "--alpha", "0.02", "--etl", "0.1",
        ],
        &["scenario"],
        &["frontier"],
        &[
            "simulate",
            "--mu",
            "0.004",
            "--sigma",
            "0.1",
            "--paths",
            "200",
            "--periods",
            "50",
        ],
        &[
            "parity",
            "--premiums",
            "0.05,0.03",
            "--sigmas",
            "0.2,0.1",
            "--correlation",
            "1,0.3,0.3,1",
        ],
    ];
    for args in cases {
        let text = stdout(&[args, &["--output", "csv"]].concat());
        for block in text.split("\n\n") {
            let (name, body) = block.split_once('\n').unwrap();
            assert!(name.starts_with("# "));
            let mut r = csv::ReaderBuilder::new().from_reader(body.as_bytes());
            let width = r.headers().unwrap().len();
            for rec in r.records() {
                let rec = rec.unwrap();
                assert_eq!(rec.len(), width);
                for field in rec.iter() {
                    let numeric = field.parse::<f64>().is_ok();
                    let other = field.is_empty()
                        || field.parse::<bool>().is_ok()
                        || field.chars().any(|c| c.is_alphabetic() && c != 'e');
                    assert!(numeric || other, "{field:?} in {name}");
                }
            }
        }
    }
}

#[test]
fn example_config_runs_every_command() {
    let cfg = concat!(env!("CARGO_MANIFEST_DIR"), "/../../configs/example.toml");
    for command in ["single", "sweep", "parity", "scenario", "frontier"] {
        let text = stdout(&["--config", cfg, command]);
        assert!(text.starts_with("# "), "{command}: {text}");
    }
    let text = stdout(&["--config", cfg, "simulate", "--paths", "200", "--periods", "100"]);
    assert_eq!(column(&text, "crossover", "n_periods"), ["1", "10", "100", "1000"]);
    // the estimate section points at a relative file that does not exist here
    assert_eq!(code(&["--config", cfg, "estimate"]), 4);
}
