//! End-to-end runs of the `letc` binary: exit codes, file outputs,
//! determinism of stdout, and manifest round trips.

use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn letc() -> Command {
    Command::new(env!("CARGO_BIN_EXE_letc"))
}

fn run(args: &[&str]) -> Output {
    letc().args(args).output().expect("binary runs")
}

fn stdout(out: &Output) -> String {
    String::from_utf8_lossy(&out.stdout).to_string()
}

fn stderr(out: &Output) -> String {
    String::from_utf8_lossy(&out.stderr).to_string()
}

fn temp_dir(tag: &str) -> PathBuf {
    let dir = std::env::temp_dir().join(format!("letc-cli-{}-{tag}", std::process::id()));
    let _ = fs::remove_dir_all(&dir);
    fs::create_dir_all(&dir).unwrap();
    dir
}

/// Generates a small dataset once and returns its directory.
fn generated_dataset(tag: &str) -> PathBuf {
    let dir = temp_dir(tag);
    let out = run(&[
        "generate",
        "--locations", "14",
        "--intervals-per-day", "12",
        "--days", "4",
        "--period", "2",
        "--noise-sd", "0.5",
        "--seed", "3",
        "--out", dir.to_str().unwrap(),
    ]);
    assert!(out.status.success(), "generate failed: {}", stderr(&out));
    dir
}

fn count_lines(path: &Path) -> usize {
    fs::read_to_string(path).unwrap().lines().count()
}

#[test]
fn generate_writes_the_dataset_files() {
    let dir = generated_dataset("gen");
    assert!(dir.join("values.csv").exists());
    assert!(dir.join("graph.csv").exists());
    assert!(dir.join("truth.csv").exists());
    assert!(dir.join("manifest.txt").exists());
    // Header plus one row per time point.
    assert_eq!(count_lines(&dir.join("values.csv")), 1 + 12 * 4);
}

#[test]
fn krige_round_trip_succeeds_with_matching_shape() {
    let data = generated_dataset("krige");
    let out_dir = temp_dir("krige-out");
    let out = run(&[
        "krige",
        "--values", data.join("values.csv").to_str().unwrap(),
        "--graph", data.join("graph.csv").to_str().unwrap(),
        "--intervals-per-day", "12",
        "--period", "2",
        "--threads", "2",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let estimate = out_dir.join("estimate.csv");
    assert_eq!(count_lines(&estimate), 1 + 12 * 4, "row count preserved");
    let header = fs::read_to_string(&estimate).unwrap();
    assert_eq!(header.lines().next().unwrap().split(',').count(), 14);
    assert!(out_dir.join("diagnostics.txt").exists());
    assert!(out_dir.join("manifest.txt").exists());
    assert!(stdout(&out).contains("converged"));
}

#[test]
fn krige_missing_file_exits_one_naming_the_path() {
    let out = run(&[
        "krige",
        "--values", "/nonexistent/values.csv",
        "--graph", "/nonexistent/graph.csv",
        "--intervals-per-day", "12",
    ]);
    assert_eq!(out.status.code(), Some(1));
    assert!(
        stderr(&out).contains("/nonexistent/values.csv"),
        "stderr should name the path: {}",
        stderr(&out)
    );
}

#[test]
fn krige_non_convergence_exits_two_with_outputs() {
    let data = generated_dataset("hard");
    // Blank a third of the cells so there is something left to infer;
    // a single iteration cannot settle the estimate then.
    let values_path = data.join("values.csv");
    let text = fs::read_to_string(&values_path).unwrap();
    let mut lines = text.lines();
    let header = lines.next().unwrap().to_string();
    let mut rewritten = vec![header];
    for (r, line) in lines.enumerate() {
        let row: Vec<String> = line
            .split(',')
            .enumerate()
            .map(|(c, cell)| {
                if (r + 2 * c) % 3 == 0 {
                    String::new()
                } else {
                    cell.to_string()
                }
            })
            .collect();
        rewritten.push(row.join(","));
    }
    fs::write(&values_path, rewritten.join("\n")).unwrap();

    let out_dir = temp_dir("hard-out");
    let out = run(&[
        "krige",
        "--values", values_path.to_str().unwrap(),
        "--graph", data.join("graph.csv").to_str().unwrap(),
        "--intervals-per-day", "12",
        "--period", "2",
        "--max-iters", "1",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(2), "stderr: {}", stderr(&out));
    assert!(out_dir.join("estimate.csv").exists(), "partial output still written");
    assert!(stdout(&out).contains("NOT converged"));
}

#[test]
fn krige_rerun_from_manifest_is_bit_identical() {
    let data = generated_dataset("manifest");
    let first = temp_dir("manifest-first");
    let out = run(&[
        "krige",
        "--values", data.join("values.csv").to_str().unwrap(),
        "--graph", data.join("graph.csv").to_str().unwrap(),
        "--intervals-per-day", "12",
        "--period", "2",
        "--seed", "42",
        "--lambda1", "0.02",
        "--out", first.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));

    let second = temp_dir("manifest-second");
    let out = run(&[
        "krige",
        "--values", data.join("values.csv").to_str().unwrap(),
        "--graph", data.join("graph.csv").to_str().unwrap(),
        "--intervals-per-day", "12",
        "--config", first.join("manifest.txt").to_str().unwrap(),
        "--out", second.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert_eq!(
        fs::read_to_string(first.join("estimate.csv")).unwrap(),
        fs::read_to_string(second.join("estimate.csv")).unwrap(),
        "manifest rerun must reproduce the estimate bit for bit"
    );
}

#[test]
fn evaluate_prints_deterministic_table_with_repeats() {
    let data = generated_dataset("eval");
    let values = data.join("values.csv");
    let graph = data.join("graph.csv");
    let args = [
        "evaluate",
        "--values", values.to_str().unwrap(),
        "--graph", graph.to_str().unwrap(),
        "--intervals-per-day", "12",
        "--sm", "0.2",
        "--tm", "0.1",
        "--em", "0.1",
        "--seed", "9",
        "--repeats", "3",
        "--period", "2",
        "--max-iters", "10",
    ];
    let first = run(&args);
    assert_eq!(first.status.code(), Some(0), "stderr: {}", stderr(&first));
    let second = run(&args);
    assert_eq!(stdout(&first), stdout(&second), "stdout must be reproducible");
    let text = stdout(&first);
    // Header + 3 repeat rows + summary section.
    assert_eq!(text.lines().filter(|l| l.starts_with("SM0.20")).count(), 3);
    assert!(text.contains("summary:"));
    assert!(text.lines().next().unwrap().ends_with("iters"), "no timing column on stdout");
}

#[test]
fn evaluate_zero_rates_reports_empty_holdout() {
    let data = generated_dataset("eval0");
    let out = run(&[
        "evaluate",
        "--values", data.join("values.csv").to_str().unwrap(),
        "--graph", data.join("graph.csv").to_str().unwrap(),
        "--intervals-per-day", "12",
        "--sm", "0",
        "--tm", "0",
        "--em", "0",
        "--period", "2",
        "--max-iters", "5",
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let text = stdout(&out);
    let row = text.lines().nth(1).unwrap();
    // Metric cells stay empty when nothing is held out.
    assert!(row.contains(",,"), "expected absent metrics in: {row}");
}

#[test]
fn evaluate_invalid_rate_exits_one() {
    let data = generated_dataset("evalbad");
    let out = run(&[
        "evaluate",
        "--values", data.join("values.csv").to_str().unwrap(),
        "--graph", data.join("graph.csv").to_str().unwrap(),
        "--intervals-per-day", "12",
        "--sm", "1.4",
    ]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn evaluate_grid_writes_results_table() {
    let data = generated_dataset("grid");
    let out_dir = temp_dir("grid-out");
    let out = run(&[
        "evaluate",
        "--values", data.join("values.csv").to_str().unwrap(),
        "--graph", data.join("graph.csv").to_str().unwrap(),
        "--intervals-per-day", "12",
        "--sm", "0.2",
        "--tm", "0.1",
        "--em", "0.1",
        "--tau-grid", "1,2",
        "--period", "2",
        "--max-iters", "8",
        "--out", out_dir.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    let table = fs::read_to_string(out_dir.join("results.csv")).unwrap();
    assert_eq!(
        table.lines().next().unwrap(),
        "scenario,seed,lambda1,lambda2,tau,mae,rmse,wmape,iters,seconds"
    );
    assert_eq!(table.lines().count(), 1 + 2, "two grid cells");
}

#[test]
fn unknown_flag_exits_one() {
    let out = run(&["krige", "--does-not-exist"]);
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn selftest_passes_and_lists() {
    let out = run(&["selftest", "--list"]);
    assert_eq!(out.status.code(), Some(0));
    assert!(stdout(&out).contains("svt:"));

    let out = run(&["selftest"]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(stdout(&out).contains("all 5 checks passed"));
}

#[test]
fn selftest_fault_injection_exits_three_naming_the_check() {
    let out = run(&["selftest", "--fault", "svt"]);
    assert_eq!(out.status.code(), Some(3));
    assert!(stderr(&out).contains("svt"), "stderr: {}", stderr(&out));

    let out = run(&["selftest", "--fault", "bogus"]);
    assert_eq!(out.status.code(), Some(1), "unknown fault is an input error");
}

#[test]
fn krige_warns_about_neighborless_sensors() {
    let dir = temp_dir("isolated");
    let mut values = String::from("a,b,c\n");
    for r in 0..8 {
        values.push_str(&format!("{},{},{}\n", 50 + r, 60 + r, 55 + r));
    }
    fs::write(dir.join("values.csv"), values).unwrap();
    // Sensor c has no edges at all.
    fs::write(dir.join("graph.csv"), "a,b,1.0\nb,a,1.0\n").unwrap();
    let out = run(&[
        "krige",
        "--values", dir.join("values.csv").to_str().unwrap(),
        "--graph", dir.join("graph.csv").to_str().unwrap(),
        "--intervals-per-day", "4",
        "--period", "2",
        "--sigma", "1.0",
        "--out", dir.join("out").to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(0), "stderr: {}", stderr(&out));
    assert!(
        stderr(&out).contains("no graph neighbors") && stderr(&out).contains('c'),
        "stderr should flag sensor c: {}",
        stderr(&out)
    );
}

#[test]
fn bad_config_file_key_exits_one_with_line() {
    let dir = temp_dir("cfg");
    let cfg = dir.join("bad.cfg");
    fs::write(&cfg, "lambda1 = 0.1\nnot_a_key = 3\n").unwrap();
    let data = generated_dataset("cfgdata");
    let out = run(&[
        "krige",
        "--values", data.join("values.csv").to_str().unwrap(),
        "--graph", data.join("graph.csv").to_str().unwrap(),
        "--intervals-per-day", "12",
        "--config", cfg.to_str().unwrap(),
    ]);
    assert_eq!(out.status.code(), Some(1));
    let err = stderr(&out);
    assert!(err.contains("not_a_key") && err.contains(":2:"), "stderr: {err}");
}
