use std::process::Command;

use iprox_bench::TraceFile;

fn iprox() -> Command {
    Command::new(env!("CARGO_BIN_EXE_iprox"))
}

#[test]
fn gen_then_solve_writes_traces() {
    let dir = tempfile::tempdir().unwrap();
    let data = dir.path().join("reg.csv");
    let status = iprox()
        .args(["gen", "robust-oscar", "--n", "80", "--d", "10", "--out"])
        .arg(&data)
        .status()
        .unwrap();
    assert!(status.success());

    let out = dir.path().join("trace.csv");
    let status = iprox()
        .args(["solve", "--loss", "correntropy", "--reg", "oscar", "--solver", "pg", "--solver", "nmaipg"])
        .args(["--max-iters", "25", "--data"])
        .arg(&data)
        .arg("--out")
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    let trace = TraceFile::read(&out).unwrap();
    assert_eq!(trace.runs(), vec!["pg", "nmaipg"]);
    assert_eq!(trace.rows_for("pg").count(), 26);
}

#[test]
fn bench_runs_generated_problem() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("trace.csv");
    let status = iprox()
        .args(["bench", "lasso-baseline", "--solver", "apg", "--solver", "aipg", "--eps", "const:1e-6"])
        .args(["--max-iters", "20", "--out"])
        .arg(&out)
        .status()
        .unwrap();
    assert!(status.success());
    assert_eq!(TraceFile::read(&out).unwrap().rows.len(), 42);
}

#[test]
fn bad_arguments_exit_with_code_two() {
    let status = iprox()
        .args(["bench", "robust-oscar", "--solver", "pg", "--eps", "poly:oops", "--out", "x.csv"])
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
    let status = iprox().args(["solve", "--data", "/nonexistent.csv", "--loss", "square", "--reg", "l1", "--solver", "pg"]).status().unwrap();
    assert_eq!(status.code(), Some(2));
}
