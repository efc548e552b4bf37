use std::path::PathBuf;
use std::process::{Command, Output};

fn fixture(name: &str) -> String {
    PathBuf::from(env!("CARGO_MANIFEST_DIR")).join("tests/fixtures").join(name).display().to_string()
}

fn run(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_wealth-target")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

#[test]
fn feasibility_prints_solved_parameter() {
    let m = fixture("market.json");
    let o = run(&["feasibility", "--market", &m, "--dist", "lognormal", "--x0", "1"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let line = stdout(&o).lines().find(|l| l.starts_with("solved b")).unwrap().to_string();
    let b: f64 = line.split_whitespace().last().unwrap().parse().unwrap();
    assert!((b - 0.16).abs() < 1e-10);

    let o = run(&["feasibility", "--market", &m, "--dist", "lognormal", "--x0", "1", "--format", "structured"]);
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["feasible"], true);
}

#[test]
fn refusals_exit_with_two() {
    let m = fixture("market.json");
    let o = run(&["infer", "--market", &m, "--dist", &fixture("whole_line.json"), "--x0", "1", "--mode", "forward"]);
    assert_eq!(o.status.code(), Some(2));
    let err = String::from_utf8_lossy(&o.stderr);
    assert!(err.contains("inadmissible"), "{err}");

    let o = run(&["feasibility", "--market", &m, "--dist", "lognormal", "--x0", "0.9"]);
    assert_eq!(o.status.code(), Some(2));
    let o = run(&[
        "infer", "--market", &m, "--dist", &fixture("markers.json"), "--x0", "1", "--mode", "intermediate",
        "--target-time", "0.5",
    ]);
    assert_eq!(o.status.code(), Some(2));
}

#[test]
fn faults_exit_with_one() {
    let o = run(&["feasibility", "--market", "/nonexistent/market.json", "--dist", "lognormal", "--x0", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["feasibility", "--market", &fixture("bad_market.json"), "--dist", "lognormal", "--x0", "1"]);
    assert_eq!(o.status.code(), Some(1));
    let o = run(&["feasibility", "--market", &fixture("market.json"), "--dist", "no-such-file.json", "--x0", "1"]);
    assert_eq!(o.status.code(), Some(1));
}

#[test]
fn simulation_output_is_byte_identical() {
    let m = fixture("market.json");
    let args = [
        "simulate", "--market", &m, "--dist", "lognormal", "--x0", "1", "--paths", "2000", "--dt", "0.005", "--seed",
        "9", "--format", "structured",
    ];
    let a = run(&args);
    assert_eq!(a.status.code(), Some(0), "{}", String::from_utf8_lossy(&a.stderr));
    let b = run(&args);
    assert_eq!(a.stdout, b.stdout);

    let dir = std::env::temp_dir().join(format!("wealth-target-cli-{}", std::process::id()));
    std::fs::create_dir_all(&dir).unwrap();
    let out = dir.join("paths.csv");
    let o = run(&[
        "simulate", "--market", &m, "--dist", "lognormal:0.16", "--x0", "1", "--paths", "1000", "--dt", "0.01",
        "--seed", "1", "--format", "csv", "--out", out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(&out).unwrap();
    assert!(text.starts_with("time,path,wealth,portfolio_norm,deflator\n"));
    std::fs::remove_dir_all(&dir).unwrap();
}

#[test]
fn infer_and_builder_demo() {
    let m = fixture("market.json");
    let o = run(&["infer", "--market", &m, "--dist", "lognormal", "--x0", "1", "--mode", "forward", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["measure"]["atoms"].as_array().unwrap().len(), 1);

    let o = run(&["infer", "--market", &m, "--dist", "lognormal", "--x0", "1", "--format", "csv"]);
    assert!(stdout(&o).starts_with("x,marginal_utility\n"));

    let o = run(&["builder-demo", "--seed", "4", "--format", "structured"]);
    assert_eq!(o.status.code(), Some(0));
    let v: serde_json::Value = serde_json::from_slice(&o.stdout).unwrap();
    assert_eq!(v["session"]["status"], "realized");
    let frac = v["session"]["cost_fraction"].as_f64().unwrap();
    assert!((0.99..=1.0).contains(&frac));
}
