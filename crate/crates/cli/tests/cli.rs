use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use halfcert::io;
use halfcert_cli::commands::read_key_values;

fn bin() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_halfcert"));
    c.env_remove("HALFCERT_OUT");
    c
}

fn config(name: &str) -> PathBuf {
    PathBuf::from(env!("CARGO_MANIFEST_DIR"))
        .join("../../configs")
        .join(name)
}

fn run(args: &[&str]) -> Output {
    bin().args(args).output().unwrap()
}

fn code(o: &Output) -> i32 {
    o.status.code().unwrap()
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

fn write_config(dir: &Path, text: &str) -> PathBuf {
    let p = dir.join("test.conf");
    std::fs::write(&p, text).unwrap();
    p
}

#[test]
fn gen_is_deterministic_and_readable() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.csv");
    let b = dir.path().join("b.csv");
    let cfg = config("reference.conf");
    for p in [&a, &b] {
        let o = run(&["gen", "--config", s(&cfg), "--n", "500", "--out", s(p)]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    let text = std::fs::read_to_string(&a).unwrap();
    assert_eq!(text, std::fs::read_to_string(&b).unwrap());
    assert_eq!(text.lines().next().unwrap(), "x1,x2,y");
    let data = io::read_dataset(&a).unwrap();
    assert_eq!(data.len(), 500);
    assert_eq!(data.dim(), 2);
    let meta = io::read_sidecar(&a).unwrap();
    assert_eq!(meta["seed"], "1");
}

#[test]
fn usage_and_runtime_errors_have_distinct_codes() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("reference.conf");
    let out = s(dir.path());

    let o = run(&["certify", "--config", s(&cfg), "--w", "0,0", "--out", out]);
    assert_eq!(code(&o), 2);

    let o = run(&["verify", "--suite", "bogus", "--out", out]);
    assert_eq!(code(&o), 2);

    let o = run(&["gen", "--config", s(&dir.path().join("missing.conf"))]);
    assert_eq!(code(&o), 1);

    let bad = write_config(dir.path(), "[noise]\nalpha = 1.5\n");
    let o = run(&[
        "gen",
        "--config",
        s(&bad),
        "--out",
        s(&dir.path().join("x.csv")),
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("noise.alpha"));

    let unknown = write_config(dir.path(), "[learner]\nbogus = 1\n");
    let o = run(&[
        "gen",
        "--config",
        s(&unknown),
        "--out",
        s(&dir.path().join("x.csv")),
    ]);
    assert_eq!(code(&o), 2);

    let big = write_config(dir.path(), "[marginal]\nd = 20\n[learner]\nk = 10\n");
    let mut w = vec!["0"; 20];
    w[0] = "1";
    let w = w.join(",");
    let o = run(&[
        "certify",
        "--config",
        s(&big),
        "--w",
        &w,
        "--n",
        "10",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 2);
    assert!(String::from_utf8_lossy(&o.stderr).contains("too large"));

    let o = run(&[
        "sweep",
        "--config",
        s(&cfg),
        "--param",
        "learner.k",
        "--values",
        "",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 2);

    let o = run(&[
        "sweep",
        "--config",
        s(&cfg),
        "--param",
        "learner.k",
        "--values",
        "2,x",
        "--out",
        out,
    ]);
    assert_eq!(code(&o), 2);
    assert!(!dir.path().join("sweep_results.csv").exists());
}

#[test]
fn certify_separates_target_from_rotated_candidate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("reference.conf");

    let o = run(&[
        "certify",
        "--config",
        s(&cfg),
        "--w",
        "0,1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    let line = String::from_utf8_lossy(&o.stdout);
    assert!(line.starts_with("feasible"), "{line}");
    let report = read_key_values(&dir.path().join("certify_report.csv")).unwrap();
    assert_eq!(report["status"], "feasible");
    let first = std::fs::read(dir.path().join("certificate.csv")).unwrap();
    let cert = io::read_certificate(&dir.path().join("certificate.csv")).unwrap();
    assert_eq!(cert.basis.len(), 15);

    let o = run(&[
        "certify",
        "--config",
        s(&cfg),
        "--w",
        "0,1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    assert_eq!(
        first,
        std::fs::read(dir.path().join("certificate.csv")).unwrap()
    );

    let o = run(&[
        "certify",
        "--config",
        s(&cfg),
        "--w",
        "-0.29552020666133955,0.955336489125606",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    assert!(String::from_utf8_lossy(&o.stdout).starts_with("infeasible"));
}

#[test]
fn certify_reads_a_generated_dataset() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("reference.conf");
    let data = dir.path().join("data.csv");
    assert_eq!(
        code(&run(&[
            "gen",
            "--config",
            s(&cfg),
            "--n",
            "40000",
            "--out",
            s(&data)
        ])),
        0
    );
    let o = run(&[
        "certify",
        "--config",
        s(&cfg),
        "--w",
        "0,1",
        "--data",
        s(&data),
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0);
    let report = read_key_values(&dir.path().join("certify_report.csv")).unwrap();
    assert_eq!(report["holdout_n"], "20000");
}

#[test]
fn output_directory_falls_back_to_environment() {
    let dir = tempfile::tempdir().unwrap();
    let o = bin()
        .args(["verify", "--suite", "chebyshev"])
        .env("HALFCERT_OUT", dir.path())
        .output()
        .unwrap();
    assert_eq!(code(&o), 0);
    let rows = io::read_checks(&dir.path().join("verify_chebyshev.csv")).unwrap();
    assert!(!rows.is_empty() && rows.iter().all(|r| r.holds));
}

#[test]
fn learn_writes_reproducible_outputs() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    let cfg = config("zero_noise.conf");
    for d in [&a, &b] {
        let o = run(&["learn", "--config", s(&cfg), "--out", s(d.path())]);
        assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    }
    for f in ["trace.csv", "model.csv", "summary.csv"] {
        let x = std::fs::read(a.path().join(f)).unwrap();
        assert_eq!(x, std::fs::read(b.path().join(f)).unwrap(), "{f}");
    }
    let summary = read_key_values(&a.path().join("summary.csv")).unwrap();
    assert_eq!(summary["status"], "certificate_failed_accept");
    let angle: f64 = summary["final_angle"].parse().unwrap();
    assert!(angle <= 0.1, "{angle}");
    let model = io::read_model(&a.path().join("model.csv")).unwrap();
    let norm = model.iter().map(|x| x * x).sum::<f64>().sqrt();
    assert!((norm - 1.0).abs() < 1e-12);
    assert!(!io::read_trace(&a.path().join("trace.csv"))
        .unwrap()
        .is_empty());
}

#[test]
fn sweep_writes_one_row_per_value_and_replicate() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = config("reference.conf");
    let o = run(&[
        "sweep",
        "--config",
        s(&cfg),
        "--param",
        "learner.k",
        "--values",
        "2,3,4,5",
        "--replicates",
        "2",
        "--w",
        "0,1",
        "--out",
        s(dir.path()),
    ]);
    assert_eq!(code(&o), 0, "{}", String::from_utf8_lossy(&o.stderr));
    let text = std::fs::read_to_string(dir.path().join("sweep_results.csv")).unwrap();
    let mut lines = text.lines();
    assert!(lines.next().unwrap().starts_with("param,value,replicate"));
    assert_eq!(lines.count(), 8);
    let plot = std::fs::read_to_string(dir.path().join("sweep_holdout_objective.csv")).unwrap();
    assert_eq!(plot.lines().next().unwrap(), "x,mean,stderr");
    assert_eq!(plot.lines().count(), 5);
}
