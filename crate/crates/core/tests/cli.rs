use std::fs;
use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn data(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("data")
        .join(name)
}

fn dvrft(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_dvrft"))
        .args(args)
        .output()
        .expect("binary runs")
}

fn code(out: &Output) -> i32 {
    out.status.code().expect("exit code")
}

fn s(p: &Path) -> &str {
    p.to_str().unwrap()
}

/// example1.json with node 1's plant replaced.
fn modified_example(dir: &Path, g: &str) -> PathBuf {
    let text = fs::read_to_string(data("example1.json")).unwrap().replacen(
        r#""G": {"num": [1.0], "den": [1.0, -0.5]}"#,
        g,
        1,
    );
    let path = dir.join("net.json");
    fs::write(&path, text).unwrap();
    path
}

#[test]
fn ideal_prints_entries() {
    let out = dvrft(&["ideal", s(&data("example1.json"))]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("(0.4q - 0.2) / (q - 1)"), "{text}");
    assert!(text.contains("C_es[2]"));
}

#[test]
fn validate_reports_json() {
    let out = dvrft(&["validate", s(&data("nine_node.json"))]);
    assert_eq!(code(&out), 0);
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert!(v.get("assumptions").is_some() && v.get("realizability").is_some());
}

#[test]
fn config_errors_exit_2() {
    assert_eq!(code(&dvrft(&["validate", "no/such/file.json"])), 2);
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("bad.json");
    fs::write(&cfg, r#"{"network": "x.json", "colour": 1}"#).unwrap();
    assert_eq!(code(&dvrft(&["run", s(&cfg)])), 2);
    assert_eq!(
        code(&dvrft(&[
            "montecarlo",
            s(&data("example1.json")),
            "--class",
            "spiral"
        ])),
        2
    );
}

#[test]
fn nonminimum_phase_plant_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let net = modified_example(
        dir.path(),
        r#""G": {"num": [1.0, -2.0], "den": [1.0, -0.5, 0.0]}"#,
    );
    let out = dvrft(&["ideal", s(&net)]);
    assert_eq!(code(&out), 4, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn unexciting_data_exits_5() {
    let dir = tempfile::tempdir().unwrap();
    let mut csv = String::from("t,u_1,u_2,y_1,y_2\n");
    for t in 0..40 {
        csv.push_str(&format!("{t},0,0,0,0\n"));
    }
    let path = dir.path().join("data.csv");
    fs::write(&path, csv).unwrap();
    let out = dvrft(&[
        "synthesize",
        s(&data("example1.json")),
        "--data",
        s(&path),
        "--class",
        "full",
    ]);
    assert_eq!(code(&out), 5, "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn run_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    for dir in [&a, &b] {
        let out = dvrft(&["run", s(&data("noise_free.json")), "--out", s(dir.path())]);
        assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    }
    for name in [
        "data.csv",
        "virtual.csv",
        "replicates.csv",
        "summary.csv",
        "traces.csv",
        "controller_full.json",
    ] {
        let x = fs::read(a.path().join(name)).unwrap();
        let y = fs::read(b.path().join(name)).unwrap();
        assert!(!x.is_empty());
        assert_eq!(x, y, "{name} differs between runs");
    }
}

#[test]
fn synthesize_from_generated_data_matches_run() {
    let run = tempfile::tempdir().unwrap();
    let out = dvrft(&["run", s(&data("noise_free.json")), "--out", s(run.path())]);
    assert_eq!(code(&out), 0);

    let gen = tempfile::tempdir().unwrap();
    let net = data("nine_node.json");
    let out = dvrft(&[
        "evaluate",
        s(&net),
        "--generate-data",
        "--seed",
        "7",
        "--sigma-v",
        "0",
        "--out",
        s(gen.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read(gen.path().join("data.csv")).unwrap(),
        fs::read(run.path().join("data.csv")).unwrap()
    );

    let syn = tempfile::tempdir().unwrap();
    let data_csv = gen.path().join("data.csv");
    let out = dvrft(&[
        "synthesize",
        s(&net),
        "--data",
        s(&data_csv),
        "--class",
        "full",
        "--out",
        s(syn.path()),
    ]);
    assert_eq!(code(&out), 0, "{}", String::from_utf8_lossy(&out.stderr));
    assert_eq!(
        fs::read_to_string(syn.path().join("controller_full.json")).unwrap(),
        fs::read_to_string(run.path().join("controller_full.json")).unwrap()
    );
}

#[test]
fn montecarlo_summary_to_stdout() {
    let out = dvrft(&[
        "montecarlo",
        s(&data("nine_node.json")),
        "--runs",
        "2",
        "--grid",
        "32",
        "--class",
        "full",
    ]);
    assert_eq!(code(&out), 0);
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.starts_with("class,runs,failures"));
    assert!(text.lines().nth(1).unwrap().starts_with("full,2,0,"));
}

#[test]
fn identity_reference_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let text = fs::read_to_string(data("example1.json")).unwrap().replace(
        r#""T": {"num": [0.4], "den": [1.0, -0.6]}"#,
        r#""T": {"num": [1.0], "den": [1.0]}"#,
    );
    let net = dir.path().join("net.json");
    fs::write(&net, text).unwrap();
    let out = dvrft(&["validate", s(&net)]);
    assert_eq!(code(&out), 3, "{}", String::from_utf8_lossy(&out.stderr));
}
