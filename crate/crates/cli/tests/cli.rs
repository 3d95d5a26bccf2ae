use std::path::Path;
use std::process::{Command, Output};

fn mmlab(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_mmlab")).current_dir(dir).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn json(o: &Output) -> serde_json::Value {
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    serde_json::from_str(stdout(o).trim()).unwrap()
}

const SMALL_RUN: &str = r#"
name = "small"
paths = 64
seed = 3
t_max = 2.0
grid = [0.0, 0.25, 0.5, 0.75, 1.0, 1.5, 2.0]
tightness_h = [0.01, 0.02, 0.04]
mixing_times = [0.5, 1.0, 2.0]

[[sequence]]
kind = "model"
family = "circle"
n = 16

[[sequence]]
kind = "model"
family = "circle"
n = 24

[[sequence]]
kind = "model"
family = "circle"
n = 32

[[sequence]]
kind = "model"
family = "circle"
n = 48

[[sequence]]
kind = "model"
family = "circle"
n = 96
"#;

#[test]
fn space_distance_and_heat() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    let built = json(&mmlab(d, &["build-space", "--family", "circle", "--n", "32", "-o", "a.txt"]));
    assert_eq!(built["points"], 32);
    json(&mmlab(d, &["build-space", "--family", "circle", "--n", "32", "-o", "b.txt"]));

    let w2 = json(&mmlab(d, &["distance", "a.txt", "b.txt"]));
    assert!(w2["w2"].as_f64().unwrap().abs() < 1e-12);
    let hd = json(&mmlab(d, &["distance", "a.txt", "b.txt", "--kind", "hausdorff"]));
    assert_eq!(hd["hausdorff"].as_f64().unwrap(), 0.0);

    let first = json(&mmlab(d, &["heat", "a.txt", "--cache", "a.spec", "--show", "3"]));
    assert!(d.join("a.spec").exists());
    let cached = json(&mmlab(d, &["heat", "a.txt", "--cache", "a.spec", "--show", "3"]));
    assert_eq!(first, cached);
    assert_eq!(first["eigenvalues"][0].as_f64().unwrap(), 0.0);

    let bad = mmlab(d, &["distance", "a.txt", "b.txt", "--kind", "nonsense"]);
    assert_eq!(bad.status.code(), Some(2));
    let missing = mmlab(d, &["heat", "missing.txt"]);
    assert_eq!(missing.status.code(), Some(2));
}

#[test]
fn simulate_is_reproducible() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json(&mmlab(d, &["build-space", "--family", "interval", "--n", "16", "-o", "s.txt"]));
    let a = json(&mmlab(d, &["simulate", "s.txt", "--paths", "20", "--seed", "5", "--grid", "0:0.5:2", "-o", "p1"]));
    let b = json(&mmlab(d, &["simulate", "s.txt", "--paths", "20", "--seed", "5", "--grid", "0,0.5,1,1.5,2", "-o", "p2"]));
    assert_eq!(a["digest"], b["digest"]);
    assert_eq!(std::fs::read(d.join("p1")).unwrap(), std::fs::read(d.join("p2")).unwrap());
}

#[test]
fn extension_keeps_domain_values() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    json(&mmlab(d, &["build-space", "--family", "interval", "--n", "11", "-o", "s.txt"]));
    std::fs::write(d.join("f.json"), r#"{"domain":[0,5,10],"values":[0.0,0.5,0.25],"alpha":0.5,"h":2.0}"#).unwrap();
    let o = mmlab(d, &["extend", "s.txt", "--input", "f.json"]);
    assert!(o.status.success());
    let values: Vec<f64> = stdout(&o).lines().map(|l| l.parse().unwrap()).collect();
    assert_eq!(values.len(), 11);
    assert_eq!((values[0], values[5], values[10]), (0.0, 0.5, 0.25));

    // Data violating the stated constant is rejected.
    std::fs::write(d.join("g.json"), r#"{"domain":[0,10],"values":[0.0,5.0],"alpha":1.0,"h":1.0}"#).unwrap();
    assert_eq!(mmlab(d, &["extend", "s.txt", "--input", "g.json"]).status.code(), Some(2));
}

#[test]
fn run_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    let d = dir.path();
    std::fs::write(d.join("run.toml"), SMALL_RUN).unwrap();
    let o = mmlab(d, &["run", "run.toml", "--out", "out", "--seed", "4"]);
    assert!(o.status.success(), "stderr: {}", String::from_utf8_lossy(&o.stderr));
    assert!(stdout(&o).starts_with("index,label,points,d_upper"));
    for f in ["report.csv", "report.json", "d_upper.dat", "fdd_distance.dat"] {
        assert!(d.join("out").join(f).exists(), "{f} missing");
    }
    let v = mmlab(d, &["verify", "out/report.json"]);
    let text = stdout(&v);
    assert!(text.contains("forward: ") && text.contains("backward: ") && text.contains("corollary: "));
    assert_eq!(v.status.success(), !text.contains("FAIL") && !text.contains("ERROR"));

    let bad = mmlab(d, &["run", "run.toml", "--paths", "0"]);
    assert_eq!(bad.status.code(), Some(2));
}
