use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;

const BIN: &str = env!("CARGO_BIN_EXE_dilation-lab");

fn instance(name: &str) -> PathBuf {
    Path::new(env!("CARGO_MANIFEST_DIR")).join("../../instances").join(name)
}

fn lab(args: &[&str]) -> Output {
    Command::new(BIN).args(args).output().expect("run dilation-lab")
}

fn lab_path(sub: &str, path: &Path, extra: &[&str]) -> Output {
    let mut cmd = Command::new(BIN);
    cmd.arg(sub).arg(path).args(extra);
    cmd.output().expect("run dilation-lab")
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn stdout_json(o: &Output) -> Value {
    serde_json::from_slice(&o.stdout).expect("report on stdout")
}

#[test]
fn validate_and_dilate_scalar_pair() {
    let v = lab_path("validate", &instance("scalar_pair.json"), &[]);
    assert_eq!(code(&v), 0);
    assert_eq!(stdout_json(&v)["verdicts"]["valid"], true);

    let d = lab_path("dilate", &instance("scalar_pair.json"), &[]);
    assert_eq!(code(&d), 0);
    let r = stdout_json(&d);
    assert_eq!(r["verdicts"]["dilatable"], true);
    assert_eq!(r["verdicts"]["dilation_verified"], true);
    for c in r["checks"].as_array().unwrap() {
        assert_eq!(c["pass"], true, "{c}");
    }
}

#[test]
fn nilpotent_pair_fails_ns_and_does_not_dilate() {
    let c = lab_path("check", &instance("nilpotent_pair.json"), &[]);
    assert_eq!(code(&c), 0);
    let r = stdout_json(&c);
    assert_eq!(r["verdicts"]["satisfies_NS"], false);
    let min = r["hypotheses"]["ns_min_eigenvalue"].as_f64().unwrap();
    assert!((min + 1.0).abs() < 1e-12, "{min}");

    let d = lab_path("dilate", &instance("nilpotent_pair.json"), &[]);
    assert_eq!(code(&d), 3);
    let r = stdout_json(&d);
    assert_eq!(r["verdicts"]["dilatable"], false);
    assert!(r["window"]["psd_margin"].as_f64().unwrap() < -0.1);
}

#[test]
fn unitary_and_multiplication_instances_dilate() {
    let u = lab_path("dilate", &instance("unitary_scalar.json"), &[]);
    assert_eq!(code(&u), 0);
    assert_eq!(stdout_json(&u)["window"]["dilation_dim"], 1);
    let m = lab_path("dilate", &instance("multiplication_isometric.json"), &[]);
    assert_eq!(code(&m), 0);
    assert_eq!(stdout_json(&m)["window"]["dilation_dim"], 2);
}

#[test]
fn malformed_and_missing_inputs_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let bad = dir.path().join("bad.json");
    std::fs::write(&bad, "{ \"algebra\": ").unwrap();
    let o = lab_path("validate", &bad, &[]);
    assert_eq!(code(&o), 2);
    assert!(!o.stderr.is_empty());

    let unknown = dir.path().join("unknown.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(instance("scalar_pair.json")).unwrap()).unwrap();
    v["surprise"] = Value::Bool(true);
    std::fs::write(&unknown, v.to_string()).unwrap();
    assert_eq!(code(&lab_path("validate", &unknown, &[])), 2);

    assert_eq!(code(&lab_path("validate", &dir.path().join("absent.json"), &[])), 2);
}

#[test]
fn negative_gram_is_invalid_and_named() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("neg.json");
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(instance("scalar_pair.json")).unwrap()).unwrap();
    v["generators"][0]["gram"][0][0][0][0] = serde_json::json!(-1.0);
    std::fs::write(&path, v.to_string()).unwrap();
    let o = lab_path("validate", &path, &[]);
    assert_eq!(code(&o), 1);
    let r = stdout_json(&o);
    assert_eq!(r["verdicts"]["valid"], false);
    let failing: Vec<&str> = r["validation"]
        .as_array()
        .unwrap()
        .iter()
        .filter(|c| c["pass"] == false)
        .map(|c| c["name"].as_str().unwrap())
        .collect();
    assert!(!failing.is_empty());
    let stderr = String::from_utf8_lossy(&o.stderr);
    assert!(failing.iter().any(|n| stderr.contains(n)), "{stderr}");
}

#[test]
fn gen_is_deterministic_and_rejects_unknown_families() {
    let a = lab(&["gen", "--family", "random-contractive", "--seed", "5", "--dims", "3"]);
    let b = lab(&["gen", "--family", "random-contractive", "--seed", "5", "--dims", "3"]);
    let c = lab(&["gen", "--family", "random-contractive", "--seed", "6", "--dims", "3"]);
    assert_eq!(code(&a), 0);
    assert_eq!(a.stdout, b.stdout);
    assert_ne!(a.stdout, c.stdout);
    assert_eq!(stdout_json(&a)["representation"]["H_dim"], 3);

    let o = lab(&["gen", "--family", "no-such-family"]);
    assert_eq!(code(&o), 2);
}

#[test]
fn generated_instance_roundtrips_through_validate() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("g.json");
    let g = lab(&["gen", "--family", "diagonal-doubly-commuting", "--seed", "1", "--dims", "2,1"]);
    std::fs::write(&path, &g.stdout).unwrap();
    let c = lab_path("check", &path, &["--L", "2,2"]);
    assert_eq!(code(&c), 0);
    let r = stdout_json(&c);
    assert_eq!(r["verdicts"]["doubly_commuting"], true);
    assert_eq!(r["verdicts"]["satisfies_NS"], true);
}

#[test]
fn verify_against_reference_reports() {
    let dir = tempfile::tempdir().unwrap();
    let reference = dir.path().join("ref.json");
    let inst = instance("scalar_pair.json");
    let o = lab_path("dilate", &inst, &["--out", reference.to_str().unwrap()]);
    assert_eq!(code(&o), 0);
    assert!(o.stdout.is_empty());

    let ok = lab(&["verify", inst.to_str().unwrap(), "--report", reference.to_str().unwrap()]);
    assert_eq!(code(&ok), 0, "{}", String::from_utf8_lossy(&ok.stderr));

    let original: Value = serde_json::from_str(&std::fs::read_to_string(&reference).unwrap()).unwrap();

    // a small drift within ten tolerances only warns
    let mut drifted = original.clone();
    let margin = drifted["window"]["psd_margin"].as_f64().unwrap();
    let psd_tol = drifted["parameters"]["tolerances"]["psd"].as_f64().unwrap();
    drifted["window"]["psd_margin"] = serde_json::json!(margin + 5.0 * psd_tol);
    let path = dir.path().join("drifted.json");
    std::fs::write(&path, drifted.to_string()).unwrap();
    let w = lab(&["verify", inst.to_str().unwrap(), "--report", path.to_str().unwrap()]);
    assert_eq!(code(&w), 0);
    assert!(String::from_utf8_lossy(&w.stderr).contains("warning"));

    let mut tampered = original.clone();
    tampered["verdicts"]["dilatable"] = Value::Bool(false);
    let path = dir.path().join("tampered.json");
    std::fs::write(&path, tampered.to_string()).unwrap();
    let t = lab(&["verify", inst.to_str().unwrap(), "--report", path.to_str().unwrap()]);
    assert_eq!(code(&t), 5);
    assert!(String::from_utf8_lossy(&t.stderr).contains("dilatable"));
}

#[test]
fn reports_are_identical_apart_from_timing() {
    let run = || {
        let o = lab_path("dilate", &instance("multiplication_isometric.json"), &["--M", "2,2"]);
        assert_eq!(code(&o), 0);
        let mut v = stdout_json(&o);
        v.as_object_mut().unwrap().remove("timing");
        serde_json::to_string(&v).unwrap()
    };
    assert_eq!(run(), run());
}

#[test]
fn thread_count_does_not_change_the_report() {
    let run = |threads: &str| {
        let o = Command::new(BIN)
            .env("DILATION_LAB_THREADS", threads)
            .arg("dilate")
            .arg(instance("scalar_pair.json"))
            .output()
            .unwrap();
        let mut v = stdout_json(&o);
        v.as_object_mut().unwrap().remove("timing");
        v
    };
    assert_eq!(run("1"), run("3"));
}
