use std::fs;
use std::process::{Command, Output};

fn thinset(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_thinset")).args(args).output().expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

#[test]
fn gen_powers_three_halves() {
    let o = thinset(&["gen", "--preset", "powers1.5", "--N", "20"]);
    assert!(o.status.success(), "{}", stderr(&o));
    assert_eq!(stdout(&o), "1\n2\n5\n8\n11\n14\n18\n");
}

#[test]
fn gen_from_config_file_matches_preset() {
    let dir = tempfile::tempdir().unwrap();
    let plain = dir.path().join("plain.json");
    let wrapped = dir.path().join("wrapped.json");
    let spec = r#"{"h1":{"family":"pow","c":1.5},"h2":{"family":"pow","c":1.5},"psi":{"kind":"forward_difference","kappa":1.0},"sign":"minus"}"#;
    fs::write(&plain, spec).unwrap();
    fs::write(&wrapped, format!(r#"{{"set": {spec}, "seed": 7, "threads": 2}}"#)).unwrap();
    let a = thinset(&["gen", "--config", plain.to_str().unwrap(), "--N", "20"]);
    let b = thinset(&["gen", "--config", wrapped.to_str().unwrap(), "--N", "20"]);
    assert!(a.status.success() && b.status.success(), "{}{}", stderr(&a), stderr(&b));
    assert_eq!(stdout(&a), "1\n2\n5\n8\n11\n14\n18\n");
    assert_eq!(stdout(&a), stdout(&b));
}

#[test]
fn unknown_family_is_a_config_error() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, r#"{"h1":{"family":"bogus","c":1.5},"h2":{"family":"pow","c":1.5},"psi":{"kind":"derivative","kappa":1.0},"sign":"plus"}"#)
        .unwrap();
    let o = thinset(&["gen", "--config", p.to_str().unwrap(), "--N", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("bogus"), "{}", stderr(&o));
}

#[test]
fn unknown_wrapper_key_is_named() {
    let dir = tempfile::tempdir().unwrap();
    let p = dir.path().join("bad.json");
    fs::write(&p, r#"{"set":{"h1":{"family":"pow","c":1.5},"h2":{"family":"pow","c":1.5},"psi":{"kind":"derivative","kappa":1.0},"sign":"plus"},"sed":1}"#)
        .unwrap();
    let o = thinset(&["gen", "--config", p.to_str().unwrap(), "--N", "20"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(stderr(&o).contains("sed"), "{}", stderr(&o));
}

#[test]
fn missing_input_is_an_io_error() {
    let o = thinset(&["ops", "maximal", "--preset", "pow1.05", "--f", "/nonexistent/f.csv"]);
    assert_eq!(o.status.code(), Some(4));
}

#[test]
fn weaktype_bound_exceeded_exits_three() {
    let args = ["weaktype", "--preset", "pow1.05", "--trials", "2", "--horizon", "16384", "--deltas", "10", "--span", "512", "--seed", "3"];
    let ok = thinset(&args);
    assert!(ok.status.success(), "{}", stderr(&ok));
    let csv = stdout(&ok);
    assert!(csv.starts_with("trial,statistic,l1_norm\n"));
    assert_eq!(csv.lines().count(), 3);
    let mut strict = args.to_vec();
    strict.extend(["--max", "0.5"]);
    assert_eq!(thinset(&strict).status.code(), Some(3));
}

#[test]
fn maximal_writes_csv() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("f.csv");
    let out = dir.path().join("m.csv");
    fs::write(&f, "x,value\n0,1\n").unwrap();
    let o = thinset(&["ops", "maximal", "--preset", "pow1.05", "--f", f.to_str().unwrap(), "--horizon", "256", "--out", out.to_str().unwrap()]);
    assert!(o.status.success(), "{}", stderr(&o));
    let text = fs::read_to_string(&out).unwrap();
    let mut lines = text.lines();
    assert_eq!(lines.next(), Some("x,value"));
    // M_1 delta_0 at x = 1 is 1 since 1 lies in B.
    assert_eq!(lines.next(), Some("1,1"));
}

#[test]
fn suite_quick_is_deterministic_across_runs_and_threads() {
    let a = thinset(&["suite", "--quick"]);
    let b = thinset(&["--threads", "1", "suite", "--quick"]);
    let c = thinset(&["--threads", "3", "suite", "--quick"]);
    assert!(a.status.success(), "{}", stderr(&a));
    assert_eq!(a.stdout, b.stdout);
    assert_eq!(a.stdout, c.stdout);
    let v: serde_json::Value = serde_json::from_slice(&a.stdout).unwrap();
    let ids: Vec<&str> = v.as_array().unwrap().iter().map(|r| r["criterion_id"].as_str().unwrap()).collect();
    let want: Vec<String> = (1..=13).map(|k| format!("C{k}")).collect();
    assert_eq!(ids, want);
    assert!(v.as_array().unwrap().iter().all(|r| r["status"] == "pass"));
}
