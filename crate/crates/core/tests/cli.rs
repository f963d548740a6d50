use std::path::Path;
use std::process::{Command, Output};

use fibsic::io::{report_path, FiducialFile, RunReport};

fn fibsic(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fibsic"))
        .args(args)
        .output()
        .expect("run fibsic")
}

fn stdout(o: &Output) -> String {
    String::from_utf8_lossy(&o.stdout).into_owned()
}

fn stderr(o: &Output) -> String {
    String::from_utf8_lossy(&o.stderr).into_owned()
}

fn code(o: &Output) -> i32 {
    o.status.code().expect("exit code")
}

fn path_str(p: &Path) -> &str {
    p.to_str().unwrap()
}

#[test]
fn help_and_usage_errors() {
    assert_eq!(code(&fibsic(&["--help"])), 0);
    assert_eq!(code(&fibsic(&[])), 1);
    assert_eq!(code(&fibsic(&["frobnicate"])), 1);
    assert_eq!(code(&fibsic(&["dims", "--k-max", "0"])), 1);
    assert_eq!(code(&fibsic(&["search", "--dim", "4", "--k", "1"])), 1);
}

#[test]
fn dims_table() {
    let o = fibsic(&["dims", "--k-max", "1"]);
    assert_eq!(code(&o), 0);
    let text = stdout(&o);
    let row = text.lines().nth(1).unwrap();
    let fields: Vec<&str> = row.split_whitespace().collect();
    assert_eq!(fields, ["1", "4", "1", "-", "6"]);

    let o = fibsic(&["dims", "--k-max", "5"]);
    let last = stdout(&o).lines().last().unwrap().to_string();
    assert!(last.split_whitespace().nth(1) == Some("124"), "{last}");
}

#[test]
fn symmetry_subcommand() {
    let o = fibsic(&["symmetry", "--k", "5"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("order        30"), "{}", stdout(&o));

    let o = fibsic(&["symmetry", "--k", "4", "--power", "8", "--classify"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("appleby_Fa"), "{}", stdout(&o));

    let o = fibsic(&["symmetry", "--k", "3", "--power", "6", "--conjugate-to", "fz"]);
    assert_eq!(code(&o), 0);
    assert!(stdout(&o).contains("conjugator   G ="), "{}", stdout(&o));

    let o = fibsic(&["symmetry", "--dim", "4", "--matrix", "1,1,1,1"]);
    assert_eq!(code(&o), 1);
    assert!(stderr(&o).starts_with("error:"));

    assert_eq!(code(&fibsic(&["symmetry", "--dim", "7", "--matrix", "fa"])), 1);
}

#[test]
fn search_then_verify() {
    let dir = tempfile::tempdir().unwrap();
    for (k, d) in [("1", 4usize), ("2", 8), ("3", 19)] {
        let out = dir.path().join(format!("f{d}.txt"));
        let o = fibsic(&["search", "--k", k, "--seed", "1", "-q", "--out", path_str(&out)]);
        assert_eq!(code(&o), 0, "{}", stderr(&o));
        let file = FiducialFile::read(&out).unwrap();
        assert_eq!(file.d, d);
        assert_eq!(file.seed, Some(1));

        let report = RunReport::from_json(&std::fs::read_to_string(report_path(&out)).unwrap()).unwrap();
        let search = report.search.unwrap();
        assert!(search.converged);
        assert!(report.verification.unwrap().passed);

        let rep = dir.path().join(format!("v{d}.json"));
        let o = fibsic(&["verify", path_str(&out), "--report", path_str(&rep)]);
        assert_eq!(code(&o), 0, "{}", stdout(&o));
        let v = RunReport::from_json(&std::fs::read_to_string(&rep).unwrap()).unwrap();
        let v = v.verification.unwrap();
        assert!(v.max_gram_deviation <= 1e-9);
        assert!(v.detected_antiunitary_order.is_some());
    }
}

#[test]
fn starved_search_exits_two_and_still_reports() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("f.txt");
    let o = fibsic(&[
        "search", "--dim", "5", "--restarts", "1", "--max-iter", "1", "-q", "--out", path_str(&out),
    ]);
    assert_eq!(code(&o), 2, "{}", stderr(&o));
    assert!(out.exists());
    let report = RunReport::from_json(&std::fs::read_to_string(report_path(&out)).unwrap()).unwrap();
    assert!(!report.search.unwrap().converged);
}

#[test]
fn verify_rejects_basis_vector() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("e0.txt");
    std::fs::write(&f, "# d 4\n1 0\n0 0\n0 0\n0 0\n").unwrap();
    let rep = dir.path().join("r.json");
    let o = fibsic(&["verify", path_str(&f), "--report", path_str(&rep)]);
    assert_eq!(code(&o), 3);
    let v = RunReport::from_json(&std::fs::read_to_string(&rep).unwrap()).unwrap().verification.unwrap();
    assert!((v.max_gram_deviation - 0.8).abs() < 1e-12);
    assert!(!v.passed);
}

#[test]
fn verify_io_errors() {
    let dir = tempfile::tempdir().unwrap();
    let f = dir.path().join("t.txt");
    std::fs::write(&f, "# d 4\n0.5 0\n0.5 0\n0.5 0\n").unwrap();
    let o = fibsic(&["verify", path_str(&f)]);
    assert_eq!(code(&o), 4);
    assert!(stderr(&o).contains("line 5"), "{}", stderr(&o));

    let o = fibsic(&["verify", path_str(&dir.path().join("missing.txt"))]);
    assert_eq!(code(&o), 4);
}

#[test]
fn selftest_is_deterministic_and_detects_corruption() {
    let a = fibsic(&["selftest"]);
    let b = fibsic(&["selftest"]);
    assert_eq!(code(&a), 0, "{}", stdout(&a));
    assert_eq!(stdout(&a), stdout(&b));
    assert!(stdout(&a).ends_with("all checks passed\n"));

    let c = fibsic(&["selftest", "--corrupt-fa"]);
    assert_eq!(code(&c), 3);
    let failed: Vec<String> = stdout(&c).lines().filter(|l| l.starts_with("[FAIL]")).map(String::from).collect();
    assert_eq!(failed.len(), 1, "{failed:?}");
    assert!(failed[0].contains("conjugation"));
}
