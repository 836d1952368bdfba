use std::path::{Path, PathBuf};
use std::process::{Command, Output};

use serde_json::Value;
use tempfile::TempDir;

fn tbi(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_tbi"))
        .args(args)
        .env_remove("TBI_TOL")
        .output()
        .expect("binary runs")
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

fn stderr(o: &Output) -> String {
    String::from_utf8(o.stderr.clone()).unwrap()
}

fn write(dir: &TempDir, name: &str, text: &str) -> PathBuf {
    let p = dir.path().join(name);
    std::fs::write(&p, text).unwrap();
    p
}

fn catalog_file(dir: &TempDir, name: &str) -> PathBuf {
    let out = tbi(&["catalog", name]);
    assert_eq!(out.status.code(), Some(0));
    write(dir, &format!("{name}.json"), &stdout(&out))
}

fn edit(path: &Path, f: impl FnOnce(&mut Value)) -> String {
    let mut v: Value = serde_json::from_str(&std::fs::read_to_string(path).unwrap()).unwrap();
    f(&mut v);
    v.to_string()
}

fn p(path: &Path) -> &str {
    path.to_str().unwrap()
}

#[test]
fn catalog_entries_validate() {
    let dir = TempDir::new().unwrap();
    for name in ["iwasawa", "product"] {
        let file = catalog_file(&dir, name);
        let out = tbi(&["validate", p(&file)]);
        assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        assert!(stdout(&out).starts_with("ok:"));
    }
}

#[test]
fn iwasawa_catalog_tensor() {
    let out = tbi(&["catalog", "iwasawa"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["m"], 2);
    assert_eq!(v["d"], 1);
    let a = &v["A"];
    // A(e1,e3)=f1, A(e1,e4)=f2, A(e2,e3)=f2, A(e2,e4)=-f1
    assert_eq!(a[0][0][2], 1);
    assert_eq!(a[1][0][3], 1);
    assert_eq!(a[1][1][2], 1);
    assert_eq!(a[0][1][3], -1);
    assert_eq!(a[0][2][0], -1);
    let nonzero = a.as_array().unwrap().iter().flat_map(|s| s.as_array().unwrap()).flat_map(|r| r.as_array().unwrap()).filter(|x| x.as_i64() != Some(0)).count();
    assert_eq!(nonzero, 8);
}

#[test]
fn non_antisymmetric_form_exits_two() {
    let dir = TempDir::new().unwrap();
    let file = catalog_file(&dir, "iwasawa");
    let bad = write(&dir, "bad.json", &edit(&file, |v| v["A"][1][2][1] = 7.into()));
    let out = tbi(&["validate", p(&bad)]);
    assert_eq!(out.status.code(), Some(2));
    assert!(stderr(&out).contains("(2,3,2)") || stderr(&out).contains("(2,2,3)"), "{}", stderr(&out));
}

#[test]
fn degenerate_structure_exits_three() {
    let dir = TempDir::new().unwrap();
    let file = catalog_file(&dir, "iwasawa");
    let bad = write(
        &dir,
        "flat.json",
        &edit(&file, |v| v["U"] = serde_json::json!([[[1.0, 0.0]], [[3.0, 0.0]]])),
    );
    let out = tbi(&["validate", p(&bad)]);
    assert_eq!(out.status.code(), Some(3), "{}", stderr(&out));
}

#[test]
fn riemann_failure_exits_four() {
    let dir = TempDir::new().unwrap();
    let file = catalog_file(&dir, "iwasawa");
    let bad = write(
        &dir,
        "off.json",
        &edit(&file, |v| v["U"] = serde_json::json!([[[1.0, 0.0]], [[0.3, 1.7]]])),
    );
    assert_eq!(tbi(&["validate", p(&bad)]).status.code(), Some(4));
    assert_eq!(tbi(&["invariants", p(&bad)]).status.code(), Some(4));
}

#[test]
fn parse_errors_exit_one_with_line() {
    let dir = TempDir::new().unwrap();
    let bad = write(&dir, "broken.json", "{\n  \"m\": 2,\n  \"d\": [\n}\n");
    let out = tbi(&["validate", p(&bad)]);
    assert_eq!(out.status.code(), Some(1));
    assert!(stderr(&out).contains("line 3"), "{}", stderr(&out));
    let missing = tbi(&["validate", "/nonexistent/file.json"]);
    assert_eq!(missing.status.code(), Some(1));
    assert_eq!(tbi(&["frobnicate"]).status.code(), Some(1));
    assert_eq!(tbi(&["catalog", "kodaira"]).status.code(), Some(1));
    assert_eq!(tbi(&["--help"]).status.code(), Some(0));
}

#[test]
fn invariants_report() {
    let dir = TempDir::new().unwrap();
    let file = catalog_file(&dir, "iwasawa");
    let out = tbi(&["invariants", p(&file)]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    let c = &v["cohomology"];
    assert_eq!(c["h_O"], serde_json::json!([1, 2, 2, 1]));
    assert_eq!(c["parallelizable"], true);
    assert_eq!(c["h_theta"][1], 6);
    assert_eq!(c["h1_O"], 2);

    let product = catalog_file(&dir, "product");
    let out = tbi(&["invariants", p(&product)]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["cohomology"]["h_O"], serde_json::json!([1, 3, 3, 1]));

    let table = tbi(&["invariants", p(&file), "--format", "table"]);
    assert_eq!(table.status.code(), Some(0));
    let text = stdout(&table);
    assert!(text.contains("E2") && text.contains("E3"));
}

#[test]
fn invariants_json_is_byte_identical() {
    let dir = TempDir::new().unwrap();
    for name in ["iwasawa", "product"] {
        let file = catalog_file(&dir, name);
        let a = tbi(&["invariants", p(&file)]);
        let b = tbi(&["invariants", p(&file)]);
        assert_eq!(a.stdout, b.stdout);
    }
}

#[test]
fn tolerance_precedence() {
    let dir = TempDir::new().unwrap();
    let file = catalog_file(&dir, "iwasawa");
    let tol_of = |args: &[&str], env: Option<&str>| -> f64 {
        let mut cmd = Command::new(env!("CARGO_BIN_EXE_tbi"));
        cmd.args(args).env_remove("TBI_TOL");
        if let Some(e) = env {
            cmd.env("TBI_TOL", e);
        }
        let out = cmd.output().unwrap();
        let v: Value = serde_json::from_str(&String::from_utf8(out.stdout).unwrap()).unwrap();
        v["tol"].as_f64().unwrap()
    };
    assert_eq!(tol_of(&["invariants", p(&file)], None), 1e-9);
    assert_eq!(tol_of(&["invariants", p(&file)], Some("1e-7")), 1e-7);
    assert_eq!(tol_of(&["invariants", p(&file), "--tol", "1e-6"], Some("1e-7")), 1e-6);
    let with_doc = write(&dir, "tol.json", &edit(&file, |v| v["tol"] = 1e-8.into()));
    assert_eq!(tol_of(&["invariants", p(&with_doc)], Some("1e-7")), 1e-8);
    assert_eq!(tol_of(&["invariants", p(&with_doc), "--tol", "1e-6"], None), 1e-6);

    let mut cmd = Command::new(env!("CARGO_BIN_EXE_tbi"));
    let out = cmd.args(["validate", p(&file)]).env("TBI_TOL", "abc").output().unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn decompose_output() {
    let dir = TempDir::new().unwrap();
    let file = catalog_file(&dir, "iwasawa");
    let out = tbi(&["decompose", p(&file)]);
    assert_eq!(out.status.code(), Some(0));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["norms"]["hermitian"].as_f64(), Some(0.0));
    assert_eq!(v["norms"]["forbidden"].as_f64(), Some(0.0));
    assert!(v["norms"]["complex"].as_f64().unwrap() > 0.5);
    assert_eq!(v["complex"].as_array().unwrap().len(), 1);
}

#[test]
fn sample_points_revalidate_and_are_deterministic() {
    let dir = TempDir::new().unwrap();
    for name in ["iwasawa", "product"] {
        let file = catalog_file(&dir, name);
        let args = ["sample", p(&file), "--seed", "11", "--count", "4"];
        let a = tbi(&args);
        assert_eq!(a.status.code(), Some(0), "{}", stderr(&a));
        assert_eq!(a.stdout, tbi(&args).stdout);
        let v: Value = serde_json::from_str(&stdout(&a)).unwrap();
        assert_eq!(v["found"], 4);
        for (i, point) in v["points"].as_array().unwrap().iter().enumerate() {
            let doc = write(&dir, &format!("{name}-{i}.json"), &point["document"].to_string());
            let out = tbi(&["validate", p(&doc)]);
            assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
        }
    }
}

#[test]
fn sample_accepts_bare_tensor() {
    let dir = TempDir::new().unwrap();
    let file = write(&dir, "a.json", r#"{"m": 2, "d": 1, "A": [[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]],[[0,0,0,0],[0,0,0,0],[0,0,0,0],[0,0,0,0]]]}"#);
    let out = tbi(&["sample", p(&file), "--count", "2"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
}

#[test]
fn group_commutator() {
    let dir = TempDir::new().unwrap();
    let file = catalog_file(&dir, "iwasawa");
    let out = tbi(&["group", p(&file), "e2", "e4"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["commutator"]["lambda"], serde_json::json!([-1, 0]));
    let out = tbi(&["group", p(&file), "-1,0:1,0,0,0", "e3"]);
    assert_eq!(out.status.code(), Some(0), "{}", stderr(&out));
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["product"]["lambda"], serde_json::json!([0, 0]));
    assert_eq!(tbi(&["group", p(&file), "e9", "e1"]).status.code(), Some(1));
}

#[test]
fn curve_formulas() {
    let out = tbi(&["curve", "--genus", "3", "--fibre-dim", "1"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["kuranishi_dim"], 10);
    let out = tbi(&["curve", "--genus", "2", "--fibre-dim", "2", "--chern", "0,0,0,0"]);
    let v: Value = serde_json::from_str(&stdout(&out)).unwrap();
    assert_eq!(v["divisibility_index"], 0);
    assert_eq!(tbi(&["curve", "--genus", "1", "--fibre-dim", "1"]).status.code(), Some(1));
}
