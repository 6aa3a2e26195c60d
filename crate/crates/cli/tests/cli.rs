use std::path::{Path, PathBuf};
use std::process::{Command, Output};

fn hankel(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_hankel"))
        .args(args)
        .env_remove("RUST_LOG")
        .output()
        .expect("spawn hankel")
}

fn write(dir: &Path, name: &str, text: &str) -> PathBuf {
    let path = dir.join(name);
    std::fs::write(&path, text).unwrap();
    path
}

fn repo_scenario(name: &str) -> String {
    Path::new(env!("CARGO_MANIFEST_DIR"))
        .join("../../scenarios")
        .join(name)
        .to_string_lossy()
        .into_owned()
}

/// `x,t,row,col,re,im` rows as `(x, t, re, im)`.
fn center_rows(dir: &Path) -> Vec<(f64, f64, f64, f64)> {
    let text = std::fs::read_to_string(dir.join("center_field.csv")).unwrap();
    text.lines()
        .skip(1)
        .map(|l| {
            let f: Vec<f64> = l.split(',').map(|v| v.parse().unwrap()).collect();
            (f[0], f[1], f[4], f[5])
        })
        .collect()
}

fn rank_one(kind: &str, companion: &str, amp: f64, rule: &str, x: &str, t: &str) -> String {
    format!(
        r#"
kind = "{kind}"
{companion}
dims = [1, 1]
initial = {{ type = "exponential", amplitude = [[{amp}]], rate = 1.0 }}

[grid]
half_width = 32.0
nodes = 1024

[quadrature]
length = 15.0
intervals = 240
rule = "{rule}"

[samples]
x = {x}
t = {t}
"#
    )
}

#[test]
fn zero_data_gives_zero_field() {
    let dir = tempfile::tempdir().unwrap();
    let scn = write(
        dir.path(),
        "zero.toml",
        r#"
kind = "local_nls"
companion = "adjoint"
dims = [2, 2]
initial = { type = "gaussian", amplitude = [[0.0, 0.0], [0.0, 0.0]], width = 1.0 }

[grid]
half_width = 20.0
nodes = 320

[quadrature]
length = 4.0
intervals = 32

[samples]
x = { center = 0.0, step = 0.125, half_count = 3 }
t = { center = 0.0, step = 0.125, half_count = 1 }
"#,
    );
    let out = dir.path().join("out");
    let o = hankel(&["solve", scn.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = center_rows(&out);
    assert_eq!(rows.len(), 7 * 3 * 4);
    assert!(rows.iter().all(|r| r.2 == 0.0 && r.3 == 0.0));
    let det = std::fs::read_to_string(out.join("det2.csv")).unwrap();
    for line in det.lines().skip(1) {
        let f: Vec<&str> = line.split(',').collect();
        assert_eq!((f[2], f[3], f[5]), ("1", "0", "false"));
    }
}

#[test]
fn rank_one_nls_center_value() {
    let dir = tempfile::tempdir().unwrap();
    let text = rank_one(
        "local_nls",
        "companion = \"adjoint\"",
        1.0,
        "gregory",
        "{ values = [0.0] }",
        "{ values = [0.0] }",
    );
    let scn = write(dir.path(), "nls.toml", &text);
    let out = dir.path().join("out");
    let o = hankel(&["solve", scn.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = center_rows(&out);
    assert_eq!(rows.len(), 1);
    assert!((rows[0].2 - 0.8).abs() <= 1e-6 && rows[0].3.abs() <= 1e-6, "{rows:?}");
}

#[test]
fn rank_one_kdv_center_value() {
    // theta = e^(x - t) = e at (1, 0): -2e / (2 + e) = -1.15231...
    let dir = tempfile::tempdir().unwrap();
    let text = rank_one(
        "kdv_primitive",
        "",
        -1.0,
        "gregory",
        "{ values = [0.0, 1.0] }",
        "{ values = [0.0] }",
    );
    let scn = write(dir.path(), "kdv.toml", &text);
    let out = dir.path().join("out");
    let o = hankel(&["solve", scn.to_str().unwrap(), "--out", out.to_str().unwrap()]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let rows = center_rows(&out);
    assert!((rows[0].2 - (-2.0 / 3.0)).abs() <= 1e-5, "{rows:?}");
    let e = std::f64::consts::E;
    assert!((rows[1].2 - (-2.0 * e / (2.0 + e))).abs() <= 1e-5, "{rows:?}");
}

#[test]
fn patch_breakdown_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    let out = dir.path().join("out");
    let o = hankel(&[
        "solve",
        &repo_scenario("kdv_patch.toml"),
        "--out",
        out.to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(2), "{}", String::from_utf8_lossy(&o.stderr));
    let manifest: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(out.join("manifest.json")).unwrap()).unwrap();
    assert_eq!(manifest["exit_code"], 2);
    assert_eq!(manifest["patch"]["skipped"].as_array().unwrap().len(), 1);
    assert!(manifest["patch"]["sign_changes"].as_u64().unwrap() >= 1);
}

#[test]
fn study_needs_three_levels() {
    let o = hankel(&["study", &repo_scenario("kdv_rank_one_residual.toml"), "--levels", "2"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).contains("at least 3 levels"));
}

#[test]
fn missing_scenario_is_an_error() {
    let o = hankel(&["solve", "/nonexistent/scenario.toml"]);
    assert_eq!(o.status.code(), Some(1));
    assert!(String::from_utf8_lossy(&o.stderr).starts_with("error:"));
}

#[test]
fn closed_form_study_is_second_order_with_trapezoid() {
    let dir = tempfile::tempdir().unwrap();
    let mut text = rank_one(
        "local_nls",
        "companion = \"adjoint\"",
        1.0,
        "trapezoid",
        "{ values = [-1.0, 0.0, 1.0] }",
        "{ values = [0.0] }",
    );
    text = text.replace("intervals = 240", "intervals = 60");
    text.push_str("\n[study]\ntarget = \"closed_form\"\n");
    let scn = write(dir.path(), "study.toml", &text);
    let o = hankel(&[
        "study",
        scn.to_str().unwrap(),
        "--levels",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("study.json")).unwrap()).unwrap();
    let order = doc["study"]["series"][0]["order"].as_f64().unwrap();
    assert!((order - 2.0).abs() <= 0.3, "order {order}");
}

#[test]
fn product_rule_study_ratios_are_near_four() {
    let dir = tempfile::tempdir().unwrap();
    let text = std::fs::read_to_string(repo_scenario("residual/local_mkdv_r2.toml"))
        .unwrap()
        .replace("[samples]", "[study]\ntarget = \"product_rule\"\n\n[samples]");
    let scn = write(dir.path(), "pr.toml", &text);
    let o = hankel(&[
        "study",
        scn.to_str().unwrap(),
        "--levels",
        "3",
        "--out",
        dir.path().to_str().unwrap(),
    ]);
    assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
    let doc: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(dir.path().join("study.json")).unwrap()).unwrap();
    for r in doc["study"]["series"][0]["ratios"].as_array().unwrap() {
        let r = r.as_f64().unwrap();
        assert!((3.0..=5.0).contains(&r), "ratio {r}");
    }
}

#[test]
fn output_does_not_depend_on_thread_count() {
    let dir = tempfile::tempdir().unwrap();
    let scn = repo_scenario("residual/local_nls_p.toml");
    let mut tables = Vec::new();
    for threads in ["1", "3"] {
        let out = dir.path().join(threads);
        let o = hankel(&["--threads", threads, "solve", &scn, "--out", out.to_str().unwrap()]);
        assert_eq!(o.status.code(), Some(0), "{}", String::from_utf8_lossy(&o.stderr));
        tables.push(std::fs::read(out.join("center_field.csv")).unwrap());
    }
    assert_eq!(tables[0], tables[1]);
}

#[test]
fn verify_reports_checks() {
    let o = hankel(&["verify", &repo_scenario("residual/local_mkdv_r.toml")]);
    let text = String::from_utf8_lossy(&o.stdout);
    assert_eq!(
        o.status.code(),
        Some(0),
        "{text}\n{}",
        String::from_utf8_lossy(&o.stderr)
    );
    for name in ["u_identity", "product_rule", "miura", "det2_min_modulus"] {
        assert!(text.contains(name), "missing {name} in\n{text}");
    }
}
