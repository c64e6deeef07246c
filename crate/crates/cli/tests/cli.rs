use std::f64::consts::PI;
use std::path::Path;
use std::process::{Command, Output};

fn intgeom(dir: &Path, args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_intgeom")).current_dir(dir).args(args).output().unwrap()
}

fn stdout(o: &Output) -> String {
    String::from_utf8(o.stdout.clone()).unwrap()
}

/// Data rows of a CSV report, comments and header dropped.
fn rows(text: &str) -> Vec<Vec<String>> {
    text.lines()
        .filter(|l| !l.starts_with('#'))
        .skip(1)
        .map(|l| l.split(',').map(str::to_string).collect())
        .collect()
}

fn f(s: &str) -> f64 {
    s.parse().unwrap()
}

fn write(dir: &Path, name: &str, text: &str) {
    std::fs::write(dir.join(name), text).unwrap();
}

#[test]
fn intrinsic_volumes_of_square_and_disk() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "b.json",
        r#"[{"type":"polygon","vertices":[[0,0],[1,0],[1,1],[0,1]]},{"type":"disk","center":[1,-1],"radius":2}]"#,
    );
    let o = intgeom(dir.path(), &["intrinsic", "b.json"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    let expect = [[1.0, 2.0, 1.0], [1.0, 2.0 * PI, 4.0 * PI]];
    for (row, e) in r.iter().zip(expect) {
        for k in 0..3 {
            assert!((f(&row[2 + k]) - e[k]).abs() < 1e-6 * e[k], "{row:?}");
        }
    }
}

#[test]
fn malformed_input_exits_with_two() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "bad.json", "{\"type\": \"polygon\", ");
    let o = intgeom(dir.path(), &["intrinsic", "bad.json"]);
    assert_eq!(o.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&o.stderr).contains("parse"));
    assert_eq!(intgeom(dir.path(), &["product", "chi", "v7"]).status.code(), Some(2));
    assert_eq!(intgeom(dir.path(), &["functional", "exp", "nothing"]).status.code(), Some(2));
    assert_eq!(intgeom(dir.path(), &["no-such-command"]).status.code(), Some(2));
}

const CAPS: &str = r#"[{"type":"cap","center":[0,0,1],"radius":0.5},{"type":"cap","center":[1,0,0],"radius":0.5}]"#;

#[test]
fn kinematic_caps_match_the_cap_formula() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "caps.json", CAPS);
    let o = intgeom(dir.path(), &["--samples", "100000", "kinematic", "caps.json", "--mu", "chi"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    let (est, se) = (f(&r[0][2]), f(&r[0][3]));
    let exact = (1.0 - 1f64.cos()) / 2.0;
    assert!((est - exact).abs() < 3.0 * se, "{est} ± {se} vs {exact}");
    assert_eq!(r[0][4], "100000");
}

#[test]
fn reports_rerun_byte_identically_from_their_config() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "caps.json", CAPS);
    let args = ["--seed", "9", "--samples", "20000", "--out", "k.csv", "kinematic", "caps.json", "--mu", "sphere-area"];
    assert!(intgeom(dir.path(), &args).status.success());
    let first = std::fs::read(dir.path().join("k.csv")).unwrap();
    assert!(intgeom(dir.path(), &args).status.success());
    assert_eq!(std::fs::read(dir.path().join("k.csv")).unwrap(), first);
    // the report carries its own config
    assert!(intgeom(dir.path(), &["--config", "k.csv"]).status.success());
    assert_eq!(std::fs::read(dir.path().join("k.csv")).unwrap(), first);
    let other = intgeom(dir.path(), &["--seed", "10", "--samples", "20000", "kinematic", "caps.json", "--mu", "sphere-area"]);
    assert_ne!(rows(&stdout(&other)), rows(&String::from_utf8(first).unwrap()));
}

#[test]
fn zero_samples_is_a_usage_error() {
    let dir = tempfile::tempdir().unwrap();
    write(dir.path(), "caps.json", CAPS);
    assert_eq!(intgeom(dir.path(), &["--samples", "0", "kinematic", "caps.json"]).status.code(), Some(2));
}

#[test]
fn offset_squares_current_comparison_passes() {
    let dir = tempfile::tempdir().unwrap();
    write(
        dir.path(),
        "sq.json",
        r#"[{"type":"polygon","vertices":[[0,0],[1,0],[1,1],[0,1]]},{"type":"polygon","vertices":[[0.5,0.3],[1.5,0.3],[1.5,1.3],[0.5,1.3]]}]"#,
    );
    let o = intgeom(dir.path(), &["ncycle-intersect", "sq.json", "--pieces", "pieces.json"]);
    assert!(o.status.success());
    let r = rows(&stdout(&o));
    assert!(f(&r[0][6]) < 1e-6);
    let pieces: serde_json::Value = serde_json::from_slice(&std::fs::read(dir.path().join("pieces.json")).unwrap()).unwrap();
    assert!(pieces["product"]["pieces"].as_array().unwrap().len() >= 4);
    assert_eq!(pieces["config"]["command"][0], "ncycle-intersect");

    // touching squares are not transversal
    write(
        dir.path(),
        "touch.json",
        r#"[{"type":"polygon","vertices":[[0,0],[1,0],[1,1],[0,1]]},{"type":"polygon","vertices":[[1,0],[2,0],[2,1],[1,1]]}]"#,
    );
    assert_eq!(intgeom(dir.path(), &["ncycle-intersect", "touch.json"]).status.code(), Some(2));
}

#[test]
fn rumin_check_passes() {
    let dir = tempfile::tempdir().unwrap();
    let o = intgeom(dir.path(), &["rumin-check", "--forms", "10", "--polygons", "3"]);
    assert!(o.status.success());
    assert!(rows(&stdout(&o)).iter().all(|r| r[3] == "true"));
}

#[test]
fn product_and_functional_share_the_cache() {
    let dir = tempfile::tempdir().unwrap();
    let o = intgeom(dir.path(), &["product", "chi", "v1", "--cache", "c.json"]);
    assert!(o.status.success(), "{}", String::from_utf8_lossy(&o.stderr));
    let r = rows(&stdout(&o));
    assert!((f(&r[1][1]) - 1.0).abs() < 1e-6);
    assert!(r.iter().all(|row| f(&row[3]) < 0.01));
    let cached = std::fs::read(dir.path().join("c.json")).unwrap();

    let o = intgeom(dir.path(), &["product", "v2", "v2", "--cache", "c.json"]);
    assert!(o.status.success());
    assert!(rows(&stdout(&o)).iter().all(|row| f(&row[1]).abs() < 1e-9));

    let o = intgeom(dir.path(), &["functional", "exp", "0.3*v1", "--cache", "c.json"]);
    assert!(o.status.success());
    let text = stdout(&o);
    assert!(text.contains("terminates"));
    let r = rows(&text);
    // exp(0.3 V₁) = χ + 0.3 V₁ + 0.045 V₁², with V₁² = (π/2) V₂
    let expect = [1.0, 0.3, 0.045 * PI / 2.0];
    for k in 0..3 {
        assert!((f(&r[0][2 + k]) - expect[k]).abs() < 1e-6, "{r:?}");
    }
    assert_eq!(std::fs::read(dir.path().join("c.json")).unwrap(), cached);
    assert_eq!(intgeom(dir.path(), &["product", "sphere-chi", "chi", "--cache", "c.json"]).status.code(), Some(2));
}
