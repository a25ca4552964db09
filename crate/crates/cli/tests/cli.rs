//! End-to-end checks of the command-line interface and its exit codes.

use std::path::Path;
use std::process::Command;

fn bin() -> Command {
    Command::new(env!("CARGO_BIN_EXE_gfbarcode"))
}

fn write_case_config(dir: &Path, mesh: u32, extra: &str) -> std::path::PathBuf {
    let path = dir.join("config.json");
    let body = format!(
        r#"{{
  "pieces": [
    {{"tent": {{"t_max": 6.283185307179586e-4, "support": 0.5, "center": [-0.75, 0.0]}}}},
    {{"tent": {{"t_max": 6.283185307179586e-4, "support": 0.5, "center": [0.75, 0.0]}}}}
  ],
  "mesh": {mesh},
  "inverse_tolerance": 1e-12{extra}
}}"#
    );
    std::fs::write(&path, body).unwrap();
    path
}

#[test]
fn compute_writes_outputs_and_is_deterministic() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_case_config(dir.path(), 2, "");
    let out1 = dir.path().join("a.json");
    let svg1 = dir.path().join("a.svg");
    let run = |out: &Path, svg: &Path| {
        let status = bin()
            .args(["compute", "--config"])
            .arg(&cfg)
            .arg("--out")
            .arg(out)
            .arg("--svg")
            .arg(svg)
            .status()
            .unwrap();
        assert!(status.success());
    };
    run(&out1, &svg1);
    let out2 = dir.path().join("b.json");
    let svg2 = dir.path().join("b.svg");
    run(&out2, &svg2);
    assert_eq!(std::fs::read(&out1).unwrap(), std::fs::read(&out2).unwrap());
    assert_eq!(std::fs::read(&svg1).unwrap(), std::fs::read(&svg2).unwrap());

    // the barcode file parses and has the two essential classes
    let text = std::fs::read_to_string(&out1).unwrap();
    let bars: serde_json::Value = serde_json::from_str(&text).unwrap();
    let infinite = bars
        .as_array()
        .unwrap()
        .iter()
        .filter(|b| b.get("death").is_none())
        .count();
    assert_eq!(infinite, 2);
}

#[test]
fn config_errors_exit_2() {
    let dir = tempfile::tempdir().unwrap();
    let path = dir.path().join("bad.json");
    std::fs::write(&path, "{ not json").unwrap();
    let status = bin()
        .args(["compute", "--config"])
        .arg(&path)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));

    // structurally valid JSON violating the smallness gate
    let big = dir.path().join("big.json");
    std::fs::write(
        &big,
        r#"{"pieces": [
            {"tent": {"t_max": 0.4, "support": 0.5, "center": [0.0, 0.0]}},
            {"tent": {"t_max": 0.4, "support": 0.5, "center": [0.4, 0.0]}}
        ], "mesh": 2}"#,
    )
    .unwrap();
    let status = bin()
        .args(["compute", "--config"])
        .arg(&big)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(2));
}

#[test]
fn memory_cap_exits_3() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_case_config(dir.path(), 8, ",\n  \"memory_cap\": 1000");
    let status = bin()
        .args(["compute", "--config"])
        .arg(&cfg)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(3));
}

#[test]
fn budget_violation_exits_4() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_case_config(dir.path(), 2, "");
    // A reference with wildly displaced infinite bars cannot be within budget.
    let fake = dir.path().join("fake.json");
    std::fs::write(
        &fake,
        r#"[{"degree": 0, "birth": 50.0, "multiplicity": 1},
            {"degree": 2, "birth": 50.0, "multiplicity": 1}]"#,
    )
    .unwrap();
    let status = bin()
        .args(["compute", "--config"])
        .arg(&cfg)
        .arg("--reference")
        .arg(&fake)
        .status()
        .unwrap();
    assert_eq!(status.code(), Some(4));
}

#[test]
fn bottleneck_subcommand() {
    let dir = tempfile::tempdir().unwrap();
    let a = dir.path().join("a.json");
    let b = dir.path().join("b.json");
    std::fs::write(
        &a,
        r#"[{"degree": 0, "birth": 0.0, "death": 2.0, "multiplicity": 1}]"#,
    )
    .unwrap();
    std::fs::write(
        &b,
        r#"[{"degree": 0, "birth": 1.0, "death": 2.0, "multiplicity": 1}]"#,
    )
    .unwrap();
    let out = bin().arg("bottleneck").arg(&a).arg(&b).output().unwrap();
    assert!(out.status.success());
    let printed: f64 = String::from_utf8(out.stdout)
        .unwrap()
        .trim()
        .parse()
        .unwrap();
    assert_eq!(printed, 1.0);
}

#[test]
fn reduce_subcommand_reports_pairing() {
    let dir = tempfile::tempdir().unwrap();
    let m = dir.path().join("m.txt");
    std::fs::write(&m, "# circle\n1 0 0\n1 1 0\n1 0 1\n1 1 1\n").unwrap();
    let out = bin().args(["reduce", "--matrix"]).arg(&m).output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains("# pair 1 1 0"));
    assert!(text.contains("# essential 0 0"));
    assert!(text.contains("# essential 1 1"));
}

#[test]
fn sample_subcommand_emits_lattice_values() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = write_case_config(dir.path(), 4, "");
    let out_path = dir.path().join("samples.json");
    let status = bin()
        .args(["sample", "--config"])
        .arg(&cfg)
        .arg("--out")
        .arg(&out_path)
        .status()
        .unwrap();
    assert!(status.success());
    let v: serde_json::Value =
        serde_json::from_str(&std::fs::read_to_string(&out_path).unwrap()).unwrap();
    let pieces = v.as_array().unwrap();
    assert_eq!(pieces.len(), 2);
    assert!(pieces[0]["values"].as_array().unwrap().len() > 10);
    assert!(pieces[0]["sup_error"].as_f64().unwrap() > 0.0);
}
