use std::fs;
use std::process::Command;

use uvkit_core::fixtures;
use uvkit_core::mesh::write_obj_file;
use uvkit_core::seams::SeamFile;

fn uvkit() -> Command {
    let mut c = Command::new(env!("CARGO_BIN_EXE_uvkit"));
    c.arg("--threads").arg("1");
    c
}

#[test]
fn version_prints_build_info() {
    let out = Command::new(env!("CARGO_BIN_EXE_uvkit")).arg("--version").output().unwrap();
    assert!(out.status.success());
    let text = String::from_utf8(out.stdout).unwrap();
    assert!(text.contains(env!("CARGO_PKG_VERSION")), "{text}");
}

#[test]
fn unwrap_then_metrics() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("cube.obj");
    write_obj_file(&fixtures::cube(), &mesh).unwrap();
    let seams = dir.path().join("cross.json");
    fs::write(
        &seams,
        serde_json::to_string(&SeamFile::from_seams(&fixtures::cube_cross_seams())).unwrap(),
    )
    .unwrap();
    let out = dir.path().join("out");
    let status = uvkit()
        .args(["unwrap", mesh.to_str().unwrap(), "--seams", seams.to_str().unwrap(), "--refine", "off", "--out"])
        .arg(&out)
        .output()
        .unwrap();
    assert!(status.status.success(), "{}", String::from_utf8_lossy(&status.stderr));
    let table = String::from_utf8(status.stdout).unwrap();
    assert!(table.contains("distortion") && table.contains("runtime"));

    let m = uvkit()
        .args(["metrics", mesh.to_str().unwrap()])
        .arg(out.join("unwrapped.obj"))
        .output()
        .unwrap();
    assert!(m.status.success());
    let report: serde_json::Value = serde_json::from_slice(&m.stdout).unwrap();
    assert!(report["distortion"].as_f64().unwrap() <= 1e-6);
    assert!(report.get("runtime_s").is_none());
}

#[test]
fn closed_mesh_exits_with_input_error() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("sphere.obj");
    write_obj_file(&fixtures::uv_sphere(8, 6), &mesh).unwrap();
    let out = uvkit()
        .args(["unwrap", mesh.to_str().unwrap(), "--seams", "none", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
    let err = String::from_utf8(out.stderr).unwrap();
    assert!(err.contains("cut failed") && err.contains("supply seams"), "{err}");
}

#[test]
fn missing_mesh_file_exits_with_input_error() {
    let out = uvkit()
        .args(["unwrap", "/nonexistent/mesh.obj", "--out", "/tmp/uvkit-never"])
        .output()
        .unwrap();
    assert_eq!(out.status.code(), Some(1));
}

#[test]
fn config_file_with_flag_override() {
    let dir = tempfile::tempdir().unwrap();
    let cfg = dir.path().join("cfg.json");
    fs::write(&cfg, r#"{"unwrap": {"margin": 0.01, "refine": {"mode": "direct", "steps": 7}}}"#).unwrap();
    let out = uvkit()
        .arg("--config")
        .arg(&cfg)
        .args(["show-config"])
        .output()
        .unwrap();
    let v: serde_json::Value = serde_json::from_slice(&out.stdout).unwrap();
    assert_eq!(v["unwrap"]["margin"], 0.01);
    assert_eq!(v["unwrap"]["refine"]["steps"], 7);

    let mesh = dir.path().join("hemi.obj");
    write_obj_file(&fixtures::hemisphere(8, 3), &mesh).unwrap();
    let run = uvkit()
        .arg("--config")
        .arg(&cfg)
        .args(["unwrap", mesh.to_str().unwrap(), "--steps", "3", "--out"])
        .arg(dir.path().join("o"))
        .output()
        .unwrap();
    assert!(run.status.success(), "{}", String::from_utf8_lossy(&run.stderr));
}

#[test]
fn seams_encode_decode_round_trip() {
    let dir = tempfile::tempdir().unwrap();
    let mesh = dir.path().join("oct.obj");
    write_obj_file(&fixtures::octahedron(), &mesh).unwrap();
    let seams = dir.path().join("tree.json");
    fs::write(
        &seams,
        serde_json::to_string(&SeamFile::from_seams(&fixtures::octahedron_tree_seams())).unwrap(),
    )
    .unwrap();
    let tokens = dir.path().join("tokens.json");
    let enc = uvkit()
        .args(["seams-encode", mesh.to_str().unwrap(), seams.to_str().unwrap(), "--bits", "10", "--out"])
        .arg(&tokens)
        .status()
        .unwrap();
    assert!(enc.success());
    let dec = uvkit()
        .args(["seams-decode", mesh.to_str().unwrap(), tokens.to_str().unwrap()])
        .output()
        .unwrap();
    assert!(dec.status.success());
    let file: SeamFile = serde_json::from_slice(&dec.stdout).unwrap();
    assert_eq!(
        file.resolve(&fixtures::octahedron()).unwrap(),
        fixtures::octahedron_tree_seams()
    );
}
