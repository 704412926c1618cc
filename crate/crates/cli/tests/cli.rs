use std::path::Path;
use std::process::{Command, Output};

const SCENE: &str = r#"{
  "frames": 3,
  "camera": {"width": 160, "height": 120},
  "task": "find the warm cup",
  "prompt": "cup",
  "sensors": [
    {"sensor_id": "thermal0", "kind": "thermal"},
    {"sensor_id": "radar0", "kind": "mmwave_radar"}
  ],
  "objects": [{"name": "cup", "azimuth_deg": 5, "elevation_deg": 2, "emitter": true, "temperature_c": 50}]
}"#;

fn fuse(args: &[&str]) -> Output {
    Command::new(env!("CARGO_BIN_EXE_fuse"))
        .args(args)
        .env("OMNIFUSE_LOG", "warn")
        .output()
        .unwrap()
}

fn synth(dir: &Path, scene: &str) -> String {
    let scene_path = dir.join("scene.json");
    std::fs::write(&scene_path, scene).unwrap();
    let data = dir.join("data");
    let out = fuse(&["synth", "--scene", scene_path.to_str().unwrap(), "--out", data.to_str().unwrap(), "--seed", "5"]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    data.join("config.json").to_string_lossy().into_owned()
}

#[test]
fn synth_run_and_calib_check() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path(), SCENE);

    let out = fuse(&["calib", "check", "--config", &config]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));

    let run_dir = tmp.path().join("run");
    let out = fuse(&["run", "--config", &config, "--out", run_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    for f in 0..3 {
        for s in ["thermal0", "radar0"] {
            assert!(run_dir.join(format!("{f}_{s}.png")).is_file());
            assert!(run_dir.join(format!("{f}_{s}.json")).is_file());
        }
    }
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run_dir.join("report.json")).unwrap()).unwrap();
    assert_eq!(report["frames"], 3);
    assert_eq!(report["outputs_written"], 6);
}

#[test]
fn bench_mode_writes_report() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path(), SCENE);
    let mut cfg: serde_json::Value = serde_json::from_str(&std::fs::read_to_string(&config).unwrap()).unwrap();
    cfg["bench"] = serde_json::json!({"frames": 5, "warmup": 1, "resolution": [160, 120]});
    std::fs::write(&config, cfg.to_string()).unwrap();

    let run_dir = tmp.path().join("bench");
    let out = fuse(&["run", "--config", &config, "--mode", "bench", "--out", run_dir.to_str().unwrap()]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(run_dir.join("bench.json")).unwrap()).unwrap();
    assert_eq!(report["frames"], 5);
}

#[test]
fn missing_calibration_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path(), SCENE);
    for e in std::fs::read_dir(tmp.path().join("data/calib")).unwrap() {
        let p = e.unwrap().path();
        if p.to_string_lossy().contains("radar0") {
            std::fs::remove_file(p).unwrap();
        }
    }
    let out = fuse(&["run", "--config", &config]);
    assert_eq!(out.status.code(), Some(2));
    assert!(String::from_utf8_lossy(&out.stderr).contains("radar0"));
}

#[test]
fn malformed_config_exits_2() {
    let tmp = tempfile::tempdir().unwrap();
    let config = tmp.path().join("config.json");
    std::fs::write(&config, "{\n  \"task\": \"x\",\n  \"sensors\": [\n").unwrap();
    let out = fuse(&["run", "--config", config.to_str().unwrap()]);
    assert_eq!(out.status.code(), Some(2));
}

#[test]
fn corrupt_frame_exits_4() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path(), SCENE);
    std::fs::write(tmp.path().join("data/1_rgb.png"), b"not a png").unwrap();
    let out = fuse(&["run", "--config", &config]);
    assert_eq!(out.status.code(), Some(4), "{}", String::from_utf8_lossy(&out.stderr));
    assert!(tmp.path().join("data/out/report.json").is_file());
}

#[test]
fn empty_scene_runs() {
    let tmp = tempfile::tempdir().unwrap();
    let scene = SCENE.replace("\"frames\": 3", "\"frames\": 0");
    let config = synth(tmp.path(), &scene);
    let out = fuse(&["run", "--config", &config]);
    assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
}

#[test]
fn heatmap_export() {
    let tmp = tempfile::tempdir().unwrap();
    let config = synth(tmp.path(), SCENE);
    for fmt in ["pfm", "png"] {
        let run_dir = tmp.path().join(fmt);
        let out = fuse(&["run", "--config", &config, "--out", run_dir.to_str().unwrap(), "--heatmaps", fmt]);
        assert!(out.status.success(), "{}", String::from_utf8_lossy(&out.stderr));
        for f in 0..3 {
            assert!(run_dir.join(format!("{f}_radar0_heatmap.{fmt}")).is_file());
            assert!(!run_dir.join(format!("{f}_thermal0_heatmap.{fmt}")).exists());
        }
    }
    let pfm = std::fs::read(tmp.path().join("pfm/0_radar0_heatmap.pfm")).unwrap();
    assert!(pfm.starts_with(b"Pf\n91 61\n-1.0\n"));
    assert_eq!(pfm.len(), b"Pf\n91 61\n-1.0\n".len() + 4 * 91 * 61);
}
