use std::collections::BTreeMap;
use std::path::Path;
use std::sync::Arc;
use std::time::Duration;

use omnifuse::fusion::{MaskSource, SegMask};
use omnifuse::mask_provider::{FixedPrompt, FnMaskBackend, TaskContext};
use omnifuse::pipeline::{
    make_synthetic_dataset, run_batch, run_stream_with, Dataset, Engine, FrameBundle, RunConfig,
    SceneScript, Sidecar, StreamOptions, Timings, CONFIG_FILE,
};
use omnifuse::{BinaryMask, Error, RgbImage};
use sha2::{Digest, Sha256};

const THERMAL_SCENE: &str = include_str!("../../../scenes/thermal_3frames.json");

/// Output digest pinned from the first verified run of the 3-frame scene.
const THERMAL_GOLDEN: &str = "a7d4d986d6af794707be8da214e237862648872244dbd8c9a12f71d377c96f17";

fn scene(text: &str) -> SceneScript {
    SceneScript::parse(text, Path::new("scene.json")).unwrap()
}

fn synth(dir: &Path, text: &str, seed: u64) -> RunConfig {
    make_synthetic_dataset(&scene(text), dir, seed).unwrap();
    RunConfig::load(&dir.join(CONFIG_FILE)).unwrap()
}

/// File name to bytes for every file directly in `dir`, except `skip`.
fn files(dir: &Path, skip: &[&str]) -> BTreeMap<String, Vec<u8>> {
    std::fs::read_dir(dir)
        .unwrap()
        .map(|e| e.unwrap().path())
        .filter(|p| p.is_file())
        .map(|p| (p.file_name().unwrap().to_string_lossy().into_owned(), p))
        .filter(|(n, _)| !skip.contains(&n.as_str()))
        .map(|(n, p)| (n, std::fs::read(p).unwrap()))
        .collect()
}

fn digest(files: &BTreeMap<String, Vec<u8>>) -> String {
    let mut h = Sha256::new();
    for (name, bytes) in files {
        h.update(name.as_bytes());
        h.update((bytes.len() as u64).to_le_bytes());
        h.update(bytes);
    }
    format!("{:x}", h.finalize())
}

#[test]
fn thermal_three_frames_golden_and_rerun() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), THERMAL_SCENE, 11);
    let report = run_batch(&cfg).unwrap();
    assert_eq!(report.frames, 3);
    assert_eq!(report.outputs_written, 3);

    let out = cfg.output_path();
    let first = files(&out, &["report.json"]);
    let pngs: Vec<_> = first.keys().filter(|k| k.ends_with(".png")).cloned().collect();
    assert_eq!(pngs, ["0_thermal0.png", "1_thermal0.png", "2_thermal0.png"]);

    let sidecar: Sidecar = serde_json::from_slice(&first["2_thermal0.json"]).unwrap();
    assert_eq!(sidecar.alpha, 1.0);
    assert_eq!(sidecar.mask_prompt, "mug");
    assert_eq!(sidecar.mask_generation, 1);
    assert_eq!(sidecar.mask_age_ms, 133);

    std::fs::remove_dir_all(&out).unwrap();
    run_batch(&cfg).unwrap();
    let second = files(&out, &["report.json"]);
    assert_eq!(first, second, "rerun differs");

    assert_eq!(digest(&first), THERMAL_GOLDEN);
}

#[test]
fn synthetic_dataset_is_deterministic() {
    let a = tempfile::tempdir().unwrap();
    let b = tempfile::tempdir().unwrap();
    make_synthetic_dataset(&scene(THERMAL_SCENE), a.path(), 5).unwrap();
    make_synthetic_dataset(&scene(THERMAL_SCENE), b.path(), 5).unwrap();
    let skip = [CONFIG_FILE];
    assert_eq!(files(a.path(), &skip), files(b.path(), &skip));
    let c = tempfile::tempdir().unwrap();
    make_synthetic_dataset(&scene(THERMAL_SCENE), c.path(), 6).unwrap();
    assert_ne!(files(a.path(), &skip), files(c.path(), &skip));
}

const RADAR_SCENE: &str = r#"{
  "frames": FRAMES,
  "camera": {"width": 160, "height": 120, "hfov_deg": 90},
  "sensors": [{"sensor_id": "mmwave0", "kind": "mmwave_radar"}],
  "objects": [{"name": "box", "azimuth_deg": 10, "elevation_deg": 0, "emitter": true}]
}"#;

fn radar_scene(frames: usize) -> String {
    RADAR_SCENE.replace("FRAMES", &frames.to_string())
}

#[test]
fn zero_frame_dataset_succeeds() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), &radar_scene(0), 1);
    let report = run_batch(&cfg).unwrap();
    assert_eq!(report.frames, 0);
    assert_eq!(report.frames_total, 0);
    assert!(cfg.output_path().join("report.json").is_file());
}

#[test]
fn missing_calibration_refuses_to_start() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), &radar_scene(2), 1);
    std::fs::remove_file(tmp.path().join("calib/mmwave0.json")).unwrap();
    let err = run_batch(&cfg).unwrap_err();
    assert!(err.to_string().contains("mmwave0"), "{err}");
    assert_eq!(err.exit_code(), 2);
    assert!(!cfg.output_path().exists());
}

#[test]
fn unreadable_frames_are_skipped_then_fail_over_one_percent() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), &radar_scene(10), 1);
    std::fs::write(tmp.path().join("4_rgb.png"), b"not a png").unwrap();
    let err = run_batch(&cfg).unwrap_err();
    assert!(matches!(err, Error::Format(_)), "{err}");
    assert_eq!(err.exit_code(), 4);
    let report: serde_json::Value =
        serde_json::from_slice(&std::fs::read(cfg.output_path().join("report.json")).unwrap()).unwrap();
    assert_eq!(report["frames"], 9);
    assert_eq!(report["skipped_frames"], serde_json::json!([4]));
    assert!(!cfg.output_path().join("4_mmwave0.png").exists());
    assert!(cfg.output_path().join("5_mmwave0.png").exists());
}

#[test]
fn report_echoes_defaults() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), &radar_scene(1), 1);
    let report = run_batch(&cfg).unwrap();
    let s = &report.config["sensors"][0];
    assert_eq!(s["alpha"], 1.0);
    assert_eq!(s["floor_db"], -120.0);
    assert_eq!(s["grid"]["az_steps"], 91);
    assert_eq!(report.config["mask_provider"]["refresh_period_s"], 2.0);
    for stage in ["preprocess", "calibrate", "blend", "frame"] {
        assert!(report.timing.contains_key(stage), "{stage}");
    }
}

const HOLD_SCENE: &str = r#"{
  "frames": 4,
  "camera": {"width": 160, "height": 120, "hfov_deg": 90},
  "sensors": [{"sensor_id": "t0", "kind": "thermal", "every": 2, "width": 40, "height": 30}],
  "objects": [{"name": "cup", "azimuth_deg": 0, "elevation_deg": 0, "size_deg": [30, 30], "temperature_c": 50}]
}"#;

#[test]
fn latest_sample_is_held_between_sensor_samples() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), HOLD_SCENE, 3);
    run_batch(&cfg).unwrap();
    let out = cfg.output_path();
    let img = |i: usize| RgbImage::load_png(&out.join(format!("{i}_t0.png"))).unwrap();
    let rgb = |i: usize| RgbImage::load_png(&tmp.path().join(format!("{i}_rgb.png"))).unwrap();
    let mask = BinaryMask::load_png(&tmp.path().join("masks/0.png")).unwrap();
    let (x, y) = (80, 60);
    assert!(mask.get(x, y));
    // Frame 1 has no thermal sample: it repaints frame 0's sensor pixels.
    assert_eq!(img(1).get(x, y), img(0).get(x, y));
    assert_ne!(rgb(1).get(x, y), img(1).get(x, y));
    // Outside the mask every frame is its own RGB.
    assert_eq!(img(1).get(2, 2), rgb(1).get(2, 2));
}

#[test]
fn output_equals_rgb_before_first_sample() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), HOLD_SCENE, 3);
    let ds = Dataset::open(tmp.path()).unwrap();
    let engine = Engine::new(cfg.resolve_sensors().unwrap(), ds.manifest().rgb_dims()).unwrap();
    let mut bundle = ds.load(0, &["t0"]).unwrap();
    bundle.payloads.clear();
    let mask = SegMask {
        mask: BinaryMask::ones(160, 120),
        prompt_text: "cup".into(),
        source: MaskSource::File,
        generation: 1,
        created_at: Duration::ZERO,
    };
    let mut held = engine.initial_samples();
    let out = engine
        .process_frame(&bundle, &mut held, &mask, Duration::ZERO, &mut Timings::default())
        .unwrap();
    assert_eq!(out[0].image, bundle.rgb);
}

#[test]
fn stream_writes_every_sensor_in_frame_order() {
    let scene_text = r#"{
      "frames": 12,
      "camera": {"width": 160, "height": 120, "hfov_deg": 90},
      "sensors": [
        {"sensor_id": "a", "kind": "thermal", "width": 40, "height": 30},
        {"sensor_id": "b", "kind": "mmwave_radar"},
        {"sensor_id": "c", "kind": "microphone_array"}
      ],
      "objects": [{"name": "x", "azimuth_deg": 5, "elevation_deg": 5, "emitter": true, "temperature_c": 40}]
    }"#;
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), scene_text, 2);
    let ds = Dataset::open(tmp.path()).unwrap();
    let engine = Engine::new(cfg.resolve_sensors().unwrap(), ds.manifest().rgb_dims()).unwrap();
    let frames = (0..ds.len()).map(|i| (i as u64, ds.load(i, &["a", "b", "c"])));
    let out = tmp.path().join("stream");
    std::fs::create_dir_all(&out).unwrap();
    let mask = BinaryMask::load_png(&tmp.path().join("masks/0.png")).unwrap();
    let masks = FnMaskBackend::new("file", move |_: &str, _: &RgbImage, _| Ok(mask.clone()));
    let opts = StreamOptions {
        refresh_period: Duration::from_millis(20),
        backend_timeout: Duration::from_secs(5),
        output_dir: Some(out.clone()),
        realtime: false,
        heatmaps: None,
        config: cfg.echo(),
    };
    let ctx = TaskContext::new("find x", "t").unwrap();
    let report =
        run_stream_with(&engine, ctx, Arc::new(FixedPrompt::new("x")), Arc::new(masks), frames, &opts).unwrap();
    assert_eq!(report.frames, 12);
    assert_eq!(report.outputs_written, 36);
    let idx: Vec<u64> = report.per_frame.iter().map(|f| f.frame_idx).collect();
    assert_eq!(idx, (0..12).collect::<Vec<_>>());
    let gens: Vec<u64> = report.per_frame.iter().map(|f| f.mask_generation).collect();
    assert!(gens.windows(2).all(|w| w[1] == w[0] || w[1] == w[0] + 1), "{gens:?}");
    for i in 0..12 {
        for s in ["a", "b", "c"] {
            assert!(out.join(format!("{i}_{s}.png")).is_file());
        }
    }
    // Blending is deterministic given the same held samples and mask.
    let batch_like = engine
        .process_frame(
            &ds.load(3, &["a", "b", "c"]).unwrap(),
            &mut engine.initial_samples(),
            &SegMask {
                mask: BinaryMask::load_png(&tmp.path().join("masks/0.png")).unwrap(),
                prompt_text: "x".into(),
                source: MaskSource::File,
                generation: 1,
                created_at: Duration::ZERO,
            },
            Duration::ZERO,
            &mut Timings::default(),
        )
        .unwrap();
    assert_eq!(batch_like[1].image, RgbImage::load_png(&out.join("3_b.png")).unwrap());
}

#[test]
fn bundle_of_wrong_size_is_rejected() {
    let tmp = tempfile::tempdir().unwrap();
    let cfg = synth(tmp.path(), HOLD_SCENE, 3);
    let engine = Engine::new(cfg.resolve_sensors().unwrap(), (160, 120)).unwrap();
    let bundle = FrameBundle {
        frame_idx: 0,
        timestamp_ns: 0,
        rgb: RgbImage::filled(10, 10, [0, 0, 0]),
        payloads: Default::default(),
    };
    let mask = SegMask {
        mask: BinaryMask::ones(10, 10),
        prompt_text: "x".into(),
        source: MaskSource::File,
        generation: 1,
        created_at: Duration::ZERO,
    };
    assert!(engine
        .process_frame(&bundle, &mut engine.initial_samples(), &mask, Duration::ZERO, &mut Timings::default())
        .is_err());
    assert!(Engine::new(cfg.resolve_sensors().unwrap(), (640, 480)).is_err());
}
