use std::path::Path;

use omnifuse::pipeline::{make_synthetic_dataset, run_bench, BenchConfig, RunConfig, SceneScript, CONFIG_FILE};

fn bench(scene: &str, frames: usize) -> omnifuse::pipeline::BenchReport {
    let tmp = tempfile::tempdir().unwrap();
    let script = SceneScript::parse(scene, Path::new("scene.json")).unwrap();
    make_synthetic_dataset(&script, tmp.path(), 1).unwrap();
    let cfg = RunConfig::load(&tmp.path().join(CONFIG_FILE)).unwrap();
    let opts = BenchConfig {
        frames,
        warmup: 10,
        resolution: [640, 480],
    };
    run_bench(cfg.resolve_sensors().unwrap(), &opts, 2).unwrap()
}

const THERMAL: &str = r#"{"sensors": [{"sensor_id": "thermal0", "kind": "thermal"}]}"#;
const RADAR: &str = r#"{"sensors": [{"sensor_id": "radar0", "kind": "mmwave_radar", "elements": 6}]}"#;

#[test]
fn thermal_only_sustains_thirty_fps() {
    let r = bench(THERMAL, 200);
    let fps = r.end_to_end_fps.unwrap();
    println!("thermal-only {fps:.1} fps");
    assert!(fps >= 30.0, "{fps:.1} fps");
    assert!(r.stages.contains_key("end_to_end"));
}

#[test]
fn cached_beamform_is_five_times_faster() {
    let r = bench(RADAR, 20);
    let speedup = r.beamform_cache_speedup["radar0"];
    println!("cached beamform {speedup:.1}x faster");
    assert!(speedup >= 5.0, "{speedup:.1}x");
}

#[test]
fn zero_frame_bench_is_empty() {
    let r = bench(THERMAL, 0);
    assert_eq!(r.frames, 0);
    assert!(r.stages.is_empty());
    assert!(r.end_to_end_fps.is_none());
}
