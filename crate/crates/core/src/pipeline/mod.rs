//! End-to-end runs: config, datasets, synthetic scenes, batch and stream
//! execution, and throughput benchmarking.

mod bench;
mod calib_check;
mod config;
mod dataset;
mod report;
mod run;
mod sensor;
mod synth;

pub use bench::run_bench;
pub use calib_check::{check_calibrations, CalibrationCheck, ROUND_TRIP_TOLERANCE_PX};
pub use config::{
    BenchConfig, HeatmapFormat, MaskProviderConfig, Mode, ResolvedSensor, RunConfig, SensorConfig, SensorType,
    DEFAULT_SPEED_OF_SOUND,
};
pub use dataset::{
    load_payload, read_wav, write_wav, AudioPayload, Dataset, FrameBundle, Manifest, ManifestEntry,
    SensorPayload, StreamInfo, MANIFEST_FILE,
};
pub use report::{BenchReport, FrameRecord, RunReport, StageSummary, Timings};
pub use run::{
    output_stem, prepare_input, run_batch, run_batch_with, run_stream, run_stream_with,
    write_heatmaps, write_outputs, Engine, HeldSamples, Sidecar, StreamOptions, MAX_SKIPPED_FRACTION, REPORT_FILE,
};
pub use sensor::{SensorFrame, SensorProcessor, StageTimes};
pub use synth::{
    make_synthetic_dataset, CameraModel, FrameTruth, GroundTruth, ObjectTruth, SceneObject,
    SceneScript, SceneSensor, SyntheticDataset, CONFIG_FILE, GROUND_TRUTH_FILE,
};
