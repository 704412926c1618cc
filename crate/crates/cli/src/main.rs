use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Parser, Subcommand, ValueEnum};
use log::error;
use omnifuse::pipeline::{
    check_calibrations, make_synthetic_dataset, run_batch, run_bench, run_stream, HeatmapFormat, Mode,
    RunConfig, SceneScript,
};
use omnifuse::{Error, Result};

#[derive(Parser)]
#[command(name = "fuse", version, about = "Overlay non-visual sensor data onto RGB frames inside task masks")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the pipeline described by a config file.
    Run {
        #[arg(long)]
        config: PathBuf,
        #[arg(long, value_enum)]
        mode: Option<ModeArg>,
        /// Output directory, overriding the config.
        #[arg(long)]
        out: Option<PathBuf>,
        #[arg(long)]
        seed: Option<u64>,
        /// Also write each array sensor's beamformer heatmap per sample.
        #[arg(long, value_enum)]
        heatmaps: Option<HeatmapArg>,
    },
    /// Generate a synthetic dataset with ground truth from a scene script.
    Synth {
        #[arg(long)]
        scene: PathBuf,
        #[arg(long)]
        out: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
    },
    /// Calibration utilities.
    Calib {
        #[command(subcommand)]
        command: CalibCommand,
    },
}

#[derive(Subcommand)]
enum CalibCommand {
    /// Check that every sensor's calibration round-trips and fits the frame.
    Check {
        #[arg(long)]
        config: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum ModeArg {
    Batch,
    Stream,
    Bench,
}

#[derive(Clone, Copy, ValueEnum)]
enum HeatmapArg {
    /// Raw dB as a portable float map.
    Pfm,
    /// Normalized 16-bit grayscale PNG.
    Png,
}

impl From<HeatmapArg> for HeatmapFormat {
    fn from(h: HeatmapArg) -> Self {
        match h {
            HeatmapArg::Pfm => HeatmapFormat::Pfm,
            HeatmapArg::Png => HeatmapFormat::Png,
        }
    }
}

impl From<ModeArg> for Mode {
    fn from(m: ModeArg) -> Self {
        match m {
            ModeArg::Batch => Mode::Batch,
            ModeArg::Stream => Mode::Stream,
            ModeArg::Bench => Mode::Bench,
        }
    }
}

fn print_json<T: serde::Serialize>(v: &T) {
    println!("{}", serde_json::to_string_pretty(v).expect("serializable"));
}

fn write_json<T: serde::Serialize>(path: &Path, v: &T) -> Result<()> {
    let text = serde_json::to_string_pretty(v).expect("serializable");
    std::fs::write(path, text + "\n").map_err(|e| Error::Io {
        path: path.to_path_buf(),
        source: e,
    })
}

fn run(cli: Cli) -> Result<()> {
    match cli.command {
        Command::Run {
            config,
            mode,
            out,
            seed,
            heatmaps,
        } => {
            let mut cfg = RunConfig::load(&config)?;
            if let Some(m) = mode {
                cfg.mode = m.into();
            }
            if let Some(o) = out {
                cfg.output = std::path::absolute(&o).map_err(|e| Error::Io { path: o, source: e })?;
            }
            if let Some(s) = seed {
                cfg.seed = s;
            }
            if let Some(h) = heatmaps {
                cfg.heatmaps = Some(h.into());
            }
            match cfg.mode {
                Mode::Batch | Mode::Stream => {
                    let report = if cfg.mode == Mode::Batch {
                        run_batch(&cfg)?
                    } else {
                        run_stream(&cfg)?
                    };
                    println!(
                        "{} frames processed, {} skipped, {} outputs in {}",
                        report.frames,
                        report.frames_skipped,
                        report.outputs_written,
                        cfg.output_path().display()
                    );
                }
                Mode::Bench => {
                    let sensors = cfg.resolve_sensors()?;
                    let report = run_bench(sensors, &cfg.bench, cfg.seed)?;
                    let dir = cfg.output_path();
                    std::fs::create_dir_all(&dir).map_err(|e| Error::Io {
                        path: dir.clone(),
                        source: e,
                    })?;
                    write_json(&dir.join("bench.json"), &report)?;
                    print_json(&report);
                }
            }
        }
        Command::Synth { scene, out, seed } => {
            let script = SceneScript::load(&scene)?;
            let d = make_synthetic_dataset(&script, &out, seed)?;
            println!(
                "{} frames written to {}",
                d.manifest.frames.len(),
                d.dir.display()
            );
        }
        Command::Calib {
            command: CalibCommand::Check { config },
        } => {
            let cfg = RunConfig::load(&config)?;
            let checks = check_calibrations(&cfg)?;
            print_json(&checks);
            if let Some(bad) = checks.iter().find(|c| !c.ok) {
                return Err(Error::Config(format!(
                    "calibration for sensor {:?} failed its check",
                    bad.sensor_id
                )));
            }
        }
    }
    Ok(())
}

fn main() -> ExitCode {
    env_logger::Builder::from_env(env_logger::Env::new().filter_or("OMNIFUSE_LOG", "info")).init();
    let cli = Cli::parse();
    match run(cli) {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) => {
            error!("{e}");
            eprintln!("error: {e}");
            ExitCode::from(e.exit_code() as u8)
        }
    }
}
