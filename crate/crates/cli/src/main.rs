use std::fs::File;
use std::io::{self, BufReader, BufWriter};
use std::path::{Path, PathBuf};

use anyhow::{bail, Context, Result};
use clap::{Parser, Subcommand, ValueEnum};
use tofprox_core::calibration::{read_calibration, write_calibration};
use tofprox_core::frames::{read_frames, write_frames, FrameRecord};
use tofprox_core::reference::{read_dataset, write_dataset};
use tofprox_core::{
    compute_calibration, detect, BackgroundModel, DetectorConfig, InterpolationMode, ReferenceDataset,
};
use tofprox_eval::bench::{Benchmark, EvalFrame, Stream};
use tofprox_eval::report::write_report;
use tofprox_eval::{run, EvalConfig, Experiment};
use tofprox_sim::{capture_robot_frames, stream_rng};

#[derive(Parser)]
#[command(name = "tofprox", version, about = "Object detection near a robot arm from transient histograms")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Run the detector on a frame file; one CSV line per frame on stdout.
    Detect {
        /// Reference dataset.
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        /// Likelihood threshold.
        #[arg(long, default_value_t = 0.001)]
        t: f64,
        /// Minimum segment length, bins.
        #[arg(long, default_value_t = 4)]
        c: usize,
        /// Calibration file from `calibrate`.
        #[arg(long)]
        calibration: Option<PathBuf>,
        #[arg(long, value_enum, default_value_t = Mode::Barycentric)]
        mode: Mode,
        /// First bin considered for detection.
        #[arg(long, default_value_t = 15)]
        trim_lo: usize,
        /// One past the last bin considered; defaults to the bin count.
        #[arg(long)]
        trim_hi: Option<usize>,
    },
    /// Compute a power-cycle calibration from frames captured at the first
    /// reference pose.
    Calibrate {
        #[arg(long)]
        model: PathBuf,
        #[arg(long)]
        frames: PathBuf,
        #[arg(long)]
        out: PathBuf,
    },
    /// Simulate a reference scan and write the dataset.
    SimulateReference {
        /// Benchmark configuration (TOML); defaults apply when omitted.
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
        /// Signal domain of the stored statistics.
        #[arg(long, value_enum, default_value_t = Domain::Processed)]
        domain: Domain,
    },
    /// Simulate evaluation-session frames and write a frame file.
    SimulateEval {
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long, value_enum)]
        suite: Suite,
        #[arg(long)]
        out: PathBuf,
        /// Optional ground-truth CSV.
        #[arg(long)]
        truth: Option<PathBuf>,
    },
    /// Run one evaluation protocol and write report.csv, frames.csv and
    /// config.snapshot.
    Eval {
        /// self-detection, detection, baseline, roc, ablation or ambient.
        experiment: String,
        #[arg(long)]
        config: Option<PathBuf>,
        #[arg(long)]
        out: PathBuf,
    },
}

#[derive(Clone, Copy, ValueEnum)]
enum Mode {
    Barycentric,
    Nearest,
}

#[derive(Clone, Copy, ValueEnum)]
enum Domain {
    Processed,
    Raw,
}

#[derive(Clone, Copy, ValueEnum)]
enum Suite {
    /// Robot-only frames at the first reference pose, for `calibrate`.
    Calibration,
    RobotOnly,
    Objects,
    BeyondRobot,
}

fn main() -> Result<()> {
    match Cli::parse().command {
        Command::Detect {
            model,
            frames,
            t,
            c,
            calibration,
            mode,
            trim_lo,
            trim_hi,
        } => run_detect(&model, &frames, t, c, calibration.as_deref(), mode, trim_lo, trim_hi),
        Command::Calibrate { model, frames, out } => run_calibrate(&model, &frames, &out),
        Command::SimulateReference { config, out, domain } => {
            let bench = Benchmark::build(&load_config(config.as_deref())?)?;
            let ds = match domain {
                Domain::Processed => &bench.dataset,
                Domain::Raw => bench.raw_dataset()?,
            };
            write_dataset(ds, BufWriter::new(create(&out)?))?;
            Ok(())
        }
        Command::SimulateEval {
            config,
            suite,
            out,
            truth,
        } => run_simulate_eval(&load_config(config.as_deref())?, suite, &out, truth.as_deref()),
        Command::Eval {
            experiment,
            config,
            out,
        } => {
            let experiment: Experiment = experiment.parse()?;
            let config = load_config(config.as_deref())?;
            let bench = Benchmark::build(&config)?;
            let report = run(experiment, &bench)?;
            write_report(&report, &config, &out)
                .with_context(|| format!("writing results to {}", out.display()))?;
            for row in &report.rows {
                eprintln!(
                    "{:<44} fpr={} tpr={} err_m={}",
                    row.condition,
                    fmt_opt(row.fpr),
                    fmt_opt(row.tpr),
                    fmt_opt(row.mean_abs_error_m)
                );
            }
            Ok(())
        }
    }
}

fn fmt_opt(v: Option<f64>) -> String {
    v.map_or_else(|| "-".into(), |x| format!("{x:.4}"))
}

fn open(path: &Path) -> Result<BufReader<File>> {
    Ok(BufReader::new(
        File::open(path).with_context(|| format!("opening {}", path.display()))?,
    ))
}

fn create(path: &Path) -> Result<File> {
    File::create(path).with_context(|| format!("creating {}", path.display()))
}

fn load_config(path: Option<&Path>) -> Result<EvalConfig> {
    match path {
        Some(p) => {
            let text = std::fs::read_to_string(p).with_context(|| format!("reading {}", p.display()))?;
            Ok(EvalConfig::from_toml(&text).with_context(|| format!("in {}", p.display()))?)
        }
        None => Ok(EvalConfig::default()),
    }
}

fn load_dataset(path: &Path) -> Result<ReferenceDataset> {
    read_dataset(open(path)?).with_context(|| format!("reading reference dataset {}", path.display()))
}

fn load_frames(path: &Path) -> Result<Vec<FrameRecord>> {
    read_frames(open(path)?).with_context(|| format!("reading frames {}", path.display()))
}

#[allow(clippy::too_many_arguments)]
fn run_detect(
    model: &Path,
    frames: &Path,
    t: f64,
    c: usize,
    calibration: Option<&Path>,
    mode: Mode,
    trim_lo: usize,
    trim_hi: Option<usize>,
) -> Result<()> {
    let ds = load_dataset(model)?;
    let bins = ds.bins;
    let mode = match mode {
        Mode::Barycentric => InterpolationMode::Barycentric,
        Mode::Nearest => InterpolationMode::NearestNeighbor,
    };
    let model = BackgroundModel::build(ds, mode)?;
    let calib = match calibration {
        Some(p) => Some(read_calibration(open(p)?).with_context(|| format!("reading {}", p.display()))?),
        None => None,
    };
    let cfg = DetectorConfig {
        threshold: t,
        min_segment: c,
        trim: (trim_lo, trim_hi.unwrap_or(bins)),
        ..DetectorConfig::default()
    };
    cfg.validate(bins)?;
    let frames = load_frames(frames)?;

    let mut out = csv::Writer::from_writer(io::stdout().lock());
    out.write_record(["frame_id", "n_detections", "closest_bin", "closest_distance_m", "extrapolated_flag"])?;
    let mut skipped = 0;
    for f in &frames {
        match detect(&f.histogram, &f.q, &model, &cfg, calib.as_ref()) {
            Ok(d) => {
                let closest = d.closest();
                out.write_record([
                    f.id.clone(),
                    d.detections.len().to_string(),
                    closest.map_or(String::new(), |x| x.peak_bin.to_string()),
                    closest.map_or(String::new(), |x| format!("{:.5}", x.distance)),
                    d.extrapolated.to_string(),
                ])?;
            }
            // No decision: every field but the id stays empty.
            Err(e) if e.is_degenerate_signal() => {
                skipped += 1;
                out.write_record([f.id.as_str(), "", "", "", ""])?;
            }
            Err(e) => return Err(e).with_context(|| format!("frame `{}`", f.id)),
        }
    }
    out.flush()?;
    if skipped > 0 {
        eprintln!("{skipped} frame(s) carried no signal and were not classified");
    }
    Ok(())
}

fn run_calibrate(model: &Path, frames: &Path, out: &Path) -> Result<()> {
    let ds = load_dataset(model)?;
    let anchor = ds
        .calibration_anchor
        .as_ref()
        .context("reference dataset has no `#anchor` line; it cannot calibrate")?;
    let pose = ds.poses[0].q.clone();
    let frames = load_frames(frames)?;
    if frames.is_empty() {
        bail!("no calibration frames");
    }
    let away = frames
        .iter()
        .filter(|f| f.q.distance_squared(pose.angles()) > 1e-12)
        .count();
    if away > 0 {
        eprintln!("warning: {away} frame(s) were not captured at the calibration pose {:?}", pose.angles());
    }
    let hists: Vec<_> = frames.into_iter().map(|f| f.histogram).collect();
    let calib = compute_calibration(anchor, &hists, pose)?;
    write_calibration(&calib, BufWriter::new(create(out)?))?;
    Ok(())
}

fn run_simulate_eval(config: &EvalConfig, suite: Suite, out: &Path, truth: Option<&Path>) -> Result<()> {
    let bench = Benchmark::build(config)?;
    let frames: Vec<EvalFrame> = match suite {
        Suite::Calibration => {
            let pose = bench.dataset.poses[0].q.clone();
            let mut rng = stream_rng(Stream::Calibration.seed(config.seed), 0);
            capture_robot_frames(&bench.arm, &pose, &bench.session_spec, config.scenes.calibration_frames, &mut rng)?
                .into_iter()
                .enumerate()
                .map(|(j, frame)| -> Result<EvalFrame> {
                    Ok(EvalFrame {
                        id: format!("calib-{j:05}"),
                        robot_surface_m: bench.arm.farthest_surface(pose.angles())?,
                        labeled: tofprox_sim::LabeledFrame {
                            frame,
                            q: pose.clone(),
                            ground_truth: tofprox_sim::GroundTruth {
                                object_present: false,
                                distance: None,
                            },
                        },
                    })
                })
                .collect::<Result<_>>()?
        }
        Suite::RobotOnly => bench.robot_only_frames(&bench.session_spec)?,
        Suite::Objects => bench.object_frames()?,
        Suite::BeyondRobot => bench.beyond_robot_frames()?,
    };
    let records: Vec<FrameRecord> = frames
        .iter()
        .map(|f| FrameRecord {
            id: f.id.clone(),
            q: f.labeled.q.clone(),
            histogram: f.labeled.frame.clone(),
        })
        .collect();
    write_frames(&records, BufWriter::new(create(out)?))?;
    if let Some(path) = truth {
        let mut w = csv::Writer::from_writer(create(path)?);
        w.write_record(["frame_id", "object_present", "true_distance_m", "robot_surface_m"])?;
        for f in &frames {
            let gt = f.labeled.ground_truth;
            w.write_record([
                f.id.clone(),
                gt.object_present.to_string(),
                gt.distance.map_or(String::new(), |d| d.to_string()),
                f.robot_surface_m.to_string(),
            ])?;
        }
        w.flush()?;
    }
    Ok(())
}
