//! The evaluation protocols. Each returns per-frame outcomes for every
//! condition plus one aggregate row per condition.

use rayon::prelude::*;
use tofprox_core::{
    detect, BackgroundModel, CalibrationOffset, DetectorConfig, InterpolationMode,
};

use crate::baseline::onsensor_peaks;
use crate::bench::{Benchmark, EvalFrame};
use crate::metrics::{conditions, detector_outcome, peak_outcome, summarize, ConditionRow, FrameOutcome};
use crate::{EvalError, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Experiment {
    /// Robot-only false positives against grid density and interpolation.
    SelfDetection,
    /// True positives, false positives and distance error of the full
    /// pipeline.
    Detection,
    /// The detector against model-free peak picking.
    Baseline,
    /// Threshold and segment-length sweep.
    Roc,
    /// Pipeline stages switched off one at a time.
    Ablation,
    /// Robot-only false positives under changed ambient light.
    Ambient,
}

impl Experiment {
    pub const ALL: [Experiment; 6] = [
        Experiment::SelfDetection,
        Experiment::Detection,
        Experiment::Baseline,
        Experiment::Roc,
        Experiment::Ablation,
        Experiment::Ambient,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Experiment::SelfDetection => "self-detection",
            Experiment::Detection => "detection",
            Experiment::Baseline => "baseline",
            Experiment::Roc => "roc",
            Experiment::Ablation => "ablation",
            Experiment::Ambient => "ambient",
        }
    }
}

impl std::str::FromStr for Experiment {
    type Err = EvalError;
    fn from_str(s: &str) -> Result<Self> {
        Self::ALL
            .into_iter()
            .find(|e| e.name() == s)
            .ok_or_else(|| {
                let names: Vec<_> = Self::ALL.iter().map(|e| e.name()).collect();
                EvalError::Config(format!("unknown experiment `{s}`; expected one of {}", names.join(", ")))
            })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub experiment: String,
    pub rows: Vec<ConditionRow>,
    pub frames: Vec<FrameOutcome>,
}

impl EvalReport {
    fn from_outcomes(experiment: Experiment, frames: Vec<FrameOutcome>) -> Self {
        let rows = conditions(&frames)
            .iter()
            .map(|c| summarize(experiment.name(), c, &frames))
            .collect();
        Self {
            experiment: experiment.name().to_string(),
            rows,
            frames,
        }
    }

    pub fn row(&self, condition: &str) -> Option<&ConditionRow> {
        self.rows.iter().find(|r| r.condition == condition)
    }
}

/// Runs the detector on every frame. Frames that pre-process to nothing
/// are recorded as "no decision".
pub fn detect_suite(
    frames: &[EvalFrame],
    condition: &str,
    model: &BackgroundModel,
    det: &DetectorConfig,
    calib: Option<&CalibrationOffset>,
    window: f64,
) -> Result<Vec<FrameOutcome>> {
    frames
        .par_iter()
        .map(|f| match detect(&f.labeled.frame, &f.labeled.q, model, det, calib) {
            Ok(d) => Ok(detector_outcome(condition, f, Some(&d), window)),
            Err(e) if e.is_degenerate_signal() => Ok(detector_outcome(condition, f, None, window)),
            Err(e) => Err(e.into()),
        })
        .collect()
}

pub fn run(experiment: Experiment, bench: &Benchmark) -> Result<EvalReport> {
    let outcomes = match experiment {
        Experiment::SelfDetection => self_detection(bench)?,
        Experiment::Detection => detection(bench)?,
        Experiment::Baseline => baseline(bench)?,
        Experiment::Roc => return roc(bench),
        Experiment::Ablation => ablation(bench)?,
        Experiment::Ambient => ambient(bench)?,
    };
    Ok(EvalReport::from_outcomes(experiment, outcomes))
}

fn window(bench: &Benchmark) -> f64 {
    bench.config.scenes.match_window_m
}

fn mode_name(mode: InterpolationMode) -> &'static str {
    match mode {
        InterpolationMode::Barycentric => "barycentric",
        InterpolationMode::NearestNeighbor => "nearest",
    }
}

fn self_detection(bench: &Benchmark) -> Result<Vec<FrameOutcome>> {
    let frames = bench.robot_only_frames(&bench.session_spec)?;
    let mut out = Vec::new();
    for &factor in &bench.config.sweep.subsample_factors {
        let coarse = bench.dataset.subsample(factor)?;
        for mode in [InterpolationMode::Barycentric, InterpolationMode::NearestNeighbor] {
            let model = BackgroundModel::build(coarse.clone(), mode)?;
            let cond = format!("factor={factor};mode={}", mode_name(mode));
            out.extend(detect_suite(
                &frames,
                &cond,
                &model,
                &bench.detector,
                Some(&bench.calibration),
                window(bench),
            )?);
        }
    }
    Ok(out)
}

fn standard_suite(bench: &Benchmark) -> Result<Vec<EvalFrame>> {
    let mut frames = bench.robot_only_frames(&bench.session_spec)?;
    frames.extend(bench.object_frames()?);
    Ok(frames)
}

fn detection(bench: &Benchmark) -> Result<Vec<FrameOutcome>> {
    let model = BackgroundModel::build(bench.dataset.clone(), InterpolationMode::Barycentric)?;
    detect_suite(
        &standard_suite(bench)?,
        "base",
        &model,
        &bench.detector,
        Some(&bench.calibration),
        window(bench),
    )
}

fn onsensor_suite(bench: &Benchmark, frames: &[EvalFrame], condition: &str) -> Vec<FrameOutcome> {
    let kde = bench.config.reference.kde();
    frames
        .par_iter()
        .map(|f| {
            let peaks = onsensor_peaks(&f.labeled.frame, &kde, &bench.detector, &bench.config.baseline);
            peak_outcome(condition, f, &peaks, &bench.detector, window(bench))
        })
        .collect()
}

fn baseline(bench: &Benchmark) -> Result<Vec<FrameOutcome>> {
    let model = BackgroundModel::build(bench.dataset.clone(), InterpolationMode::Barycentric)?;
    let standard = standard_suite(bench)?;
    let beyond = bench.beyond_robot_frames()?;
    let mut out = Vec::new();
    for (suite, frames) in [("standard", &standard), ("beyond-robot", &beyond)] {
        out.extend(detect_suite(
            frames,
            &format!("method=detector;suite={suite}"),
            &model,
            &bench.detector,
            Some(&bench.calibration),
            window(bench),
        )?);
        out.extend(onsensor_suite(bench, frames, &format!("method=onsensor;suite={suite}")));
    }
    Ok(out)
}

fn roc(bench: &Benchmark) -> Result<EvalReport> {
    let model = BackgroundModel::build(bench.dataset.clone(), InterpolationMode::Barycentric)?;
    let frames = standard_suite(bench)?;
    let mut outcomes = Vec::new();
    for &c in &bench.config.sweep.roc_min_segments {
        for &t in &bench.config.sweep.roc_thresholds {
            let det = DetectorConfig {
                threshold: t,
                min_segment: c,
                ..bench.detector
            };
            outcomes.extend(detect_suite(
                &frames,
                &format!("t={t:e};c={c}"),
                &model,
                &det,
                Some(&bench.calibration),
                window(bench),
            )?);
        }
    }
    let mut report = EvalReport::from_outcomes(Experiment::Roc, outcomes);
    // Stable sort keeps sweep order among equal operating points.
    report.rows.sort_by(|a, b| {
        let key = |r: &ConditionRow| (r.fpr.unwrap_or(0.0), r.tpr.unwrap_or(0.0));
        let (ka, kb) = (key(a), key(b));
        ka.0.total_cmp(&kb.0).then(ka.1.total_cmp(&kb.1))
    });
    Ok(report)
}

fn ablation(bench: &Benchmark) -> Result<Vec<FrameOutcome>> {
    let frames = standard_suite(bench)?;
    let model = BackgroundModel::build(bench.dataset.clone(), InterpolationMode::Barycentric)?;
    let raw_model = BackgroundModel::build(bench.raw_dataset()?.clone(), InterpolationMode::Barycentric)?;
    let calib = Some(&bench.calibration);
    let det = &bench.detector;
    let w = window(bench);
    let mut out = detect_suite(&frames, "base", &model, det, calib, w)?;
    out.extend(detect_suite(&frames, "no-preprocessing", &raw_model, det, calib, w)?);
    out.extend(detect_suite(&frames, "no-calibration", &model, det, None, w)?);
    let untrimmed = det.untrimmed(bench.config.sensor.bins);
    out.extend(detect_suite(&frames, "no-trimming", &model, &untrimmed, calib, w)?);
    Ok(out)
}

fn ambient(bench: &Benchmark) -> Result<Vec<FrameOutcome>> {
    let model = BackgroundModel::build(bench.dataset.clone(), InterpolationMode::Barycentric)?;
    let raw_model = BackgroundModel::build(bench.raw_dataset()?.clone(), InterpolationMode::Barycentric)?;
    let base_rate = bench.reference_spec.ambient_rate;
    let mut out = Vec::new();
    for &m in &bench.config.sweep.ambient_multipliers {
        let spec = bench.session_spec.clone().with_ambient(base_rate * m);
        let frames = bench.robot_only_frames(&spec)?;
        for (label, model) in [("on", &model), ("off", &raw_model)] {
            out.extend(detect_suite(
                &frames,
                &format!("ambient={m};preprocessing={label}"),
                model,
                &bench.detector,
                Some(&bench.calibration),
                window(bench),
            )?);
        }
    }
    Ok(out)
}
