//! The synthetic benchmark: a reference scan, a powered-up evaluation
//! session with its own bias and calibration, and seeded frame suites.

use std::sync::OnceLock;

use rand::Rng;
use rayon::prelude::*;
use tofprox_core::{
    compute_calibration, estimate_dc_offset, BackgroundModel, CalibrationOffset, DetectorConfig,
    GridSpec, InterpolationMode, JointState, ReferenceDataset, Result, SignalDomain,
    TransientHistogram,
};
use tofprox_sim::sensor::render_patches;
use tofprox_sim::{
    capture_robot_frames, expected_scene, generate_eval_scene, generate_reference,
    power_cycle_bias, stream_rng, LabeledFrame, ObjectSpec, SensorSpec, SimArm,
};

use crate::config::EvalConfig;

/// Purposes of the random streams derived from the master seed.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Stream {
    Reference = 1,
    Calibration = 2,
    RobotOnly = 3,
    Objects = 4,
    BeyondRobot = 5,
    PowerBias = 6,
}

impl Stream {
    pub const ALL: [Stream; 6] = [
        Stream::Reference,
        Stream::Calibration,
        Stream::RobotOnly,
        Stream::Objects,
        Stream::BeyondRobot,
        Stream::PowerBias,
    ];

    pub fn name(self) -> &'static str {
        match self {
            Stream::Reference => "reference",
            Stream::Calibration => "calibration",
            Stream::RobotOnly => "robot_only",
            Stream::Objects => "objects",
            Stream::BeyondRobot => "beyond_robot",
            Stream::PowerBias => "power_bias",
        }
    }

    pub fn seed(self, master: u64) -> u64 {
        master ^ (self as u64).wrapping_mul(0x9E37_79B9_7F4A_7C15)
    }
}

/// One evaluation frame.
#[derive(Debug, Clone, PartialEq)]
pub struct EvalFrame {
    pub id: String,
    pub labeled: LabeledFrame,
    /// Farthest robot surface at the frame's joint state, meters.
    pub robot_surface_m: f64,
}

pub struct Benchmark {
    pub config: EvalConfig,
    pub arm: SimArm,
    pub grid: GridSpec,
    /// Sensor during the reference scan, without near-field bursts.
    pub reference_spec: SensorSpec,
    /// Sensor after the evaluation power-up, bias included.
    pub session_spec: SensorSpec,
    pub detector: DetectorConfig,
    pub dataset: ReferenceDataset,
    /// Barycentric model over the full reference grid.
    pub model: BackgroundModel,
    pub calibration: CalibrationOffset,
    raw_dataset: OnceLock<ReferenceDataset>,
}

impl Benchmark {
    pub fn build(config: &EvalConfig) -> crate::Result<Self> {
        config.validate()?;
        let arm = SimArm::with_dof(config.arm.dof)?;
        let grid = arm.grid(config.arm.grid_step)?;
        let reference_spec = config.sensor.reference_spec();
        let bias = power_cycle_bias(
            config.sensor.bins,
            config.scenes.power_bias_amplitude,
            Stream::PowerBias.seed(config.seed),
        );
        let session_spec = config.sensor.spec().with_power_bias(bias);
        let dataset = generate_reference(
            &arm,
            &grid,
            config.reference.frames_per_pose,
            &reference_spec,
            &config.reference.kde(),
            SignalDomain::Processed,
            Stream::Reference.seed(config.seed),
        )?;
        let calibration = calibrate_session(
            &arm,
            &dataset,
            &session_spec,
            config.scenes.calibration_frames,
            Stream::Calibration.seed(config.seed),
        )?;
        let model = BackgroundModel::build(dataset.clone(), InterpolationMode::Barycentric)?;
        Ok(Self {
            detector: config.detector.config(&config.sensor),
            model,
            config: config.clone(),
            arm,
            grid,
            reference_spec,
            session_spec,
            dataset,
            calibration,
            raw_dataset: OnceLock::new(),
        })
    }

    /// Raw-count statistics of the same reference captures.
    pub fn raw_dataset(&self) -> Result<&ReferenceDataset> {
        if let Some(ds) = self.raw_dataset.get() {
            return Ok(ds);
        }
        let ds = generate_reference(
            &self.arm,
            &self.grid,
            self.config.reference.frames_per_pose,
            &self.reference_spec,
            &self.config.reference.kde(),
            SignalDomain::Raw,
            Stream::Reference.seed(self.config.seed),
        )?;
        Ok(self.raw_dataset.get_or_init(|| ds))
    }

    /// Robot-only frames at uniformly random joint states, captured with
    /// `spec`. Frame `j` always sees the same joint state and random stream,
    /// so suites captured under different sensor settings are paired.
    pub fn robot_only_frames(&self, spec: &SensorSpec) -> Result<Vec<EvalFrame>> {
        let seed = Stream::RobotOnly.seed(self.config.seed);
        (0..self.config.scenes.robot_only_frames)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream_rng(seed, j as u64);
                let q = self.arm.sample_joint_state(&mut rng);
                let labeled = generate_eval_scene(&self.arm, &q, None, spec, &mut rng)?;
                self.frame(format!("robot-{j:05}"), labeled)
            })
            .collect()
    }

    /// Objects centered uniformly in the configured bin range.
    pub fn object_frames(&self) -> Result<Vec<EvalFrame>> {
        let s = &self.config.scenes;
        self.object_suite(Stream::Objects, "object", s.object_frames, |_| {
            (s.object_bin_min, s.object_bin_max)
        })
    }

    /// Objects placed behind every robot surface: centered between the
    /// farthest robot surface plus a margin and the top of the object range.
    pub fn beyond_robot_frames(&self) -> Result<Vec<EvalFrame>> {
        let s = &self.config.scenes;
        self.object_suite(Stream::BeyondRobot, "beyond", s.object_frames, |far_bin| {
            let lo = (far_bin + s.beyond_robot_margin_bins).min(s.object_bin_max);
            (lo, s.object_bin_max)
        })
    }

    fn object_suite(
        &self,
        stream: Stream,
        prefix: &str,
        count: usize,
        bin_range: impl Fn(f64) -> (f64, f64) + Sync,
    ) -> Result<Vec<EvalFrame>> {
        let seed = stream.seed(self.config.seed);
        let s = &self.config.scenes;
        let spec = &self.reference_spec;
        (0..count)
            .into_par_iter()
            .map(|j| {
                let mut rng = stream_rng(seed, j as u64);
                let q = self.arm.sample_joint_state(&mut rng);
                let far_bin = spec.distance_to_bin(self.arm.farthest_surface(q.angles())?);
                let (lo, hi) = bin_range(far_bin);
                let bin = lo + (hi - lo) * rng.random::<f64>();
                let distance = spec.bin_to_distance(bin);
                let albedo = self.object_albedo(&q, distance)?;
                let object = ObjectSpec {
                    distance,
                    albedo,
                    width: s.object_width,
                };
                let labeled =
                    generate_eval_scene(&self.arm, &q, Some(&object), &self.session_spec, &mut rng)?;
                self.frame(format!("{prefix}-{j:05}"), labeled)
            })
            .collect()
    }

    /// Albedo that lifts the object `contrast` model standard deviations
    /// above the robot-only mean in every bin of the best `contrast_bins`
    /// wide window around its peak, in the processed domain the detector
    /// works in.
    pub fn object_albedo(&self, q: &JointState, distance: f64) -> Result<f64> {
        let s = &self.config.scenes;
        let spec = &self.reference_spec;
        let expected = expected_scene(&self.arm, q, &[], spec)?;
        let offset = estimate_dc_offset(
            &TransientHistogram::new(expected.clone())?,
            &self.config.reference.kde(),
        );
        let norm: f64 = expected.iter().map(|e| (e - offset).abs()).sum();
        let unit = render_patches(
            &[ObjectSpec {
                distance,
                albedo: 1.0,
                width: s.object_width,
            }
            .patch()],
            spec,
        );
        let sigma = self.model.query(q)?.sigma;
        let mut peak = 0;
        for i in 1..unit.len() {
            if unit[i] > unit[peak] {
                peak = i;
            }
        }
        // Per-bin response in model sigmas; the window's weakest bin binds.
        let gain: Vec<f64> = unit.iter().zip(&sigma).map(|(u, s)| u / s).collect();
        let w = s.contrast_bins.min(gain.len());
        let first = (peak + 1).saturating_sub(w);
        let last = peak.min(gain.len() - w);
        let best = (first..=last)
            .map(|a| gain[a..a + w].iter().copied().fold(f64::INFINITY, f64::min))
            .fold(0.0, f64::max);
        if !(best > 0.0) {
            return Err(tofprox_core::Error::InvalidConfig(format!(
                "object at {distance} m deposits nothing in range"
            )));
        }
        Ok(s.contrast * norm / best)
    }

    fn frame(&self, id: String, labeled: LabeledFrame) -> Result<EvalFrame> {
        let robot_surface_m = self.arm.farthest_surface(labeled.q.angles())?;
        Ok(EvalFrame {
            id,
            labeled,
            robot_surface_m,
        })
    }
}

/// Captures calibration frames at the first reference pose and compares
/// them with the stored anchor.
pub fn calibrate_session(
    arm: &SimArm,
    dataset: &ReferenceDataset,
    spec: &SensorSpec,
    frames: usize,
    seed: u64,
) -> Result<CalibrationOffset> {
    let pose = dataset.poses[0].q.clone();
    let anchor = dataset.calibration_anchor.as_ref().ok_or_else(|| {
        tofprox_core::Error::InvalidConfig("reference dataset has no calibration anchor".into())
    })?;
    let fresh = capture_robot_frames(arm, &pose, spec, frames, &mut stream_rng(seed, 0))?;
    compute_calibration(anchor, &fresh, pose)
}

/// Joint state helper for tests and tools.
pub fn joint_state(angles: &[f64]) -> Result<JointState> {
    JointState::new(angles.to_vec())
}
