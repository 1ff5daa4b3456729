//! Benchmark configuration, read from TOML. Every field has a default, so an
//! empty file is a valid configuration.

use serde::{Deserialize, Serialize};
use tofprox_core::{DetectorConfig, KdeConfig};
use tofprox_sim::{NearField, SensorSpec};

use crate::EvalError;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct EvalConfig {
    /// Master seed; every random stream is derived from it.
    pub seed: u64,
    pub arm: ArmConfig,
    pub sensor: SensorConfig,
    pub reference: ReferenceConfig,
    pub scenes: SceneConfig,
    pub detector: DetectorSection,
    pub baseline: BaselineConfig,
    pub sweep: SweepConfig,
}

impl Default for EvalConfig {
    fn default() -> Self {
        Self {
            seed: 20_240_917,
            arm: ArmConfig::default(),
            sensor: SensorConfig::default(),
            reference: ReferenceConfig::default(),
            scenes: SceneConfig::default(),
            detector: DetectorSection::default(),
            baseline: BaselineConfig::default(),
            sweep: SweepConfig::default(),
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ArmConfig {
    pub dof: usize,
    /// Reference grid spacing, radians.
    pub grid_step: f64,
}

impl Default for ArmConfig {
    fn default() -> Self {
        Self {
            dof: 2,
            grid_step: std::f64::consts::PI / 12.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SensorConfig {
    pub bins: usize,
    pub slope: f64,
    pub intercept: f64,
    pub pulse_sigma: f64,
    pub signal_photons: f64,
    pub ambient_rate: f64,
    pub dark_rate: f64,
    pub near_field_center: f64,
    pub near_field_sigma: f64,
    pub near_field_photons: f64,
    pub burst_probability: f64,
    pub burst_photons: f64,
    pub burst_sigma: f64,
    pub shot_noise: bool,
}

impl Default for SensorConfig {
    fn default() -> Self {
        let s = SensorSpec::default();
        let nf = s.near_field;
        Self {
            bins: s.bins,
            slope: s.slope,
            intercept: s.intercept,
            pulse_sigma: s.pulse_sigma,
            signal_photons: s.signal_photons,
            ambient_rate: s.ambient_rate,
            dark_rate: s.dark_rate,
            near_field_center: nf.center_bin,
            near_field_sigma: nf.sigma,
            near_field_photons: nf.photons,
            burst_probability: nf.burst_probability,
            burst_photons: nf.burst_photons,
            burst_sigma: nf.burst_sigma,
            shot_noise: s.shot_noise,
        }
    }
}

impl SensorConfig {
    /// Sensor state during the reference scan: no power-cycle bias and no
    /// near-field bursts.
    pub fn reference_spec(&self) -> SensorSpec {
        let mut s = self.spec();
        s.near_field.burst_probability = 0.0;
        s
    }

    /// Sensor state of an evaluation session, before its power-cycle bias
    /// is applied.
    pub fn spec(&self) -> SensorSpec {
        SensorSpec {
            bins: self.bins,
            slope: self.slope,
            intercept: self.intercept,
            pulse_sigma: self.pulse_sigma,
            signal_photons: self.signal_photons,
            ambient_rate: self.ambient_rate,
            dark_rate: self.dark_rate,
            near_field: NearField {
                center_bin: self.near_field_center,
                sigma: self.near_field_sigma,
                photons: self.near_field_photons,
                burst_probability: self.burst_probability,
                burst_photons: self.burst_photons,
                burst_sigma: self.burst_sigma,
            },
            power_bias: vec![0.0; self.bins],
            shot_noise: self.shot_noise,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ReferenceConfig {
    pub frames_per_pose: usize,
    pub kde_bandwidth: f64,
    pub kde_resolution: f64,
    pub kde_margin: f64,
}

impl Default for ReferenceConfig {
    fn default() -> Self {
        let k = KdeConfig::default();
        Self {
            frames_per_pose: 50,
            kde_bandwidth: k.bandwidth,
            kde_resolution: k.search_resolution,
            kde_margin: k.search_margin,
        }
    }
}

impl ReferenceConfig {
    pub fn kde(&self) -> KdeConfig {
        KdeConfig {
            bandwidth: self.kde_bandwidth,
            search_resolution: self.kde_resolution,
            search_margin: self.kde_margin,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SceneConfig {
    pub robot_only_frames: usize,
    pub object_frames: usize,
    /// Object strength in standard deviations of the background model,
    /// reached in every bin of a `contrast_bins` wide window around its peak.
    pub contrast: f64,
    pub contrast_bins: usize,
    /// Objects are centered uniformly in `[object_bin_min, object_bin_max]`.
    pub object_bin_min: f64,
    pub object_bin_max: f64,
    /// Object depth extent, bins.
    pub object_width: f64,
    /// Objects of the "beyond the robot" suite start this many bins past
    /// the farthest robot surface.
    pub beyond_robot_margin_bins: f64,
    /// Amplitude of the evaluation session's power-cycle bias, counts.
    pub power_bias_amplitude: f64,
    pub calibration_frames: usize,
    /// A detection counts as a true positive within this distance of the
    /// object, meters.
    pub match_window_m: f64,
}

impl Default for SceneConfig {
    fn default() -> Self {
        Self {
            robot_only_frames: 1000,
            object_frames: 500,
            contrast: 6.0,
            contrast_bins: 6,
            object_bin_min: 20.0,
            object_bin_max: 70.0,
            object_width: 2.5,
            beyond_robot_margin_bins: 6.0,
            power_bias_amplitude: 60.0,
            calibration_frames: 50,
            match_window_m: 0.06,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorSection {
    pub threshold: f64,
    pub min_segment: usize,
    pub trim_lo: usize,
    pub trim_hi: usize,
}

impl Default for DetectorSection {
    fn default() -> Self {
        let d = DetectorConfig::default();
        Self {
            threshold: d.threshold,
            min_segment: d.min_segment,
            trim_lo: d.trim.0,
            trim_hi: d.trim.1,
        }
    }
}

impl DetectorSection {
    pub fn config(&self, sensor: &SensorConfig) -> DetectorConfig {
        DetectorConfig {
            threshold: self.threshold,
            min_segment: self.min_segment,
            trim: (self.trim_lo, self.trim_hi),
            slope: sensor.slope,
            intercept: sensor.intercept,
        }
    }
}

/// On-sensor style peak picker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct BaselineConfig {
    /// A local maximum counts as a peak when it rises this many shot-noise
    /// standard deviations above the DC level.
    pub min_significance: f64,
    /// The second peak is reported only if at least this fraction of the
    /// first.
    pub secondary_ratio: f64,
}

impl Default for BaselineConfig {
    fn default() -> Self {
        Self {
            min_significance: 5.0,
            secondary_ratio: 0.25,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct SweepConfig {
    pub subsample_factors: Vec<usize>,
    pub roc_thresholds: Vec<f64>,
    pub roc_min_segments: Vec<usize>,
    /// Ambient light levels as multiples of the reference-scan ambient rate.
    pub ambient_multipliers: Vec<f64>,
}

impl Default for SweepConfig {
    fn default() -> Self {
        Self {
            subsample_factors: vec![1, 2, 3, 4],
            roc_thresholds: vec![1e-5, 1e-4, 1e-3, 1e-2, 1e-1],
            roc_min_segments: vec![1, 2, 4, 8],
            ambient_multipliers: vec![0.0, 1.0, 2.5, 10.0],
        }
    }
}

impl EvalConfig {
    pub fn from_toml(text: &str) -> Result<Self, EvalError> {
        let cfg: Self = toml::from_str(text)?;
        cfg.validate()?;
        Ok(cfg)
    }

    /// The fully resolved configuration, including defaults.
    pub fn to_toml(&self) -> String {
        toml::to_string(self).expect("configuration always serializes")
    }

    pub fn validate(&self) -> Result<(), EvalError> {
        let bad = |m: String| Err(EvalError::Config(m));
        self.sensor.spec().validate()?;
        self.reference.kde().validate()?;
        self.detector.config(&self.sensor).validate(self.sensor.bins)?;
        if !(1..=3).contains(&self.arm.dof) {
            return bad(format!("arm.dof must be 1, 2 or 3, got {}", self.arm.dof));
        }
        if !(self.arm.grid_step > 0.0) {
            return bad("arm.grid_step must be positive".into());
        }
        if self.reference.frames_per_pose < 2 {
            return bad("reference.frames_per_pose must be at least 2".into());
        }
        let s = &self.scenes;
        if s.calibration_frames == 0 {
            return bad("scenes.calibration_frames must be at least 1".into());
        }
        let max_bin = self.sensor.bins as f64 - 1.0;
        if !(0.0 <= s.object_bin_min && s.object_bin_min <= s.object_bin_max && s.object_bin_max <= max_bin)
        {
            return bad(format!(
                "object bins [{}, {}] must lie within [0, {max_bin}]",
                s.object_bin_min, s.object_bin_max
            ));
        }
        if s.contrast_bins == 0 || s.contrast_bins > self.sensor.bins {
            return bad("scenes.contrast_bins must lie within the histogram".into());
        }
        if !(s.contrast >= 0.0) || !(s.object_width >= 0.0) || !(s.match_window_m > 0.0) {
            return bad("contrast, width and match window must be non-negative".into());
        }
        if self.sweep.subsample_factors.contains(&0) {
            return bad("sub-sampling factors must be at least 1".into());
        }
        if self.sweep.ambient_multipliers.iter().any(|&m| !(m >= 0.0)) {
            return bad("ambient multipliers must be non-negative".into());
        }
        Ok(())
    }
}
