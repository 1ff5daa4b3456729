//! Detection and localization of unknown objects near a robot arm from the
//! raw transient histograms of arm-mounted miniature direct time-of-flight
//! sensors.
//!
//! The robot's own contribution to each histogram is modeled empirically:
//! robot-only captures are summarized per joint state ([`reference`]),
//! interpolated to the current joint state, and every incoming frame is
//! compared bin by bin against that background ([`detector`]). Frames are
//! first stripped of their ambient DC level and normalized ([`histogram`]),
//! and a per-power-cycle additive bias can be removed ([`calibration`]).
//!
//! Pipeline stages:
//!
//! 1. **Calibration** – add the power-cycle correction to the raw counts.
//! 2. **Pre-processing** – subtract the KDE-mode DC offset, L1-normalize.
//! 3. **Background** – barycentric interpolation of per-bin mean and spread.
//! 4. **Gating** – per-bin likelihood threshold, contiguous-run search.
//! 5. **Localization** – peak bin of each run, converted to meters.

pub mod calibration;
pub mod detector;
pub mod error;
pub mod frames;
pub mod histogram;
pub mod reference;

pub use calibration::{apply_calibration, compute_calibration, CalibrationOffset};
pub use detector::{detect, Detection, DetectorConfig, FrameDetections};
pub use error::{Error, Result};
pub use histogram::{estimate_dc_offset, preprocess, KdeConfig, ProcessedHistogram, TransientHistogram};
pub use reference::{
    summarize_pose, BackgroundModel, BackgroundQuery, GridAxis, GridSpec, InterpolationMode,
    JointState, ReferenceDataset, ReferencePose, SignalDomain,
};
