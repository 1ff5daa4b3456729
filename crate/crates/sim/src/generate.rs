//! Reference scans and power-cycle bias.

use rand::Rng;
use rayon::prelude::*;
use tofprox_core::reference::{raw_mean, summarize_pose_raw};
use tofprox_core::{
    summarize_pose, Error, GridSpec, JointState, KdeConfig, ReferenceDataset, ReferencePose,
    Result, SignalDomain, TransientHistogram,
};

use crate::arm::SimArm;
use crate::scene::expected_scene;
use crate::sensor::{capture, SensorSpec};
use crate::stream_rng;

/// `n` robot-only captures at `q`.
pub fn capture_robot_frames<R: Rng + ?Sized>(
    arm: &SimArm,
    q: &JointState,
    spec: &SensorSpec,
    n: usize,
    rng: &mut R,
) -> Result<Vec<TransientHistogram>> {
    let expected = expected_scene(arm, q, &[], spec)?;
    (0..n).map(|_| capture(&expected, spec, rng)).collect()
}

/// Captures `frames_per_pose` robot-only frames at every grid node and
/// summarizes them in `domain`.
///
/// Pose `i` draws from stream `i` of `seed`, so the result does not depend
/// on how the poses are scheduled across threads. The raw mean at the first
/// pose is stored as the calibration anchor.
pub fn generate_reference(
    arm: &SimArm,
    grid: &GridSpec,
    frames_per_pose: usize,
    spec: &SensorSpec,
    kde: &KdeConfig,
    domain: SignalDomain,
    seed: u64,
) -> Result<ReferenceDataset> {
    spec.validate()?;
    if grid.dof() != arm.dof() {
        return Err(Error::DimensionMismatch {
            expected: arm.dof(),
            actual: grid.dof(),
        });
    }
    for (axis, &(lo, hi)) in grid.axes.iter().zip(arm.limits()) {
        let tol = 1e-9 * axis.step.max(1.0);
        if axis.min < lo - tol || axis.max() > hi + tol {
            return Err(Error::InvalidConfig(format!(
                "grid axis [{}, {}] exceeds joint limits [{lo}, {hi}]",
                axis.min,
                axis.max()
            )));
        }
    }
    let results: Vec<Result<(ReferencePose, Option<Vec<f64>>)>> = (0..grid.len())
        .into_par_iter()
        .map(|i| {
            let q = JointState::new(grid.node(i))?;
            let mut rng = stream_rng(seed, i as u64);
            let frames = capture_robot_frames(arm, &q, spec, frames_per_pose, &mut rng)?;
            let anchor = if i == 0 { Some(raw_mean(&frames)?) } else { None };
            let pose = match domain {
                SignalDomain::Processed => summarize_pose(q, &frames, kde)?,
                SignalDomain::Raw => summarize_pose_raw(q, &frames)?,
            };
            Ok((pose, anchor))
        })
        .collect();
    let mut poses = Vec::with_capacity(results.len());
    let mut anchor = None;
    for r in results {
        let (pose, a) = r?;
        poses.push(pose);
        anchor = anchor.or(a);
    }
    let ds = ReferenceDataset::new(poses, *kde, domain, Some(grid.clone()))?;
    match anchor {
        Some(a) => ds.with_calibration_anchor(a),
        None => Ok(ds),
    }
}

/// A smooth per-bin bias for one power cycle: a sinusoid of the given
/// amplitude whose period (16 to 32 bins) and phase are drawn from `seed`.
pub fn power_cycle_bias(bins: usize, amplitude: f64, seed: u64) -> Vec<f64> {
    let mut rng = stream_rng(seed, 0);
    let period = rng.random_range(16.0..32.0);
    let phase = rng.random_range(0.0..std::f64::consts::TAU);
    (0..bins)
        .map(|i| amplitude * (std::f64::consts::TAU * i as f64 / period + phase).sin())
        .collect()
}
