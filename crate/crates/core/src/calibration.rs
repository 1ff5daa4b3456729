//! Power-cycle bias compensation.
//!
//! Some sensors shift every bin by a different amount each time they are
//! powered on. After a power cycle the arm returns to the first reference
//! pose, a batch of fresh frames is averaged, and the per-bin difference to
//! the stored raw-count mean becomes an additive correction applied to every
//! subsequent frame before pre-processing.

use std::io::{BufRead, Write};

use crate::error::{Error, Result};
use crate::histogram::TransientHistogram;
use crate::reference::{raw_mean, JointState};

/// Number of fresh frames captured for calibration in the reference setup.
pub const DEFAULT_CALIBRATION_FRAMES: usize = 50;

/// Additive per-bin correction in raw-count units.
#[derive(Debug, Clone, PartialEq)]
pub struct CalibrationOffset {
    pub h_calib: Vec<f64>,
    pub source_pose: JointState,
}

impl CalibrationOffset {
    pub fn zero(bins: usize, source_pose: JointState) -> Self {
        Self {
            h_calib: vec![0.0; bins],
            source_pose,
        }
    }

    pub fn bins(&self) -> usize {
        self.h_calib.len()
    }
}

/// `h_calib = reference_mean − mean(fresh_frames)`, per bin.
pub fn compute_calibration(
    reference_mean: &[f64],
    fresh_frames: &[TransientHistogram],
    source_pose: JointState,
) -> Result<CalibrationOffset> {
    if fresh_frames.is_empty() {
        return Err(Error::InsufficientFrames {
            required: 1,
            available: 0,
        });
    }
    let h_ref = raw_mean(fresh_frames)?;
    if h_ref.len() != reference_mean.len() {
        return Err(Error::LengthMismatch {
            expected: reference_mean.len(),
            actual: h_ref.len(),
        });
    }
    Ok(CalibrationOffset {
        h_calib: reference_mean.iter().zip(&h_ref).map(|(m, r)| m - r).collect(),
        source_pose,
    })
}

/// Adds the correction and clamps at zero.
pub fn apply_calibration(
    h: &TransientHistogram,
    calib: &CalibrationOffset,
) -> Result<TransientHistogram> {
    if h.bin_count() != calib.bins() {
        return Err(Error::LengthMismatch {
            expected: calib.bins(),
            actual: h.bin_count(),
        });
    }
    TransientHistogram::new(
        h.counts()
            .iter()
            .zip(&calib.h_calib)
            .map(|(c, d)| (c + d).max(0.0))
            .collect(),
    )
}

/// Writes `#calib v1 b=<int> q=<q1,q2,...>` followed by one line of `b`
/// reals.
pub fn write_calibration<W: Write>(calib: &CalibrationOffset, mut out: W) -> Result<()> {
    let q = calib
        .source_pose
        .angles()
        .iter()
        .map(|&a| crate::reference::fmt_real(a))
        .collect::<Vec<_>>()
        .join(",");
    writeln!(out, "#calib v1 b={} q={}", calib.bins(), q)?;
    let values = calib
        .h_calib
        .iter()
        .map(|&v| crate::reference::fmt_real(v))
        .collect::<Vec<_>>()
        .join(" ");
    writeln!(out, "{values}")?;
    out.flush()?;
    Ok(())
}

pub fn read_calibration<R: BufRead>(input: R) -> Result<CalibrationOffset> {
    let mut lines = input.lines();
    let header = lines
        .next()
        .ok_or_else(|| Error::parse(1, "empty calibration file"))??;
    let mut tokens = header.split_whitespace();
    if tokens.next() != Some("#calib") || tokens.next() != Some("v1") {
        return Err(Error::parse(1, "expected `#calib v1` header"));
    }
    let mut bins = None;
    let mut pose = None;
    for tok in tokens {
        match tok.split_once('=') {
            Some(("b", v)) => {
                bins = Some(
                    v.parse::<usize>()
                        .map_err(|e| Error::parse(1, format!("bad b: {e}")))?,
                )
            }
            Some(("q", v)) => {
                let angles = v
                    .split(',')
                    .map(|a| {
                        a.parse::<f64>()
                            .map_err(|e| Error::parse(1, format!("bad q: {e}")))
                    })
                    .collect::<Result<Vec<_>>>()?;
                pose = Some(JointState::new(angles)?);
            }
            _ => {}
        }
    }
    let bins = bins.ok_or_else(|| Error::parse(1, "header lacks `b=`"))?;
    let pose = pose.ok_or_else(|| Error::parse(1, "header lacks `q=`"))?;
    let body = lines
        .next()
        .ok_or_else(|| Error::parse(2, "missing calibration values"))??;
    let values = body
        .split_whitespace()
        .map(|t| {
            t.parse::<f64>()
                .map_err(|e| Error::parse(2, format!("bad value `{t}`: {e}")))
        })
        .collect::<Result<Vec<_>>>()?;
    if values.len() != bins {
        return Err(Error::parse(2, format!("expected {bins} values, got {}", values.len())));
    }
    Ok(CalibrationOffset {
        h_calib: values,
        source_pose: pose,
    })
}
