//! Robot-only background statistics sampled over joint space, and the
//! interpolating query structure built on top of them.

mod io;
mod kuhn;
mod model;
mod triangulation;

pub(crate) use io::fmt_real;
pub use io::{read_dataset, write_dataset};
pub use kuhn::kuhn_weights;
pub use model::{BackgroundModel, BackgroundQuery, InterpolationMode, DEFAULT_SIGMA_FLOOR};
pub use triangulation::Triangulation;

use crate::error::{Error, Result};
use crate::histogram::{preprocess, KdeConfig, TransientHistogram};

/// Robot joint angles in radians.
#[derive(Debug, Clone, PartialEq)]
pub struct JointState(Vec<f64>);

impl JointState {
    pub fn new(angles: Vec<f64>) -> Result<Self> {
        if angles.is_empty() {
            return Err(Error::InvalidConfig("joint state has no angles".into()));
        }
        if angles.iter().any(|a| !a.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "joint angles must be finite: {angles:?}"
            )));
        }
        Ok(Self(angles))
    }

    pub fn angles(&self) -> &[f64] {
        &self.0
    }

    pub fn dof(&self) -> usize {
        self.0.len()
    }

    pub fn distance_squared(&self, other: &[f64]) -> f64 {
        self.0
            .iter()
            .zip(other)
            .map(|(a, b)| (a - b) * (a - b))
            .sum()
    }
}

impl From<JointState> for Vec<f64> {
    fn from(q: JointState) -> Self {
        q.0
    }
}

/// Which signal the statistics (and the observations compared against them)
/// live in.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SignalDomain {
    /// Offset-corrected, L1-normalized histograms.
    Processed,
    /// Raw counts, no pre-processing.
    Raw,
}

impl SignalDomain {
    pub fn as_str(self) -> &'static str {
        match self {
            SignalDomain::Processed => "processed",
            SignalDomain::Raw => "raw",
        }
    }
}

impl std::str::FromStr for SignalDomain {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "processed" => Ok(SignalDomain::Processed),
            "raw" => Ok(SignalDomain::Raw),
            other => Err(Error::InvalidConfig(format!("unknown domain `{other}`"))),
        }
    }
}

/// Per-bin statistics of repeated robot-only captures at one joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferencePose {
    pub q: JointState,
    pub mean: Vec<f64>,
    /// Per-bin sample standard deviation (ddof = 1).
    pub spread: Vec<f64>,
    pub sample_count: usize,
}

/// One axis of a regular joint-space grid: `count` nodes at `min + i * step`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GridAxis {
    pub min: f64,
    pub step: f64,
    pub count: usize,
}

impl GridAxis {
    /// Nodes from `min` to `max` inclusive (within a small tolerance) at
    /// spacing `step`.
    pub fn spanning(min: f64, max: f64, step: f64) -> Result<Self> {
        if !(step > 0.0) || !(max >= min) {
            return Err(Error::InvalidConfig(format!(
                "bad grid axis [{min}, {max}] step {step}"
            )));
        }
        let count = ((max - min) / step + 1e-9).floor() as usize + 1;
        Ok(Self { min, step, count })
    }

    pub fn node(&self, i: usize) -> f64 {
        self.min + i as f64 * self.step
    }

    pub fn max(&self) -> f64 {
        self.node(self.count - 1)
    }
}

/// Regular grid over joint space. Poses are enumerated row-major: the last
/// axis varies fastest.
#[derive(Debug, Clone, PartialEq)]
pub struct GridSpec {
    pub axes: Vec<GridAxis>,
}

impl GridSpec {
    pub fn new(axes: Vec<GridAxis>) -> Self {
        Self { axes }
    }

    pub fn dof(&self) -> usize {
        self.axes.len()
    }

    pub fn len(&self) -> usize {
        self.axes.iter().map(|a| a.count).product()
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn strides(&self) -> Vec<usize> {
        let mut strides = vec![1; self.axes.len()];
        for k in (0..self.axes.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * self.axes[k + 1].count;
        }
        strides
    }

    pub fn multi_index(&self, mut flat: usize) -> Vec<usize> {
        let mut idx = vec![0; self.axes.len()];
        for (k, axis) in self.axes.iter().enumerate().rev() {
            idx[k] = flat % axis.count;
            flat /= axis.count;
        }
        idx
    }

    pub fn node(&self, flat: usize) -> Vec<f64> {
        self.multi_index(flat)
            .iter()
            .zip(&self.axes)
            .map(|(&i, a)| a.node(i))
            .collect()
    }

    pub fn nodes(&self) -> impl Iterator<Item = Vec<f64>> + '_ {
        (0..self.len()).map(|i| self.node(i))
    }

    /// Keeps every `factor`-th node along each axis.
    pub fn subsample(&self, factor: usize) -> Self {
        Self {
            axes: self
                .axes
                .iter()
                .map(|a| GridAxis {
                    min: a.min,
                    step: a.step * factor as f64,
                    count: (a.count - 1) / factor + 1,
                })
                .collect(),
        }
    }
}

/// Robot-only background statistics over a set of joint states.
#[derive(Debug, Clone, PartialEq)]
pub struct ReferenceDataset {
    pub poses: Vec<ReferencePose>,
    pub bins: usize,
    pub dof: usize,
    pub kde: KdeConfig,
    pub domain: SignalDomain,
    pub grid: Option<GridSpec>,
    /// Raw-count per-bin mean at the first pose, the anchor for power-cycle
    /// calibration.
    pub calibration_anchor: Option<Vec<f64>>,
}

impl ReferenceDataset {
    pub fn new(
        poses: Vec<ReferencePose>,
        kde: KdeConfig,
        domain: SignalDomain,
        grid: Option<GridSpec>,
    ) -> Result<Self> {
        let first = poses
            .first()
            .ok_or_else(|| Error::InvalidConfig("reference dataset has no poses".into()))?;
        let bins = first.mean.len();
        let dof = first.q.dof();
        for p in &poses {
            if p.q.dof() != dof {
                return Err(Error::DimensionMismatch {
                    expected: dof,
                    actual: p.q.dof(),
                });
            }
            for len in [p.mean.len(), p.spread.len()] {
                if len != bins {
                    return Err(Error::LengthMismatch {
                        expected: bins,
                        actual: len,
                    });
                }
            }
        }
        if let Some(g) = &grid {
            if g.dof() != dof {
                return Err(Error::DimensionMismatch {
                    expected: dof,
                    actual: g.dof(),
                });
            }
        }
        Ok(Self {
            poses,
            bins,
            dof,
            kde,
            domain,
            grid,
            calibration_anchor: None,
        })
    }

    pub fn with_calibration_anchor(mut self, anchor: Vec<f64>) -> Result<Self> {
        if anchor.len() != self.bins {
            return Err(Error::LengthMismatch {
                expected: self.bins,
                actual: anchor.len(),
            });
        }
        self.calibration_anchor = Some(anchor);
        Ok(self)
    }

    /// Coarsens a grid dataset by keeping every `factor`-th pose per axis.
    pub fn subsample(&self, factor: usize) -> Result<Self> {
        let grid = self.grid.as_ref().ok_or_else(|| {
            Error::InvalidConfig("only grid datasets can be sub-sampled".into())
        })?;
        if factor == 0 {
            return Err(Error::InvalidConfig("sub-sampling factor must be ≥ 1".into()));
        }
        let coarse = grid.subsample(factor);
        let strides = grid.strides();
        let poses = (0..coarse.len())
            .map(|flat| {
                let src: usize = coarse
                    .multi_index(flat)
                    .iter()
                    .zip(&strides)
                    .map(|(&i, &s)| i * factor * s)
                    .sum();
                self.poses[src].clone()
            })
            .collect();
        Ok(Self {
            poses,
            grid: Some(coarse),
            ..self.clone()
        })
    }
}

fn check_frames(frames: &[TransientHistogram]) -> Result<usize> {
    let bins = frames
        .first()
        .map(TransientHistogram::bin_count)
        .ok_or(Error::InsufficientFrames {
            required: 2,
            available: 0,
        })?;
    for f in frames {
        if f.bin_count() != bins {
            return Err(Error::LengthMismatch {
                expected: bins,
                actual: f.bin_count(),
            });
        }
    }
    Ok(bins)
}

/// Mean and sample standard deviation per bin. Samples are sorted per bin
/// before summation so the result does not depend on frame order.
fn per_bin_stats(samples: &[Vec<f64>], bins: usize) -> (Vec<f64>, Vec<f64>) {
    let n = samples.len() as f64;
    let mut column = Vec::with_capacity(samples.len());
    let mut mean = Vec::with_capacity(bins);
    let mut spread = Vec::with_capacity(bins);
    for i in 0..bins {
        column.clear();
        column.extend(samples.iter().map(|s| s[i]));
        column.sort_by(f64::total_cmp);
        // Shifted by the smallest sample so constant columns are exact.
        let x0 = column[0];
        let m = x0 + column.iter().map(|v| v - x0).sum::<f64>() / n;
        let ss: f64 = column.iter().map(|v| (v - m) * (v - m)).sum();
        mean.push(m);
        spread.push((ss / (n - 1.0)).sqrt());
    }
    (mean, spread)
}

/// Per-bin mean and spread of pre-processed frames captured at `q`.
///
/// Frames that pre-process to a degenerate signal are dropped; at least two
/// must survive.
pub fn summarize_pose(
    q: JointState,
    frames: &[TransientHistogram],
    kde: &KdeConfig,
) -> Result<ReferencePose> {
    let bins = check_frames(frames)?;
    let mut processed = Vec::with_capacity(frames.len());
    for f in frames {
        match preprocess(f, kde) {
            Ok(p) => processed.push(p.values),
            Err(e) if e.is_degenerate_signal() => continue,
            Err(e) => return Err(e),
        }
    }
    if processed.len() < 2 {
        return Err(Error::InsufficientFrames {
            required: 2,
            available: processed.len(),
        });
    }
    let (mean, spread) = per_bin_stats(&processed, bins);
    Ok(ReferencePose {
        q,
        mean,
        spread,
        sample_count: processed.len(),
    })
}

/// Per-bin mean and spread of raw counts captured at `q`.
pub fn summarize_pose_raw(q: JointState, frames: &[TransientHistogram]) -> Result<ReferencePose> {
    let bins = check_frames(frames)?;
    if frames.len() < 2 {
        return Err(Error::InsufficientFrames {
            required: 2,
            available: frames.len(),
        });
    }
    let raw: Vec<Vec<f64>> = frames.iter().map(|f| f.counts().to_vec()).collect();
    let (mean, spread) = per_bin_stats(&raw, bins);
    Ok(ReferencePose {
        q,
        mean,
        spread,
        sample_count: frames.len(),
    })
}

/// Per-bin mean of raw frames.
pub fn raw_mean(frames: &[TransientHistogram]) -> Result<Vec<f64>> {
    let bins = check_frames(frames)?;
    let n = frames.len() as f64;
    let mut column = Vec::with_capacity(frames.len());
    Ok((0..bins)
        .map(|i| {
            column.clear();
            column.extend(frames.iter().map(|f| f.counts()[i]));
            column.sort_by(f64::total_cmp);
            let x0 = column[0];
            x0 + column.iter().map(|v| v - x0).sum::<f64>() / n
        })
        .collect())
}
