//! Per-frame detection of unknown objects against the robot-only background.
//!
//! Each bin of the observation is scored by its Gaussian likelihood under the
//! interpolated background, normalized so a bin exactly at the background
//! mean scores 1. Bins scoring below `threshold` are gated; every run of at
//! least `min_segment` gated bins inside the trim window is one object, placed
//! at the bin with the largest observed value in the run.

use crate::calibration::{apply_calibration, CalibrationOffset};
use crate::error::{Error, Result};
use crate::histogram::{preprocess, TransientHistogram};
use crate::reference::{BackgroundModel, BackgroundQuery, JointState, SignalDomain};

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct DetectorConfig {
    /// Likelihood below which a bin is gated, in `(0, 1)`.
    pub threshold: f64,
    /// Minimum number of contiguous gated bins per detection.
    pub min_segment: usize,
    /// Bins considered for detection, `[lo, hi)`.
    pub trim: (usize, usize),
    /// Meters per bin.
    pub slope: f64,
    /// Meters at bin zero.
    pub intercept: f64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        Self {
            threshold: 0.001,
            min_segment: 4,
            trim: (15, 80),
            slope: 0.01387,
            intercept: -0.1825,
        }
    }
}

impl DetectorConfig {
    pub fn validate(&self, bins: usize) -> Result<()> {
        if !(self.threshold > 0.0 && self.threshold < 1.0) {
            return Err(Error::InvalidConfig(format!(
                "threshold must lie in (0, 1), got {}",
                self.threshold
            )));
        }
        if self.min_segment == 0 {
            return Err(Error::InvalidConfig("min_segment must be ≥ 1".into()));
        }
        let (lo, hi) = self.trim;
        if lo >= hi || hi > bins {
            return Err(Error::InvalidConfig(format!(
                "trim range ({lo}, {hi}) invalid for {bins} bins"
            )));
        }
        Ok(())
    }

    /// Same config with the trim window opened to the full histogram.
    pub fn untrimmed(self, bins: usize) -> Self {
        Self {
            trim: (0, bins),
            ..self
        }
    }
}

/// One detected object.
#[derive(Debug, Clone, PartialEq)]
pub struct Detection {
    /// Gated run of bins, inclusive on both ends.
    pub segment: (usize, usize),
    pub peak_bin: usize,
    /// Meters; negative values are returned as computed.
    pub distance: f64,
    /// Smallest per-bin likelihood inside the segment.
    pub min_likelihood: f64,
}

/// Detections for one frame, closest first.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct FrameDetections {
    pub detections: Vec<Detection>,
    /// The background came from a nearest-pose fallback outside the sampled
    /// joint range.
    pub extrapolated: bool,
}

impl FrameDetections {
    pub fn closest(&self) -> Option<&Detection> {
        self.detections.first()
    }
}

/// `p_i = exp(−(h_i − μ_i)² / (2σ_i²))`.
///
/// Values that would underflow are held at the smallest positive normal
/// float so every likelihood stays in `(0, 1]`.
pub fn likelihood(values: &[f64], bg: &BackgroundQuery) -> Result<Vec<f64>> {
    if values.len() != bg.mu.len() || values.len() != bg.sigma.len() {
        return Err(Error::LengthMismatch {
            expected: bg.mu.len(),
            actual: values.len(),
        });
    }
    Ok(values
        .iter()
        .zip(bg.mu.iter().zip(&bg.sigma))
        .map(|(&h, (&mu, &sigma))| {
            let d = h - mu;
            (-(d * d) / (2.0 * sigma * sigma)).exp().max(f64::MIN_POSITIVE)
        })
        .collect())
}

/// `g_i = p_i < t` (strict).
pub fn gate(p: &[f64], t: f64) -> Vec<bool> {
    p.iter().map(|&pi| pi < t).collect()
}

/// Maximal runs of `true` at least `min_len` long, ascending.
pub fn find_segments(g: &[bool], min_len: usize) -> Vec<(usize, usize)> {
    let mut out = Vec::new();
    let mut start = None;
    for (i, &on) in g.iter().chain(std::iter::once(&false)).enumerate() {
        match (on, start) {
            (true, None) => start = Some(i),
            (false, Some(s)) => {
                if i - s >= min_len {
                    out.push((s, i - 1));
                }
                start = None;
            }
            _ => {}
        }
    }
    out
}

/// Index of the largest value in `segment` (inclusive); the lower bin wins
/// ties.
pub fn extract_peak(values: &[f64], segment: (usize, usize)) -> usize {
    let (start, end) = segment;
    let mut best = start;
    for i in start + 1..=end {
        if values[i] > values[best] {
            best = i;
        }
    }
    best
}

pub fn bin_to_distance(peak_bin: usize, cfg: &DetectorConfig) -> f64 {
    cfg.slope * peak_bin as f64 + cfg.intercept
}

/// Runs the full per-frame pipeline.
///
/// Order: calibration, pre-processing (for processed-domain models),
/// background query, likelihood, gating masked to the trim window, segment
/// search, peak extraction and distance conversion. A frame that
/// pre-processes to nothing returns [`Error::DegenerateSignal`], which means
/// "no decision" rather than "no object".
pub fn detect(
    h_raw: &TransientHistogram,
    q: &JointState,
    model: &BackgroundModel,
    cfg: &DetectorConfig,
    calib: Option<&CalibrationOffset>,
) -> Result<FrameDetections> {
    let bins = model.bins();
    if h_raw.bin_count() != bins {
        return Err(Error::LengthMismatch {
            expected: bins,
            actual: h_raw.bin_count(),
        });
    }
    cfg.validate(bins)?;

    let calibrated;
    let h = match calib {
        Some(c) => {
            calibrated = apply_calibration(h_raw, c)?;
            &calibrated
        }
        None => h_raw,
    };
    let values = match model.dataset().domain {
        SignalDomain::Processed => preprocess(h, &model.dataset().kde)?.values,
        SignalDomain::Raw => h.counts().to_vec(),
    };
    let bg = model.query(q)?;
    let p = likelihood(&values, &bg)?;
    let mut g = gate(&p, cfg.threshold);
    let (lo, hi) = cfg.trim;
    for (i, gi) in g.iter_mut().enumerate() {
        if i < lo || i >= hi {
            *gi = false;
        }
    }

    let mut detections: Vec<Detection> = find_segments(&g, cfg.min_segment)
        .into_iter()
        .map(|seg| {
            let peak_bin = extract_peak(&values, seg);
            Detection {
                segment: seg,
                peak_bin,
                distance: bin_to_distance(peak_bin, cfg),
                min_likelihood: p[seg.0..=seg.1].iter().copied().fold(1.0, f64::min),
            }
        })
        .collect();
    detections.sort_by(|a, b| {
        a.distance
            .total_cmp(&b.distance)
            .then(a.peak_bin.cmp(&b.peak_bin))
    });
    Ok(FrameDetections {
        detections,
        extrapolated: bg.extrapolated,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn bg(mu: &[f64], sigma: &[f64]) -> BackgroundQuery {
        BackgroundQuery {
            mu: mu.to_vec(),
            sigma: sigma.to_vec(),
            extrapolated: false,
        }
    }

    #[test]
    fn likelihood_reference_points() {
        let q = bg(&[0.5, 0.5, 0.5], &[0.1, 0.1, 0.1]);
        let p = likelihood(&[0.5, 0.6, 0.9], &q).unwrap();
        assert_eq!(p[0], 1.0);
        assert!((p[1] - (-0.5f64).exp()).abs() < 1e-12);
        assert!((p[1] - 0.60653).abs() < 1e-5);
        // 4σ: e^{-8} ≈ 3.355e-4, below the default threshold.
        assert!((p[2] - (-8.0f64).exp()).abs() < 1e-12);
        assert!((p[2] - 3.355e-4).abs() < 1e-7);
        assert!(p[2] < DetectorConfig::default().threshold);
    }

    #[test]
    fn likelihood_never_reaches_zero() {
        let p = likelihood(&[1e6], &bg(&[0.0], &[1e-4])).unwrap();
        assert!(p[0] > 0.0);
    }

    #[test]
    fn likelihood_length_mismatch() {
        assert!(likelihood(&[1.0, 2.0], &bg(&[0.0], &[1.0])).is_err());
    }

    #[test]
    fn gate_is_strict() {
        assert_eq!(gate(&[1.0, 1.0], 0.001), vec![false, false]);
        assert_eq!(gate(&[0.001], 0.001), vec![false]);
        assert_eq!(gate(&[1.0, 1e-5, 1.0], 0.001), vec![false, true, false]);
    }

    fn mask(bins: usize, on: &[std::ops::RangeInclusive<usize>]) -> Vec<bool> {
        let mut g = vec![false; bins];
        for r in on {
            for i in r.clone() {
                g[i] = true;
            }
        }
        g
    }

    #[test]
    fn segments() {
        assert!(find_segments(&mask(80, &[20..=22]), 4).is_empty());
        assert_eq!(find_segments(&mask(80, &[20..=24]), 4), vec![(20, 24)]);
        assert_eq!(
            find_segments(&mask(80, &[40..=47, 20..=24]), 4),
            vec![(20, 24), (40, 47)]
        );
        // Runs split by a single bin stay separate.
        assert_eq!(
            find_segments(&mask(80, &[10..=13, 15..=18]), 4),
            vec![(10, 13), (15, 18)]
        );
        // Run touching the last bin.
        assert_eq!(find_segments(&mask(10, &[6..=9]), 4), vec![(6, 9)]);
    }

    #[test]
    fn peaks() {
        let mut v = vec![0.0; 40];
        v[30] = 0.01;
        v[31] = 0.09;
        v[32] = 0.04;
        assert_eq!(extract_peak(&v, (30, 32)), 31);
        let flat = vec![0.2; 40];
        assert_eq!(extract_peak(&flat, (30, 35)), 30);
        v[30] = 0.09;
        v[31] = 0.01;
        v[32] = 0.09;
        assert_eq!(extract_peak(&v, (30, 32)), 30);
    }

    #[test]
    fn distance_conversion() {
        let cfg = DetectorConfig::default();
        assert!((bin_to_distance(14, &cfg) - 0.01168).abs() < 1e-9);
        assert!((bin_to_distance(80, &cfg) - 0.9271).abs() < 1e-9);
        assert!((bin_to_distance(60, &cfg) - 0.6497).abs() < 1e-9);
        assert!((bin_to_distance(40, &cfg) - 0.3723).abs() < 1e-9);
        assert!(bin_to_distance(0, &cfg) < 0.0);
    }

    #[test]
    fn config_validation() {
        let cfg = DetectorConfig::default();
        assert!(cfg.validate(80).is_ok());
        assert!(cfg.validate(60).is_err());
        assert!(DetectorConfig { threshold: 1.0, ..cfg }.validate(80).is_err());
        assert!(DetectorConfig { min_segment: 0, ..cfg }.validate(80).is_err());
        assert!(DetectorConfig { trim: (20, 20), ..cfg }.validate(80).is_err());
        assert_eq!(cfg.untrimmed(128).trim, (0, 128));
    }
}
