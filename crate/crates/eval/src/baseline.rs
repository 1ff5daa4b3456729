//! Model-free peak picking in the style of on-sensor distance reporting:
//! up to two of the strongest returns in the raw histogram, with no notion of
//! which ones belong to the robot.

use tofprox_core::{estimate_dc_offset, DetectorConfig, KdeConfig, TransientHistogram};

use crate::config::BaselineConfig;

/// Up to two peak bins, strongest first.
///
/// A peak is a local maximum inside the trim window (plateaus report their
/// first bin) that rises at least `min_significance` shot-noise standard
/// deviations above the DC level. The runner-up is kept only when it reaches
/// `secondary_ratio` of the strongest peak's height.
pub fn onsensor_peaks(
    h: &TransientHistogram,
    kde: &KdeConfig,
    det: &DetectorConfig,
    cfg: &BaselineConfig,
) -> Vec<usize> {
    let c = h.counts();
    let dc = estimate_dc_offset(h, kde);
    let floor = cfg.min_significance * dc.max(1.0).sqrt();
    let (lo, hi) = det.trim;
    let hi = hi.min(c.len());
    let mut peaks: Vec<(usize, f64)> = (lo..hi)
        .filter(|&i| {
            let left = i == 0 || c[i] > c[i - 1];
            let right = i + 1 == c.len() || c[i] >= c[i + 1];
            left && right && c[i] - dc >= floor
        })
        .map(|i| (i, c[i] - dc))
        .collect();
    peaks.sort_by(|a, b| b.1.total_cmp(&a.1).then(a.0.cmp(&b.0)));
    let mut out = Vec::with_capacity(2);
    if let Some(&(first, height)) = peaks.first() {
        out.push(first);
        if let Some(&(second, h2)) = peaks.get(1) {
            if h2 >= cfg.secondary_ratio * height {
                out.push(second);
            }
        }
    }
    out
}
