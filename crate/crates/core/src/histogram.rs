//! Transient histogram types and per-frame pre-processing.
//!
//! Ambient light shows up as a DC level across all bins. It is estimated as
//! the mode of a Gaussian kernel density over the bin values and subtracted,
//! after which the histogram is scaled to unit L1 norm.

use crate::error::{Error, Result};

/// L1 norms below this mark a frame as information-free.
pub const NORM_EPSILON: f64 = 1e-6;

/// Raw per-bin photon counts of one sensor zone for one frame.
///
/// Counts are stored as reals so calibration-adjusted and averaged
/// histograms share the type.
#[derive(Debug, Clone, PartialEq)]
pub struct TransientHistogram {
    counts: Vec<f64>,
}

impl TransientHistogram {
    pub fn new(counts: Vec<f64>) -> Result<Self> {
        if counts.is_empty() {
            return Err(Error::EmptyHistogram);
        }
        if let Some((bin, &value)) = counts
            .iter()
            .enumerate()
            .find(|(_, c)| !c.is_finite() || **c < 0.0)
        {
            return Err(Error::InvalidCount { bin, value });
        }
        Ok(Self { counts })
    }

    pub fn counts(&self) -> &[f64] {
        &self.counts
    }

    pub fn bin_count(&self) -> usize {
        self.counts.len()
    }

    pub fn into_counts(self) -> Vec<f64> {
        self.counts
    }

    /// Adds `k` to every bin (an ambient-light change).
    pub fn shifted(&self, k: f64) -> Result<Self> {
        Self::new(self.counts.iter().map(|c| c + k).collect())
    }

    /// Multiplies every bin by `alpha`.
    pub fn scaled(&self, alpha: f64) -> Result<Self> {
        Self::new(self.counts.iter().map(|c| c * alpha).collect())
    }
}

/// Offset-corrected, L1-normalized histogram.
#[derive(Debug, Clone, PartialEq)]
pub struct ProcessedHistogram {
    /// Normalized values; may be negative where a bin sits below the offset.
    pub values: Vec<f64>,
    /// The subtracted DC level, in counts.
    pub offset: f64,
}

/// Kernel density settings for the DC offset estimate.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct KdeConfig {
    /// Gaussian kernel standard deviation, in counts.
    pub bandwidth: f64,
    /// Grid step of the argmax search, in counts.
    pub search_resolution: f64,
    /// Extension of the search interval beyond `[min h, max h]`.
    pub search_margin: f64,
}

impl Default for KdeConfig {
    fn default() -> Self {
        Self {
            bandwidth: 5.0,
            search_resolution: 0.25,
            search_margin: 0.0,
        }
    }
}

impl KdeConfig {
    pub fn validate(&self) -> Result<()> {
        if !(self.bandwidth > 0.0 && self.bandwidth.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "KDE bandwidth must be positive, got {}",
                self.bandwidth
            )));
        }
        if !(self.search_resolution > 0.0 && self.search_resolution.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "KDE search resolution must be positive, got {}",
                self.search_resolution
            )));
        }
        if !(self.search_margin >= 0.0 && self.search_margin.is_finite()) {
            return Err(Error::InvalidConfig(format!(
                "KDE search margin must be non-negative, got {}",
                self.search_margin
            )));
        }
        Ok(())
    }
}

/// Unnormalized Gaussian kernel density. The normalization constant does not
/// move the argmax.
#[inline]
fn density(sorted_rel: &[f64], x: f64, inv_bw: f64) -> f64 {
    sorted_rel
        .iter()
        .map(|&d| {
            let z = (x - d) * inv_bw;
            (-0.5 * z * z).exp()
        })
        .sum()
}

/// Result of the mode search, kept in coordinates relative to `lo` so that
/// a constant shift of the input yields bit-identical relative quantities.
struct ModeEstimate {
    lo: f64,
    grid_x: f64,
    refine: f64,
}

impl ModeEstimate {
    fn offset(&self) -> f64 {
        self.lo + (self.grid_x + self.refine)
    }
}

/// Grid points per pruning block.
const BLOCK_POINTS: usize = 16;
/// Kernel-widths beyond which a sample only contributes its tail bound.
const PRUNE_RADIUS_BW: f64 = 3.0;
const REFINE_ITERATIONS: usize = 80;

fn find_mode(counts: &[f64], cfg: &KdeConfig) -> ModeEstimate {
    let min = counts.iter().copied().fold(f64::INFINITY, f64::min);
    let lo = min - cfg.search_margin;
    let mut rel: Vec<f64> = counts.iter().map(|&c| c - lo).collect();
    rel.sort_by(f64::total_cmp);

    let inv_bw = 1.0 / cfg.bandwidth;
    let res = cfg.search_resolution;
    let span = rel[rel.len() - 1] + cfg.search_margin;
    let n_grid = (span / res).floor() as usize + 1;

    // Any grid value is a valid lower bound on the grid maximum; the grid
    // points nearest the samples are good ones.
    let mut best_val = f64::NEG_INFINITY;
    let mut prev_j = usize::MAX;
    for &d in &rel {
        let j = ((d / res).round() as usize).min(n_grid - 1);
        if j != prev_j {
            best_val = best_val.max(density(&rel, j as f64 * res, inv_bw));
            prev_j = j;
        }
    }

    // Scan blocks in ascending order; a block is skipped only when an upper
    // bound on its density is strictly below a value already attained on
    // the grid, so the first strict maximum matches an exhaustive scan.
    let radius = PRUNE_RADIUS_BW * cfg.bandwidth;
    let tail = (-0.5 * PRUNE_RADIUS_BW * PRUNE_RADIUS_BW).exp();
    let mut best_j = usize::MAX;
    let mut best_grid = f64::NEG_INFINITY;
    let (mut win_lo, mut win_hi) = (0usize, 0usize);
    let mut start = 0usize;
    while start < n_grid {
        let end = (start + BLOCK_POINTS).min(n_grid) - 1;
        let xa = start as f64 * res;
        let xb = end as f64 * res;
        while win_lo < rel.len() && rel[win_lo] < xa - radius {
            win_lo += 1;
        }
        win_hi = win_hi.max(win_lo);
        while win_hi < rel.len() && rel[win_hi] <= xb + radius {
            win_hi += 1;
        }
        let near: f64 = rel[win_lo..win_hi]
            .iter()
            .map(|&d| {
                let gap = if d < xa {
                    xa - d
                } else if d > xb {
                    d - xb
                } else {
                    0.0
                };
                let z = gap * inv_bw;
                (-0.5 * z * z).exp()
            })
            .sum();
        let bound = near + (rel.len() - (win_hi - win_lo)) as f64 * tail;
        if bound * (1.0 + 1e-9) >= best_val {
            for j in start..=end {
                let v = density(&rel, j as f64 * res, inv_bw);
                if v > best_grid {
                    best_grid = v;
                    best_j = j;
                }
            }
            best_val = best_val.max(best_grid);
        }
        start = end + 1;
    }
    debug_assert!(best_j != usize::MAX);
    let grid_x = best_j as f64 * res;

    // Refine within one grid step on either side by bisecting on the sign of
    // the density derivative.
    let centered: Vec<f64> = rel.iter().map(|&d| grid_x - d).collect();
    let local = |u: f64| -> f64 {
        centered
            .iter()
            .map(|&e| {
                let z = (e + u) * inv_bw;
                (-0.5 * z * z).exp()
            })
            .sum()
    };
    let slope = |u: f64| -> f64 {
        centered
            .iter()
            .map(|&e| {
                let r = e + u;
                let z = r * inv_bw;
                -r * (-0.5 * z * z).exp()
            })
            .sum()
    };
    let (mut a, mut b) = (-res, res);
    let refine = if slope(a) <= 0.0 {
        if local(a) > local(0.0) { a } else { 0.0 }
    } else if slope(b) >= 0.0 {
        if local(b) > local(0.0) { b } else { 0.0 }
    } else {
        let mut u = 0.0;
        for _ in 0..REFINE_ITERATIONS {
            u = 0.5 * (a + b);
            let s = slope(u);
            if s == 0.0 {
                break;
            } else if s > 0.0 {
                a = u;
            } else {
                b = u;
            }
        }
        if local(u) >= local(0.0) { u } else { 0.0 }
    };

    ModeEstimate { lo, grid_x, refine }
}

/// Estimates the ambient DC level as the mode of a Gaussian kernel density
/// over the bin values.
///
/// The argmax is located on a uniform grid of step `search_resolution` over
/// `[min h - margin, max h + margin]` (smallest `x` wins ties) and then
/// refined within one step of the winning grid point.
pub fn estimate_dc_offset(h: &TransientHistogram, cfg: &KdeConfig) -> f64 {
    find_mode(h.counts(), cfg).offset()
}

/// Subtracts the DC offset and normalizes the histogram to unit L1 norm.
///
/// Returns [`Error::DegenerateSignal`] when nothing is left after offset
/// removal; detection must be skipped for such frames.
pub fn preprocess(h: &TransientHistogram, cfg: &KdeConfig) -> Result<ProcessedHistogram> {
    cfg.validate()?;
    let mode = find_mode(h.counts(), cfg);
    let mut values: Vec<f64> = h
        .counts()
        .iter()
        .map(|&c| ((c - mode.lo) - mode.grid_x) - mode.refine)
        .collect();
    let norm: f64 = values.iter().map(|v| v.abs()).sum();
    if !(norm >= NORM_EPSILON) {
        return Err(Error::DegenerateSignal {
            norm,
            threshold: NORM_EPSILON,
        });
    }
    for v in &mut values {
        *v /= norm;
    }
    Ok(ProcessedHistogram {
        values,
        offset: mode.offset(),
    })
}
