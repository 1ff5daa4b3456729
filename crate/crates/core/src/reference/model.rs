use super::kuhn::kuhn_weights;
use super::triangulation::Triangulation;
use super::{GridSpec, JointState, ReferenceDataset};
use crate::error::{Error, Result};

/// Lower bound applied to every interpolated per-bin spread, in the units of
/// the dataset's signal domain.
pub const DEFAULT_SIGMA_FLOOR: f64 = 1e-4;

/// Relative tolerance used to snap grid coordinates onto nodes and to accept
/// points on the grid boundary.
const GRID_SNAP: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum InterpolationMode {
    Barycentric,
    NearestNeighbor,
}

impl std::str::FromStr for InterpolationMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "barycentric" | "linear" => Ok(Self::Barycentric),
            "nearest" | "nearest-neighbor" => Ok(Self::NearestNeighbor),
            other => Err(Error::InvalidConfig(format!(
                "unknown interpolation mode `{other}`"
            ))),
        }
    }
}

/// Expected robot-only statistics at one joint state.
#[derive(Debug, Clone, PartialEq)]
pub struct BackgroundQuery {
    pub mu: Vec<f64>,
    pub sigma: Vec<f64>,
    /// The joint state was outside the sampled region and the nearest pose
    /// was used instead.
    pub extrapolated: bool,
}

#[derive(Debug, Clone)]
enum Locator {
    Grid { grid: GridSpec, strides: Vec<usize> },
    Simplicial(Triangulation),
    Scan,
}

/// Immutable query structure over a [`ReferenceDataset`].
#[derive(Debug, Clone)]
pub struct BackgroundModel {
    dataset: ReferenceDataset,
    mode: InterpolationMode,
    sigma_floor: f64,
    locator: Locator,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Vertices and weights used for one query.
#[derive(Debug, Clone, PartialEq)]
pub struct Interpolant {
    pub vertices: Vec<(usize, f64)>,
    pub extrapolated: bool,
}

fn grid_matches(grid: &GridSpec, ds: &ReferenceDataset) -> bool {
    grid.len() == ds.poses.len()
        && ds.poses.iter().enumerate().all(|(i, p)| {
            grid.node(i)
                .iter()
                .zip(p.q.angles())
                .zip(&grid.axes)
                .all(|((n, a), ax)| (n - a).abs() <= GRID_SNAP * ax.step.max(1.0))
        })
}

impl BackgroundModel {
    /// Builds the query structure.
    ///
    /// Grid datasets are decomposed cell by cell with the Kuhn triangulation
    /// (`n!` simplexes per cell); scattered datasets get a Delaunay
    /// triangulation. Barycentric mode fails with
    /// [`Error::DegenerateGeometry`] when the poses do not span joint space.
    pub fn build(dataset: ReferenceDataset, mode: InterpolationMode) -> Result<Self> {
        let dof = dataset.dof;
        let lower: Vec<f64> = (0..dof)
            .map(|k| {
                dataset
                    .poses
                    .iter()
                    .map(|p| p.q.angles()[k])
                    .fold(f64::INFINITY, f64::min)
            })
            .collect();
        let upper: Vec<f64> = (0..dof)
            .map(|k| {
                dataset
                    .poses
                    .iter()
                    .map(|p| p.q.angles()[k])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();

        let locator = match &dataset.grid {
            Some(grid) => {
                if !grid_matches(grid, &dataset) {
                    return Err(Error::InvalidConfig(
                        "reference poses do not match the declared grid".into(),
                    ));
                }
                if mode == InterpolationMode::Barycentric && grid.axes.iter().any(|a| a.count < 2)
                {
                    return Err(Error::DegenerateGeometry(
                        "every grid axis needs at least two nodes".into(),
                    ));
                }
                Locator::Grid {
                    grid: grid.clone(),
                    strides: grid.strides(),
                }
            }
            None => match mode {
                InterpolationMode::Barycentric => {
                    let points: Vec<Vec<f64>> = dataset
                        .poses
                        .iter()
                        .map(|p| p.q.angles().to_vec())
                        .collect();
                    Locator::Simplicial(Triangulation::build(&points)?)
                }
                InterpolationMode::NearestNeighbor => Locator::Scan,
            },
        };
        Ok(Self {
            dataset,
            mode,
            sigma_floor: DEFAULT_SIGMA_FLOOR,
            locator,
            lower,
            upper,
        })
    }

    pub fn with_sigma_floor(mut self, floor: f64) -> Self {
        self.sigma_floor = floor;
        self
    }

    pub fn dataset(&self) -> &ReferenceDataset {
        &self.dataset
    }

    pub fn mode(&self) -> InterpolationMode {
        self.mode
    }

    pub fn sigma_floor(&self) -> f64 {
        self.sigma_floor
    }

    pub fn bins(&self) -> usize {
        self.dataset.bins
    }

    pub fn dof(&self) -> usize {
        self.dataset.dof
    }

    /// Number of simplexes in the decomposition (0 in nearest-neighbor mode
    /// over scattered poses).
    pub fn simplex_count(&self) -> usize {
        match &self.locator {
            Locator::Grid { grid, .. } => {
                let cells: usize = grid.axes.iter().map(|a| a.count.saturating_sub(1)).product();
                cells * (1..=grid.dof()).product::<usize>()
            }
            Locator::Simplicial(t) => t.len(),
            Locator::Scan => 0,
        }
    }

    fn check_dof(&self, q: &[f64]) -> Result<()> {
        if q.len() != self.dataset.dof {
            return Err(Error::DimensionMismatch {
                expected: self.dataset.dof,
                actual: q.len(),
            });
        }
        Ok(())
    }

    fn scan_nearest(&self, q: &[f64]) -> usize {
        let mut best = (f64::INFINITY, 0);
        for (i, p) in self.dataset.poses.iter().enumerate() {
            let d = p.q.distance_squared(q);
            if d < best.0 {
                best = (d, i);
            }
        }
        best.1
    }

    fn in_bounding_box(&self, q: &[f64]) -> bool {
        q.iter().zip(&self.lower).zip(&self.upper).all(|((&x, &lo), &hi)| {
            let slack = GRID_SNAP * (1.0 + hi - lo);
            x >= lo - slack && x <= hi + slack
        })
    }

    /// Index of the Euclidean-nearest reference pose (lowest index on ties).
    pub fn nearest_pose(&self, q: &[f64]) -> Result<usize> {
        self.check_dof(q)?;
        Ok(match &self.locator {
            Locator::Grid { grid, strides } => grid
                .axes
                .iter()
                .zip(strides)
                .zip(q)
                .map(|((ax, &s), &x)| {
                    let t = (x - ax.min) / ax.step;
                    // Round half down so ties resolve to the lower index.
                    let i = (t - 0.5).ceil().clamp(0.0, (ax.count - 1) as f64) as usize;
                    i * s
                })
                .sum(),
            _ => self.scan_nearest(q),
        })
    }

    /// Reference poses and weights that make up the estimate at `q`.
    pub fn interpolant(&self, q: &[f64]) -> Result<Interpolant> {
        self.check_dof(q)?;
        let nearest = |extrapolated| -> Result<Interpolant> {
            Ok(Interpolant {
                vertices: vec![(self.nearest_pose(q)?, 1.0)],
                extrapolated,
            })
        };
        match self.mode {
            InterpolationMode::NearestNeighbor => nearest(!self.in_bounding_box(q)),
            InterpolationMode::Barycentric => match &self.locator {
                Locator::Grid { grid, strides } => {
                    let mut base = 0usize;
                    let mut frac = Vec::with_capacity(q.len());
                    for ((ax, &s), &x) in grid.axes.iter().zip(strides).zip(q) {
                        let last = (ax.count - 1) as f64;
                        let mut t = (x - ax.min) / ax.step;
                        if t < -GRID_SNAP || t > last + GRID_SNAP {
                            return nearest(true);
                        }
                        if (t - t.round()).abs() < GRID_SNAP {
                            t = t.round();
                        }
                        let t = t.clamp(0.0, last);
                        let cell = (t.floor() as usize).min(ax.count - 2);
                        base += cell * s;
                        frac.push(t - cell as f64);
                    }
                    let (order, weights) = kuhn_weights(&frac);
                    let mut vertices = Vec::with_capacity(weights.len());
                    let mut index = base;
                    for (j, &w) in weights.iter().enumerate() {
                        if j > 0 {
                            index += strides[order[j - 1]];
                        }
                        if w != 0.0 {
                            vertices.push((index, w));
                        }
                    }
                    Ok(Interpolant {
                        vertices,
                        extrapolated: false,
                    })
                }
                Locator::Simplicial(tri) => {
                    let nn = self.scan_nearest(q);
                    if self.dataset.poses[nn].q.angles() == q {
                        return Ok(Interpolant {
                            vertices: vec![(nn, 1.0)],
                            extrapolated: false,
                        });
                    }
                    match tri.locate(q) {
                        Some(vertices) => Ok(Interpolant {
                            vertices: vertices.into_iter().filter(|&(_, w)| w != 0.0).collect(),
                            extrapolated: false,
                        }),
                        None => nearest(true),
                    }
                }
                Locator::Scan => unreachable!("barycentric models always carry a decomposition"),
            },
        }
    }

    /// Interpolated statistics before the spread floor is applied.
    pub fn query_unfloored(&self, q: &[f64]) -> Result<BackgroundQuery> {
        let interp = self.interpolant(q)?;
        let bins = self.dataset.bins;
        let mut mu = vec![0.0; bins];
        let mut sigma = vec![0.0; bins];
        if let [(only, w)] = interp.vertices.as_slice() {
            if *w == 1.0 {
                let pose = &self.dataset.poses[*only];
                mu.copy_from_slice(&pose.mean);
                sigma.copy_from_slice(&pose.spread);
                return Ok(BackgroundQuery {
                    mu,
                    sigma,
                    extrapolated: interp.extrapolated,
                });
            }
        }
        for &(v, w) in &interp.vertices {
            let pose = &self.dataset.poses[v];
            for i in 0..bins {
                mu[i] += w * pose.mean[i];
                sigma[i] += w * pose.spread[i];
            }
        }
        Ok(BackgroundQuery {
            mu,
            sigma,
            extrapolated: interp.extrapolated,
        })
    }

    /// Expected robot-only mean and spread at `q`, spreads floored at the
    /// model's sigma floor.
    pub fn query(&self, q: &JointState) -> Result<BackgroundQuery> {
        self.query_at(q.angles())
    }

    pub fn query_at(&self, q: &[f64]) -> Result<BackgroundQuery> {
        let mut out = self.query_unfloored(q)?;
        for s in &mut out.sigma {
            *s = s.max(self.sigma_floor);
        }
        Ok(out)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::histogram::KdeConfig;
    use crate::reference::{GridAxis, ReferencePose, SignalDomain};

    fn pose(q: &[f64], mean: &[f64], spread: &[f64]) -> ReferencePose {
        ReferencePose {
            q: JointState::new(q.to_vec()).unwrap(),
            mean: mean.to_vec(),
            spread: spread.to_vec(),
            sample_count: 10,
        }
    }

    fn line_dataset() -> ReferenceDataset {
        let grid = GridSpec::new(vec![GridAxis { min: 0.0, step: 0.5, count: 3 }]);
        let poses = vec![
            pose(&[0.0], &[1.0, 0.0], &[0.1, 0.0]),
            pose(&[0.5], &[3.0, 2.0], &[0.3, 0.2]),
            pose(&[1.0], &[5.0, 0.0], &[0.5, 0.0]),
        ];
        ReferenceDataset::new(poses, KdeConfig::default(), SignalDomain::Processed, Some(grid))
            .unwrap()
    }

    fn scattered_dataset() -> ReferenceDataset {
        let poses = vec![
            pose(&[0.0, 0.0], &[0.0], &[0.1]),
            pose(&[1.0, 0.1], &[1.0], &[0.1]),
            pose(&[0.1, 1.0], &[2.0], &[0.1]),
            pose(&[0.9, 1.1], &[3.0], &[0.1]),
            pose(&[0.45, 0.55], &[4.0], &[0.1]),
        ];
        ReferenceDataset::new(poses, KdeConfig::default(), SignalDomain::Processed, None).unwrap()
    }

    #[test]
    fn one_dof_grid_has_two_segments() {
        let m = BackgroundModel::build(line_dataset(), InterpolationMode::Barycentric).unwrap();
        assert_eq!(m.simplex_count(), 2);
    }

    #[test]
    fn midpoint_is_the_average() {
        let m = BackgroundModel::build(line_dataset(), InterpolationMode::Barycentric).unwrap();
        let r = m.query_at(&[0.25]).unwrap();
        assert_eq!(r.mu, vec![2.0, 1.0]);
        assert!(!r.extrapolated);
    }

    #[test]
    fn nodes_are_reproduced_and_floored() {
        let m = BackgroundModel::build(line_dataset(), InterpolationMode::Barycentric).unwrap();
        for p in &m.dataset().poses.clone() {
            let r = m.query(&p.q).unwrap();
            assert_eq!(r.mu, p.mean);
            let floored: Vec<f64> = p.spread.iter().map(|s| s.max(DEFAULT_SIGMA_FLOOR)).collect();
            assert_eq!(r.sigma, floored);
        }
    }

    #[test]
    fn outside_grid_falls_back_to_nearest() {
        let m = BackgroundModel::build(line_dataset(), InterpolationMode::Barycentric).unwrap();
        let r = m.query_at(&[1.7]).unwrap();
        assert!(r.extrapolated);
        assert_eq!(r.mu, vec![5.0, 0.0]);
        let r = m.query_at(&[-0.2]).unwrap();
        assert!(r.extrapolated);
        assert_eq!(r.mu, vec![1.0, 0.0]);
    }

    #[test]
    fn dimension_mismatch_is_an_error() {
        let m = BackgroundModel::build(line_dataset(), InterpolationMode::Barycentric).unwrap();
        assert!(matches!(
            m.query_at(&[0.1, 0.2]),
            Err(Error::DimensionMismatch { expected: 1, actual: 2 })
        ));
    }

    #[test]
    fn single_pose_works_only_for_nearest_neighbor() {
        let poses = vec![pose(&[0.3, 0.4], &[1.0], &[0.0])];
        let ds = ReferenceDataset::new(poses, KdeConfig::default(), SignalDomain::Processed, None)
            .unwrap();
        assert!(matches!(
            BackgroundModel::build(ds.clone(), InterpolationMode::Barycentric),
            Err(Error::DegenerateGeometry(_))
        ));
        let m = BackgroundModel::build(ds, InterpolationMode::NearestNeighbor).unwrap();
        let r = m.query_at(&[5.0, 5.0]).unwrap();
        assert_eq!(r.mu, vec![1.0]);
        assert_eq!(r.sigma, vec![DEFAULT_SIGMA_FLOOR]);
    }

    #[test]
    fn mismatched_grid_is_rejected() {
        let mut ds = line_dataset();
        ds.poses[1].q = JointState::new(vec![0.6]).unwrap();
        assert!(BackgroundModel::build(ds, InterpolationMode::Barycentric).is_err());
    }

    #[test]
    fn scattered_nodes_and_hull() {
        let ds = scattered_dataset();
        let m = BackgroundModel::build(ds.clone(), InterpolationMode::Barycentric).unwrap();
        for p in &ds.poses {
            assert_eq!(m.query_unfloored(p.q.angles()).unwrap().mu, p.mean);
        }
        let inside = m.query_at(&[0.5, 0.5]).unwrap();
        assert!(!inside.extrapolated);
        let outside = m.query_at(&[3.0, 3.0]).unwrap();
        assert!(outside.extrapolated);
        assert_eq!(outside.mu, vec![3.0]);
    }

    #[test]
    fn nearest_neighbor_mode_on_grid() {
        let m = BackgroundModel::build(line_dataset(), InterpolationMode::NearestNeighbor).unwrap();
        assert_eq!(m.query_at(&[0.3]).unwrap().mu, vec![3.0, 2.0]);
        // Tie between nodes 0 and 1 resolves to the lower index.
        assert_eq!(m.nearest_pose(&[0.25]).unwrap(), 0);
    }
}
