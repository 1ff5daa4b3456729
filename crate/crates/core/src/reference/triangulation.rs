//! Delaunay triangulation of scattered joint-space samples (Bowyer–Watson),
//! used when the reference poses do not lie on a regular grid.

use std::collections::HashMap;

use nalgebra::{DMatrix, DVector};

use crate::error::{Error, Result};

/// Offset and width of the enclosing super-simplex, in units of the
/// normalized point cloud extent.
const SUPER_MARGIN: f64 = 50.0;
const INSIDE_TOLERANCE: f64 = 1e-10;

#[derive(Debug, Clone)]
struct Simplex {
    /// Pose indices of the `n + 1` vertices.
    vertices: Vec<usize>,
    origin: Vec<f64>,
    /// Maps `q - origin` to the barycentric weights of vertices `1..=n`.
    inverse: DMatrix<f64>,
    lower: Vec<f64>,
    upper: Vec<f64>,
}

/// Simplicial decomposition of a point set in `n` dimensions.
#[derive(Debug, Clone)]
pub struct Triangulation {
    dim: usize,
    simplices: Vec<Simplex>,
}

struct Cell {
    vertices: Vec<usize>,
    center: Vec<f64>,
    radius2: f64,
}

fn circumsphere(points: &[Vec<f64>], vertices: &[usize]) -> Option<(Vec<f64>, f64)> {
    let n = points[0].len();
    let v0 = &points[vertices[0]];
    let mut a = DMatrix::zeros(n, n);
    let mut b = DVector::zeros(n);
    for (row, &vi) in vertices[1..].iter().enumerate() {
        let mut norm2 = 0.0;
        for k in 0..n {
            let d = points[vi][k] - v0[k];
            a[(row, k)] = 2.0 * d;
            norm2 += d * d;
        }
        b[row] = norm2;
    }
    let rel = a.lu().solve(&b)?;
    if rel.iter().any(|x| !x.is_finite()) {
        return None;
    }
    let center = (0..n).map(|k| v0[k] + rel[k]).collect();
    Some((center, rel.norm_squared()))
}

impl Triangulation {
    /// Builds a Delaunay triangulation of `points` (all of dimension `n`).
    ///
    /// Exact duplicate points are ignored after their first occurrence.
    /// Fails with [`Error::DegenerateGeometry`] when the points do not span
    /// `n` dimensions.
    pub fn build(points: &[Vec<f64>]) -> Result<Self> {
        let dim = points
            .first()
            .map(Vec::len)
            .ok_or_else(|| Error::DegenerateGeometry("no points".into()))?;
        if points.len() < dim + 1 {
            return Err(Error::DegenerateGeometry(format!(
                "{} points cannot span {dim} dimensions",
                points.len()
            )));
        }
        let diffs = DMatrix::from_fn(points.len() - 1, dim, |r, c| {
            points[r + 1][c] - points[0][c]
        });
        let lower: Vec<f64> = (0..dim)
            .map(|k| points.iter().map(|p| p[k]).fold(f64::INFINITY, f64::min))
            .collect();
        let upper: Vec<f64> = (0..dim)
            .map(|k| points.iter().map(|p| p[k]).fold(f64::NEG_INFINITY, f64::max))
            .collect();
        let scale = (0..dim)
            .map(|k| upper[k] - lower[k])
            .fold(0.0, f64::max);
        if !(scale > 0.0) || diffs.rank(1e-9 * scale) < dim {
            return Err(Error::DegenerateGeometry(
                "reference poses are affinely dependent".into(),
            ));
        }

        // Unique points, first occurrence wins.
        let mut order: Vec<usize> = (0..points.len()).collect();
        order.sort_by(|&a, &b| {
            points[a]
                .iter()
                .zip(&points[b])
                .map(|(x, y)| x.total_cmp(y))
                .find(|o| o.is_ne())
                .unwrap_or(std::cmp::Ordering::Equal)
                .then(a.cmp(&b))
        });
        let mut unique: Vec<usize> = Vec::with_capacity(points.len());
        for &i in &order {
            if unique.last().is_none_or(|&j| points[j] != points[i]) {
                unique.push(i);
            }
        }
        unique.sort_unstable();

        // Normalize to the unit box for conditioning.
        let extent: Vec<f64> = (0..dim)
            .map(|k| (upper[k] - lower[k]).max(f64::MIN_POSITIVE))
            .collect();
        let mut work: Vec<Vec<f64>> = unique
            .iter()
            .map(|&i| (0..dim).map(|k| (points[i][k] - lower[k]) / extent[k]).collect())
            .collect();
        let n_real = work.len();
        let width = 3.0 * dim as f64 * (1.0 + SUPER_MARGIN);
        let base = vec![-SUPER_MARGIN; dim];
        work.push(base.clone());
        for k in 0..dim {
            let mut v = base.clone();
            v[k] += width;
            work.push(v);
        }

        let super_vertices: Vec<usize> = (n_real..n_real + dim + 1).collect();
        let (center, radius2) = circumsphere(&work, &super_vertices)
            .ok_or_else(|| Error::DegenerateGeometry("super-simplex is singular".into()))?;
        let mut cells = vec![Cell {
            vertices: super_vertices,
            center,
            radius2,
        }];

        for p in 0..n_real {
            let point = &work[p];
            let (bad, good): (Vec<Cell>, Vec<Cell>) = cells.into_iter().partition(|c| {
                let d2: f64 = c
                    .center
                    .iter()
                    .zip(point)
                    .map(|(a, b)| (a - b) * (a - b))
                    .sum();
                d2 < c.radius2 * (1.0 - 1e-12)
            });
            cells = good;
            let mut facets: HashMap<Vec<usize>, usize> = HashMap::new();
            for cell in &bad {
                for skip in 0..cell.vertices.len() {
                    let mut facet: Vec<usize> = cell
                        .vertices
                        .iter()
                        .enumerate()
                        .filter(|&(j, _)| j != skip)
                        .map(|(_, &v)| v)
                        .collect();
                    facet.sort_unstable();
                    *facets.entry(facet).or_insert(0) += 1;
                }
            }
            let mut boundary: Vec<Vec<usize>> = facets
                .into_iter()
                .filter(|(_, count)| *count == 1)
                .map(|(f, _)| f)
                .collect();
            boundary.sort();
            for mut facet in boundary {
                facet.push(p);
                if let Some((center, radius2)) = circumsphere(&work, &facet) {
                    cells.push(Cell {
                        vertices: facet,
                        center,
                        radius2,
                    });
                }
            }
        }

        let mut simplices = Vec::new();
        for cell in cells {
            if cell.vertices.iter().any(|&v| v >= n_real) {
                continue;
            }
            let mut vertices: Vec<usize> = cell.vertices.iter().map(|&v| unique[v]).collect();
            vertices.sort_unstable();
            if let Some(s) = Simplex::new(points, vertices) {
                simplices.push(s);
            }
        }
        simplices.sort_by(|a, b| a.vertices.cmp(&b.vertices));
        if simplices.is_empty() {
            return Err(Error::DegenerateGeometry(
                "triangulation produced no simplexes".into(),
            ));
        }
        Ok(Self { dim, simplices })
    }

    pub fn dim(&self) -> usize {
        self.dim
    }

    pub fn len(&self) -> usize {
        self.simplices.len()
    }

    pub fn is_empty(&self) -> bool {
        self.simplices.is_empty()
    }

    pub fn simplex_vertices(&self) -> impl Iterator<Item = &[usize]> {
        self.simplices.iter().map(|s| s.vertices.as_slice())
    }

    /// Finds the first simplex (in vertex-sorted order) containing `q` and
    /// returns `(vertex, weight)` pairs.
    pub fn locate(&self, q: &[f64]) -> Option<Vec<(usize, f64)>> {
        self.simplices.iter().find_map(|s| s.weights(q))
    }
}

impl Simplex {
    fn new(points: &[Vec<f64>], vertices: Vec<usize>) -> Option<Self> {
        let n = points[0].len();
        let origin = points[vertices[0]].clone();
        let t = DMatrix::from_fn(n, n, |r, c| points[vertices[c + 1]][r] - origin[r]);
        let inverse = t.try_inverse()?;
        let lower = (0..n)
            .map(|k| vertices.iter().map(|&v| points[v][k]).fold(f64::INFINITY, f64::min))
            .collect();
        let upper = (0..n)
            .map(|k| {
                vertices
                    .iter()
                    .map(|&v| points[v][k])
                    .fold(f64::NEG_INFINITY, f64::max)
            })
            .collect();
        Some(Self {
            vertices,
            origin,
            inverse,
            lower,
            upper,
        })
    }

    fn weights(&self, q: &[f64]) -> Option<Vec<(usize, f64)>> {
        let n = self.origin.len();
        for k in 0..n {
            let slack = INSIDE_TOLERANCE * (1.0 + self.upper[k] - self.lower[k]);
            if q[k] < self.lower[k] - slack || q[k] > self.upper[k] + slack {
                return None;
            }
        }
        let rel = DVector::from_fn(n, |k, _| q[k] - self.origin[k]);
        let lambda = &self.inverse * rel;
        let w0 = 1.0 - lambda.sum();
        if w0 < -INSIDE_TOLERANCE || lambda.iter().any(|&l| l < -INSIDE_TOLERANCE) {
            return None;
        }
        let mut out = Vec::with_capacity(n + 1);
        out.push((self.vertices[0], w0));
        out.extend(self.vertices[1..].iter().copied().zip(lambda.iter().copied()));
        Some(out)
    }
}
