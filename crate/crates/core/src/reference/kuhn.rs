/// Barycentric weights of a point inside the unit hypercube, using the Kuhn
/// (coordinate-permutation) decomposition of the cube into `n!` simplexes.
///
/// `frac` holds the point's coordinates in `[0, 1]^n`. The containing simplex
/// is the one whose vertices walk from the origin corner along the axes in
/// order of decreasing coordinate; equal coordinates keep ascending axis order.
///
/// Returns `(axis_order, weights)`: vertex `0` is the origin corner and vertex
/// `j` is reached by stepping along `axis_order[..j]`. `weights` has `n + 1`
/// non-negative entries summing to one.
pub fn kuhn_weights(frac: &[f64]) -> (Vec<usize>, Vec<f64>) {
    let n = frac.len();
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| frac[b].total_cmp(&frac[a]).then(a.cmp(&b)));
    let mut weights = Vec::with_capacity(n + 1);
    if n == 0 {
        weights.push(1.0);
        return (order, weights);
    }
    weights.push(1.0 - frac[order[0]]);
    for j in 1..n {
        weights.push(frac[order[j - 1]] - frac[order[j]]);
    }
    weights.push(frac[order[n - 1]]);
    (order, weights)
}
