use proptest::prelude::*;
use tofprox_core::detector::{bin_to_distance, find_segments, gate, likelihood};
use tofprox_core::{
    detect, BackgroundModel, DetectorConfig, GridAxis, GridSpec, InterpolationMode, JointState,
    KdeConfig, ReferenceDataset, ReferencePose, SignalDomain, TransientHistogram,
};

fn pose(q: Vec<f64>, mean: Vec<f64>, spread: Vec<f64>) -> ReferencePose {
    ReferencePose {
        q: JointState::new(q).unwrap(),
        mean,
        spread,
        sample_count: 50,
    }
}

/// 5 × 4 grid over two joints with per-bin statistics that vary with the
/// pose.
fn grid_dataset(bins: usize) -> ReferenceDataset {
    let grid = GridSpec::new(vec![
        GridAxis::spanning(-1.0, 1.0, 0.5).unwrap(),
        GridAxis::spanning(0.0, 1.5, 0.5).unwrap(),
    ]);
    let poses = grid
        .nodes()
        .map(|q| {
            let mean = (0..bins).map(|i| (q[0] * i as f64).sin() + q[1] * q[1]).collect();
            let spread = (0..bins).map(|i| 0.01 + 0.001 * ((i as f64 + q[0]).cos()).abs()).collect();
            pose(q, mean, spread)
        })
        .collect();
    ReferenceDataset::new(poses, KdeConfig::default(), SignalDomain::Processed, Some(grid)).unwrap()
}

/// Flat raw-count background with a single pose.
fn flat_raw_model(bins: usize, level: f64, sigma: f64) -> BackgroundModel {
    let ds = ReferenceDataset::new(
        vec![pose(vec![0.0], vec![level; bins], vec![sigma; bins])],
        KdeConfig::default(),
        SignalDomain::Raw,
        None,
    )
    .unwrap();
    BackgroundModel::build(ds, InterpolationMode::NearestNeighbor).unwrap()
}

#[test]
fn one_dof_midpoint_averages_neighbors() {
    let ds = ReferenceDataset::new(
        vec![
            pose(vec![0.0], vec![1.0, 2.0], vec![0.1, 0.2]),
            pose(vec![1.0], vec![3.0, 6.0], vec![0.3, 0.4]),
        ],
        KdeConfig::default(),
        SignalDomain::Processed,
        None,
    )
    .unwrap();
    let model = BackgroundModel::build(ds, InterpolationMode::Barycentric).unwrap();
    let q = model.query_at(&[0.5]).unwrap();
    assert_eq!(q.mu, vec![2.0, 4.0]);
    assert!(!q.extrapolated);
}

#[test]
fn outside_hull_uses_nearest_pose() {
    let ds = grid_dataset(6);
    let model = BackgroundModel::build(ds.clone(), InterpolationMode::Barycentric).unwrap();
    let q = [1.7, 0.2];
    let got = model.query_unfloored(&q).unwrap();
    let nearest = ds
        .poses
        .iter()
        .min_by(|a, b| a.q.distance_squared(&q).total_cmp(&b.q.distance_squared(&q)))
        .unwrap();
    assert!(got.extrapolated);
    assert_eq!(got.mu, nearest.mean);
}

#[test]
fn injected_object_is_found_at_its_peak() {
    let bins = 80;
    let sigma = 5.0;
    let model = flat_raw_model(bins, 100.0, sigma);
    let mut counts = vec![100.0; bins];
    for (i, z) in [(38, 6.5), (39, 7.5), (40, 9.0), (41, 8.0), (42, 7.0), (43, 6.2)] {
        counts[i] += z * sigma;
    }
    let h = TransientHistogram::new(counts).unwrap();
    let q = JointState::new(vec![0.0]).unwrap();
    let out = detect(&h, &q, &model, &DetectorConfig::default(), None).unwrap();
    assert_eq!(out.detections.len(), 1);
    let d = &out.detections[0];
    assert_eq!(d.peak_bin, 40);
    assert_eq!(d.segment, (38, 43));
    assert!((d.distance - 0.3723).abs() < 5e-5);
}

#[test]
fn observation_equal_to_mean_gives_nothing() {
    let model = flat_raw_model(80, 42.0, 3.0);
    let h = TransientHistogram::new(vec![42.0; 80]).unwrap();
    let q = JointState::new(vec![0.0]).unwrap();
    let out = detect(&h, &q, &model, &DetectorConfig::default(), None).unwrap();
    assert!(out.detections.is_empty());
}

#[test]
fn reference_distance_points() {
    // Quoted to four decimals.
    let cfg = DetectorConfig::default();
    for (bin, d) in [(14, 0.0117), (80, 0.9271), (60, 0.6497)] {
        assert!((bin_to_distance(bin, &cfg) - d).abs() < 5e-5);
    }
}

proptest! {
    #[test]
    fn interpolation_is_convex(x in -1.0f64..=1.0, y in 0.0f64..=1.5) {
        let model = BackgroundModel::build(grid_dataset(6), InterpolationMode::Barycentric).unwrap();
        let interp = model.interpolant(&[x, y]).unwrap();
        let sum: f64 = interp.vertices.iter().map(|v| v.1).sum();
        prop_assert!((sum - 1.0).abs() <= 1e-9);
        prop_assert!(interp.vertices.iter().all(|v| v.1 >= -1e-9));
        let q = model.query_unfloored(&[x, y]).unwrap();
        for i in 0..model.bins() {
            let vals: Vec<f64> = interp.vertices.iter().map(|&(v, _)| model.dataset().poses[v].mean[i]).collect();
            let lo = vals.iter().copied().fold(f64::INFINITY, f64::min);
            let hi = vals.iter().copied().fold(f64::NEG_INFINITY, f64::max);
            prop_assert!(q.mu[i] >= lo - 1e-12 && q.mu[i] <= hi + 1e-12);
        }
    }

    #[test]
    fn detections_are_consistent(
        noise in prop::collection::vec(-8.0f64..8.0, 80),
        t in 1e-6f64..0.5,
        c in 1usize..8,
        lo in 0usize..30,
        span in 10usize..50,
    ) {
        let model = flat_raw_model(80, 100.0, 1.0);
        let counts: Vec<f64> = noise.iter().map(|z| 100.0 + z).collect();
        let h = TransientHistogram::new(counts.clone()).unwrap();
        let q = JointState::new(vec![0.0]).unwrap();
        let cfg = DetectorConfig { threshold: t, min_segment: c, trim: (lo, lo + span), ..DetectorConfig::default() };
        let out = detect(&h, &q, &model, &cfg, None).unwrap();
        let mut last = f64::NEG_INFINITY;
        for d in &out.detections {
            let (a, b) = d.segment;
            prop_assert!(a >= lo && b < lo + span);
            prop_assert!(b - a + 1 >= c);
            prop_assert!(a <= d.peak_bin && d.peak_bin <= b);
            prop_assert!(d.distance >= last);
            last = d.distance;
        }

        let bg = model.query_at(&[0.0]).unwrap();
        let p = likelihood(&counts, &bg).unwrap();
        prop_assert!(p.iter().all(|&x| x > 0.0 && x <= 1.0));
        let tight = gate(&p, t * 0.5);
        let loose = gate(&p, t);
        prop_assert!(tight.iter().zip(&loose).all(|(a, b)| !a || *b));
        let long = find_segments(&loose, c + 1);
        let short = find_segments(&loose, c);
        prop_assert!(long.iter().all(|s| short.contains(s)));
    }
}
