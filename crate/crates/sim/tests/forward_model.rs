use rand::Rng;

use tofprox_core::{compute_calibration, JointState, KdeConfig, SignalDomain, TransientHistogram};
use tofprox_sim::sensor::render_patches;
use tofprox_sim::{
    capture_robot_frames, generate_reference, render_expected, sample_frame, stream_rng, PatchLabel,
    ScenePatch, SensorSpec, SimArm,
};

/// Per-bin z-scores: each bin may exceed 3 standard errors by chance
/// (p ≈ 0.0027), so across a whole histogram allow at most two such bins
/// and bound every bin by 4 standard errors (family-wise p ≈ 0.005 for 80
/// bins).
fn check_z_scores(z: &[f64], what: &str) {
    let over3 = z.iter().filter(|z| z.abs() > 3.0).count();
    let worst = z.iter().fold(0.0f64, |m, z| m.max(z.abs()));
    assert!(over3 <= 2 && worst <= 4.0, "{what}: {over3} bins beyond 3 SE, worst {worst:.2}");
}

#[test]
fn shot_noise_variance_matches_mean() {
    let spec = SensorSpec::default();
    let patches = [
        ScenePatch::new(0.12, 0.8, PatchLabel::Robot),
        ScenePatch::new(0.45, 1.5, PatchLabel::Object),
    ];
    let expected = render_expected(&patches, &spec);
    let n = 4000;
    let mut rng = stream_rng(11, 0);
    let frames: Vec<TransientHistogram> = (0..n).map(|_| sample_frame(&expected, &mut rng).unwrap()).collect();
    let (mut z_mean, mut z_var) = (Vec::new(), Vec::new());
    for (i, &lambda) in expected.iter().enumerate() {
        let xs: Vec<f64> = frames.iter().map(|f| f.counts()[i]).collect();
        let mean = xs.iter().sum::<f64>() / n as f64;
        let var = xs.iter().map(|x| (x - mean).powi(2)).sum::<f64>() / (n - 1) as f64;
        // Standard errors of the sample mean and variance of Poisson(λ).
        let se_mean = (lambda / n as f64).sqrt();
        let se_var = ((lambda + 2.0 * lambda * lambda) / n as f64).sqrt();
        z_mean.push((mean - lambda) / se_mean);
        z_var.push((var - mean) / se_var);
    }
    check_z_scores(&z_mean, "sample mean");
    check_z_scores(&z_var, "sample variance");
}

#[test]
fn adding_a_patch_never_removes_energy() {
    let spec = SensorSpec::default();
    let mut rng = stream_rng(12, 0);
    for _ in 0..200 {
        let mut patches: Vec<ScenePatch> = (0..rng.random_range(0..4))
            .map(|_| ScenePatch::new(rng.random_range(0.0..0.9), rng.random_range(0.0..3.0), PatchLabel::Robot))
            .collect();
        let before = render_expected(&patches, &spec);
        patches.push(ScenePatch::new(rng.random_range(0.0..0.9), rng.random_range(0.0..3.0), PatchLabel::Object));
        let after = render_expected(&patches, &spec);
        assert!(before.iter().zip(&after).all(|(b, a)| a >= b));
    }
}

#[test]
fn isolated_patch_peaks_at_its_range_bin() {
    let spec = SensorSpec::ideal(80);
    let mut rng = stream_rng(13, 0);
    for _ in 0..500 {
        let r = rng.random_range(0.05..0.85);
        let expected = render_patches(&[ScenePatch::new(r, 1.0, PatchLabel::Object)], &spec);
        let argmax = (0..expected.len())
            .max_by(|&a, &b| expected[a].total_cmp(&expected[b]))
            .unwrap() as i64;
        let target = ((r - spec.intercept) / spec.slope).round() as i64;
        assert!((argmax - target).abs() <= 1, "r = {r}: argmax {argmax}, expected {target}");
    }
}

#[test]
fn grid_sizes_follow_the_joint_limits() {
    use std::f64::consts::PI;
    let planar = SimArm::planar();
    for (step, per_axis) in [(PI / 12.0, 13), (PI / 6.0, 7)] {
        let oracle: usize = planar
            .limits()
            .iter()
            .map(|(lo, hi)| ((hi - lo) / step + 1e-9).floor() as usize + 1)
            .product();
        assert_eq!(oracle, per_axis * per_axis);
        assert_eq!(planar.grid(step).unwrap().len(), oracle);
    }
    assert_eq!(SimArm::wrist().grid(PI / 12.0).unwrap().len(), 2304);
}

#[test]
fn reference_generation_is_seeded() {
    let arm = SimArm::planar();
    let grid = arm.grid(std::f64::consts::PI / 4.0).unwrap();
    let spec = SensorSpec::default();
    let kde = KdeConfig::default();
    let make = |seed| generate_reference(&arm, &grid, 5, &spec, &kde, SignalDomain::Processed, seed).unwrap();
    let a = make(7);
    assert_eq!(a, make(7));
    assert_ne!(a, make(8));
    assert_eq!(a.poses.len(), 25);
    assert!(a.calibration_anchor.is_some());
}

#[test]
fn calibration_recovers_a_constant_bias() {
    let arm = SimArm::planar();
    let q = JointState::new(vec![0.0, 0.0]).unwrap();
    let mut spec = SensorSpec::default();
    spec.near_field.burst_probability = 0.0;
    let anchor = tofprox_sim::expected_scene(&arm, &q, &[], &spec).unwrap();
    let k = 25.0;
    let biased = spec.clone().with_power_bias(vec![k; spec.bins]);
    let frames = capture_robot_frames(&arm, &q, &biased, 50, &mut stream_rng(14, 0)).unwrap();
    let calib = compute_calibration(&anchor, &frames, q).unwrap();
    let z: Vec<f64> = calib
        .h_calib
        .iter()
        .zip(&anchor)
        .map(|(&c, &e)| (c + k) / ((e + k) / 50.0).sqrt())
        .collect();
    check_z_scores(&z, "calibration offset");
}
