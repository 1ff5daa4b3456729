use proptest::prelude::*;
use tofprox_core::{estimate_dc_offset, preprocess, Error, KdeConfig, TransientHistogram};

fn hist(v: Vec<f64>) -> TransientHistogram {
    TransientHistogram::new(v).unwrap()
}

fn brute_force_mode(h: &[f64], bw: f64) -> f64 {
    let lo = h.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = h.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let step = 1e-3;
    let n = ((hi - lo) / step).ceil() as usize;
    let mut best = (lo, f64::NEG_INFINITY);
    for j in 0..=n {
        let x = lo + j as f64 * step;
        let d: f64 = h.iter().map(|v| (-0.5 * ((x - v) / bw).powi(2)).exp()).sum();
        if d > best.1 {
            best = (x, d);
        }
    }
    best.0
}

/// DC level plus a few peaks, 16 to 80 bins.
fn signal() -> impl Strategy<Value = Vec<f64>> {
    (16usize..80, 0.0f64..200.0, prop::collection::vec((0usize..80, 5.0f64..500.0), 1..4)).prop_map(
        |(bins, dc, peaks)| {
            let mut v = vec![dc; bins];
            for (i, (at, amp)) in peaks.into_iter().enumerate() {
                let c = at % bins;
                v[c] += amp;
                if c + 1 < bins {
                    v[c + 1] += amp * 0.5 + i as f64;
                }
            }
            v
        },
    )
}

#[test]
fn constant_signal_mode() {
    for bw in [0.5, 5.0, 40.0] {
        let cfg = KdeConfig {
            bandwidth: bw,
            ..KdeConfig::default()
        };
        assert_eq!(estimate_dc_offset(&hist(vec![7.0; 5]), &cfg), 7.0);
    }
}

#[test]
fn single_outlier_matches_dense_oracle() {
    let h = vec![5.0, 5.0, 100.0, 5.0, 5.0];
    let cfg = KdeConfig::default();
    let est = estimate_dc_offset(&hist(h.clone()), &cfg);
    let oracle = brute_force_mode(&h, cfg.bandwidth);
    assert!((est - oracle).abs() <= cfg.search_resolution, "{est} vs {oracle}");
    assert!((est - 5.0).abs() <= cfg.search_resolution);

    let p = preprocess(&hist(h), &cfg).unwrap();
    let expected = [0.0, 0.0, 1.0, 0.0, 0.0];
    for (v, e) in p.values.iter().zip(expected) {
        assert!((v - e).abs() < 1e-3, "{:?}", p.values);
    }
}

#[test]
fn flat_signal_is_degenerate() {
    let err = preprocess(&hist(vec![3.0; 80]), &KdeConfig::default()).unwrap_err();
    assert!(matches!(err, Error::DegenerateSignal { .. }));
}

proptest! {
    #[test]
    fn offset_is_translation_equivariant(v in signal(), k in 0.0f64..1000.0) {
        let cfg = KdeConfig::default();
        let h = hist(v);
        let a = estimate_dc_offset(&h, &cfg);
        let b = estimate_dc_offset(&h.shifted(k).unwrap(), &cfg);
        prop_assert!((b - (a + k)).abs() <= cfg.search_resolution, "{a} + {k} vs {b}");
    }

    #[test]
    fn integer_shift_is_exact(v in prop::collection::vec(0u32..500, 8..80), k in 0u32..1000) {
        let cfg = KdeConfig::default();
        let h = hist(v.iter().map(|&x| x as f64).collect());
        let shifted = h.shifted(k as f64).unwrap();
        match (preprocess(&h, &cfg), preprocess(&shifted, &cfg)) {
            (Ok(a), Ok(b)) => prop_assert_eq!(a.values, b.values),
            (Err(_), Err(_)) => {}
            (a, b) => prop_assert!(false, "{a:?} vs {b:?}"),
        }
    }

    #[test]
    fn processed_values_have_unit_norm(v in signal()) {
        let p = preprocess(&hist(v), &KdeConfig::default()).unwrap();
        let l1: f64 = p.values.iter().map(|x| x.abs()).sum();
        prop_assert!((l1 - 1.0).abs() <= 1e-9);
    }

    #[test]
    fn scaling_leaves_processed_values_nearly_unchanged(v in signal(), alpha in 0.5f64..20.0) {
        let cfg = KdeConfig::default();
        let h = hist(v);
        let a = preprocess(&h, &cfg).unwrap();
        let b = preprocess(&h.scaled(alpha).unwrap(), &cfg).unwrap();
        // An offset error of one grid step moves every value by at most
        // step / norm, and the norm itself by bins · step.
        let norm: f64 = h.counts().iter().map(|c| (c - a.offset).abs()).sum();
        let bins = h.bin_count() as f64;
        let tol = 2.0 * (bins + 1.0) * cfg.search_resolution / (norm * alpha.min(1.0));
        for (x, y) in a.values.iter().zip(&b.values) {
            prop_assert!((x - y).abs() <= tol, "{x} vs {y} (tol {tol})");
        }
    }

    #[test]
    fn preprocessing_is_deterministic(v in signal()) {
        let cfg = KdeConfig::default();
        let h = hist(v);
        let a = preprocess(&h, &cfg).unwrap();
        let b = preprocess(&h.clone(), &cfg).unwrap();
        prop_assert_eq!(a.values, b.values);
        prop_assert_eq!(a.offset.to_bits(), b.offset.to_bits());
    }
}
