//! Per-frame outcomes and their aggregation into report rows.

use serde::{Deserialize, Serialize};
use tofprox_core::{DetectorConfig, FrameDetections};

use crate::bench::EvalFrame;

/// Everything needed to recompute a report row, one record per frame and
/// condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FrameOutcome {
    pub condition: String,
    pub frame_id: String,
    pub object_present: bool,
    pub true_distance_m: Option<f64>,
    pub robot_surface_m: f64,
    /// The frame pre-processed to nothing and was not classified.
    pub no_decision: bool,
    pub n_detections: usize,
    /// Bin of the reported detection (the closest one for the detector).
    pub reported_bin: Option<usize>,
    pub reported_distance_m: Option<f64>,
    pub farthest_distance_m: Option<f64>,
    pub extrapolated: bool,
    pub true_positive: bool,
}

pub fn is_match(predicted: Option<f64>, truth: Option<f64>, window: f64) -> bool {
    match (predicted, truth) {
        (Some(p), Some(t)) => (p - t).abs() <= window,
        _ => false,
    }
}

/// Outcome of the detector on one frame; `None` means no decision.
pub fn detector_outcome(
    condition: &str,
    frame: &EvalFrame,
    detections: Option<&FrameDetections>,
    window: f64,
) -> FrameOutcome {
    let truth = frame.labeled.ground_truth;
    let closest = detections.and_then(FrameDetections::closest);
    let reported_distance_m = closest.map(|d| d.distance);
    FrameOutcome {
        condition: condition.to_string(),
        frame_id: frame.id.clone(),
        object_present: truth.object_present,
        true_distance_m: truth.distance,
        robot_surface_m: frame.robot_surface_m,
        no_decision: detections.is_none(),
        n_detections: detections.map_or(0, |d| d.detections.len()),
        reported_bin: closest.map(|d| d.peak_bin),
        reported_distance_m,
        farthest_distance_m: detections
            .and_then(|d| d.detections.last())
            .map(|d| d.distance),
        extrapolated: detections.is_some_and(|d| d.extrapolated),
        true_positive: truth.object_present && is_match(reported_distance_m, truth.distance, window),
    }
}

/// Outcome of a peak picker that reports bare bins. With ground truth the
/// best of the reported peaks is scored; without, the nearest one.
pub fn peak_outcome(
    condition: &str,
    frame: &EvalFrame,
    peaks: &[usize],
    det: &DetectorConfig,
    window: f64,
) -> FrameOutcome {
    let truth = frame.labeled.ground_truth;
    let to_m = |b: usize| det.slope * b as f64 + det.intercept;
    let reported = match truth.distance {
        Some(t) => peaks
            .iter()
            .copied()
            .min_by(|&a, &b| (to_m(a) - t).abs().total_cmp(&(to_m(b) - t).abs()).then(a.cmp(&b))),
        None => peaks.iter().copied().min(),
    };
    let reported_distance_m = reported.map(to_m);
    FrameOutcome {
        condition: condition.to_string(),
        frame_id: frame.id.clone(),
        object_present: truth.object_present,
        true_distance_m: truth.distance,
        robot_surface_m: frame.robot_surface_m,
        no_decision: false,
        n_detections: peaks.len(),
        reported_bin: reported,
        reported_distance_m,
        farthest_distance_m: peaks.iter().copied().max().map(to_m),
        extrapolated: false,
        true_positive: truth.object_present && is_match(reported_distance_m, truth.distance, window),
    }
}

/// Aggregate metrics of one condition.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ConditionRow {
    pub experiment: String,
    pub condition: String,
    pub robot_only_frames: usize,
    pub object_frames: usize,
    /// Fraction of robot-only frames with at least one detection.
    pub fpr: Option<f64>,
    /// Fraction of object frames whose reported detection matches the
    /// object.
    pub tpr: Option<f64>,
    /// Mean |reported − true| over true positives, meters.
    pub mean_abs_error_m: Option<f64>,
    pub no_decision_frames: usize,
}

pub fn summarize(experiment: &str, condition: &str, outcomes: &[FrameOutcome]) -> ConditionRow {
    let mut robot = 0usize;
    let mut false_pos = 0usize;
    let mut objects = 0usize;
    let mut true_pos = 0usize;
    let mut err_sum = 0.0;
    let mut no_decision = 0usize;
    for o in outcomes.iter().filter(|o| o.condition == condition) {
        no_decision += o.no_decision as usize;
        if o.object_present {
            objects += 1;
            if o.true_positive {
                true_pos += 1;
                if let (Some(p), Some(t)) = (o.reported_distance_m, o.true_distance_m) {
                    err_sum += (p - t).abs();
                }
            }
        } else {
            robot += 1;
            false_pos += (o.n_detections > 0) as usize;
        }
    }
    let ratio = |num: usize, den: usize| (den > 0).then(|| num as f64 / den as f64);
    ConditionRow {
        experiment: experiment.to_string(),
        condition: condition.to_string(),
        robot_only_frames: robot,
        object_frames: objects,
        fpr: ratio(false_pos, robot),
        tpr: ratio(true_pos, objects),
        mean_abs_error_m: (true_pos > 0).then(|| err_sum / true_pos as f64),
        no_decision_frames: no_decision,
    }
}

/// Conditions in order of first appearance.
pub fn conditions(outcomes: &[FrameOutcome]) -> Vec<String> {
    let mut seen: Vec<String> = Vec::new();
    for o in outcomes {
        if !seen.contains(&o.condition) {
            seen.push(o.condition.clone());
        }
    }
    seen
}

#[cfg(test)]
mod tests {
    use super::*;

    fn outcome(cond: &str, present: bool, n: usize, pred: Option<f64>, truth: Option<f64>) -> FrameOutcome {
        FrameOutcome {
            condition: cond.into(),
            frame_id: "f".into(),
            object_present: present,
            true_distance_m: truth,
            robot_surface_m: 0.3,
            no_decision: false,
            n_detections: n,
            reported_bin: None,
            reported_distance_m: pred,
            farthest_distance_m: pred,
            extrapolated: false,
            true_positive: present && is_match(pred, truth, 0.06),
        }
    }

    #[test]
    fn rates_and_errors() {
        let rows = vec![
            outcome("a", false, 0, None, None),
            outcome("a", false, 2, Some(0.1), None),
            outcome("a", false, 0, None, None),
            outcome("a", false, 0, None, None),
            outcome("a", true, 1, Some(0.32), Some(0.30)),
            outcome("a", true, 1, Some(0.50), Some(0.30)),
            outcome("a", true, 0, None, Some(0.30)),
            outcome("a", true, 1, Some(0.26), Some(0.30)),
            outcome("b", true, 1, Some(0.30), Some(0.30)),
        ];
        let r = summarize("x", "a", &rows);
        assert_eq!(r.robot_only_frames, 4);
        assert_eq!(r.object_frames, 4);
        assert_eq!(r.fpr, Some(0.25));
        assert_eq!(r.tpr, Some(0.5));
        assert!((r.mean_abs_error_m.unwrap() - 0.03).abs() < 1e-12);
        let b = summarize("x", "b", &rows);
        assert_eq!(b.fpr, None);
        assert_eq!(b.tpr, Some(1.0));
        assert_eq!(conditions(&rows), vec!["a", "b"]);
    }

    #[test]
    fn match_window_is_inclusive() {
        assert!(is_match(Some(0.36), Some(0.30), 0.0600001));
        assert!(!is_match(Some(0.37), Some(0.30), 0.06));
        assert!(!is_match(None, Some(0.30), 0.06));
    }
}
