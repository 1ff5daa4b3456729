//! Scene description, intruding objects and labeled captures.

use rand::Rng;
use tofprox_core::{Error, JointState, Result, TransientHistogram};

use crate::arm::SimArm;
use crate::sensor::{capture, render_expected, render_patches, SensorSpec};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PatchLabel {
    Robot,
    Object,
}

/// A reflecting surface at one range.
#[derive(Debug, Clone, PartialEq)]
pub struct ScenePatch {
    /// Meters from the sensor origin.
    pub distance: f64,
    /// Albedo times geometry factor.
    pub albedo: f64,
    /// Extra temporal spread from the surface's depth extent, in bins. It
    /// adds to the pulse width in quadrature.
    pub broadening: f64,
    pub label: PatchLabel,
}

impl ScenePatch {
    pub fn new(distance: f64, albedo: f64, label: PatchLabel) -> Self {
        Self {
            distance,
            albedo,
            broadening: 0.0,
            label,
        }
    }
}

/// An object placed in front of the sensor.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ObjectSpec {
    pub distance: f64,
    pub albedo: f64,
    /// Depth extent in bins, see [`ScenePatch::broadening`].
    pub width: f64,
}

impl ObjectSpec {
    pub fn patch(&self) -> ScenePatch {
        ScenePatch {
            distance: self.distance,
            albedo: self.albedo,
            broadening: self.width,
            label: PatchLabel::Object,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct GroundTruth {
    pub object_present: bool,
    /// Closest object distance, meters.
    pub distance: Option<f64>,
}

#[derive(Debug, Clone, PartialEq)]
pub struct LabeledFrame {
    pub frame: TransientHistogram,
    pub q: JointState,
    pub ground_truth: GroundTruth,
}

/// Expected histogram of the arm at `q` plus optional objects.
pub fn expected_scene(
    arm: &SimArm,
    q: &JointState,
    objects: &[ObjectSpec],
    spec: &SensorSpec,
) -> Result<Vec<f64>> {
    let mut patches = arm.patches(q.angles())?;
    patches.extend(objects.iter().map(ObjectSpec::patch));
    Ok(render_expected(&patches, spec))
}

/// Renders and captures one frame with its ground truth.
pub fn generate_eval_scene<R: Rng + ?Sized>(
    arm: &SimArm,
    q: &JointState,
    object: Option<&ObjectSpec>,
    spec: &SensorSpec,
    rng: &mut R,
) -> Result<LabeledFrame> {
    if let Some(o) = object {
        let far = spec.bin_to_distance(spec.bins as f64 - 1.0);
        if !(o.distance >= 0.0 && o.distance <= far) || o.albedo < 0.0 {
            return Err(Error::InvalidConfig(format!(
                "object at {} m with albedo {} is outside the sensor range [0, {far}]",
                o.distance, o.albedo
            )));
        }
    }
    let objects: Vec<ObjectSpec> = object.copied().into_iter().collect();
    let expected = expected_scene(arm, q, &objects, spec)?;
    Ok(LabeledFrame {
        frame: capture(&expected, spec, rng)?,
        q: q.clone(),
        ground_truth: GroundTruth {
            object_present: object.is_some(),
            distance: object.map(|o| o.distance),
        },
    })
}

/// Albedo that puts the object's strongest bin `contrast` shot-noise
/// standard deviations above the robot-only expectation in that bin.
pub fn albedo_for_contrast(
    arm: &SimArm,
    q: &JointState,
    distance: f64,
    width: f64,
    contrast: f64,
    spec: &SensorSpec,
) -> Result<f64> {
    let background = expected_scene(arm, q, &[], spec)?;
    let unit = render_patches(
        &[ObjectSpec {
            distance,
            albedo: 1.0,
            width,
        }
        .patch()],
        spec,
    );
    let (peak, amp) = unit
        .iter()
        .copied()
        .enumerate()
        .fold((0, f64::NEG_INFINITY), |best, (i, v)| if v > best.1 { (i, v) } else { best });
    if !(amp > 0.0) {
        return Err(Error::InvalidConfig(format!(
            "object at {distance} m deposits nothing in range"
        )));
    }
    Ok(contrast * background[peak].max(1.0).sqrt() / amp)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::stream_rng;

    #[test]
    fn no_object_no_ground_truth() {
        let arm = SimArm::planar();
        let q = JointState::new(vec![0.1, 0.2]).unwrap();
        let f = generate_eval_scene(&arm, &q, None, &SensorSpec::default(), &mut stream_rng(1, 0))
            .unwrap();
        assert!(!f.ground_truth.object_present);
        assert_eq!(f.ground_truth.distance, None);
    }

    #[test]
    fn object_ground_truth_is_recorded() {
        let arm = SimArm::planar();
        let q = JointState::new(vec![0.1, 0.2]).unwrap();
        let o = ObjectSpec {
            distance: 0.20,
            albedo: 1.0,
            width: 2.0,
        };
        let f = generate_eval_scene(&arm, &q, Some(&o), &SensorSpec::default(), &mut stream_rng(1, 0))
            .unwrap();
        assert!(f.ground_truth.object_present);
        assert_eq!(f.ground_truth.distance, Some(0.20));
    }

    #[test]
    fn zero_albedo_object_leaves_expectation_unchanged() {
        let arm = SimArm::planar();
        let q = JointState::new(vec![-0.4, 1.0]).unwrap();
        let spec = SensorSpec::default();
        let o = ObjectSpec {
            distance: 0.5,
            albedo: 0.0,
            width: 2.0,
        };
        assert_eq!(
            expected_scene(&arm, &q, &[o], &spec).unwrap(),
            expected_scene(&arm, &q, &[], &spec).unwrap()
        );
    }

    #[test]
    fn contrast_albedo_hits_the_target() {
        let arm = SimArm::planar();
        let q = JointState::new(vec![0.3, -0.2]).unwrap();
        let spec = SensorSpec::default();
        let d = spec.bin_to_distance(45.0);
        let a = albedo_for_contrast(&arm, &q, d, 2.5, 6.0, &spec).unwrap();
        let bg = expected_scene(&arm, &q, &[], &spec).unwrap();
        let with = expected_scene(&arm, &q, &[ObjectSpec { distance: d, albedo: a, width: 2.5 }], &spec)
            .unwrap();
        assert!(((with[45] - bg[45]) / bg[45].sqrt() - 6.0).abs() < 1e-9);
    }

    #[test]
    fn out_of_range_object_is_rejected() {
        let arm = SimArm::planar();
        let q = JointState::new(vec![0.0, 0.0]).unwrap();
        let o = ObjectSpec {
            distance: 5.0,
            albedo: 1.0,
            width: 0.0,
        };
        assert!(generate_eval_scene(&arm, &q, Some(&o), &SensorSpec::default(), &mut stream_rng(0, 0))
            .is_err());
    }
}
