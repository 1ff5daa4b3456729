//! Parametric arm seen by a sensor mounted on one of its links.
//!
//! The sensor looks along a link. It always sees a short stretch of that
//! link's cover, and further out a wrist plate whose range and tilt follow
//! the joints. With a third joint a tool flange also swings through the
//! field of view. All patch distances and albedos are smooth in `q`.

use std::f64::consts::PI;

use rand::Rng;
use tofprox_core::{Error, GridAxis, GridSpec, JointState, Result};

use crate::scene::{PatchLabel, ScenePatch};

#[derive(Debug, Clone, PartialEq)]
pub struct SimArm {
    /// Inclusive `(min, max)` limits per joint, radians.
    limits: Vec<(f64, f64)>,
}

impl SimArm {
    pub fn new(limits: Vec<(f64, f64)>) -> Result<Self> {
        if limits.is_empty() || limits.len() > 3 {
            return Err(Error::InvalidConfig(format!(
                "the simulated arm has 1 to 3 joints, got {}",
                limits.len()
            )));
        }
        if limits.iter().any(|&(lo, hi)| !(lo <= hi) || !lo.is_finite() || !hi.is_finite()) {
            return Err(Error::InvalidConfig(format!("bad joint limits {limits:?}")));
        }
        Ok(Self { limits })
    }

    /// One joint over `[−π/2, π/2]`.
    pub fn single_joint() -> Self {
        Self {
            limits: vec![(-PI / 2.0, PI / 2.0)],
        }
    }

    /// Two joints, both over `[−π/2, π/2]`.
    pub fn planar() -> Self {
        Self {
            limits: vec![(-PI / 2.0, PI / 2.0); 2],
        }
    }

    /// Three joints over the ranges used for the full-size reference scan:
    /// base `[−π, −π/12]`, shoulder `[−5π/6, 5π/12]`, elbow `[−π/2, 5π/12]`.
    pub fn wrist() -> Self {
        Self {
            limits: vec![
                (-PI, -PI / 12.0),
                (-5.0 * PI / 6.0, 5.0 * PI / 12.0),
                (-PI / 2.0, 5.0 * PI / 12.0),
            ],
        }
    }

    /// The built-in arm for `dof` joints.
    pub fn with_dof(dof: usize) -> Result<Self> {
        match dof {
            1 => Ok(Self::single_joint()),
            2 => Ok(Self::planar()),
            3 => Ok(Self::wrist()),
            n => Err(Error::InvalidConfig(format!(
                "the simulated arm has 1 to 3 joints, got {n}"
            ))),
        }
    }

    pub fn dof(&self) -> usize {
        self.limits.len()
    }

    pub fn limits(&self) -> &[(f64, f64)] {
        &self.limits
    }

    /// Regular grid over the joint limits.
    pub fn grid(&self, step: f64) -> Result<GridSpec> {
        let axes = self
            .limits
            .iter()
            .map(|&(lo, hi)| GridAxis::spanning(lo, hi, step))
            .collect::<Result<Vec<_>>>()?;
        Ok(GridSpec::new(axes))
    }

    /// Uniform joint state within the limits.
    pub fn sample_joint_state<R: Rng + ?Sized>(&self, rng: &mut R) -> JointState {
        let q = self
            .limits
            .iter()
            .map(|&(lo, hi)| lo + (hi - lo) * rng.random::<f64>())
            .collect();
        JointState::new(q).expect("limits are finite")
    }

    /// Robot surfaces visible to the sensor at `q`, nearest first.
    pub fn patches(&self, q: &[f64]) -> Result<Vec<ScenePatch>> {
        if q.len() != self.dof() {
            return Err(Error::DimensionMismatch {
                expected: self.dof(),
                actual: q.len(),
            });
        }
        let q1 = q[0];
        let q2 = q.get(1).copied().unwrap_or(0.0);
        let robot = |r, albedo| ScenePatch::new(r, albedo, PatchLabel::Robot);

        let wrist = 0.17 + 0.05 * q1.sin();
        let mut out = vec![
            robot(0.045, 0.25),
            robot(wrist, 2.0 * (0.55 + 0.45 * q2.cos())),
            robot(wrist + 0.05 + 0.02 * q2.cos(), 1.5 * (0.6 + 0.4 * q2.sin())),
        ];
        if let Some(&q3) = q.get(2) {
            out.push(robot(
                wrist + 0.09 + 0.03 * q3.sin(),
                2.5 * (0.5 + 0.5 * q3.cos()),
            ));
        }
        Ok(out)
    }

    /// Largest robot surface distance at `q`.
    pub fn farthest_surface(&self, q: &[f64]) -> Result<f64> {
        Ok(self
            .patches(q)?
            .iter()
            .map(|p| p.distance)
            .fold(0.0, f64::max))
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wrist_grid_matches_full_scan_size() {
        let g = SimArm::wrist().grid(PI / 12.0).unwrap();
        let counts: Vec<usize> = g.axes.iter().map(|a| a.count).collect();
        assert_eq!(counts, vec![12, 16, 12]);
        assert_eq!(g.len(), 2304);
    }

    #[test]
    fn planar_grid_is_13_by_13() {
        let g = SimArm::planar().grid(PI / 12.0).unwrap();
        assert_eq!(g.len(), 169);
        assert!((g.axes[0].max() - PI / 2.0).abs() < 1e-12);
    }

    #[test]
    fn patches_move_continuously() {
        let arm = SimArm::wrist();
        let a = arm.patches(&[-1.0, 0.3, 0.2]).unwrap();
        let b = arm.patches(&[-1.0 + 1e-6, 0.3 + 1e-6, 0.2 - 1e-6]).unwrap();
        for (x, y) in a.iter().zip(&b) {
            assert!((x.distance - y.distance).abs() < 1e-5);
            assert!((x.albedo - y.albedo).abs() < 1e-5);
        }
    }

    #[test]
    fn albedos_stay_non_negative_over_the_limits() {
        let arm = SimArm::wrist();
        for q in arm.grid(PI / 24.0).unwrap().nodes() {
            assert!(arm.patches(&q).unwrap().iter().all(|p| p.albedo >= 0.0));
        }
    }

    #[test]
    fn wrong_dimension_is_rejected() {
        assert!(SimArm::planar().patches(&[0.0]).is_err());
        assert!(SimArm::with_dof(4).is_err());
    }
}
