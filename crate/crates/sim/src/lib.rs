//! Synthetic direct time-of-flight sensor on a simulated arm.
//!
//! Scenes are lists of reflecting patches. The renderer turns them into
//! expected photon counts per bin (pulse spread, `1/r⁴` falloff, ambient
//! and dark counts, a near-field return, power-cycle bias) and captures add
//! Poisson shot noise. All randomness comes from explicitly seeded streams.

pub mod arm;
pub mod generate;
pub mod scene;
pub mod sensor;

pub use arm::SimArm;
pub use generate::{capture_robot_frames, generate_reference, power_cycle_bias};
pub use scene::{
    albedo_for_contrast, expected_scene, generate_eval_scene, GroundTruth, LabeledFrame,
    ObjectSpec, PatchLabel, ScenePatch,
};
pub use sensor::{
    capture, render_expected, sample_frame, sample_frame_seeded, NearField, SensorSpec,
};

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

/// Independent random stream `stream` of `seed`.
pub fn stream_rng(seed: u64, stream: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(stream);
    rng
}
