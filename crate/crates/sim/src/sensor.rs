//! Sensor model and the expected-count forward renderer.

use rand::Rng;
use rand_distr::{Distribution, Poisson};
use tofprox_core::{Error, Result, TransientHistogram};

use crate::scene::ScenePatch;

/// Distance below which the radiometric falloff stops growing.
pub const NEAR_FIELD_FLOOR_M: f64 = 0.02;
/// Distance at which a unit-albedo patch returns `signal_photons`.
pub const REFERENCE_RANGE_M: f64 = 0.1;

/// Return from inside the sensor package that sits just before the
/// zero-distance bin.
///
/// A static part is present in every frame. With probability
/// `burst_probability` a capture also picks up an extra burst, which is what
/// makes these bins unreliable for detection.
#[derive(Debug, Clone, PartialEq)]
pub struct NearField {
    pub center_bin: f64,
    pub sigma: f64,
    pub photons: f64,
    pub burst_probability: f64,
    pub burst_photons: f64,
    pub burst_sigma: f64,
}

impl NearField {
    pub fn none() -> Self {
        Self {
            center_bin: 10.0,
            sigma: 1.5,
            photons: 0.0,
            burst_probability: 0.0,
            burst_photons: 0.0,
            burst_sigma: 2.0,
        }
    }
}

impl Default for NearField {
    fn default() -> Self {
        Self {
            center_bin: 10.0,
            sigma: 1.5,
            photons: 225.0,
            burst_probability: 0.04,
            burst_photons: 500.0,
            burst_sigma: 2.0,
        }
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct SensorSpec {
    pub bins: usize,
    /// Meters per bin.
    pub slope: f64,
    /// Meters at bin zero.
    pub intercept: f64,
    /// Pulse width in bins.
    pub pulse_sigma: f64,
    /// Expected photons from a unit-albedo patch at 0.1 m.
    pub signal_photons: f64,
    /// Ambient light, photons per bin.
    pub ambient_rate: f64,
    /// Detector dark counts, photons per bin.
    pub dark_rate: f64,
    pub near_field: NearField,
    /// Additive per-bin bias of the current power cycle.
    pub power_bias: Vec<f64>,
    /// When false, captures return the expected counts.
    pub shot_noise: bool,
}

impl Default for SensorSpec {
    fn default() -> Self {
        let bins = 80;
        Self {
            bins,
            slope: 0.01387,
            intercept: -0.1825,
            pulse_sigma: 2.0,
            signal_photons: 2000.0,
            ambient_rate: 5.0,
            dark_rate: 40.0,
            near_field: NearField::default(),
            power_bias: vec![0.0; bins],
            shot_noise: true,
        }
    }
}

impl SensorSpec {
    /// A sensor with no ambient light, dark counts or near-field return.
    pub fn ideal(bins: usize) -> Self {
        Self {
            bins,
            ambient_rate: 0.0,
            dark_rate: 0.0,
            near_field: NearField::none(),
            power_bias: vec![0.0; bins],
            ..Self::default()
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.bins == 0 {
            return Err(Error::InvalidConfig("sensor needs at least one bin".into()));
        }
        if !(self.pulse_sigma > 0.0) || !(self.slope > 0.0) {
            return Err(Error::InvalidConfig(
                "pulse width and bin slope must be positive".into(),
            ));
        }
        if !(self.signal_photons > 0.0) || self.ambient_rate < 0.0 || self.dark_rate < 0.0 {
            return Err(Error::InvalidConfig("photon rates must be non-negative".into()));
        }
        if self.power_bias.len() != self.bins {
            return Err(Error::LengthMismatch {
                expected: self.bins,
                actual: self.power_bias.len(),
            });
        }
        let p = self.near_field.burst_probability;
        if !(0.0..=1.0).contains(&p) {
            return Err(Error::InvalidConfig(format!(
                "burst probability {p} outside [0, 1]"
            )));
        }
        Ok(())
    }

    /// Fractional bin whose center corresponds to distance `r`.
    pub fn distance_to_bin(&self, r: f64) -> f64 {
        (r - self.intercept) / self.slope
    }

    pub fn bin_to_distance(&self, bin: f64) -> f64 {
        self.slope * bin + self.intercept
    }

    /// Expected total photons returned by a patch.
    pub fn patch_photons(&self, patch: &ScenePatch) -> f64 {
        let r = patch.distance.max(NEAR_FIELD_FLOOR_M);
        self.signal_photons * patch.albedo * (REFERENCE_RANGE_M / r).powi(4)
    }

    /// Temporal spread of a patch's return, in bins.
    pub fn patch_sigma(&self, patch: &ScenePatch) -> f64 {
        self.pulse_sigma.hypot(patch.broadening)
    }

    pub fn with_power_bias(mut self, bias: Vec<f64>) -> Self {
        self.power_bias = bias;
        self
    }

    pub fn with_ambient(mut self, rate: f64) -> Self {
        self.ambient_rate = rate;
        self
    }
}

/// Adds `photons` spread over the bins by a Gaussian centered at `center`
/// (bin coordinates, bin `i` covering `[i − ½, i + ½)`).
pub fn deposit(out: &mut [f64], center: f64, sigma: f64, photons: f64) {
    if photons <= 0.0 || out.is_empty() {
        return;
    }
    let reach = 8.0 * sigma + 1.0;
    let lo = (center - reach).floor().max(0.0) as usize;
    let hi = ((center + reach).ceil().max(0.0) as usize).min(out.len() - 1);
    if lo > hi {
        return;
    }
    let scale = 1.0 / (sigma * std::f64::consts::SQRT_2);
    let mut cdf_lo = libm::erf((lo as f64 - 0.5 - center) * scale);
    for (i, slot) in out.iter_mut().enumerate().take(hi + 1).skip(lo) {
        let cdf_hi = libm::erf((i as f64 + 0.5 - center) * scale);
        *slot += 0.5 * photons * (cdf_hi - cdf_lo);
        cdf_lo = cdf_hi;
    }
}

/// Expected photons per bin from the patches alone.
pub fn render_patches(patches: &[ScenePatch], spec: &SensorSpec) -> Vec<f64> {
    let mut out = vec![0.0; spec.bins];
    for p in patches {
        deposit(
            &mut out,
            spec.distance_to_bin(p.distance),
            spec.patch_sigma(p),
            spec.patch_photons(p),
        );
    }
    out
}

/// Expected histogram of a scene: patch returns, ambient and dark counts,
/// the static near-field return and the power-cycle bias, clamped at zero.
pub fn render_expected(patches: &[ScenePatch], spec: &SensorSpec) -> Vec<f64> {
    let mut out = render_patches(patches, spec);
    let nf = &spec.near_field;
    deposit(&mut out, nf.center_bin, nf.sigma, nf.photons);
    let dc = spec.ambient_rate + spec.dark_rate;
    for (v, b) in out.iter_mut().zip(spec.power_bias.iter().chain(std::iter::repeat(&0.0))) {
        *v = (*v + dc + b).max(0.0);
    }
    out
}

/// Independent Poisson draw per bin.
pub fn sample_frame<R: Rng + ?Sized>(expected: &[f64], rng: &mut R) -> Result<TransientHistogram> {
    let counts = expected
        .iter()
        .map(|&lambda| {
            if !(lambda >= 0.0) || !lambda.is_finite() {
                return Err(Error::InvalidConfig(format!(
                    "expected count must be finite and non-negative, got {lambda}"
                )));
            }
            if lambda == 0.0 {
                return Ok(0.0);
            }
            Poisson::new(lambda)
                .map(|d| d.sample(rng))
                .map_err(|e| Error::InvalidConfig(e.to_string()))
        })
        .collect::<Result<Vec<_>>>()?;
    TransientHistogram::new(counts)
}

/// Deterministic frame for a seed.
pub fn sample_frame_seeded(expected: &[f64], seed: u64) -> Result<TransientHistogram> {
    sample_frame(expected, &mut crate::stream_rng(seed, 0))
}

/// One capture of a scene whose expected histogram is `expected`: adds a
/// near-field burst with the configured probability, then shot noise.
pub fn capture<R: Rng + ?Sized>(
    expected: &[f64],
    spec: &SensorSpec,
    rng: &mut R,
) -> Result<TransientHistogram> {
    let nf = &spec.near_field;
    let burst = rng.random::<f64>() < nf.burst_probability;
    if !spec.shot_noise {
        return TransientHistogram::new(expected.to_vec());
    }
    if burst && nf.burst_photons > 0.0 {
        let mut e = expected.to_vec();
        deposit(&mut e, nf.center_bin, nf.burst_sigma, nf.burst_photons);
        sample_frame(&e, rng)
    } else {
        sample_frame(expected, rng)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scene::PatchLabel;

    fn patch(r: f64, albedo: f64) -> ScenePatch {
        ScenePatch::new(r, albedo, PatchLabel::Robot)
    }

    fn argmax(v: &[f64]) -> usize {
        let mut best = 0;
        for i in 1..v.len() {
            if v[i] > v[best] {
                best = i;
            }
        }
        best
    }

    #[test]
    fn empty_scene_renders_zero() {
        let spec = SensorSpec::ideal(80);
        assert!(render_expected(&[], &spec).iter().all(|&v| v == 0.0));
    }

    #[test]
    fn ambient_only_is_flat() {
        let spec = SensorSpec::ideal(80).with_ambient(12.5);
        assert!(render_expected(&[], &spec).iter().all(|&v| v == 12.5));
    }

    #[test]
    fn patch_lands_in_its_bin() {
        let spec = SensorSpec::ideal(80);
        let e = render_expected(&[patch(0.3723, 1.0)], &spec);
        assert_eq!(argmax(&e), 40);
    }

    #[test]
    fn deposit_conserves_photons_away_from_edges() {
        let mut out = vec![0.0; 100];
        deposit(&mut out, 50.3, 2.0, 1234.0);
        let total: f64 = out.iter().sum();
        assert!((total - 1234.0).abs() < 1e-9);
    }

    #[test]
    fn falloff_is_fourth_power_with_floor() {
        let spec = SensorSpec::ideal(80);
        let near = spec.patch_photons(&patch(0.1, 1.0));
        let far = spec.patch_photons(&patch(0.2, 1.0));
        assert!((near - 2000.0).abs() < 1e-9);
        assert!((near / far - 16.0).abs() < 1e-9);
        assert_eq!(
            spec.patch_photons(&patch(0.0, 1.0)),
            spec.patch_photons(&patch(NEAR_FIELD_FLOOR_M, 1.0))
        );
    }

    #[test]
    fn zero_expectation_samples_zero() {
        let f = sample_frame_seeded(&[0.0; 16], 3).unwrap();
        assert!(f.counts().iter().all(|&c| c == 0.0));
    }

    #[test]
    fn sampling_is_seeded() {
        let e = vec![30.0; 40];
        assert_eq!(sample_frame_seeded(&e, 11).unwrap(), sample_frame_seeded(&e, 11).unwrap());
        assert_ne!(sample_frame_seeded(&e, 11).unwrap(), sample_frame_seeded(&e, 12).unwrap());
    }

    #[test]
    fn noiseless_capture_returns_expectation() {
        let spec = SensorSpec {
            shot_noise: false,
            ..SensorSpec::default()
        };
        let e = render_expected(&[patch(0.2, 1.0)], &spec);
        let mut rng = crate::stream_rng(0, 0);
        assert_eq!(capture(&e, &spec, &mut rng).unwrap().counts(), e.as_slice());
    }

    #[test]
    fn bias_length_is_checked() {
        let spec = SensorSpec::default().with_power_bias(vec![0.0; 3]);
        assert!(spec.validate().is_err());
    }
}
