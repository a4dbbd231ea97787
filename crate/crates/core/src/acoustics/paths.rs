use rand::Rng;
use rand_distr::{Distribution, Normal};

use super::scene::wrap_deg;
use super::{AcousticScene, AcousticsError, DeviceId, PathComponent};
use crate::dsp::DoaSeries;
use crate::seed;

pub const DEFAULT_DOA_JITTER_DEG: f64 = 0.5;

const DOA_STREAM: u64 = 0xd0a;

/// Cosine-lobe source directivity applied to the direct path only:
/// `level = -depth_db * (1 - cos(delta))`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Directivity {
    pub depth_db: f64,
}

impl Default for Directivity {
    fn default() -> Self {
        Self { depth_db: 6.0 }
    }
}

impl Directivity {
    pub fn attenuation_db(&self, delta_deg: f64) -> f64 {
        -self.depth_db * (1.0 - delta_deg.to_radians().cos())
    }
}

/// Path set seen by a device for a talker facing `facing_deg`.
///
/// `device_bearing_deg` is the device's bearing as seen from the talker. The
/// returned direct path comes first; it arrives from the opposite bearing and
/// is attenuated by the default directivity. Reflections pass through as-is.
pub fn orientation_paths(
    facing_deg: f64,
    device_bearing_deg: f64,
    base_reflections: &[PathComponent],
) -> Vec<PathComponent> {
    orientation_paths_with(&Directivity::default(), facing_deg, device_bearing_deg, base_reflections)
}

pub fn orientation_paths_with(
    directivity: &Directivity,
    facing_deg: f64,
    device_bearing_deg: f64,
    base_reflections: &[PathComponent],
) -> Vec<PathComponent> {
    let delta = facing_deg - device_bearing_deg;
    let direct = PathComponent::new(wrap_deg(device_bearing_deg + 180.0), directivity.attenuation_db(delta));
    std::iter::once(direct).chain(base_reflections.iter().copied()).collect()
}

/// Paths from the scene's talker to one device.
pub fn device_paths(scene: &AcousticScene, id: DeviceId) -> Result<Vec<PathComponent>, AcousticsError> {
    let dev = scene.device(id)?;
    let bearing = scene.source.position.bearing_to(&dev.position);
    Ok(orientation_paths(scene.source.facing_deg, bearing, scene.reflections_for(id)))
}

/// Per-frame DOA estimates for one device.
///
/// Each frame picks one arrival path with probability proportional to its
/// linear energy and adds Gaussian jitter of `scene.doa_jitter_deg`.
pub fn doa_observations(
    scene: &AcousticScene,
    id: DeviceId,
    num_frames: usize,
) -> Result<DoaSeries, AcousticsError> {
    let paths = device_paths(scene, id)?;
    sample_doa(&paths, num_frames, scene.doa_jitter_deg, seed::derive(scene.rng_seed, &[DOA_STREAM, id.0 as u64]))
}

/// Mixture sampling behind [`doa_observations`], exposed for path sets that
/// do not come from a scene.
pub fn sample_doa(
    paths: &[PathComponent],
    num_frames: usize,
    jitter_deg: f64,
    rng_seed: u64,
) -> Result<DoaSeries, AcousticsError> {
    if num_frames < 2 {
        return Err(AcousticsError::InvalidArgument(format!("need at least 2 DOA frames, got {num_frames}")));
    }
    if paths.is_empty() {
        return Err(AcousticsError::InvalidArgument("device has no arrival paths".into()));
    }
    if !(jitter_deg >= 0.0 && jitter_deg.is_finite()) {
        return Err(AcousticsError::InvalidArgument(format!("invalid jitter {jitter_deg}")));
    }
    let weights: Vec<f64> = paths.iter().map(PathComponent::linear_energy).collect();
    let total: f64 = weights.iter().sum();
    let mut cumulative = Vec::with_capacity(weights.len());
    let mut acc = 0.0;
    for w in &weights {
        acc += w / total;
        cumulative.push(acc);
    }
    let jitter = Normal::new(0.0, jitter_deg).expect("validated jitter");
    let mut rng = seed::stream(rng_seed, &[]);
    let frames = (0..num_frames)
        .map(|_| {
            let u: f64 = rng.random();
            let idx = cumulative.iter().position(|&c| u < c).unwrap_or(paths.len() - 1);
            let z = jitter.sample(&mut rng);
            wrap_deg(paths[idx].bearing_deg + z)
        })
        .collect();
    Ok(DoaSeries::from_frames(frames).expect("at least two frames"))
}
