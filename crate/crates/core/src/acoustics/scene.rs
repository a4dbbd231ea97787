use std::fmt;

use serde::{Deserialize, Serialize};

use super::AcousticsError;

/// Device identifier. Real devices use ids `>= 1`; [`ORCHESTRATOR`] is the
/// phone APP / router endpoint on the network.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash, Serialize, Deserialize)]
#[serde(transparent)]
pub struct DeviceId(pub u32);

pub const ORCHESTRATOR: DeviceId = DeviceId(0);

impl fmt::Display for DeviceId {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "#{}", self.0)
    }
}

/// A point on the floor plan, meters. Serialized as `[x, y]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(from = "[f64; 2]", into = "[f64; 2]")]
pub struct Position {
    pub x: f64,
    pub y: f64,
}

impl From<[f64; 2]> for Position {
    fn from([x, y]: [f64; 2]) -> Self {
        Self { x, y }
    }
}

impl From<Position> for [f64; 2] {
    fn from(p: Position) -> Self {
        [p.x, p.y]
    }
}

impl Position {
    pub const fn new(x: f64, y: f64) -> Self {
        Self { x, y }
    }

    pub fn distance_to(&self, other: &Position) -> f64 {
        (other.x - self.x).hypot(other.y - self.y)
    }

    /// Bearing of `other` seen from `self`, degrees counter-clockwise from
    /// +x, in `[0, 360)`.
    pub fn bearing_to(&self, other: &Position) -> f64 {
        wrap_deg((other.y - self.y).atan2(other.x - self.x).to_degrees())
    }

    /// The point `distance` meters away along `bearing_deg`.
    pub fn offset(&self, bearing_deg: f64, distance: f64) -> Position {
        let r = bearing_deg.to_radians();
        Position::new(self.x + distance * r.cos(), self.y + distance * r.sin())
    }

    fn is_finite(&self) -> bool {
        self.x.is_finite() && self.y.is_finite()
    }
}

pub(crate) fn wrap_deg(deg: f64) -> f64 {
    let w = deg.rem_euclid(360.0);
    // rem_euclid can round up to exactly 360 for tiny negative inputs
    if w >= 360.0 {
        0.0
    } else {
        w
    }
}

/// One arrival path at a device: where it comes from and how loud it is
/// relative to the on-axis direct path.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PathComponent {
    pub bearing_deg: f64,
    pub relative_level_db: f64,
}

impl PathComponent {
    pub fn new(bearing_deg: f64, relative_level_db: f64) -> Self {
        Self { bearing_deg, relative_level_db }
    }

    pub fn amplitude(&self) -> f64 {
        10f64.powf(self.relative_level_db / 20.0)
    }

    pub fn linear_energy(&self) -> f64 {
        10f64.powf(self.relative_level_db / 10.0)
    }
}

/// The talker.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceSpec {
    #[serde(rename = "position_m")]
    pub position: Position,
    pub facing_deg: f64,
    /// dB SPL at 1 m.
    pub level_db: f64,
    pub corpus_id: String,
    /// A silent source emits nothing; used for speaker-only scenes.
    #[serde(default)]
    pub silent: bool,
}

impl SourceSpec {
    pub fn new(position: Position, facing_deg: f64, level_db: f64, corpus_id: impl Into<String>) -> Self {
        Self { position, facing_deg, level_db, corpus_id: corpus_id.into(), silent: false }
    }
}

fn default_playback_level() -> f64 {
    70.0
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DeviceSpec {
    pub id: DeviceId,
    #[serde(rename = "position_m")]
    pub position: Position,
    pub mic_gain: f64,
    pub spk_gain: f64,
    #[serde(default)]
    pub is_playing: bool,
    /// Direction the device front faces; the calibration phone stands there.
    #[serde(default)]
    pub front_deg: f64,
    /// Overrides the scene-wide ambient noise level at this device.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_level_db: Option<f64>,
    /// Loudspeaker output level (dB SPL at 1 m) of whatever the device plays.
    #[serde(default = "default_playback_level")]
    pub playback_level_db: f64,
}

impl DeviceSpec {
    pub fn new(id: u32, position: Position) -> Self {
        Self {
            id: DeviceId(id),
            position,
            mic_gain: 1.0,
            spk_gain: 1.0,
            is_playing: false,
            front_deg: 0.0,
            noise_level_db: None,
            playback_level_db: default_playback_level(),
        }
    }

    pub fn with_mic_gain(mut self, gain: f64) -> Self {
        self.mic_gain = gain;
        self
    }

    pub fn with_spk_gain(mut self, gain: f64) -> Self {
        self.spk_gain = gain;
        self
    }

    pub fn playing(mut self, on: bool) -> Self {
        self.is_playing = on;
        self
    }
}

/// Axis-aligned room extent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Bounds {
    #[serde(rename = "min_m")]
    pub min: Position,
    #[serde(rename = "max_m")]
    pub max: Position,
}

impl Bounds {
    pub const fn new(min: Position, max: Position) -> Self {
        Self { min, max }
    }

    pub fn contains(&self, p: &Position) -> bool {
        p.x >= self.min.x && p.x <= self.max.x && p.y >= self.min.y && p.y <= self.max.y
    }
}

impl Default for Bounds {
    fn default() -> Self {
        Self::new(Position::new(-50.0, -50.0), Position::new(50.0, 50.0))
    }
}

/// Reflection templates for one device.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ReflectionSet {
    pub device_id: DeviceId,
    pub paths: Vec<PathComponent>,
}

fn default_sample_rate() -> u32 {
    16_000
}

fn default_jitter() -> f64 {
    super::DEFAULT_DOA_JITTER_DEG
}

fn default_playback_id() -> String {
    super::PLAYBACK_ID.to_string()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AcousticScene {
    pub source: SourceSpec,
    pub devices: Vec<DeviceSpec>,
    #[serde(default)]
    pub reflections: Vec<ReflectionSet>,
    /// Ambient white-noise level in dB SPL; `None` renders a noiseless scene.
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub noise_level_db: Option<f64>,
    #[serde(rename = "sample_rate_hz", default = "default_sample_rate")]
    pub sample_rate: u32,
    #[serde(default)]
    pub rng_seed: u64,
    #[serde(default)]
    pub bounds: Bounds,
    #[serde(default = "default_jitter")]
    pub doa_jitter_deg: f64,
    /// Waveform any playing device emits during live operation.
    #[serde(default = "default_playback_id")]
    pub playback_corpus_id: String,
}

impl AcousticScene {
    pub fn new(source: SourceSpec, devices: Vec<DeviceSpec>) -> Self {
        Self {
            source,
            devices,
            reflections: Vec::new(),
            noise_level_db: None,
            sample_rate: default_sample_rate(),
            rng_seed: 0,
            bounds: Bounds::default(),
            doa_jitter_deg: default_jitter(),
            playback_corpus_id: default_playback_id(),
        }
    }

    pub fn device(&self, id: DeviceId) -> Result<&DeviceSpec, AcousticsError> {
        self.devices.iter().find(|d| d.id == id).ok_or(AcousticsError::UnknownDevice(id))
    }

    pub fn device_mut(&mut self, id: DeviceId) -> Result<&mut DeviceSpec, AcousticsError> {
        self.devices.iter_mut().find(|d| d.id == id).ok_or(AcousticsError::UnknownDevice(id))
    }

    pub fn device_ids(&self) -> Vec<DeviceId> {
        let mut ids: Vec<_> = self.devices.iter().map(|d| d.id).collect();
        ids.sort();
        ids
    }

    pub fn reflections_for(&self, id: DeviceId) -> &[PathComponent] {
        self.reflections
            .iter()
            .find(|r| r.device_id == id)
            .map(|r| r.paths.as_slice())
            .unwrap_or(&[])
    }

    pub fn set_reflections(&mut self, id: DeviceId, paths: Vec<PathComponent>) {
        match self.reflections.iter_mut().find(|r| r.device_id == id) {
            Some(set) => set.paths = paths,
            None => self.reflections.push(ReflectionSet { device_id: id, paths }),
        }
    }

    /// Effective ambient noise level at a device.
    pub fn noise_at(&self, id: DeviceId) -> Result<Option<f64>, AcousticsError> {
        Ok(self.device(id)?.noise_level_db.or(self.noise_level_db))
    }

    /// Same scene with all noise and reflections removed.
    pub fn quiet_free_field(&self) -> Self {
        let mut s = self.clone();
        s.noise_level_db = None;
        s.reflections.clear();
        for d in &mut s.devices {
            d.noise_level_db = None;
        }
        s
    }

    pub fn validate(&self) -> Result<(), AcousticsError> {
        let bad = |m: String| Err(AcousticsError::InvalidScene(m));
        if self.devices.is_empty() {
            return bad("scene has no devices".into());
        }
        if self.sample_rate != 16_000 {
            return bad(format!("sample rate {} Hz unsupported (16000 only)", self.sample_rate));
        }
        let b = &self.bounds;
        if !(b.min.is_finite() && b.max.is_finite()) || b.min.x > b.max.x || b.min.y > b.max.y {
            return bad("malformed bounds".into());
        }
        if b.max.x - b.min.x > 100.0 || b.max.y - b.min.y > 100.0 {
            return bad("bounding box exceeds 100 m per axis".into());
        }
        let s = &self.source;
        if !s.position.is_finite() || !s.facing_deg.is_finite() {
            return bad("source geometry is not finite".into());
        }
        if !(40.0..=100.0).contains(&s.level_db) {
            return bad(format!("source level {} dB outside [40, 100]", s.level_db));
        }
        let mut ids = std::collections::BTreeSet::new();
        for d in &self.devices {
            if d.id.0 == 0 {
                return bad("device ids start at 1".into());
            }
            if !ids.insert(d.id) {
                return bad(format!("duplicate device id {}", d.id));
            }
            if !d.position.is_finite() {
                return bad(format!("device {} position is not finite", d.id));
            }
            if !(d.mic_gain > 0.0 && d.mic_gain <= 100.0) {
                return bad(format!("device {} mic_gain {} outside (0, 100]", d.id, d.mic_gain));
            }
            if !(0.0..=100.0).contains(&d.spk_gain) {
                return bad(format!("device {} spk_gain {} outside [0, 100]", d.id, d.spk_gain));
            }
        }
        for set in &self.reflections {
            if !ids.contains(&set.device_id) {
                return bad(format!("reflections reference unknown device {}", set.device_id));
            }
            if set.paths.iter().any(|p| !p.bearing_deg.is_finite() || p.relative_level_db.is_nan() || p.relative_level_db > 0.0) {
                return bad(format!("device {} has a reflection above the direct level", set.device_id));
            }
        }
        if self.doa_jitter_deg.is_nan() || self.doa_jitter_deg < 0.0 {
            return bad("negative DOA jitter".into());
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn bearings_follow_the_unit_circle() {
        let o = Position::new(0.0, 0.0);
        assert_eq!(o.bearing_to(&Position::new(1.0, 0.0)), 0.0);
        assert!((o.bearing_to(&Position::new(0.0, 1.0)) - 90.0).abs() < 1e-12);
        assert!((o.bearing_to(&Position::new(0.0, -1.0)) - 270.0).abs() < 1e-12);
        let p = o.offset(60.0, 2.0);
        assert!((o.distance_to(&p) - 2.0).abs() < 1e-12);
        assert!((o.bearing_to(&p) - 60.0).abs() < 1e-9);
    }

    #[test]
    fn wrap_handles_tiny_negatives() {
        assert_eq!(wrap_deg(-1e-18), 0.0);
        assert_eq!(wrap_deg(370.0), 10.0);
    }

    fn two_device_scene() -> AcousticScene {
        AcousticScene::new(
            SourceSpec::new(Position::new(0.0, 0.0), 0.0, 70.0, "male-1"),
            vec![DeviceSpec::new(1, Position::new(1.0, 0.0)), DeviceSpec::new(2, Position::new(2.0, 0.0))],
        )
    }

    #[test]
    fn validation_rejects_duplicate_ids() {
        let mut s = two_device_scene();
        assert!(s.validate().is_ok());
        s.devices[1].id = DeviceId(1);
        assert!(matches!(s.validate(), Err(AcousticsError::InvalidScene(_))));
    }

    #[test]
    fn validation_rejects_oversized_room_and_levels() {
        let mut s = two_device_scene();
        s.bounds = Bounds::new(Position::new(0.0, 0.0), Position::new(120.0, 5.0));
        assert!(s.validate().is_err());
        let mut s = two_device_scene();
        s.source.level_db = 120.0;
        assert!(s.validate().is_err());
        let mut s = two_device_scene();
        s.devices[0].mic_gain = 0.0;
        assert!(s.validate().is_err());
    }

    #[test]
    fn scene_round_trips_through_toml() {
        let mut s = two_device_scene();
        s.set_reflections(DeviceId(2), vec![PathComponent::new(150.0, -10.0)]);
        s.noise_level_db = Some(30.0);
        let text = toml::to_string(&s).unwrap();
        assert!(text.contains("position_m"));
        let back: AcousticScene = toml::from_str(&text).unwrap();
        assert_eq!(back, s);
    }
}
