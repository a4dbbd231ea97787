//! Built-in scenarios behind the experiment suites.

use super::{GroundTruth, NetworkSpec, Scenario};
use crate::acoustics::{AcousticScene, DeviceSpec, PathComponent, Position, SourceSpec};
use crate::protocol::NetworkProfile;

/// Quiet-room ambient level.
pub const QUIET_NOISE_DB: f64 = 30.0;

/// Per-device ambient levels of the noisy line scene (market-level noise,
/// louder in the middle of the room).
pub const NOISY_LEVELS_DB: [f64; 3] = [61.0, 65.0, 61.0];

/// Two wall reflections either side of the direct arrival. They get
/// relatively stronger with distance as the direct path weakens.
pub fn reflections(arrival_deg: f64, distance_m: f64) -> Vec<PathComponent> {
    let rise = 20.0 * distance_m.log10();
    vec![
        PathComponent::new((arrival_deg + 35.0).rem_euclid(360.0), (-12.0 + rise).min(0.0)),
        PathComponent::new((arrival_deg - 35.0).rem_euclid(360.0), (-15.0 + rise).min(0.0)),
    ]
}

fn with_reflections(mut scene: AcousticScene) -> AcousticScene {
    let talker = scene.source.position;
    let sets: Vec<_> = scene
        .devices
        .iter()
        .map(|d| {
            let arrival = (talker.bearing_to(&d.position) + 180.0).rem_euclid(360.0);
            (d.id, reflections(arrival, talker.distance_to(&d.position)))
        })
        .collect();
    for (id, paths) in sets {
        scene.set_reflections(id, paths);
    }
    scene
}

/// Talker at the origin facing +x, devices on the x axis at 1, 2 and 3 m.
pub fn line_scene() -> AcousticScene {
    let devices = (1..=3).map(|i| {
        let mut d = DeviceSpec::new(i, Position::new(i as f64, 0.0));
        d.front_deg = 90.0;
        d
    });
    let mut scene = AcousticScene::new(SourceSpec::new(Position::new(0.0, 0.0), 0.0, 75.0, "male-1"), devices.collect());
    scene.noise_level_db = Some(QUIET_NOISE_DB);
    with_reflections(scene)
}

pub fn quiet_line() -> Scenario {
    Scenario::new("quiet", line_scene())
}

pub fn noisy_line() -> Scenario {
    let mut s = Scenario::new("noisy", line_scene());
    for (d, level) in s.scene.devices.iter_mut().zip(NOISY_LEVELS_DB) {
        d.noise_level_db = Some(level);
    }
    s
}

pub fn network_line(profile: &NetworkProfile) -> Scenario {
    let mut s = quiet_line();
    s.name = format!("network-{}", profile.name.to_ascii_lowercase());
    s.network = match NetworkProfile::preset(&profile.name) {
        Some(p) if &p == profile => NetworkSpec::Preset { preset: profile.name.clone() },
        _ => NetworkSpec::Custom(profile.clone()),
    };
    s
}

/// Default facing error of the orientation scenarios.
pub const FACING_JITTER_DEG: f64 = 15.0;

/// Two devices 2 m from the talker, `included_deg` apart as seen from the
/// talker. The talker means to address device 1 and faces it, give or take
/// [`FACING_JITTER_DEG`].
pub fn orientation(included_deg: f64) -> Scenario {
    let talker = Position::new(0.0, 0.0);
    let mut devices = vec![DeviceSpec::new(1, talker.offset(0.0, 2.0)), DeviceSpec::new(2, talker.offset(included_deg, 2.0))];
    for d in &mut devices {
        d.front_deg = (talker.bearing_to(&d.position) + 180.0).rem_euclid(360.0);
    }
    let mut scene = AcousticScene::new(SourceSpec::new(talker, 0.0, 70.0, "male-1"), devices);
    scene.noise_level_db = Some(QUIET_NOISE_DB);
    let mut s = Scenario::new(&format!("orientation-{included_deg:.0}"), with_reflections(scene));
    s.facing_jitter_deg = FACING_JITTER_DEG;
    s.ground_truth = GroundTruth::Facing;
    s
}

pub fn singleton() -> Scenario {
    let mut scene = AcousticScene::new(
        SourceSpec::new(Position::new(0.0, 0.0), 0.0, 70.0, "male-1"),
        vec![DeviceSpec::new(1, Position::new(1.5, 0.5))],
    );
    scene.noise_level_db = Some(QUIET_NOISE_DB);
    Scenario::new("singleton", scene)
}
