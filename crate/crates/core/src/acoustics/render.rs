use rand_distr::{Distribution, Normal};

use super::{device_paths, AcousticScene, AcousticsError, Corpus, DeviceId, PathComponent};
use crate::seed;

const NOISE_STREAM: u64 = 0x0015e;
const MIN_DISTANCE_M: f64 = 1e-6;

/// dB SPL to RMS amplitude in pascals.
pub fn level_to_amplitude(level_db: f64) -> f64 {
    10f64.powf((level_db - 94.0) / 20.0)
}

/// What one device records during a wake event.
#[derive(Debug, Clone, PartialEq)]
pub struct Capture {
    pub device_id: DeviceId,
    pub sample_rate: u32,
    /// Single (already superposed) microphone channel.
    pub mic_signal: Vec<f64>,
    /// The device's own playback before its loudspeaker gain; empty when idle.
    pub ref_signal: Vec<f64>,
}

/// Renders the microphone and reference channels of one device.
///
/// The microphone hears the talker over every arrival path with `1/d`
/// spreading, the loudspeakers of every other playing device over a direct
/// `1/d` path, and white Gaussian noise at the ambient level; all of it
/// scaled by the device's `mic_gain`.
pub fn render_capture(scene: &AcousticScene, corpus: &Corpus, id: DeviceId) -> Result<Capture, AcousticsError> {
    let dev = scene.device(id)?;
    let mut mic = Vec::new();

    if !scene.source.silent {
        let d = scene.source.position.distance_to(&dev.position);
        if d < MIN_DISTANCE_M {
            return Err(AcousticsError::DegenerateGeometry(format!("talker sits on device {id}")));
        }
        let path_gain: f64 = device_paths(scene, id)?.iter().map(PathComponent::amplitude).sum();
        let gain = level_to_amplitude(scene.source.level_db) * path_gain / d * dev.mic_gain;
        accumulate(&mut mic, corpus.get(&scene.source.corpus_id)?, gain);
    }

    for other in scene.devices.iter().filter(|o| o.is_playing && o.id != id) {
        let d = other.position.distance_to(&dev.position);
        if d < MIN_DISTANCE_M {
            return Err(AcousticsError::DegenerateGeometry(format!("devices {} and {id} coincide", other.id)));
        }
        let gain = level_to_amplitude(other.playback_level_db) * other.spk_gain / d * dev.mic_gain;
        accumulate(&mut mic, corpus.get(&scene.playback_corpus_id)?, gain);
    }

    if mic.is_empty() {
        // nothing audible; keep one corpus length of silence
        mic = vec![0.0; corpus.get(&scene.source.corpus_id)?.len()];
    }

    if let Some(level) = scene.noise_at(id)? {
        let sigma = level_to_amplitude(level) * dev.mic_gain;
        let normal = Normal::new(0.0, sigma).map_err(|e| AcousticsError::InvalidScene(e.to_string()))?;
        let mut rng = seed::stream(scene.rng_seed, &[NOISE_STREAM, id.0 as u64]);
        mic.iter_mut().for_each(|s| *s += normal.sample(&mut rng));
    }

    let ref_signal = if dev.is_playing {
        let amp = level_to_amplitude(dev.playback_level_db);
        corpus.get(&scene.playback_corpus_id)?.iter().map(|s| s * amp).collect()
    } else {
        Vec::new()
    };

    Ok(Capture { device_id: id, sample_rate: scene.sample_rate, mic_signal: mic, ref_signal })
}

fn accumulate(dst: &mut Vec<f64>, src: &[f64], gain: f64) {
    if dst.len() < src.len() {
        dst.resize(src.len(), 0.0);
    }
    dst.iter_mut().zip(src).for_each(|(d, s)| *d += s * gain);
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::acoustics::{DeviceSpec, Position, SourceSpec};

    fn energy(x: &[f64]) -> f64 {
        x.iter().map(|v| v * v).sum()
    }

    fn scene(devices: Vec<DeviceSpec>) -> AcousticScene {
        AcousticScene::new(SourceSpec::new(Position::new(0.0, 0.0), 0.0, 94.0, "male-2"), devices)
    }

    #[test]
    fn unit_distance_unit_gain_reproduces_the_waveform() {
        let corpus = Corpus::synthetic();
        let s = scene(vec![DeviceSpec::new(1, Position::new(1.0, 0.0)), DeviceSpec::new(2, Position::new(0.0, 5.0))]);
        let cap = render_capture(&s, &corpus, DeviceId(1)).unwrap();
        let want = energy(corpus.get("male-2").unwrap());
        assert!((energy(&cap.mic_signal) - want).abs() <= 1e-12 * want);
        assert!(cap.ref_signal.is_empty());
    }

    #[test]
    fn mic_gain_scales_energy_quadratically() {
        let corpus = Corpus::synthetic();
        let base = scene(vec![DeviceSpec::new(1, Position::new(1.0, 0.0)), DeviceSpec::new(2, Position::new(0.0, 5.0))]);
        let mut boosted = base.clone();
        boosted.devices[0].mic_gain = 2.0;
        let e1 = energy(&render_capture(&base, &corpus, DeviceId(1)).unwrap().mic_signal);
        let e2 = energy(&render_capture(&boosted, &corpus, DeviceId(1)).unwrap().mic_signal);
        assert!((e2 / e1 - 4.0).abs() < 1e-9);
    }

    #[test]
    fn doubling_distance_quarters_energy() {
        let corpus = Corpus::synthetic();
        let s = scene(vec![DeviceSpec::new(1, Position::new(1.0, 0.0)), DeviceSpec::new(2, Position::new(2.0, 0.0))]);
        let e1 = energy(&render_capture(&s, &corpus, DeviceId(1)).unwrap().mic_signal);
        let e2 = energy(&render_capture(&s, &corpus, DeviceId(2)).unwrap().mic_signal);
        assert!((e1 / e2 - 4.0).abs() < 4e-9);
    }

    #[test]
    fn errors_for_unknown_device_and_coincident_talker() {
        let corpus = Corpus::synthetic();
        let s = scene(vec![DeviceSpec::new(1, Position::new(0.0, 0.0)), DeviceSpec::new(2, Position::new(1.0, 0.0))]);
        assert_eq!(render_capture(&s, &corpus, DeviceId(9)).unwrap_err(), AcousticsError::UnknownDevice(DeviceId(9)));
        assert!(matches!(render_capture(&s, &corpus, DeviceId(1)), Err(AcousticsError::DegenerateGeometry(_))));
    }

    #[test]
    fn playing_device_fills_its_reference_and_leaks_into_others() {
        let corpus = Corpus::synthetic();
        let mut s = scene(vec![
            DeviceSpec::new(1, Position::new(1.0, 0.0)),
            DeviceSpec::new(2, Position::new(3.0, 0.0)).playing(true),
        ]);
        s.source.silent = true;
        let listener = render_capture(&s, &corpus, DeviceId(1)).unwrap();
        let player = render_capture(&s, &corpus, DeviceId(2)).unwrap();
        assert_eq!(player.ref_signal.len(), corpus.get(crate::acoustics::PLAYBACK_ID).unwrap().len());
        // own playback is cancelled locally, talker silent
        assert!(player.mic_signal.iter().all(|&v| v == 0.0));
        // leakage over 2 m with unit gains: ref / 2
        let ratio = energy(&listener.mic_signal) / energy(&player.ref_signal);
        assert!((ratio - 0.25).abs() < 1e-12);
    }

    #[test]
    fn noise_is_seeded() {
        let corpus = Corpus::synthetic();
        let mut s = scene(vec![DeviceSpec::new(1, Position::new(1.0, 0.0)), DeviceSpec::new(2, Position::new(2.0, 0.0))]);
        s.noise_level_db = Some(60.0);
        s.rng_seed = 11;
        let a = render_capture(&s, &corpus, DeviceId(1)).unwrap();
        let b = render_capture(&s, &corpus, DeviceId(1)).unwrap();
        assert_eq!(a, b);
        s.rng_seed = 12;
        assert_ne!(a, render_capture(&s, &corpus, DeviceId(1)).unwrap());
    }
}
