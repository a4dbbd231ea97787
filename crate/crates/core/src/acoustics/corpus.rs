//! Wake-word waveform corpus.
//!
//! The built-in corpus holds ten synthetic utterances: five lower-register
//! ("male-1".."male-5") and five higher-register ("female-1".."female-5").
//! Each is one second long at 16 kHz with silence on both sides of a
//! two-syllable body made of a linear chirp plus a band-limited noise burst,
//! everything inside 3-6 kHz. An extra [`PLAYBACK_ID`] item stands in for
//! music a device may be playing. All items are normalized to unit RMS over
//! their active span.

use std::collections::BTreeMap;
use std::f64::consts::PI;
use std::sync::{Arc, OnceLock};

use rand::Rng;
use rustfft::{num_complex::Complex, FftPlanner};

use super::AcousticsError;
use crate::seed;

pub const CORPUS_LEN: usize = 16_000;
pub const PLAYBACK_ID: &str = "playback";

const SAMPLE_RATE: f64 = 16_000.0;
const ACTIVE_START: usize = 2_400;
const ACTIVE_END: usize = 12_800;

#[derive(Debug, Clone, Default)]
pub struct Corpus {
    items: BTreeMap<String, Arc<[f64]>>,
}

impl Corpus {
    pub fn new() -> Self {
        Self::default()
    }

    /// The built-in synthetic corpus. Generated once per process.
    pub fn synthetic() -> Self {
        static CACHE: OnceLock<Corpus> = OnceLock::new();
        CACHE.get_or_init(build_synthetic).clone()
    }

    pub fn wake_word_ids() -> Vec<String> {
        (1..=5)
            .map(|k| format!("male-{k}"))
            .chain((1..=5).map(|k| format!("female-{k}")))
            .collect()
    }

    pub fn insert(&mut self, id: impl Into<String>, samples: Vec<f64>) {
        self.items.insert(id.into(), samples.into());
    }

    pub fn get(&self, id: &str) -> Result<&Arc<[f64]>, AcousticsError> {
        self.items.get(id).ok_or_else(|| AcousticsError::UnknownWaveform(id.to_string()))
    }

    pub fn contains(&self, id: &str) -> bool {
        self.items.contains_key(id)
    }

    pub fn ids(&self) -> impl Iterator<Item = &str> {
        self.items.keys().map(String::as_str)
    }

    pub fn iter(&self) -> impl Iterator<Item = (&str, &[f64])> {
        self.items.iter().map(|(k, v)| (k.as_str(), &v[..]))
    }
}

fn build_synthetic() -> Corpus {
    let mut corpus = Corpus::new();
    for (idx, id) in Corpus::wake_word_ids().into_iter().enumerate() {
        let female = idx >= 5;
        let k = (idx % 5) as f64;
        let (f_start, f_end) = if female {
            (4_300.0 + 100.0 * k, 5_600.0 + 100.0 * k)
        } else {
            (3_100.0 + 100.0 * k, 4_400.0 + 100.0 * k)
        };
        let samples = wake_word(&id, f_start, f_end);
        corpus.insert(id, samples);
    }
    corpus.insert(PLAYBACK_ID, playback());
    corpus
}

fn wake_word(id: &str, f_start: f64, f_end: f64) -> Vec<f64> {
    let mut rng = seed::stream(seed::hash_bytes(id.as_bytes()), &[0x5157]);
    let span = (ACTIVE_END - ACTIVE_START) as f64;
    // syllable boundaries as fractions of the active span
    let split = rng.random_range(0.42..0.52);
    let gap = rng.random_range(0.04..0.08);
    let syllables = [(0.0, split), (split + gap, 1.0)];

    let noise = band_noise(CORPUS_LEN, 3_000.0, 6_000.0, &mut rng);
    let noise_gain = 10f64.powf(-10.0 / 20.0) * rms(&noise[ACTIVE_START..ACTIVE_END]).recip();

    let mut out = vec![0.0; CORPUS_LEN];
    let mut phase = 0.0;
    for (n, slot) in out.iter_mut().enumerate().take(ACTIVE_END).skip(ACTIVE_START) {
        let t = (n - ACTIVE_START) as f64 / span;
        let f = f_start + (f_end - f_start) * t;
        phase += 2.0 * PI * f / SAMPLE_RATE;
        let env: f64 = syllables
            .iter()
            .filter(|(a, b)| t >= *a && t < *b)
            .map(|(a, b)| (PI * (t - a) / (b - a)).sin())
            .sum();
        *slot = env * (phase.sin() + noise_gain * noise[n]);
    }
    normalize_active(&mut out, ACTIVE_START, ACTIVE_END);
    out
}

fn playback() -> Vec<f64> {
    let mut rng = seed::stream(seed::hash_bytes(PLAYBACK_ID.as_bytes()), &[0x5157]);
    let mut out = band_noise(CORPUS_LEN, 1_000.0, 7_000.0, &mut rng);
    for (n, s) in out.iter_mut().enumerate() {
        let t = n as f64 / SAMPLE_RATE;
        *s *= 0.6 + 0.4 * (2.0 * PI * 3.0 * t).sin();
    }
    normalize_active(&mut out, 0, CORPUS_LEN);
    out
}

/// White Gaussian noise with every DFT bin outside `[lo, hi)` zeroed.
fn band_noise<R: Rng>(len: usize, lo: f64, hi: f64, rng: &mut R) -> Vec<f64> {
    let normal = rand_distr::StandardNormal;
    let mut buf: Vec<Complex<f64>> =
        (0..len).map(|_| Complex::new(rng.sample::<f64, _>(normal), 0.0)).collect();
    let mut planner = FftPlanner::new();
    planner.plan_fft_forward(len).process(&mut buf);
    let bin_hz = SAMPLE_RATE / len as f64;
    for (b, x) in buf.iter_mut().enumerate() {
        let f = if b <= len / 2 { b as f64 } else { (len - b) as f64 } * bin_hz;
        if !(lo..hi).contains(&f) {
            *x = Complex::new(0.0, 0.0);
        }
    }
    planner.plan_fft_inverse(len).process(&mut buf);
    buf.iter().map(|c| c.re / len as f64).collect()
}

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn normalize_active(x: &mut [f64], start: usize, end: usize) {
    let scale = rms(&x[start..end]).recip();
    x.iter_mut().for_each(|v| *v *= scale);
}
