use std::f64::consts::PI;

use rustfft::{num_complex::Complex, FftPlanner};
use serde::{Deserialize, Serialize};

use super::DspError;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Window {
    Rectangular,
    Hann,
}

impl Window {
    /// Periodic window coefficients.
    pub fn coefficients(&self, len: usize) -> Vec<f64> {
        match self {
            Window::Rectangular => vec![1.0; len],
            Window::Hann => (0..len).map(|n| 0.5 - 0.5 * (2.0 * PI * n as f64 / len as f64).cos()).collect(),
        }
    }
}

/// STFT framing. Defaults: 16 kHz, 512-sample frames (32 ms), hop 256, Hann.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct FrameConfig {
    pub sample_rate: u32,
    pub frame_len: usize,
    pub hop: usize,
    pub window: Window,
}

impl Default for FrameConfig {
    fn default() -> Self {
        Self { sample_rate: 16_000, frame_len: 512, hop: 256, window: Window::Hann }
    }
}

impl FrameConfig {
    pub fn validate(&self) -> Result<(), DspError> {
        if !self.frame_len.is_power_of_two() {
            return Err(DspError::InvalidArgument(format!("frame length {} is not a power of two", self.frame_len)));
        }
        if self.hop == 0 || self.hop > self.frame_len {
            return Err(DspError::InvalidArgument(format!("hop {} outside (0, {}]", self.hop, self.frame_len)));
        }
        if self.sample_rate == 0 {
            return Err(DspError::InvalidArgument("zero sample rate".into()));
        }
        Ok(())
    }

    pub fn bin_hz(&self) -> f64 {
        self.sample_rate as f64 / self.frame_len as f64
    }

    pub fn frame_count(&self, signal_len: usize) -> usize {
        if signal_len < self.frame_len {
            0
        } else {
            1 + (signal_len - self.frame_len) / self.hop
        }
    }
}

/// Half-open band `[f_lo, f_hi)` in Hz, matched against bin center
/// frequencies. Default 3-6 kHz.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct BandSelection {
    pub f_lo: f64,
    pub f_hi: f64,
}

impl Default for BandSelection {
    fn default() -> Self {
        Self { f_lo: 3_000.0, f_hi: 6_000.0 }
    }
}

impl BandSelection {
    /// One-sided DFT bins whose center lies in the band.
    pub fn bins(&self, cfg: &FrameConfig) -> Result<std::ops::Range<usize>, DspError> {
        let nyquist = cfg.sample_rate as f64 / 2.0;
        if !(self.f_lo > 0.0 && self.f_lo < self.f_hi && self.f_hi <= nyquist) {
            return Err(DspError::InvalidArgument(format!(
                "band [{}, {}) Hz invalid for Nyquist {nyquist} Hz",
                self.f_lo, self.f_hi
            )));
        }
        let bin_hz = cfg.bin_hz();
        let lo = (self.f_lo / bin_hz).ceil() as usize;
        let mut hi = (self.f_hi / bin_hz).ceil() as usize;
        // f_hi == nyquist: the Nyquist bin itself is excluded by the half-open rule
        hi = hi.min(cfg.frame_len / 2 + 1);
        Ok(lo..hi)
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct FrameEnergies(Vec<f64>);

impl FrameEnergies {
    pub fn new(values: Vec<f64>) -> Result<Self, DspError> {
        if values.is_empty() {
            return Err(DspError::InvalidArgument("no frames".into()));
        }
        if values.iter().any(|v| !(v.is_finite() && *v >= 0.0)) {
            return Err(DspError::InvalidArgument("frame energies must be finite and non-negative".into()));
        }
        Ok(Self(values))
    }

    pub fn values(&self) -> &[f64] {
        &self.0
    }

    pub fn mean(&self) -> f64 {
        self.0.iter().sum::<f64>() / self.0.len() as f64
    }
}

/// Frame-retention threshold coefficient; frames louder than
/// `threshold_coeff * mean` are kept.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct EnergyCalcConfig {
    pub threshold_coeff: f64,
}

impl Default for EnergyCalcConfig {
    fn default() -> Self {
        Self { threshold_coeff: 0.8 }
    }
}

/// Per-frame band energy `U_t = sum |X_t[b]|^2` over the one-sided bins in
/// `band`, after windowing.
pub fn frame_band_energies(signal: &[f64], cfg: &FrameConfig, band: &BandSelection) -> Result<FrameEnergies, DspError> {
    cfg.validate()?;
    let bins = band.bins(cfg)?;
    if signal.len() < cfg.frame_len {
        return Err(DspError::InvalidArgument(format!(
            "signal of {} samples is shorter than one frame ({})",
            signal.len(),
            cfg.frame_len
        )));
    }
    let window = cfg.window.coefficients(cfg.frame_len);
    let fft = FftPlanner::<f64>::new().plan_fft_forward(cfg.frame_len);
    let mut buf = vec![Complex::new(0.0, 0.0); cfg.frame_len];
    let values = (0..cfg.frame_count(signal.len()))
        .map(|t| {
            let frame = &signal[t * cfg.hop..t * cfg.hop + cfg.frame_len];
            for ((b, &x), &w) in buf.iter_mut().zip(frame).zip(&window) {
                *b = Complex::new(x * w, 0.0);
            }
            fft.process(&mut buf);
            buf[bins.clone()].iter().map(|c| c.norm_sqr()).sum()
        })
        .collect();
    FrameEnergies::new(values)
}

/// Wake-word energy: mean of the frames whose energy strictly exceeds
/// `threshold_coeff * mean(U)`. Falls back to `mean(U)` when no frame does.
pub fn wakeword_energy(frames: &FrameEnergies, cfg: &EnergyCalcConfig) -> Result<f64, DspError> {
    if !(cfg.threshold_coeff > 0.0 && cfg.threshold_coeff <= 1.0) {
        return Err(DspError::InvalidArgument(format!("threshold coefficient {} outside (0, 1]", cfg.threshold_coeff)));
    }
    let mean = frames.mean();
    let threshold = cfg.threshold_coeff * mean;
    let (sum, count) = frames
        .values()
        .iter()
        .filter(|&&u| u > threshold)
        .fold((0.0, 0usize), |(s, n), &u| (s + u, n + 1));
    Ok(if count == 0 { mean } else { sum / count as f64 })
}

/// The full device-side energy measurement. Used identically for the
/// microphone channel and the reference channel.
#[derive(Debug, Clone, Copy, PartialEq, Default, Serialize, Deserialize)]
pub struct EnergyPipeline {
    pub frame: FrameConfig,
    pub band: BandSelection,
    pub calc: EnergyCalcConfig,
}

impl EnergyPipeline {
    pub fn measure(&self, signal: &[f64]) -> Result<f64, DspError> {
        wakeword_energy(&frame_band_energies(signal, &self.frame, &self.band)?, &self.calc)
    }
}
