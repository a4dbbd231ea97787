use std::path::{Path, PathBuf};

use super::HarnessError;
use crate::acoustics::Corpus;

/// Sample value mapped to 16-bit full scale when writing WAV files. The
/// synthetic utterances have unit RMS, so this leaves ample headroom.
pub const WAV_FULL_SCALE: f64 = 8.0;

const SAMPLE_RATE: u32 = 16_000;

fn spec() -> hound::WavSpec {
    hound::WavSpec { channels: 1, sample_rate: SAMPLE_RATE, bits_per_sample: 16, sample_format: hound::SampleFormat::Int }
}

/// Writes every corpus entry as `<id>.wav` (16 kHz, mono, 16-bit PCM).
pub fn export_corpus(corpus: &Corpus, dir: &Path) -> Result<Vec<PathBuf>, HarnessError> {
    std::fs::create_dir_all(dir)?;
    let mut written = Vec::new();
    for (id, samples) in corpus.iter() {
        let path = dir.join(format!("{id}.wav"));
        let mut w = hound::WavWriter::create(&path, spec())?;
        for &s in samples {
            let v = (s / WAV_FULL_SCALE * i16::MAX as f64).round();
            if v.abs() > i16::MAX as f64 {
                return Err(HarnessError::Config(format!("{id} clips at 16-bit full scale")));
            }
            w.write_sample(v as i16)?;
        }
        w.finalize()?;
        written.push(path);
    }
    Ok(written)
}

/// Loads every `*.wav` in `dir`; the file stem becomes the waveform id.
pub fn load_corpus_dir(dir: &Path) -> Result<Corpus, HarnessError> {
    let mut paths: Vec<PathBuf> = std::fs::read_dir(dir)?
        .filter_map(|e| e.ok().map(|e| e.path()))
        .filter(|p| p.extension().is_some_and(|x| x.eq_ignore_ascii_case("wav")))
        .collect();
    paths.sort();
    if paths.is_empty() {
        return Err(HarnessError::Config(format!("no .wav files in {}", dir.display())));
    }
    let mut corpus = Corpus::new();
    for p in paths {
        let mut r = hound::WavReader::open(&p)?;
        let s = r.spec();
        if s.channels != 1 || s.sample_rate != SAMPLE_RATE || s.bits_per_sample != 16 || s.sample_format != hound::SampleFormat::Int {
            return Err(HarnessError::Config(format!("{} must be 16 kHz mono 16-bit PCM", p.display())));
        }
        let samples = r
            .samples::<i16>()
            .map(|x| x.map(|v| v as f64 / i16::MAX as f64 * WAV_FULL_SCALE))
            .collect::<Result<Vec<_>, _>>()?;
        let id = p.file_stem().and_then(|s| s.to_str()).unwrap_or_default().to_string();
        corpus.insert(id, samples);
    }
    Ok(corpus)
}
