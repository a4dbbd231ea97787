//! Writes the synthetic wake words as 16 kHz WAV files and loads them back
//! as a corpus, the same way a directory of real recordings is used.

use wakearb::acoustics::Corpus;
use wakearb::harness::{export_corpus, load_corpus_dir};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let dir = std::env::args().nth(1).map(std::path::PathBuf::from).unwrap_or_else(std::env::temp_dir).join("wakearb-corpus");
    let corpus = Corpus::synthetic();
    let files = export_corpus(&corpus, &dir)?;
    println!("wrote {} files to {}", files.len(), dir.display());
    let back = load_corpus_dir(&dir)?;
    for (id, samples) in back.iter() {
        let orig = corpus.get(id)?;
        let err = orig.iter().zip(samples).map(|(a, b)| (a - b).abs()).fold(0.0, f64::max);
        println!("  {id:<10} {} samples, max quantization error {err:.2e}", samples.len());
    }
    Ok(())
}
