//! Framed 3-6 kHz band energy and the thresholded wake-word energy.

use std::f64::consts::PI;

use wakearb::acoustics::{render_capture, Corpus};
use wakearb::dsp::{frame_band_energies, wakeword_energy, EnergyPipeline};
use wakearb::harness::templates;

fn tone(freq: f64, len: usize) -> Vec<f64> {
    (0..len).map(|n| (2.0 * PI * freq * n as f64 / 16_000.0).sin()).collect()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let p = EnergyPipeline::default();

    for f in [1_000.0, 4_000.0] {
        let u = frame_band_energies(&tone(f, 16_000), &p.frame, &p.band)?;
        println!("{f:>5.0} Hz tone: mean band energy {:.3e}", u.mean());
    }

    // Half a second of silence before the word: those frames are discarded.
    let corpus = Corpus::synthetic();
    let scene = templates::quiet_line().scene;
    let id = scene.device_ids()[0];
    let mut signal = vec![0.0; 8_000];
    signal.extend(render_capture(&scene, &corpus, id)?.mic_signal);
    let u = frame_band_energies(&signal, &p.frame, &p.band)?;
    let kept = u.values().iter().filter(|&&x| x > p.calc.threshold_coeff * u.mean()).count();
    println!(
        "device {id}: {} frames, {kept} above threshold, mean {:.4e}, wake-word energy {:.4e}",
        u.values().len(),
        u.mean(),
        wakeword_energy(&u, &p.calc)?
    );
    Ok(())
}
