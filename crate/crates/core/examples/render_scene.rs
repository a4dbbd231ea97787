//! Renders one wake event in the three-device line scene and prints what each
//! device captured.

use wakearb::acoustics::{device_paths, render_capture, Corpus};
use wakearb::harness::templates;

fn rms(x: &[f64]) -> f64 {
    (x.iter().map(|v| v * v).sum::<f64>() / x.len() as f64).sqrt()
}

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let corpus = Corpus::synthetic();
    for scenario in [templates::quiet_line(), templates::noisy_line()] {
        println!("{}", scenario.name);
        let scene = &scenario.scene;
        for id in scene.device_ids() {
            let cap = render_capture(scene, &corpus, id)?;
            let paths = device_paths(scene, id)?;
            let d = scene.source.position.distance_to(&scene.device(id)?.position);
            println!(
                "  device {id}: {d:.1} m, {} paths, mic rms {:.4} Pa, {} samples",
                paths.len(),
                rms(&cap.mic_signal),
                cap.mic_signal.len()
            );
        }
    }
    Ok(())
}
