//! Full calibration (gain pass, then speaker interference pass) followed by
//! a live check: with the talker silent and one device playing music, the
//! calibrated energy of every other device drops to zero.

use wakearb::acoustics::{render_capture, Corpus, DeviceSpec, Position, SourceSpec};
use wakearb::calibration::{calibrate_network, CalibrationPlan, CalibrationRoom, DirectLink};
use wakearb::scoring::calibrated_energy_unclamped;
use wakearb::{AcousticScene, EnergyPipeline, WakeReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = AcousticScene::new(
        SourceSpec::new(Position::new(1.0, 1.0), 0.0, 70.0, "male-1"),
        vec![
            DeviceSpec::new(1, Position::new(0.0, 0.0)).with_spk_gain(1.2),
            DeviceSpec::new(2, Position::new(2.5, 0.0)).with_mic_gain(1.8),
            DeviceSpec::new(3, Position::new(0.0, 3.0)).with_mic_gain(0.6).with_spk_gain(0.7),
        ],
    );
    let corpus = Corpus::synthetic();
    let pipeline = EnergyPipeline::default();
    let mut link = DirectLink::new(CalibrationRoom::new(&scene, corpus.clone(), pipeline, "male-1"));
    let artifact = calibrate_network("example", &scene, &corpus, &pipeline, &mut link, &CalibrationPlan::default())?;
    let m = &artifact.matrix;

    println!("calibration matrix (row plays, column listens):");
    for (id, row) in m.ids().iter().zip(m.rows()) {
        let cells: Vec<String> = row.iter().map(|v| format!("{v:10.6}")).collect();
        println!("  {id}: {}", cells.join(" "));
    }
    println!("took {} simulated ms", artifact.finished_ms - artifact.started_ms);

    let mut live = scene.clone();
    live.source.silent = true;
    live.device_mut(wakearb::DeviceId(1))?.is_playing = true;
    let mut reports = Vec::new();
    for id in live.device_ids() {
        let cap = render_capture(&live, &corpus, id)?;
        let e_spk = if cap.ref_signal.is_empty() { 0.0 } else { pipeline.measure(&cap.ref_signal)? };
        reports.push(WakeReport::new(id, pipeline.measure(&cap.mic_signal)?, e_spk));
    }
    for r in reports.iter().skip(1) {
        let cal = calibrated_energy_unclamped(&reports, m, r.device_id)?;
        println!("device {} while 1 plays: raw {:.4e}, calibrated {:.1e}", r.device_id, r.e_mic, cal);
    }
    Ok(())
}
