//! Microphone gain pass: the phone plays the stored wake word at 1, 2 and
//! 3 m in front of every device; each device's energy over the standard
//! microphone's gives its coefficient.

use wakearb::acoustics::{Corpus, DeviceSpec, Position, SourceSpec};
use wakearb::calibration::{
    run_gain_calibration, CalibrationPlan, CalibrationRoom, CalibrationSession, DirectLink, StandardEnergyTable,
};
use wakearb::{AcousticScene, EnergyPipeline};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let gains = [1.0, 2.0, 0.5, 1.5];
    let devices = gains
        .iter()
        .enumerate()
        .map(|(k, &g)| DeviceSpec::new(k as u32 + 1, Position::new(3.0 * k as f64, 0.0)).with_mic_gain(g))
        .collect();
    let scene = AcousticScene::new(SourceSpec::new(Position::new(0.0, 2.0), 0.0, 70.0, "male-1"), devices);

    let corpus = Corpus::synthetic();
    let pipeline = EnergyPipeline::default();
    let plan = CalibrationPlan::default();
    let table = StandardEnergyTable::generate(&corpus, &plan.wake_word_id, &plan.distances_m, plan.phone_level_db, &pipeline)?;
    let mut link = DirectLink::new(CalibrationRoom::new(&scene, corpus, pipeline, &plan.wake_word_id));
    let mut session = CalibrationSession::new(&scene.device_ids());

    for (id, g) in scene.device_ids().into_iter().zip(gains) {
        let cal = run_gain_calibration(&mut session, &mut link, &scene, id, &plan.distances_m, &plan.weights, &table)?;
        let per: Vec<String> = cal.per_distance.iter().map(|c| format!("{:.0} m: {:.6}", c.distance_m, c.coefficient)).collect();
        println!("device {id}: mic gain {g}, b = {:.9}  ({})", cal.final_b, per.join(", "));
    }
    Ok(())
}
