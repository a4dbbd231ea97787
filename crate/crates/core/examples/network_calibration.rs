//! Calibration driven over a lossy network: every phone command and device
//! reply is a framed message, lost handshakes are retried after the timeout.
//! The matrix matches the one obtained with a perfect link.

use wakearb::acoustics::Corpus;
use wakearb::calibration::{calibrate_network, CalibrationPlan, CalibrationRoom, DirectLink};
use wakearb::harness::templates;
use wakearb::protocol::{NetworkLink, NetworkProfile, SimChannel, Transport};
use wakearb::EnergyPipeline;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let scene = templates::quiet_line().scene;
    let corpus = Corpus::synthetic();
    let pipeline = EnergyPipeline::default();
    let plan = CalibrationPlan::default();
    let room = || CalibrationRoom::new(&scene, corpus.clone(), pipeline, &plan.wake_word_id);

    let mut direct = DirectLink::new(room());
    let reference = calibrate_network("direct", &scene, &corpus, &pipeline, &mut direct, &plan)?;

    for profile in NetworkProfile::presets() {
        let mut link = NetworkLink::new(SimChannel::new(profile.clone(), 5)?, room());
        let a = calibrate_network(&profile.name, &scene, &corpus, &pipeline, &mut link, &plan)?;
        let sent = link.transport().events().len();
        let lost = link.transport().events().iter().filter(|e| e.delivered_at_us.is_none()).count();
        println!(
            "{}: {sent} messages, {lost} lost, {} simulated ms, same matrix as a perfect link: {}",
            profile.name,
            a.finished_ms - a.started_ms,
            a.matrix == reference.matrix
        );
    }
    print!("{}", reference.to_toml()?);
    Ok(())
}
