//! Master-side scoring from hand-written reports: calibration, the joint
//! energy/orientation score, and the one-winner decision.

use wakearb::acoustics::DeviceId;
use wakearb::scoring::{arbitrate, ScoredReport};
use wakearb::{CalibrationMatrix, ScoreConfig, WakeReport};

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let ids = [DeviceId(1), DeviceId(2), DeviceId(3)];
    // Device 2's microphone is twice as sensitive; device 3 is playing music
    // that device 1 picks up.
    let matrix = CalibrationMatrix::new(
        ids.to_vec(),
        vec![vec![1.0, 0.02, 0.01], vec![0.03, 0.25, 0.02], vec![0.30, 0.05, 1.0]],
    )?;
    let reports = [
        ScoredReport { report: WakeReport::new(ids[0], 9.0, 0.0), doa_variance: 150.0 },
        ScoredReport { report: WakeReport::new(ids[1], 27.0, 0.0), doa_variance: 40.0 },
        ScoredReport { report: WakeReport::new(ids[2], 5.0, 12.0), doa_variance: 300.0 },
    ];

    for beta in [0.0, 0.5, 2.0] {
        let cfg = ScoreConfig { orientation_weight: beta, ..ScoreConfig::default() };
        let a = arbitrate(&reports, &matrix, &cfg)?;
        let cells: Vec<String> = a
            .decision
            .scores
            .iter()
            .map(|(id, s)| format!("{id}: E={:.2} S={s:.1}", a.calibrated[id]))
            .collect();
        println!("beta {beta}: {}  -> device {} responds", cells.join(", "), a.decision.winner);
    }
    Ok(())
}
