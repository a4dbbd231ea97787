//! DOA variance as an orientation cue: the more a talker turns away, the
//! more the reflections dominate and the wider the per-frame bearings spread.

use wakearb::acoustics::{orientation_paths, sample_doa, PathComponent};
use wakearb::dsp::doa_variance;

fn main() -> Result<(), Box<dyn std::error::Error>> {
    let mixtures = [
        ("direct only", vec![PathComponent::new(60.0, 0.0)]),
        ("weak reflections", vec![PathComponent::new(60.0, 0.0), PathComponent::new(90.0, -10.0), PathComponent::new(120.0, -15.0)]),
        ("strong reflections", vec![PathComponent::new(60.0, 0.0), PathComponent::new(90.0, -2.0), PathComponent::new(120.0, -5.0)]),
    ];
    for (name, paths) in &mixtures {
        let s = sample_doa(paths, 10_000, 0.5, 1)?;
        println!("{name:>18}: variance {:8.2} deg^2", s.variance);
    }

    let reflections = [PathComponent::new(145.0, -6.0), PathComponent::new(215.0, -9.0)];
    println!("talker facing 0 deg, device at bearing 0 deg:");
    for facing in [0.0, 30.0, 60.0, 90.0, 180.0] {
        let paths = orientation_paths(facing, 0.0, &reflections);
        let s = sample_doa(&paths, 2_000, 0.5, 2)?;
        println!(
            "  facing {facing:>5.0}: direct {:6.2} dB, variance {:8.2}",
            paths[0].relative_level_db,
            doa_variance(&s.frames)?
        );
    }
    Ok(())
}
