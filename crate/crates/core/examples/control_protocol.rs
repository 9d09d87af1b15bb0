//! Red-detuned pumping into |2,1>, then a jump to blue detuning that empties it.
use spinflip::dynamics::run_protocol;
use spinflip::rates::{calibrate_rate_scale, rate_set};
use spinflip::{PopulationState, ProtocolSegment, RateConfig};

fn main() -> spinflip::Result<()> {
    let red = RateConfig::reference(-0.2e6, 1e-6)?;
    let scale = calibrate_rate_scale(&red, 30.0)?;
    let red = RateConfig { rate_scale: scale, ..red };
    let blue = RateConfig { rate_scale: scale, ..RateConfig::reference(0.4e6, 1e-6)? };
    for (name, cfg) in [("red", &red), ("blue", &blue)] {
        let r = rate_set(cfg)?;
        println!("{name:>4}: gamma_tilde={:.3}/s R_inf={:.4}", r.gamma_tilde(), r.r_infinity());
    }

    let segments = [
        ProtocolSegment { duration: 0.2, rate_config: red },
        ProtocolSegment { duration: 0.2, rate_config: blue },
    ];
    let traj = run_protocol(PopulationState::from_ratio(0.09, 7e4)?, &segments, 200)?;
    println!("{:>7} {:>9} {:>9} {:>7}", "t[ms]", "N1", "N2", "R");
    for s in traj.samples.iter().step_by(20) {
        println!("{:>7.1} {:>9.1} {:>9.1} {:>7.4}", s.t * 1e3, s.n1, s.n2, s.ratio().unwrap_or(f64::NAN));
    }
    Ok(())
}
