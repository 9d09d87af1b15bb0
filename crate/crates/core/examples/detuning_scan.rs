//! Steady-state ratio across detuning, bracketed over temperature.
use spinflip::dynamics::{detuning_scan, temperature_envelope};
use spinflip::{RateConfig, ReferenceSpectrumParams};

fn main() -> spinflip::Result<()> {
    let detunings: Vec<f64> = (0..=22).map(|k| (-1.0 + 0.1 * k as f64) * 1e6).collect();
    let base = RateConfig::reference(0.0, 1e-6)?;
    let rows = detuning_scan(&detunings, &[0.5e-6, 1.0e-6, 1.5e-6], &base, &ReferenceSpectrumParams::FIXTURE_V1)?;
    println!("{:>8} {:>9} {:>9}  equilibrium", "df[MHz]", "R_min", "R_max");
    for e in temperature_envelope(&rows) {
        let bar = "#".repeat((e.r_inf_max * 40.0).round() as usize);
        println!("{:>8.2} {:>9.4} {:>9.4}  {:<5} {bar}", e.delta_f * 1e-6, e.r_inf_min, e.r_inf_max, e.equilibrium_valid);
    }
    Ok(())
}
