//! Zeeman levels of the F=2 manifold at the trap-bottom field.
use spinflip::atomic::{bias_field_for_splitting, breit_rabi_energy, zeeman_splitting};
use spinflip::constants::{BOHR_MAGNETON, PLANCK};
use spinflip::{AtomSpecies, TransitionChannel, ZeemanLevel};

fn main() -> spinflip::Result<()> {
    let rb = AtomSpecies::rb87();
    let target = 18.0e6 * PLANCK;
    let b = bias_field_for_splitting(&rb, target)?;
    let linear = target / (rb.lande_gf * BOHR_MAGNETON);
    println!("bias field {:.5} mT (linear estimate {:.5} mT)", b * 1e3, linear * 1e3);

    for m in (0..=2).rev() {
        let e = breit_rabi_energy(&rb, ZeemanLevel::new(2, m)?, b)?;
        println!("  |2,{m}>  E/h = {:+.6} MHz", e / PLANCK * 1e-6);
    }
    let e21 = zeeman_splitting(&rb, TransitionChannel::TWO_TO_ONE, b)?;
    let e10 = zeeman_splitting(&rb, TransitionChannel::ONE_TO_ZERO, b)?;
    println!("E(1->0) - E(2->1) = {:.2} kHz", (e10 - e21) / PLANCK * 1e-3);
    Ok(())
}
