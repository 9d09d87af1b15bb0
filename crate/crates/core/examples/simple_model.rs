//! One-dimensional two-atom picture: why beta < 1 and why |2,0> atoms leave fast.
use spinflip::constants::PLANCK;
use spinflip::rates::{beta_monochromatic, escape_time_estimate, simple_model_energies};
use spinflip::{AtomSpecies, TrapGeometry};

fn main() -> spinflip::Result<()> {
    let rb = AtomSpecies::rb87();
    let trap = TrapGeometry::reference();
    let w1 = trap.omega1[2];
    for t_uk in [0.5, 1.0, 2.0] {
        let t = t_uk * 1e-6;
        let m = simple_model_energies(t, trap.bias_splitting, &rb, w1)?;
        let b = beta_monochromatic(0.0, t, &trap, &rb)?;
        println!(
            "T={t_uk} uK: d1={:.2} um d2={:.2} um, photon offsets 2->1 {:.1} kHz 1->2 {:.1} kHz, beta_mono(0)={:.3}",
            m.d1 * 1e6,
            m.d2 * 1e6,
            (m.e_2to1 - trap.bias_splitting) / PLANCK * 1e-3,
            (m.e_1to2 - trap.bias_splitting) / PLANCK * 1e-3,
            b.beta
        );
    }
    let tau = escape_time_estimate(1e-6, &rb, 10e-6, trap.gravity)?;
    println!("|2,0> escape from a 10 um region at 1 uK: {:.2} ms", tau * 1e3);
    Ok(())
}
