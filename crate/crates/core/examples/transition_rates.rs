//! Rates, ratios and steady state for a few detunings and temperatures.
use spinflip::rates::rate_set;
use spinflip::{NoiseSpectrum, RateConfig};

fn main() -> spinflip::Result<()> {
    let white = RateConfig::reference(0.0, 1e-6)?.with_spectrum(NoiseSpectrum::white(1e-20)?);
    let r = rate_set(&white)?;
    println!("white noise: alpha={:.6} beta={:.6} R_inf={:.6}", r.alpha, r.beta, r.r_infinity());

    println!("{:>8} {:>6} {:>11} {:>11} {:>11} {:>8} {:>8} {:>9}", "df[MHz]", "T[uK]", "g21[1/s]", "g12[1/s]", "g10[1/s]", "beta", "R_inf", "gt[1/s]");
    for t_uk in [0.5, 1.0, 1.5] {
        for df_mhz in [-0.4, -0.2, 0.0, 0.2, 0.4] {
            let r = rate_set(&RateConfig::reference(df_mhz * 1e6, t_uk * 1e-6)?)?;
            println!(
                "{df_mhz:>8.2} {t_uk:>6.2} {:>11.4e} {:>11.4e} {:>11.4e} {:>8.4} {:>8.4} {:>9.4}",
                r.gamma_21, r.gamma_12, r.gamma_10, r.beta, r.r_infinity(), r.gamma_tilde()
            );
        }
    }
    Ok(())
}
