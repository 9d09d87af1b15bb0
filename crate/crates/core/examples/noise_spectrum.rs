//! Builds the composite spectrum, samples it, and loads the tabulated fixture.
use spinflip::noise::reference_spectrum;
use spinflip::{NoiseSpectrum, ReferenceSpectrumParams};

fn main() -> spinflip::Result<()> {
    let carrier = 18.0e6;
    let s = reference_spectrum(carrier, 0.0, &ReferenceSpectrumParams::FIXTURE_V1)?;
    println!("{:>12}  {:>12}", "f-f0 [kHz]", "S [T^2/Hz]");
    for df in [-1000.0, -750.0, -300.0, -150.0, -10.0, -1.0, 0.0, 1.0, 10.0, 150.0, 300.0, 750.0, 1000.0] {
        println!("{df:>12.1}  {:>12.3e}", s.spectral_density(carrier + df * 1e3)?);
    }
    println!("band power +/-5 kHz: {:.3e} T^2", s.band_power(carrier - 5e3, carrier + 5e3)?);

    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/noise_spectrum.csv");
    let table = NoiseSpectrum::from_csv(path)?;
    println!("table at carrier: {:.3e}, model: {:.3e}", table.spectral_density(carrier)?, s.spectral_density(carrier)?);
    Ok(())
}
