//! Recovers the composite-spectrum parameters from the tabulated fixture.
use spinflip::fitting::{fit_spectrum_model, spectrum_params, SpectrumFitOptions};
use spinflip::noise::read_two_column_csv;

fn main() -> spinflip::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/noise_spectrum.csv");
    let table = read_two_column_csv(path)?;
    let fit = fit_spectrum_model(&table, &SpectrumFitOptions { free_widths: true, ..Default::default() })?;
    let (center, p) = spectrum_params(&fit)?;
    println!("{} points, {} iterations, log-rms {:.4}", table.len(), fit.iterations, fit.residual_rms);
    println!("center        {:.3} MHz", center * 1e-6);
    println!("peak          {:.3e} T^2/Hz", p.center_amplitude);
    println!("lorentz fwhm  {:.1} Hz", p.lorentz_fwhm_hz);
    println!("gauss sigma   {:.1} kHz", p.gauss_sigma_hz * 1e-3);
    println!("side offset   {:.1} kHz", p.side_offset_hz * 1e-3);
    println!("side sigma    {:.1} kHz", p.side_sigma_hz * 1e-3);
    println!("side peak     {:.3e} T^2/Hz", p.side_amplitude);
    println!("white floor   {:.3e} T^2/Hz", p.white_level);
    for w in &fit.warnings {
        println!("warning: {w}");
    }
    Ok(())
}
