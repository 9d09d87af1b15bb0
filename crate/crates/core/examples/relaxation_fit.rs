//! Fits the single-exponential and full kinetic models to the fixture curve.
use spinflip::fitting::{fit_full_model, fit_relaxation};
use spinflip::noise::read_two_column_csv;

fn main() -> spinflip::Result<()> {
    let path = concat!(env!("CARGO_MANIFEST_DIR"), "/fixtures/relaxation.csv");
    let samples = read_two_column_csv(path)?;

    let single = fit_relaxation(&samples, None)?;
    println!("relaxation fit, {} iterations, rms {:.2e}", single.iterations, single.residual_rms);
    for p in &single.params {
        println!("  {:<12} {:>10.5} +/- {:.5}", p.name, p.value, single.std_error(&p.name).unwrap_or(f64::NAN));
    }

    for alpha in [0.0, 0.05] {
        let full = fit_full_model(&samples, alpha, None)?;
        println!(
            "full model alpha={alpha}: gamma_21={:.4} beta={:.4} gamma_tilde={:.4} rms {:.2e}",
            full.get("gamma_21").unwrap(),
            full.get("beta").unwrap(),
            full.get("gamma_tilde").unwrap(),
            full.residual_rms
        );
    }
    Ok(())
}
