//! Quadrature rates against the phase-space Monte Carlo estimate.
use std::time::Instant;

use spinflip::rates::{gamma_mc_oracle, gamma_quadrature};
use spinflip::{RateConfig, TransitionChannel};

fn main() -> spinflip::Result<()> {
    let n = 1_000_000;
    for (df, t) in [(-0.2e6, 1e-6), (0.4e6, 0.5e-6), (0.0, 1.5e-6)] {
        let cfg = RateConfig::reference(df, t)?;
        for ch in [TransitionChannel::TWO_TO_ONE, TransitionChannel::ONE_TO_TWO, TransitionChannel::ONE_TO_ZERO] {
            let clock = Instant::now();
            let q = gamma_quadrature(&cfg, ch)?;
            let mc = gamma_mc_oracle(&cfg, ch, n, 2024)?;
            println!(
                "df={:+.1} MHz T={:.1} uK {}: quad {:.5e}  mc {:.5e} +/- {:.1e}  ({:.2}%, {:.2} s)",
                df * 1e-6,
                t * 1e6,
                ch.label(),
                q,
                mc.mean,
                mc.std_error,
                100.0 * (mc.mean - q).abs() / q.max(f64::MIN_POSITIVE),
                clock.elapsed().as_secs_f64()
            );
        }
    }
    Ok(())
}
