//! Brute-force phase-space Monte Carlo of the golden-rule rate.
//!
//! Positions are drawn from the Boltzmann density of the initial level (an
//! anisotropic Gaussian centred on that level's gravitational sag) and the
//! local transition energy E⁰_if + |V_f(r) − V_i(r)| is evaluated in real
//! space. Momentum integrates out since the energy difference depends on
//! position only.
//!
//! Random numbers come from ChaCha8 with one stream per chunk of
//! [`CHUNK`] samples, so a given `(seed, n_samples)` yields the same estimate
//! on any number of threads.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};
use rayon::prelude::*;

use super::{trapped_index, RateConfig};
use crate::atomic::TransitionChannel;
use crate::constants::{BOLTZMANN, PLANCK};
use crate::error::{Error, Result};

pub const CHUNK: usize = 4096;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct McEstimate {
    /// 1/s
    pub mean: f64,
    /// 1/s
    pub std_error: f64,
    pub n_samples: usize,
}

/// Running mean and sum of squared deviations for one chunk.
#[derive(Debug, Clone, Copy, Default)]
struct Moments {
    n: f64,
    mean: f64,
    m2: f64,
}

impl Moments {
    fn push(&mut self, x: f64) {
        self.n += 1.0;
        let d = x - self.mean;
        self.mean += d / self.n;
        self.m2 += d * (x - self.mean);
    }

    fn merge(self, other: Moments) -> Moments {
        if self.n == 0.0 {
            return other;
        }
        let n = self.n + other.n;
        let d = other.mean - self.mean;
        Moments {
            n,
            mean: self.mean + d * other.n / n,
            m2: self.m2 + other.m2 + d * d * self.n * other.n / n,
        }
    }
}

pub fn gamma_mc_oracle(config: &RateConfig, channel: TransitionChannel, n_samples: usize, seed: u64) -> Result<McEstimate> {
    config.validate()?;
    if n_samples < 1000 {
        return Err(Error::invalid("n_samples", "need at least 1000 samples"));
    }
    if config.spectrum.has_monochromatic() {
        return Err(Error::MonochromaticComponent);
    }
    let prefactor = config.coupling_prefactor(channel)?;
    if prefactor == 0.0 {
        return Ok(McEstimate { mean: 0.0, std_error: 0.0, n_samples });
    }
    let m_i = trapped_index(channel)?;
    let dm = (channel.to.m_f - channel.from.m_f).abs() as f64;
    let e0 = config.channel_splitting(channel)?;
    let mass = config.species.mass;
    let kt = BOLTZMANN * config.temperature;
    let omega = config.trap.omega1;
    let sigma = omega.map(|w| (kt / (m_i * mass * w * w)).sqrt());
    let center = [0.0, 0.0, if config.trap.gravity > 0.0 { config.trap.sag(channel.from.m_f) } else { 0.0 }];
    let spectrum = &config.spectrum;

    let base = ChaCha8Rng::seed_from_u64(seed);
    let n_chunks = n_samples.div_ceil(CHUNK);
    let per_chunk: Vec<Moments> = (0..n_chunks)
        .into_par_iter()
        .map(|chunk| {
            let mut rng = base.clone();
            rng.set_stream(chunk as u64);
            let len = CHUNK.min(n_samples - chunk * CHUNK);
            let mut m = Moments::default();
            for _ in 0..len {
                let mut harmonic = 0.0;
                for k in 0..3 {
                    let z: f64 = StandardNormal.sample(&mut rng);
                    let r = center[k] + sigma[k] * z;
                    harmonic += omega[k] * omega[k] * r * r;
                }
                let energy = e0 + dm * 0.5 * mass * harmonic;
                let s = if energy > 0.0 { spectrum.density(energy / PLANCK) } else { 0.0 };
                m.push(prefactor * s);
            }
            m
        })
        .collect();
    let total = per_chunk.into_iter().fold(Moments::default(), Moments::merge);
    let variance = if total.n > 1.0 { total.m2 / (total.n - 1.0) } else { 0.0 };
    Ok(McEstimate { mean: total.mean, std_error: (variance / total.n).sqrt(), n_samples })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::noise::NoiseSpectrum;

    #[test]
    fn moments_merge_matches_direct() {
        let xs: Vec<f64> = (0..1000).map(|i| ((i * 37) % 101) as f64 * 0.1).collect();
        let mut whole = Moments::default();
        xs.iter().for_each(|&x| whole.push(x));
        let (a, b) = xs.split_at(313);
        let mut ma = Moments::default();
        let mut mb = Moments::default();
        a.iter().for_each(|&x| ma.push(x));
        b.iter().for_each(|&x| mb.push(x));
        let merged = ma.merge(mb);
        assert!((merged.mean - whole.mean).abs() < 1e-12);
        assert!((merged.m2 - whole.m2).abs() < 1e-9 * whole.m2);
    }

    #[test]
    fn rejects_small_sample_and_lines() {
        let cfg = RateConfig::reference(0.0, 1e-6).unwrap();
        assert!(gamma_mc_oracle(&cfg, TransitionChannel::TWO_TO_ONE, 10, 1).is_err());
        let mono = cfg.with_spectrum(NoiseSpectrum::monochromatic(18.1e6, 1.0).unwrap());
        assert!(matches!(
            gamma_mc_oracle(&mono, TransitionChannel::TWO_TO_ONE, 10_000, 1),
            Err(Error::MonochromaticComponent)
        ));
    }

    #[test]
    fn deterministic_for_fixed_seed() {
        let cfg = RateConfig::reference(0.1e6, 1e-6).unwrap();
        let a = gamma_mc_oracle(&cfg, TransitionChannel::ONE_TO_TWO, 20_000, 42).unwrap();
        let b = gamma_mc_oracle(&cfg, TransitionChannel::ONE_TO_TWO, 20_000, 42).unwrap();
        assert_eq!(a, b);
        let pool = rayon::ThreadPoolBuilder::new().num_threads(1).build().unwrap();
        let c = pool.install(|| gamma_mc_oracle(&cfg, TransitionChannel::ONE_TO_TWO, 20_000, 42).unwrap());
        assert_eq!(a, c);
        let d = gamma_mc_oracle(&cfg, TransitionChannel::ONE_TO_TWO, 20_000, 43).unwrap();
        assert_ne!(a.mean, d.mean);
    }
}
