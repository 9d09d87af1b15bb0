//! Ground-state level structure of an alkali atom in a magnetic trap.
//!
//! Energies come from the Breit–Rabi formula for a J = 1/2 ground state. The
//! quantization axis is the trap's weak axis `x`; noise couples through the
//! transverse `y` and `z` components only.

use serde::{Deserialize, Serialize};
use std::f64::consts::PI;

use crate::constants::*;
use crate::error::{Error, Result};

/// Physical constants of the trapped species.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AtomSpecies {
    /// kg
    pub mass: f64,
    /// Ground-state hyperfine energy, J.
    pub hyperfine_splitting: f64,
    pub electron_g: f64,
    pub nuclear_g: f64,
    pub nuclear_spin: f64,
    /// g_F of the trapped manifold.
    pub lande_gf: f64,
    /// Total spin F of the trapped manifold.
    pub f: i32,
}

impl AtomSpecies {
    /// ⁸⁷Rb in the upper (F = 2) ground manifold.
    pub fn rb87() -> Self {
        let mut s = AtomSpecies {
            mass: RB87_MASS,
            hyperfine_splitting: PLANCK * RB87_HYPERFINE_HZ,
            electron_g: RB87_G_J,
            nuclear_g: RB87_G_I,
            nuclear_spin: RB87_NUCLEAR_SPIN,
            lande_gf: 0.0,
            f: 2,
        };
        s.lande_gf = s.lande_from_g_factors(2);
        s
    }

    /// Landé combination of g_J and g_I for hyperfine level `f` (J = 1/2).
    pub fn lande_from_g_factors(&self, f: i32) -> f64 {
        let ff = f as f64 * (f as f64 + 1.0);
        let ii = self.nuclear_spin * (self.nuclear_spin + 1.0);
        let jj = 0.75;
        self.electron_g * (ff - ii + jj) / (2.0 * ff) + self.nuclear_g * (ff + ii - jj) / (2.0 * ff)
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.mass > 0.0) {
            return Err(Error::invalid("mass", "must be positive"));
        }
        if !(self.hyperfine_splitting > 0.0) {
            return Err(Error::invalid("hyperfine_splitting", "must be positive"));
        }
        let two_i = 2.0 * self.nuclear_spin;
        if !(self.nuclear_spin >= 0.0) || (two_i - two_i.round()).abs() > 1e-12 {
            return Err(Error::invalid("nuclear_spin", "must be a nonnegative half-integer"));
        }
        if self.f < 0 || !self.manifold_exists(self.f) {
            return Err(Error::invalid("f", "not a ground hyperfine manifold of this species"));
        }
        if !self.lande_gf.is_finite() || self.lande_gf == 0.0 {
            return Err(Error::invalid("lande_gf", "must be finite and nonzero"));
        }
        Ok(())
    }

    fn manifold_exists(&self, f: i32) -> bool {
        let f = f as f64;
        f >= 0.0
            && ((f - (self.nuclear_spin + 0.5)).abs() < 1e-12
                || (f - (self.nuclear_spin - 0.5)).abs() < 1e-12)
    }

    /// Stretched-state manifold F = I + 1/2?
    fn is_upper(&self, f: i32) -> bool {
        (f as f64 - (self.nuclear_spin + 0.5)).abs() < 1e-12
    }

    /// Zeeman sensitivity x = (g_J − g_I) μ_B B / E_hfs.
    fn field_parameter(&self, b: f64) -> f64 {
        (self.electron_g - self.nuclear_g) * BOHR_MAGNETON * b / self.hyperfine_splitting
    }
}

impl Default for AtomSpecies {
    fn default() -> Self {
        Self::rb87()
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct ZeemanLevel {
    pub f: i32,
    pub m_f: i32,
}

impl ZeemanLevel {
    pub fn new(f: i32, m_f: i32) -> Result<Self> {
        if f < 0 || m_f.abs() > f {
            return Err(Error::LevelOutsideManifold { f, m_f });
        }
        Ok(ZeemanLevel { f, m_f })
    }

    pub(crate) const fn upper(m_f: i32) -> Self {
        ZeemanLevel { f: 2, m_f }
    }
}

/// An ordered pair of levels. Construction does not enforce the selection rule;
/// forbidden channels simply have zero coupling.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
pub struct TransitionChannel {
    pub from: ZeemanLevel,
    pub to: ZeemanLevel,
}

impl TransitionChannel {
    pub const TWO_TO_ONE: Self = Self { from: ZeemanLevel::upper(2), to: ZeemanLevel::upper(1) };
    pub const ONE_TO_TWO: Self = Self { from: ZeemanLevel::upper(1), to: ZeemanLevel::upper(2) };
    pub const ONE_TO_ZERO: Self = Self { from: ZeemanLevel::upper(1), to: ZeemanLevel::upper(0) };

    pub fn new(from: ZeemanLevel, to: ZeemanLevel) -> Self {
        TransitionChannel { from, to }
    }

    pub fn is_allowed(&self) -> bool {
        self.from.f == self.to.f && (self.from.m_f - self.to.m_f).abs() == 1
    }

    pub fn reversed(&self) -> Self {
        TransitionChannel { from: self.to, to: self.from }
    }

    /// Short label such as `2->1`.
    pub fn label(&self) -> String {
        format!("{}->{}", self.from.m_f, self.to.m_f)
    }
}

/// Harmonic trap of the m_F = 1 level; level m_F sees ω₁√m_F.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TrapGeometry {
    /// Angular trap frequencies (x, y, z) of m_F = 1, rad/s.
    pub omega1: [f64; 3],
    /// Gravitational acceleration along −z, m/s². Zero disables the sag.
    pub gravity: f64,
    /// Zeeman splitting E⁰₁₂ between m_F = 2 and 1 at the field minimum, J.
    pub bias_splitting: f64,
}

impl TrapGeometry {
    /// 10 Hz axial and 96 Hz radial for |2,2>, 18 MHz bias splitting.
    pub fn reference() -> Self {
        let s = 2f64.sqrt();
        TrapGeometry {
            omega1: [2.0 * PI * 10.0 / s, 2.0 * PI * 96.0 / s, 2.0 * PI * 96.0 / s],
            gravity: GRAVITY,
            bias_splitting: PLANCK * 18.0e6,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if self.omega1.iter().any(|w| !(*w > 0.0) || !w.is_finite()) {
            return Err(Error::invalid("omega1", "trap frequencies must be positive"));
        }
        if !(self.gravity >= 0.0) || !self.gravity.is_finite() {
            return Err(Error::invalid("gravity", "must be nonnegative"));
        }
        if !(self.bias_splitting > 0.0) {
            return Err(Error::invalid("bias_splitting", "must be positive"));
        }
        Ok(())
    }

    /// Trap frequencies of level `m_f` (rad/s).
    pub fn omega_for_level(&self, m_f: i32) -> [f64; 3] {
        let s = (m_f.max(0) as f64).sqrt();
        self.omega1.map(|w| w * s)
    }

    /// Vertical position of the potential minimum of level `m_f`, m.
    pub fn sag(&self, m_f: i32) -> f64 {
        -self.gravity / (m_f as f64 * self.omega1[2].powi(2))
    }

    /// Dimensionless gravity parameter η = (g/ω₁z)·√(M / 2k_BT).
    pub fn eta(&self, mass: f64, temperature: f64) -> f64 {
        (self.gravity / self.omega1[2]) * (mass / (2.0 * BOLTZMANN * temperature)).sqrt()
    }
}

impl Default for TrapGeometry {
    fn default() -> Self {
        Self::reference()
    }
}

/// Breit–Rabi energy of `level` at field `b` (tesla).
///
/// The stretched states use the analytic branch `1 ± x` so the energy stays
/// linear in B through x = 1.
pub fn breit_rabi_energy(species: &AtomSpecies, level: ZeemanLevel, b: f64) -> Result<f64> {
    if !(b >= 0.0) || !b.is_finite() {
        return Err(Error::invalid("b", "field must be finite and nonnegative"));
    }
    if !species.manifold_exists(level.f) || level.m_f.abs() > level.f {
        return Err(Error::LevelOutsideManifold { f: level.f, m_f: level.m_f });
    }
    let i = species.nuclear_spin;
    let de = species.hyperfine_splitting;
    let m = level.m_f as f64;
    let x = species.field_parameter(b);
    let base = -de / (2.0 * (2.0 * i + 1.0)) + species.nuclear_g * BOHR_MAGNETON * m * b;
    let stretched = i + 0.5;
    let root = if (m - stretched).abs() < 1e-12 {
        1.0 + x
    } else if (m + stretched).abs() < 1e-12 {
        1.0 - x
    } else {
        (1.0 + 4.0 * m * x / (2.0 * i + 1.0) + x * x).sqrt()
    };
    let sign = if species.is_upper(level.f) { 1.0 } else { -1.0 };
    Ok(base + sign * 0.5 * de * root)
}

/// Unsigned transition energy E⁰_if = |E(from) − E(to)| at field `b`.
pub fn zeeman_splitting(species: &AtomSpecies, channel: TransitionChannel, b: f64) -> Result<f64> {
    let e_from = breit_rabi_energy(species, channel.from, b)?;
    let e_to = breit_rabi_energy(species, channel.to, b)?;
    Ok((e_from - e_to).abs())
}

/// Field at which the |F, F> ↔ |F, F−1> splitting equals `target` (J).
pub fn bias_field_for_splitting(species: &AtomSpecies, target: f64) -> Result<f64> {
    if !(target > 0.0) || !target.is_finite() {
        return Err(Error::invalid("target_e12", "must be positive"));
    }
    let f = species.f;
    let channel = TransitionChannel::new(ZeemanLevel::new(f, f)?, ZeemanLevel::new(f, f - 1)?);
    let split = |b: f64| zeeman_splitting(species, channel, b);

    // Bracket no further than x = 1, where Breit–Rabi mixing is complete.
    let b_max = species.hyperfine_splitting / ((species.electron_g - species.nuclear_g) * BOHR_MAGNETON);
    let linear = target / (species.lande_gf.abs() * BOHR_MAGNETON);
    let mut lo = 0.0;
    let mut hi = (2.0 * linear).min(b_max);
    while split(hi)? < target {
        if hi >= b_max {
            return Err(Error::NoConvergence(format!(
                "splitting {target:e} J not reachable below the Paschen-Back scale"
            )));
        }
        lo = hi;
        hi = (2.0 * hi).min(b_max);
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if split(mid)? < target {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-15 * hi {
            break;
        }
    }
    let b = 0.5 * (lo + hi);
    let rel = (split(b)? - target).abs() / target;
    if rel > 1e-10 {
        return Err(Error::NoConvergence(format!("relative residual {rel:e}")));
    }
    Ok(b)
}

/// Σ_{j=y,z} |<i|F_j|f>|² (in units of ħ²) with quantization along x.
///
/// Forbidden channels (|Δm_F| ≠ 1) give zero.
pub fn transverse_coupling_strength(channel: TransitionChannel) -> Result<f64> {
    for lvl in [channel.from, channel.to] {
        ZeemanLevel::new(lvl.f, lvl.m_f)?;
    }
    if channel.from.f != channel.to.f {
        return Err(Error::invalid("channel", "levels belong to different hyperfine manifolds"));
    }
    if !channel.is_allowed() {
        return Ok(0.0);
    }
    let f = channel.from.f as f64;
    let (mi, mf) = (channel.from.m_f as f64, channel.to.m_f as f64);
    // |<m∓1|F_y|m>|² = |<m∓1|F_z|m>|² = |<m∓1|F_∓|m>|²/4
    Ok(0.5 * (f * (f + 1.0) - mi * mf))
}

/// Trap potential of a level at position `r` (m), relative to the field minimum.
pub fn trap_potential(trap: &TrapGeometry, species: &AtomSpecies, level: ZeemanLevel, r: [f64; 3]) -> Result<f64> {
    if level.m_f < 0 {
        return Err(Error::invalid("level", "anti-trapped levels are not modeled"));
    }
    let m = level.m_f as f64;
    let harmonic: f64 = trap.omega1.iter().zip(r).map(|(w, x)| w * w * x * x).sum();
    Ok(0.5 * m * species.mass * harmonic + species.mass * trap.gravity * r[2])
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    fn lvl(m: i32) -> ZeemanLevel {
        ZeemanLevel::new(2, m).unwrap()
    }

    #[test]
    fn zero_field_has_no_zeeman_splitting() {
        let rb = AtomSpecies::rb87();
        let e2 = breit_rabi_energy(&rb, lvl(2), 0.0).unwrap();
        for m in -2..=2 {
            assert!((breit_rabi_energy(&rb, lvl(m), 0.0).unwrap() - e2).abs() < 1e-12 * rb.hyperfine_splitting);
        }
        assert_eq!(zeeman_splitting(&rb, TransitionChannel::TWO_TO_ONE, 0.0).unwrap(), 0.0);
    }

    #[test]
    fn tiny_field_converges_to_hyperfine_energy() {
        let rb = AtomSpecies::rb87();
        // the linear Zeeman spread alone is ~4e-12 E_hfs at 1 pT, so probe 0.1 pT
        let e = |m| breit_rabi_energy(&rb, lvl(m), 1e-13).unwrap();
        for m in -2..=2 {
            assert!((e(m) - e(2)).abs() < 1e-12 * rb.hyperfine_splitting);
        }
    }

    #[test]
    fn lande_factor_is_one_half() {
        let rb = AtomSpecies::rb87();
        assert!((rb.lande_gf - 0.5).abs() / 0.5 < 0.01);
        rb.validate().unwrap();
    }

    #[test]
    fn small_field_slope_is_linear_zeeman() {
        let rb = AtomSpecies::rb87();
        let h = 1e-9;
        let slope = (breit_rabi_energy(&rb, lvl(2), 2.0 * h).unwrap() - breit_rabi_energy(&rb, lvl(2), h).unwrap()) / h;
        let linear = 2.0 * rb.lande_gf * BOHR_MAGNETON;
        assert!((slope - linear).abs() / linear < 1e-3);
    }

    #[test]
    fn rejects_bad_inputs() {
        let rb = AtomSpecies::rb87();
        assert!(breit_rabi_energy(&rb, lvl(2), -1e-3).is_err());
        assert!(matches!(
            breit_rabi_energy(&rb, ZeemanLevel { f: 3, m_f: 1 }, 1e-3),
            Err(Error::LevelOutsideManifold { .. })
        ));
        assert!(ZeemanLevel::new(2, 3).is_err());
        assert!(bias_field_for_splitting(&rb, -1.0).is_err());
        assert!(bias_field_for_splitting(&rb, PLANCK * 1e12).is_err());
    }

    #[test]
    fn lower_manifold_is_supported() {
        let rb = AtomSpecies::rb87();
        let lo = breit_rabi_energy(&rb, ZeemanLevel::new(1, 0).unwrap(), 0.0).unwrap();
        let hi = breit_rabi_energy(&rb, lvl(0), 0.0).unwrap();
        assert_relative_eq!(hi - lo, rb.hyperfine_splitting, max_relative = 1e-12);
    }

    #[test]
    fn bias_field_for_18_mhz() {
        let rb = AtomSpecies::rb87();
        let target = PLANCK * 18e6;
        let b = bias_field_for_splitting(&rb, target).unwrap();
        // linear Zeeman estimate, corrected upward by the Breit–Rabi curvature
        let linear = target / (rb.lande_gf * BOHR_MAGNETON);
        assert!((linear - 2.57e-3).abs() < 0.01e-3);
        assert!(b > linear && (b - linear) / linear < 0.01, "B = {b}");
        let back = zeeman_splitting(&rb, TransitionChannel::TWO_TO_ONE, b).unwrap();
        assert!((back - target).abs() / target < 1e-10);
        // near-linear at these fields
        let b2 = bias_field_for_splitting(&rb, 2.0 * target).unwrap();
        assert!((b2 / b - 2.0).abs() / 2.0 < 0.01);
    }

    #[test]
    fn splitting_gap_is_95_khz() {
        let rb = AtomSpecies::rb87();
        let b = bias_field_for_splitting(&rb, PLANCK * 18e6).unwrap();
        let e12 = zeeman_splitting(&rb, TransitionChannel::TWO_TO_ONE, b).unwrap();
        let e01 = zeeman_splitting(&rb, TransitionChannel::ONE_TO_ZERO, b).unwrap();
        let gap_hz = (e01 - e12) / PLANCK;
        // 1->0 lies above 2->1
        assert!((gap_hz - 95e3).abs() < 2e3, "gap = {gap_hz}");
    }

    #[test]
    fn coupling_strengths() {
        let k21 = transverse_coupling_strength(TransitionChannel::TWO_TO_ONE).unwrap();
        let k10 = transverse_coupling_strength(TransitionChannel::ONE_TO_ZERO).unwrap();
        assert_eq!(k21, 2.0);
        assert_eq!(k10, 3.0);
        assert_eq!(k10 / k21, 1.5);
        assert_eq!(transverse_coupling_strength(TransitionChannel::new(lvl(2), lvl(0))).unwrap(), 0.0);
        for (a, b) in [(2, 1), (1, 0), (0, -1), (-1, -2)] {
            let c = TransitionChannel::new(lvl(a), lvl(b));
            assert_eq!(
                transverse_coupling_strength(c).unwrap(),
                transverse_coupling_strength(c.reversed()).unwrap()
            );
        }
        assert!(transverse_coupling_strength(TransitionChannel::new(lvl(1), ZeemanLevel { f: 2, m_f: 3 })).is_err());
    }

    #[test]
    fn splitting_is_increasing_over_operating_range() {
        let rb = AtomSpecies::rb87();
        for ch in [TransitionChannel::TWO_TO_ONE, TransitionChannel::ONE_TO_ZERO] {
            let mut prev = -1.0;
            for k in 0..=1000 {
                let b = 10e-3 * k as f64 / 1000.0;
                let s = zeeman_splitting(&rb, ch, b).unwrap();
                assert!(s > prev);
                prev = s;
            }
        }
    }

    #[test]
    fn potentials_and_sag() {
        let rb = AtomSpecies::rb87();
        let mut trap = TrapGeometry::reference();
        for m in 0..=2 {
            let mut t0 = trap;
            t0.gravity = 0.0;
            assert_eq!(trap_potential(&t0, &rb, lvl(m), [0.0; 3]).unwrap(), 0.0);
        }
        let r = [3e-6, -2e-6, 1.5e-6];
        let harmonic: f64 = trap.omega1.iter().zip(r).map(|(w, x)| w * w * x * x).sum();
        let d = trap_potential(&trap, &rb, lvl(2), r).unwrap() - trap_potential(&trap, &rb, lvl(1), r).unwrap();
        assert_relative_eq!(d, 0.5 * rb.mass * harmonic, max_relative = 1e-10);
        trap.gravity = 0.0;
        let d0 = trap_potential(&trap, &rb, lvl(2), r).unwrap() - trap_potential(&trap, &rb, lvl(1), r).unwrap();
        assert_relative_eq!(d, d0, max_relative = 1e-10);

        let trap = TrapGeometry::reference();
        assert_relative_eq!(trap.sag(2), 0.5 * trap.sag(1));
        // minimum along z of level 1 sits at its sag
        let v = |z: f64| trap_potential(&trap, &rb, lvl(1), [0.0, 0.0, z]).unwrap();
        let z1 = trap.sag(1);
        assert!(v(z1) < v(z1 + 1e-7) && v(z1) < v(z1 - 1e-7));
        // radial frequency of |2,2> is 96 Hz
        assert_relative_eq!(trap.omega_for_level(2)[2], 2.0 * PI * 96.0, max_relative = 1e-12);
    }
}
