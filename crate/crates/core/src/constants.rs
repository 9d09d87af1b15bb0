//! CODATA 2018 constants and ⁸⁷Rb reference data (SI units).

use std::f64::consts::PI;

pub const PLANCK: f64 = 6.626_070_15e-34;
pub const HBAR: f64 = PLANCK / (2.0 * PI);
pub const BOLTZMANN: f64 = 1.380_649e-23;
pub const BOHR_MAGNETON: f64 = 9.274_010_078_3e-24;
pub const GRAVITY: f64 = 9.81;

pub const RB87_MASS: f64 = 1.443_160_648e-25;
pub const RB87_HYPERFINE_HZ: f64 = 6.834_682_610_904_29e9;
pub const RB87_G_J: f64 = 2.002_331_13;
/// Sign convention: H = μ_B (g_J J + g_I I)·B.
pub const RB87_G_I: f64 = -0.000_995_141_4;
pub const RB87_NUCLEAR_SPIN: f64 = 1.5;
