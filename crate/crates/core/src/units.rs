//! Unit conventions and pinned physical constants.

/// Reduced Planck constant, J s (CODATA 2018, exact by definition).
pub const HBAR: f64 = 1.054_571_817e-34;

/// Speed of light in vacuum, m/s (exact).
pub const SPEED_OF_LIGHT: f64 = 2.997_924_58e8;

pub const TWO_PI: f64 = std::f64::consts::TAU;

/// Cycles per second to angular frequency.
#[inline]
pub fn angular(hz: f64) -> f64 {
    TWO_PI * hz
}

/// Angular frequency to cycles per second.
#[inline]
pub fn cycles(rad_per_s: f64) -> f64 {
    rad_per_s / TWO_PI
}
