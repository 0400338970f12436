//! Unit conventions and conversions.
//!
//! Everything dimensionful inside the crate is expressed in exactly one pair
//! of units: angular frequency in rad/us and time in us. External inputs
//! quoted in "linear" megahertz (the common "X * 2pi MHz" convention) are
//! converted on entry and never stored raw.

use std::f64::consts::TAU;

/// Convert a frequency quoted as `x * 2pi MHz` to rad/us.
///
/// 1 MHz of linear frequency is 2pi rad/us of angular frequency, so the
/// conversion is a plain factor of 2pi.
pub fn mhz_2pi_to_rad_per_us(x: f64) -> f64 {
    TAU * x
}
