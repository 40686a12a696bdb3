//! Physical constants and unit conversions. Everything internal is SI.

/// Astronomical unit, m.
pub const AU: f64 = 1.495_978_707e11;

/// Heliocentric gravitational parameter, m^3/s^2.
pub const MU_SUN: f64 = 1.327_124_400_18e20;

/// Standard gravity, m/s^2.
pub const G0: f64 = 9.806_65;

pub const SECONDS_PER_DAY: f64 = 86_400.0;

/// Julian year, s.
pub const JULIAN_YEAR: f64 = 365.25 * SECONDS_PER_DAY;

pub const TWO_PI: f64 = std::f64::consts::TAU;
