//! Unit conversions. Configuration carries mph, km/h and vph; everything
//! past network construction is SI.

pub const MPH_TO_MPS: f64 = 0.44704;
pub const KMH_TO_MPS: f64 = 1.0 / 3.6;
pub const FOOT: f64 = 0.3048;
pub const MILE: f64 = 1609.344;

#[inline]
pub fn mph_to_mps(mph: f64) -> f64 {
    mph * MPH_TO_MPS
}

#[inline]
pub fn kmh_to_mps(kmh: f64) -> f64 {
    kmh * KMH_TO_MPS
}

#[inline]
pub fn feet_to_m(ft: f64) -> f64 {
    ft * FOOT
}

#[inline]
pub fn miles_to_m(mi: f64) -> f64 {
    mi * MILE
}

/// Vehicles per hour to vehicles per second.
#[inline]
pub fn vph_to_vps(vph: f64) -> f64 {
    vph / 3600.0
}
