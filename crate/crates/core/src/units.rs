//! Unit conversions applied at the configuration boundary.

#[allow(unused_imports)] // inherent methods shadow it when std is linked
use num_traits::Float;

pub const METERS_PER_KM: f64 = 1000.0;
pub const METERS_PER_FOOT: f64 = 0.3048;

/// Density per km² to density per m².
pub fn per_km2(density: f64) -> f64 {
    density / (METERS_PER_KM * METERS_PER_KM)
}

/// Density per m² to density per km².
pub fn to_per_km2(density: f64) -> f64 {
    density * METERS_PER_KM * METERS_PER_KM
}

/// Linear density per km to per m.
pub fn per_km(density: f64) -> f64 {
    density / METERS_PER_KM
}

pub fn km(value: f64) -> f64 {
    value * METERS_PER_KM
}

pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn linear_to_db(x: f64) -> f64 {
    10.0 * x.log10()
}
