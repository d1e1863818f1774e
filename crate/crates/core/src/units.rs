//! Logarithmic unit conversions used when loading Table-style parameters.

/// Converts a power in dBm to watts: `10^((dbm - 30) / 10)`.
pub fn dbm_to_watts(dbm: f64) -> f64 {
    10f64.powf((dbm - 30.0) / 10.0)
}

pub fn watts_to_dbm(watts: f64) -> f64 {
    10.0 * watts.log10() + 30.0
}

/// Power ratio in dB to a linear power ratio.
pub fn db_to_linear(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

/// Power gain in dB to the amplitude factor that produces it.
pub fn db_to_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}
