//! Physical constants and dB helpers.
//!
//! Internal unit system: frequencies in GHz, sample rates in GSa/s, optical
//! power in mW, wavelengths in nm, dispersion in ps/(nm km).

/// Speed of light expressed so that `c / lambda_nm` yields THz.
pub const SPEED_OF_LIGHT_NM_THZ: f64 = 299_792.458;

/// Speed of light in m/s.
pub const SPEED_OF_LIGHT_M_S: f64 = 299_792_458.0;

pub fn db_to_linear_power(db: f64) -> f64 {
    10f64.powf(db / 10.0)
}

pub fn db_to_linear_amplitude(db: f64) -> f64 {
    10f64.powf(db / 20.0)
}

pub fn power_to_db(p: f64) -> f64 {
    10.0 * p.log10()
}

pub fn dbm_to_mw(dbm: f64) -> f64 {
    db_to_linear_power(dbm)
}

pub fn mw_to_dbm(mw: f64) -> f64 {
    power_to_db(mw)
}
