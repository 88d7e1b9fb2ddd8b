//! Conversions between SI and the display units used at the CLI boundary.

/// m³/s per μl/min.
pub const UL_PER_MIN: f64 = 1e-9 / 60.0;

pub fn ul_min_to_si(q: f64) -> f64 {
    q * UL_PER_MIN
}

pub fn si_to_ul_min(q: f64) -> f64 {
    q / UL_PER_MIN
}

pub fn kpa_to_pa(p: f64) -> f64 {
    p * 1e3
}

pub fn deg_to_rad(d: f64) -> f64 {
    d.to_radians()
}

pub fn rad_to_deg(r: f64) -> f64 {
    r.to_degrees()
}
