//! Text formatting shared by the CSV writers.

/// Seventeen significant digits, enough to round-trip any `f64`.
pub fn fmt17(x: f64) -> String {
    if x == 0.0 {
        // normalise -0.0 so outputs do not depend on the sign of zero
        return "0".to_string();
    }
    format!("{x:.16e}")
}
