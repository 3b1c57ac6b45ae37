//! Number formatting shared by the CSV writers.

/// Shortest decimal that parses back to exactly `x`, switching to exponent
/// notation for very small or large magnitudes.
pub fn num(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.fract() == 0.0 && x.abs() < 1e15 {
        return format!("{x}");
    }
    format!("{x:?}")
}
