//! Number formatting for every text format the crate writes.

/// Scientific notation with 17 significant digits, enough for any `f64` to
/// parse back to the same bits.
pub fn sig17(x: f64) -> String {
    format!("{x:.16e}")
}
