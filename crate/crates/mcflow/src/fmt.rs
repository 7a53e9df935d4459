//! Deterministic significant-digit formatting for CLI and CSV output.

/// Format with exactly `sig` significant digits, locale-free, suitable for
/// byte-stable regression output.
pub fn sig_digits(x: f64, sig: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".to_string()
        } else if x > 0.0 {
            "inf".to_string()
        } else {
            "-inf".to_string()
        };
    }
    let exp = x.abs().log10().floor() as i32;
    if exp < -4 || exp >= sig as i32 + 3 {
        format!("{:.*e}", sig - 1, x)
    } else {
        let decimals = (sig as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    }
}

/// The 12-significant-digit form used for all floating-point CLI output.
pub fn f12(x: f64) -> String {
    sig_digits(x, 12)
}
