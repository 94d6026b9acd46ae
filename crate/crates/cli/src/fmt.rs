//! Locale-independent number formatting for CSV output.

/// Format with 12 significant digits: plain decimal notation in a sane
/// exponent window, scientific outside it, trailing zeros trimmed, `.` as
/// the decimal separator always. Deterministic — grid outputs are regression
/// fixtures, so the same value must print the same bytes everywhere.
pub fn sig12(x: f64) -> String {
    if x.is_nan() {
        return "nan".to_string();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.to_string();
    }
    if x == 0.0 {
        return "0".to_string();
    }
    // Exponent of the value *after* rounding to 12 significant digits
    // (rounding can carry, e.g. 9.999…e-5 -> 1e-4).
    let sci = format!("{:.11e}", x);
    let (mantissa, exp) = sci.split_once('e').expect("float formatting");
    let exp: i32 = exp.parse().expect("float exponent");
    if (-4..12).contains(&exp) {
        let decimals = (11 - exp).max(0) as usize;
        let fixed = format!("{x:.decimals$}");
        let trimmed = fixed.trim_end_matches('0').trim_end_matches('.');
        trimmed.to_string()
    } else {
        let mantissa = if mantissa.contains('.') {
            mantissa.trim_end_matches('0').trim_end_matches('.')
        } else {
            mantissa
        };
        format!("{mantissa}e{exp}")
    }
}
