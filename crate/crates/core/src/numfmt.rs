//! Decimal rendering at 17 significant digits, which round-trips every `f64`.

/// Number of significant digits written for every real value.
pub const SIGNIFICANT_DIGITS: usize = 17;

/// Formats `x` with 17 significant digits.
///
/// Moderate magnitudes are written positionally (`-0.33333333333333331`),
/// everything else in exponent form (`1.2345678901234567e-9`). Zero is `0`.
pub fn format_sig17(x: f64) -> String {
    if x == 0.0 {
        return if x.is_sign_negative() {
            "-0".into()
        } else {
            "0".into()
        };
    }
    if !x.is_finite() {
        return format!("{x}");
    }
    let sci = format!("{:.*e}", SIGNIFICANT_DIGITS - 1, x);
    let exp: i32 = sci
        .rsplit_once('e')
        .and_then(|(_, e)| e.parse().ok())
        .unwrap_or(0);
    if (-5..17).contains(&exp) {
        let decimals = (SIGNIFICANT_DIGITS as i32 - 1 - exp).max(0) as usize;
        format!("{:.*}", decimals, x)
    } else {
        sci
    }
}
