//! Numeric text formatting shared by every emitted artifact.

/// Significant digits for human-facing tables.
pub const TABLE_DIGITS: usize = 6;
/// Significant digits for machine-facing CSV; enough to round-trip any `f64`.
pub const FULL_DIGITS: usize = 17;

/// Formats like C's `%.{digits}g`.
pub fn fmt_g(x: f64, digits: usize) -> String {
    let digits = digits.max(1);
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -4 || exp >= digits as i32 {
        let mantissa = strip_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{mantissa}e{sign}{:02}", exp.abs())
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

pub fn fmt_table(x: f64) -> String {
    fmt_g(x, TABLE_DIGITS)
}

pub fn fmt_full(x: f64) -> String {
    fmt_g(x, FULL_DIGITS)
}
