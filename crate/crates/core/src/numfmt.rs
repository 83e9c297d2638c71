//! `%g`-style number formatting for CSV exports.

/// Formats `x` with `digits` significant digits, trailing zeros trimmed,
/// switching to exponent notation outside `1e-5 <= |x| < 10^digits`.
pub fn sig(x: f64, digits: usize) -> String {
    if x == 0.0 {
        return "0".to_string();
    }
    if !x.is_finite() {
        return if x.is_nan() {
            "nan".into()
        } else if x > 0.0 {
            "inf".into()
        } else {
            "-inf".into()
        };
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent present");
    let exp: i32 = exp.parse().expect("integer exponent");
    if exp < -5 || exp >= digits as i32 {
        return format!("{}e{}", trim_zeros(mantissa), exp);
    }
    let decimals = (digits as i32 - 1 - exp).max(0) as usize;
    trim_zeros(&format!("{:.*}", decimals, x)).to_string()
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

#[cfg(test)]
mod tests {
    use super::sig;

    #[test]
    fn formats_like_printf_g() {
        assert_eq!(sig(0.0, 12), "0");
        assert_eq!(sig(1.0, 12), "1");
        assert_eq!(sig(0.25, 12), "0.25");
        assert_eq!(sig(1.0 / 3.0, 12), "0.333333333333");
        assert_eq!(sig(2.0 / 3.0, 3), "0.667");
        assert_eq!(sig(123456.0, 3), "1.23e5");
        assert_eq!(sig(1.5e-7, 4), "1.5e-7");
        assert_eq!(sig(-0.5, 15), "-0.5");
        assert_eq!(sig(1e-5, 15), "0.00001");
    }

    #[test]
    fn roundtrip_precision() {
        for &x in &[0.123456789012345_f64, 1.0 - 1e-13, 7.25e-3] {
            let back: f64 = sig(x, 15).parse().unwrap();
            assert!((back - x).abs() <= 1e-15 * x.abs().max(1e-300) * 10.0);
        }
    }
}
