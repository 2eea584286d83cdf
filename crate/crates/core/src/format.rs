//! Fixed-precision number formatting for CSV output.

/// Format with 10 significant digits in the style of C's `%.10g`: fixed
/// notation for decimal exponents in `[-5, 10)`, scientific otherwise,
/// trailing zeros trimmed. Always uses `.` as the decimal separator.
pub fn sig10(x: f64) -> String {
    sig(x, 10)
}

pub fn sig(x: f64, digits: usize) -> String {
    debug_assert!(digits >= 1);
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
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if (-5..digits as i32).contains(&exp) {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(format!("{x:.decimals$}"))
    } else {
        format!("{}e{}", trim_zeros(mantissa.to_string()), exp)
    }
}

fn trim_zeros(s: String) -> String {
    if !s.contains('.') {
        return s;
    }
    let t = s.trim_end_matches('0').trim_end_matches('.');
    t.to_string()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn examples() {
        assert_eq!(sig10(0.0), "0");
        assert_eq!(sig10(1.0), "1");
        assert_eq!(sig10(0.04), "0.04");
        assert_eq!(sig10(7.5e8), "750000000");
        assert_eq!(sig10(2.0f64.log2()), "1");
        assert_eq!(sig10(std::f64::consts::PI), "3.141592654");
        assert_eq!(sig10(-6.6423e-4), "-0.00066423");
        assert_eq!(sig10(1.23456789012e-7), "1.23456789e-7");
        assert_eq!(sig10(1.5e12), "1.5e12");
        assert_eq!(sig10(9_999_999_999.9), "1e10");
    }

    proptest! {
        #[test]
        fn ten_significant_digits_survive(x in -1e15f64..1e15) {
            let back: f64 = sig10(x).parse().unwrap();
            prop_assert!((back - x).abs() <= 5e-10 * x.abs());
        }
    }
}
