/// Formats like C's `%.17g`: 17 significant digits, trailing zeros removed,
/// scientific notation outside `1e-4 ≤ |v| < 1e17`. Parsing the result
/// recovers the exact value.
pub fn fmt_g17(v: f64) -> String {
    if v.is_nan() {
        return "NaN".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if v == 0.0 {
        return if v.is_sign_negative() { "-0".into() } else { "0".into() };
    }
    let sci = format!("{v:.16e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent marker");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..17).contains(&exp) {
        let m = trim_zeros(mantissa);
        let sign = if exp < 0 { '-' } else { '+' };
        return format!("{m}e{sign}{:02}", exp.abs());
    }
    let decimals = (16 - exp).max(0) as usize;
    trim_zeros(&format!("{v:.decimals$}")).to_string()
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
    use super::*;

    #[test]
    fn matches_printf_g17() {
        assert_eq!(fmt_g17(3300.0), "3300");
        assert_eq!(fmt_g17(0.1), "0.10000000000000001");
        assert_eq!(fmt_g17(-0.008), "-0.0080000000000000002");
        assert_eq!(fmt_g17(1e-5), "1.0000000000000001e-05");
        assert_eq!(fmt_g17(1e20), "1e+20");
        assert_eq!(fmt_g17(123456.5), "123456.5");
        assert_eq!(fmt_g17(0.0), "0");
    }

    #[test]
    fn round_trips() {
        for v in [std::f64::consts::PI, 1.0 / 3.0, -2.5e-300, 6.02214076e23, 5990.0, 0.5 + 0.5 * (-2.0f64).exp()] {
            assert_eq!(fmt_g17(v).parse::<f64>().unwrap(), v);
        }
    }
}
