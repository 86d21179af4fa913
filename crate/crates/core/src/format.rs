//! Number formatting shared by every file writer.

/// Formats `x` with six significant digits, `%g` style: fixed notation for
/// decimal exponents in `-4..6`, scientific otherwise, trailing zeros dropped.
pub fn sig6(x: f64) -> String {
    sig(x, 6)
}

pub fn sig(x: f64, digits: usize) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf".into() } else { "-inf".into() };
    }
    if x == 0.0 {
        return "0".into();
    }
    let digits = digits.max(1);
    let sci = format!("{:.*e}", digits - 1, x);
    let (mantissa, exp) = sci.split_once('e').unwrap();
    let exp: i32 = exp.parse().unwrap();
    if exp < -4 || exp >= digits as i32 {
        format!("{}e{}", trim_zeros(mantissa), exp)
    } else {
        let decimals = (digits as i32 - 1 - exp).max(0) as usize;
        trim_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

fn trim_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Rounds to six significant digits, for values written through serde.
pub fn round6(x: f64) -> f64 {
    if x.is_finite() {
        sig6(x).parse().unwrap()
    } else {
        x
    }
}

pub fn opt_sig6(x: Option<f64>) -> String {
    x.map(sig6).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn matches_printf_g() {
        assert_eq!(sig6(0.0), "0");
        assert_eq!(sig6(1.0), "1");
        assert_eq!(sig6(0.4), "0.4");
        assert_eq!(sig6(1.0 / 3.0), "0.333333");
        assert_eq!(sig6(85.4), "85.4");
        assert_eq!(sig6(123456.7), "123457");
        assert_eq!(sig6(1234567.0), "1.23457e6");
        assert_eq!(sig6(0.0001234567), "0.000123457");
        assert_eq!(sig6(0.00001234567), "1.23457e-5");
        assert_eq!(sig6(-2.5), "-2.5");
        assert_eq!(sig6(9.9999999), "10");
        assert_eq!(round6(1.530000001), 1.53);
    }
}
