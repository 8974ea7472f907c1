//! `%.12g`-style rendering of reals for tables.

fn strip_zeros(s: &str) -> &str {
    if s.contains('.') {
        s.trim_end_matches('0').trim_end_matches('.')
    } else {
        s
    }
}

/// Twelve significant digits, trailing zeros removed, exponent form outside
/// `[1e-4, 1e12)`.
pub fn real(x: f64) -> String {
    if x == 0.0 {
        return "0".into();
    }
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_infinite() {
        return if x > 0.0 { "inf" } else { "-inf" }.into();
    }
    let sci = format!("{x:.11e}");
    let (mantissa, exp) = sci.split_once('e').expect("exponent form");
    let exp: i32 = exp.parse().expect("integer exponent");
    if !(-4..12).contains(&exp) {
        let sign = if exp < 0 { '-' } else { '+' };
        format!("{}e{sign}{:02}", strip_zeros(mantissa), exp.abs())
    } else {
        let decimals = (11 - exp) as usize;
        strip_zeros(&format!("{x:.decimals$}")).to_string()
    }
}

pub fn opt_real(x: Option<f64>) -> String {
    x.map(real).unwrap_or_default()
}

pub fn opt_bool(x: Option<bool>) -> String {
    x.map(|b| b.to_string()).unwrap_or_default()
}

pub fn opt<T: ToString>(x: Option<T>) -> String {
    x.map(|v| v.to_string()).unwrap_or_default()
}

#[cfg(test)]
mod tests {
    use super::real;

    #[test]
    fn twelve_significant_digits() {
        assert_eq!(real(1.0 / 6.0), "0.166666666667");
        assert_eq!(real(0.2), "0.2");
        assert_eq!(real(0.45), "0.45");
        assert_eq!(real(0.6), "0.6");
        assert_eq!(real(2.0), "2");
        assert_eq!(real(-0.25), "-0.25");
        assert_eq!(real(1e-7), "1e-07");
        assert_eq!(real(1.5e-5), "1.5e-05");
        assert_eq!(real(0.0001), "0.0001");
        assert_eq!(real(123456789012345.0), "1.23456789012e+14");
        assert_eq!(real(9.9999999999999), "10");
        assert_eq!(real(0.0), "0");
        assert_eq!(real(-0.0), "0");
    }
}
