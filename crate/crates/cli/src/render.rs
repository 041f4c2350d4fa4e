//! Number rendering: round-trip-safe decimal strings with a significant-
//! digit count tied to the working precision, scientific notation below
//! 1e−4, trailing zeros trimmed. Deterministic for fixed precision.

use gibbs_core::XReal;

/// Significant decimal digits carried by `bits` of mantissa, with a small
/// safety margin so equal values from independent routes render equal.
pub fn significant_digits(bits: u32) -> u32 {
    let full = (bits as f64 * std::f64::consts::LOG10_2).floor() as u32;
    full.saturating_sub(6).clamp(6, 40)
}

pub fn format_real(x: &XReal, bits: u32) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    if x.is_zero() {
        return "0".into();
    }
    let sig = significant_digits(bits);
    let (neg, digits, exp) = x.decimal_parts(sig);
    let digits = digits.trim_end_matches('0');
    let digits = if digits.is_empty() { "0" } else { digits };
    let sign = if neg { "-" } else { "" };
    // value = 0.digits × 10^exp
    if exp <= -4 || exp > sig as i64 {
        // scientific: d.ddd e(exp−1)
        let (head, tail) = digits.split_at(1);
        if tail.is_empty() {
            format!("{sign}{head}e{}", exp - 1)
        } else {
            format!("{sign}{head}.{tail}e{}", exp - 1)
        }
    } else if exp <= 0 {
        // 0.000ddd
        let zeros = "0".repeat((-exp) as usize);
        format!("{sign}0.{zeros}{digits}")
    } else if (exp as usize) >= digits.len() {
        // integer with trailing zeros inside the significant range
        let zeros = "0".repeat(exp as usize - digits.len());
        format!("{sign}{digits}{zeros}")
    } else {
        let (int_part, frac) = digits.split_at(exp as usize);
        format!("{sign}{int_part}.{frac}")
    }
}

/// `f64` cells (Monte Carlo outputs): shortest round-trip representation,
/// same scientific-notation threshold.
pub fn format_f64(v: f64) -> String {
    if v == 0.0 {
        return "0".into();
    }
    if v.is_nan() {
        return "nan".into();
    }
    if v.abs() < 1e-4 {
        format!("{v:e}")
    } else {
        format!("{v}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn x(v: f64) -> XReal {
        XReal::new(128, v)
    }

    #[test]
    fn basic_shapes() {
        assert_eq!(format_real(&x(1.5), 128), "1.5");
        assert_eq!(format_real(&x(0.0), 128), "0");
        assert_eq!(format_real(&x(24.0), 128), "24");
        assert_eq!(format_real(&x(-3.25), 128), "-3.25");
        assert_eq!(format_real(&x(0.125), 128), "0.125");
    }

    #[test]
    fn scientific_below_threshold() {
        let s = format_real(&x(0.0001), 128);
        assert!(s.starts_with('1') && s.ends_with("e-4"), "{s}");
        let s = format_real(&x(1e-30), 128);
        assert!(s.ends_with("e-30"), "{s}");
        // just above the threshold stays positional
        assert_eq!(format_real(&x(0.001), 128), "0.001");
    }

    #[test]
    fn huge_values_go_scientific() {
        let s = format_real(&x(1e60), 128);
        assert!(s.contains("e"), "{s}");
    }

    #[test]
    fn f64_rendering() {
        assert_eq!(format_f64(0.75), "0.75");
        assert_eq!(format_f64(0.0), "0");
        assert!(format_f64(3.2e-7).contains('e'));
    }
}
