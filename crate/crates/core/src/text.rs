//! Text formatting for persisted numbers.

/// Formats a float with 17 significant digits, which round-trips every f64.
pub fn fmt_f64(v: f64) -> String {
    if v == 0.0 {
        // keep the sign bit out of the files; -0 and 0 compare equal anyway
        return "0".to_string();
    }
    format!("{v:.16e}")
}

pub fn parse_f64(s: &str) -> Option<f64> {
    s.trim().parse::<f64>().ok()
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    proptest! {
        #[test]
        fn round_trips(v in proptest::num::f64::NORMAL | proptest::num::f64::SUBNORMAL) {
            let back = parse_f64(&fmt_f64(v)).unwrap();
            prop_assert_eq!(back, v);
        }
    }

    #[test]
    fn zero_is_plain() {
        assert_eq!(fmt_f64(-0.0), "0");
        assert_eq!(fmt_f64(1.5), "1.5000000000000000e0");
    }
}
