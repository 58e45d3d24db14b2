//! Unit-suffixed quantity parsing for config files.
//!
//! Every physical number in a config carries an explicit unit and is
//! normalized to SI (Hz, T, s) on input. Unknown units are fatal.

use crate::error::{Error, Result};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Dimension {
    Frequency,
    Field,
    Time,
    GyromagneticRatio,
}

fn unit_factor(unit: &str, dim: Dimension) -> Option<f64> {
    match dim {
        Dimension::Frequency => match unit {
            "Hz" => Some(1.0),
            "kHz" => Some(1e3),
            "MHz" => Some(1e6),
            "GHz" => Some(1e9),
            _ => None,
        },
        Dimension::Field => match unit {
            "T" => Some(1.0),
            "mT" => Some(1e-3),
            "uT" | "µT" | "μT" => Some(1e-6),
            "nT" => Some(1e-9),
            _ => None,
        },
        Dimension::Time => match unit {
            "s" => Some(1.0),
            "ms" => Some(1e-3),
            "us" | "µs" | "μs" => Some(1e-6),
            "ns" => Some(1e-9),
            _ => None,
        },
        Dimension::GyromagneticRatio => match unit {
            "Hz/T" => Some(1.0),
            "kHz/T" => Some(1e3),
            "MHz/T" => Some(1e6),
            "GHz/T" => Some(1e9),
            _ => None,
        },
    }
}

/// Parse "13 MHz", "51.2 mT", "0.1 ms" style strings into SI values.
pub fn parse_quantity(key: &str, text: &str, dim: Dimension) -> Result<f64> {
    let t = text.trim();
    // the unit is the trailing run of letters (plus 'µ' and '/'); scanning
    // from the end keeps scientific-notation exponents in the number part
    let split = t
        .char_indices()
        .rev()
        .take_while(|(_, c)| c.is_alphabetic() || *c == 'µ' || *c == 'μ' || *c == '/')
        .last()
        .map(|(i, _)| i)
        .ok_or_else(|| Error::Unit { key: key.into(), msg: format!("missing unit in `{t}`") })?;
    if split == 0 {
        return Err(Error::Unit { key: key.into(), msg: format!("missing number in `{t}`") });
    }
    let (num_str, unit) = t.split_at(split);
    let value: f64 = num_str.trim().parse().map_err(|_| Error::Unit {
        key: key.into(),
        msg: format!("cannot parse number in `{t}`"),
    })?;
    let factor = unit_factor(unit.trim(), dim).ok_or_else(|| Error::Unit {
        key: key.into(),
        msg: format!("unknown unit `{}`", unit.trim()),
    })?;
    if !value.is_finite() {
        return Err(Error::Unit { key: key.into(), msg: "non-finite value".into() });
    }
    Ok(value * factor)
}

/// Canonical serialization: SI value with the base unit of its dimension.
pub fn format_quantity(value: f64, dim: Dimension) -> String {
    let unit = match dim {
        Dimension::Frequency => "Hz",
        Dimension::Field => "T",
        Dimension::Time => "s",
        Dimension::GyromagneticRatio => "Hz/T",
    };
    format!("{value:e} {unit}")
}

#[cfg(test)]
mod tests {
    use super::*;
    use approx::assert_relative_eq;

    #[test]
    fn parses_common_units() {
        assert_relative_eq!(
            parse_quantity("a", "13 MHz", Dimension::Frequency).unwrap(),
            13e6
        );
        assert_relative_eq!(parse_quantity("b", "51.2mT", Dimension::Field).unwrap(), 0.0512);
        assert_relative_eq!(parse_quantity("c", "10 uT", Dimension::Field).unwrap(), 1e-5);
        assert_relative_eq!(parse_quantity("d", "0.2 ms", Dimension::Time).unwrap(), 2e-4);
        assert_relative_eq!(
            parse_quantity("e", "28.024 GHz/T", Dimension::GyromagneticRatio).unwrap(),
            28.024e9
        );
    }

    #[test]
    fn rejects_malformed_units() {
        let err = parse_quantity("j_d", "13 Mhzz", Dimension::Frequency).unwrap_err();
        let msg = format!("{err}");
        assert!(msg.contains("j_d"), "error names the key: {msg}");
        assert!(parse_quantity("x", "13", Dimension::Frequency).is_err());
        assert!(parse_quantity("x", "abc MHz", Dimension::Frequency).is_err());
        assert!(parse_quantity("x", "13 mT", Dimension::Frequency).is_err());
    }

    #[test]
    fn round_trip() {
        for v in [0.0, 17e3, 2.87e9, 5.1e-2] {
            let s = format_quantity(v, Dimension::Frequency);
            assert_relative_eq!(
                parse_quantity("k", &s, Dimension::Frequency).unwrap(),
                v,
                max_relative = 1e-14
            );
        }
    }
}
