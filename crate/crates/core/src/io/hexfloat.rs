//! C99-style hexadecimal float literals (`0x1.8p+1`), exact in both directions.

use crate::error::{Error, Result};

const FRAC_BITS: u32 = 52;
const FRAC_MASK: u64 = (1 << FRAC_BITS) - 1;

pub fn format_hex(v: f64) -> String {
    if v.is_nan() {
        return "nan".into();
    }
    if v.is_infinite() {
        return if v > 0.0 { "inf".into() } else { "-inf".into() };
    }
    let bits = v.to_bits();
    let sign = if bits >> 63 == 1 { "-" } else { "" };
    let exp = ((bits >> FRAC_BITS) & 0x7ff) as i64;
    let frac = bits & FRAC_MASK;
    if exp == 0 && frac == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, e) = if exp == 0 { (0, -1022) } else { (1, exp - 1023) };
    let digits = format!("{frac:013x}");
    let digits = digits.trim_end_matches('0');
    if digits.is_empty() {
        format!("{sign}0x{lead}p{e:+}")
    } else {
        format!("{sign}0x{lead}.{digits}p{e:+}")
    }
}

pub fn parse_hex(s: &str) -> Result<f64> {
    let bad = || Error::Format(format!("malformed hex float {s:?}"));
    let t = s.trim();
    match t {
        "nan" => return Ok(f64::NAN),
        "inf" => return Ok(f64::INFINITY),
        "-inf" => return Ok(f64::NEG_INFINITY),
        _ => {}
    }
    let (neg, body) = match t.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, t.strip_prefix('+').unwrap_or(t)),
    };
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")).ok_or_else(bad)?;
    let (mant, exp) = body.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i64 = exp.parse().map_err(|_| bad())?;
    let (int_part, frac_part) = mant.split_once('.').unwrap_or((mant, ""));
    if int_part.is_empty() && frac_part.is_empty() {
        return Err(bad());
    }
    let digits: String = [int_part, frac_part].concat();
    if digits.len() > 30 || !digits.chars().all(|c| c.is_ascii_hexdigit()) {
        return Err(bad());
    }
    let m = if digits.is_empty() { 0 } else { u128::from_str_radix(&digits, 16).map_err(|_| bad())? };
    if m >> 53 != 0 {
        // more significant bits than a double holds
        return Err(bad());
    }
    let mut v = m as f64;
    let mut e = exp - 4 * frac_part.len() as i64;
    // scale in chunks that keep every intermediate exact
    while e > 0 && v != 0.0 {
        let s = e.min(1000);
        v *= 2f64.powi(s as i32);
        e -= s;
    }
    while e < 0 && v != 0.0 {
        let s = (-e).min(1000);
        v *= 2f64.powi(-(s as i32));
        e += s;
    }
    Ok(if neg { -v } else { v })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn known_values() {
        assert_eq!(format_hex(1.0), "0x1p+0");
        assert_eq!(format_hex(3.0), "0x1.8p+1");
        assert_eq!(format_hex(-0.5), "-0x1p-1");
        assert_eq!(format_hex(0.0), "0x0p+0");
        assert_eq!(format_hex(-0.0), "-0x0p+0");
        assert_eq!(format_hex(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
        assert_eq!(parse_hex("0x1.8p+1").unwrap(), 3.0);
        assert_eq!(parse_hex("0x.8p1").unwrap(), 1.0);
        assert!(parse_hex("1.5").is_err());
        assert!(parse_hex("0x1.5").is_err());
    }

    proptest! {
        #[test]
        fn round_trip_is_bit_exact(bits in any::<u64>()) {
            let v = f64::from_bits(bits);
            prop_assume!(!v.is_nan());
            let back = parse_hex(&format_hex(v)).unwrap();
            prop_assert_eq!(back.to_bits(), bits);
        }
    }
}
