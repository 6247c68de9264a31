//! Machine outputs. Floats are written as C99 hexadecimal literals so the
//! bytes round-trip exactly and do not depend on a decimal formatter.

use std::io::Write;
use std::path::Path;

use num_complex::Complex64 as C;
use serde::{Serialize, Serializer};

use crate::{ExperimentConfig, HarnessError, Result, VERSION};

/// `x` as `[-]0x1.<hex>p<exp>`, subnormals as `0x0.<hex>p-1022`, with
/// trailing zero digits dropped. Non-finite values are `inf`, `-inf`, `nan`.
pub fn hex(x: f64) -> String {
    if x.is_nan() {
        return "nan".into();
    }
    let sign = if x.is_sign_negative() { "-" } else { "" };
    if x.is_infinite() {
        return format!("{sign}inf");
    }
    let bits = x.to_bits();
    let biased = ((bits >> 52) & 0x7ff) as i64;
    let mut mant = bits & ((1u64 << 52) - 1);
    if biased == 0 && mant == 0 {
        return format!("{sign}0x0p+0");
    }
    let (lead, exp) = if biased == 0 { (0, -1022) } else { (1, biased - 1023) };
    let mut digits = 13;
    while digits > 0 && mant & 0xf == 0 {
        mant >>= 4;
        digits -= 1;
    }
    if digits == 0 {
        format!("{sign}0x{lead}p{exp:+}")
    } else {
        format!("{sign}0x{lead}.{mant:0digits$x}p{exp:+}")
    }
}

/// Inverse of [`hex`]; also accepts any hexadecimal float with at most 15
/// significant digits.
pub fn parse_hex(s: &str) -> Result<f64> {
    let bad = || HarnessError::Usage(format!("not a hexadecimal float: {s:?}"));
    let (neg, body) = match s.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, s.strip_prefix('+').unwrap_or(s)),
    };
    let signed = |x: f64| if neg { -x } else { x };
    match body {
        "inf" => return Ok(signed(f64::INFINITY)),
        "nan" if !neg => return Ok(f64::NAN),
        _ => {}
    }
    let body = body.strip_prefix("0x").or_else(|| body.strip_prefix("0X")).ok_or_else(bad)?;
    let (digits, exp) = body.split_once(['p', 'P']).ok_or_else(bad)?;
    let exp: i32 = exp.parse().map_err(|_| bad())?;
    let (int, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if int.is_empty() && frac.is_empty() {
        return Err(bad());
    }
    let mut mant: u64 = 0;
    let mut significant = 0;
    for ch in int.chars().chain(frac.chars()) {
        let d = ch.to_digit(16).ok_or_else(bad)? as u64;
        if mant != 0 || d != 0 {
            significant += 1;
        }
        if significant > 15 {
            return Err(bad());
        }
        mant = mant * 16 + d;
    }
    let shift = exp - 4 * frac.len() as i32;
    Ok(signed(scale(mant as f64, shift)))
}

/// `m·2^e` in halves, so that no intermediate power under- or overflows
/// and an exact result stays exact.
fn scale(m: f64, e: i32) -> f64 {
    let half = e / 2;
    m * 2f64.powi(half) * 2f64.powi(e - half)
}

/// `serialize_with` helper writing a float in hexadecimal.
pub fn ser_f64<S: Serializer>(x: &f64, s: S) -> std::result::Result<S::Ok, S::Error> {
    s.serialize_str(&hex(*x))
}

/// `serialize_with` helper writing a complex number as `[re, im]`.
pub fn ser_c<S: Serializer>(z: &C, s: S) -> std::result::Result<S::Ok, S::Error> {
    [hex(z.re), hex(z.im)].serialize(s)
}

pub fn ser_opt_f64<S: Serializer>(x: &Option<f64>, s: S) -> std::result::Result<S::Ok, S::Error> {
    x.map(hex).serialize(s)
}

/// Header lines identifying the config and library that produced an
/// artifact.
pub fn provenance(cfg: &ExperimentConfig) -> String {
    format!("# config: {}\n# version: {VERSION}\n", cfg.to_json())
}

/// CSV with the provenance header as `#` comment lines.
pub fn csv_bytes(cfg: &ExperimentConfig, header: &[&str], rows: &[Vec<String>]) -> Result<Vec<u8>> {
    let mut out = provenance(cfg).into_bytes();
    {
        let mut w = csv::Writer::from_writer(&mut out);
        let err = |e: csv::Error| HarnessError::Domain(format!("csv: {e}"));
        w.write_record(header).map_err(err)?;
        for r in rows {
            w.write_record(r).map_err(err)?;
        }
        w.flush().map_err(|e| HarnessError::Domain(format!("csv: {e}")))?;
    }
    Ok(out)
}

#[derive(Serialize)]
struct Envelope<'a, T> {
    version: &'static str,
    config: &'a ExperimentConfig,
    report: &'a T,
}

/// Pretty JSON `{version, config, report}` with a trailing newline.
pub fn json_bytes<T: Serialize>(cfg: &ExperimentConfig, report: &T) -> Result<Vec<u8>> {
    let env = Envelope { version: VERSION, config: cfg, report };
    let mut out = serde_json::to_vec_pretty(&env).map_err(HarnessError::domain)?;
    out.push(b'\n');
    Ok(out)
}

pub fn write_file(dir: &Path, name: &str, bytes: &[u8]) -> Result<()> {
    let io = |source| HarnessError::Io { path: dir.join(name).display().to_string(), source };
    std::fs::create_dir_all(dir).map_err(io)?;
    let mut f = std::fs::File::create(dir.join(name)).map_err(io)?;
    f.write_all(bytes).map_err(io)
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn hex_examples() {
        assert_eq!(hex(1.0), "0x1p+0");
        assert_eq!(hex(3.0), "0x1.8p+1");
        assert_eq!(hex(-0.1), "-0x1.999999999999ap-4");
        assert_eq!(hex(0.0), "0x0p+0");
        assert_eq!(hex(-0.0), "-0x0p+0");
        assert_eq!(hex(f64::MIN_POSITIVE / 2.0), "0x0.8p-1022");
        assert_eq!(hex(f64::from_bits(1)), "0x0.0000000000001p-1022");
        assert_eq!(hex(f64::NEG_INFINITY), "-inf");
        assert_eq!(parse_hex("0x1.8p+1").unwrap(), 3.0);
        assert_eq!(parse_hex("0xAp-1").unwrap(), 5.0);
        assert!(parse_hex("1.5").is_err());
        assert!(parse_hex("0x1.8").is_err());
        assert!(parse_hex("0x1.0000000000000001p+0").is_err());
    }

    proptest! {
        #[test]
        fn hex_round_trips_every_bit_pattern(bits in any::<u64>()) {
            let x = f64::from_bits(bits);
            let back = parse_hex(&hex(x)).unwrap();
            if x.is_nan() {
                prop_assert!(back.is_nan());
            } else {
                prop_assert_eq!(back.to_bits(), x.to_bits());
            }
        }
    }
}
