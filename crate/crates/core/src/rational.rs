//! Exact rational numbers and their JSON encoding.
//!
//! Integral values serialize as JSON integers, everything else as a `"num/den"`
//! string. Decoding additionally accepts decimal numbers (`0.25`, `-3.0`) so
//! that documents produced by other tools can be read back exactly.

use num_rational::Rational64;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serializer};

pub type Rational = Rational64;

pub fn int(v: i64) -> Rational {
    Rational::from_integer(v)
}

pub fn to_f64(r: &Rational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Parses `"7"`, `"-3/4"` or a decimal like `"1.25"` / `"2e3"`.
pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    if let Some((n, d)) = s.split_once('/') {
        let n: i64 = n.trim().parse().ok()?;
        let d: i64 = d.trim().parse().ok()?;
        if d == 0 {
            return None;
        }
        return Some(Rational::new(n, d));
    }
    if let Ok(v) = s.parse::<i64>() {
        return Some(int(v));
    }
    parse_decimal(s)
}

fn parse_decimal(s: &str) -> Option<Rational> {
    let (mantissa, exp) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (neg, mantissa) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = mantissa.split_once('.').unwrap_or((mantissa, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let digits = format!("{whole}{frac}");
    let mut num: i64 = if digits.is_empty() { 0 } else { digits.parse().ok()? };
    if neg {
        num = -num;
    }
    let scale = exp - frac.len() as i32;
    let pow = 10i64.checked_pow(scale.unsigned_abs())?;
    if scale >= 0 {
        Some(int(num.checked_mul(pow)?))
    } else {
        Some(Rational::new(num, pow))
    }
}

pub fn format(r: &Rational) -> String {
    if r.is_integer() {
        r.numer().to_string()
    } else {
        format!("{}/{}", r.numer(), r.denom())
    }
}

pub fn is_non_negative(r: &Rational) -> bool {
    !r.is_negative()
}

pub fn is_positive(r: &Rational) -> bool {
    r.is_positive() && !r.is_zero()
}

pub fn serialize<S: Serializer>(r: &Rational, s: S) -> Result<S::Ok, S::Error> {
    if r.is_integer() {
        s.serialize_i64(*r.numer())
    } else {
        s.serialize_str(&format(r))
    }
}

#[derive(Deserialize)]
#[serde(untagged)]
enum Raw {
    Int(i64),
    Float(f64),
    Text(String),
}

pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
    match Raw::deserialize(d)? {
        Raw::Int(v) => Ok(int(v)),
        Raw::Float(f) if f.is_finite() => {
            parse(&f.to_string()).ok_or_else(|| de::Error::custom(format!("cannot represent {f} exactly")))
        }
        Raw::Float(f) => Err(de::Error::custom(format!("non-finite number {f}"))),
        Raw::Text(t) => parse(&t).ok_or_else(|| de::Error::custom(format!("invalid rational `{t}`"))),
    }
}

pub mod option {
    use super::*;
    use serde::Serialize;

    pub fn serialize<S: Serializer>(r: &Option<Rational>, s: S) -> Result<S::Ok, S::Error> {
        match r {
            Some(r) => super::serialize(r, s),
            None => Option::<()>::None.serialize(s),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Rational>, D::Error> {
        #[derive(Deserialize)]
        struct Wrap(#[serde(deserialize_with = "super::deserialize")] Rational);
        Ok(Option::<Wrap>::deserialize(d)?.map(|w| w.0))
    }
}
