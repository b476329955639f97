//! Exact token amounts.
//!
//! All balances, reserves and chunk amounts are arbitrary-precision rationals so
//! that chunk sums and constant-product checks are exact. Amounts travel through
//! JSON and TOML as strings of the form `"3"`, `"-7/2"` or `"0.125"`.

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

use crate::error::{Error, Result};

pub type Amount = BigRational;

pub fn int(v: i64) -> Amount {
    Amount::from_integer(BigInt::from(v))
}

pub fn ratio(num: i64, den: i64) -> Amount {
    Amount::new(BigInt::from(num), BigInt::from(den))
}

pub fn zero() -> Amount {
    Amount::zero()
}

pub fn one() -> Amount {
    Amount::one()
}

pub fn to_f64(a: &Amount) -> f64 {
    a.to_f64().unwrap_or_else(|| {
        // Huge numerators/denominators: scale both down before converting.
        let n = a.numer().bits() as i64;
        let d = a.denom().bits() as i64;
        let shift = (n.max(d) - 1000).max(0) as u64;
        let num = (a.numer() >> shift).to_f64().unwrap_or(f64::NAN);
        let den = (a.denom() >> shift).to_f64().unwrap_or(f64::NAN);
        num / den
    })
}

/// Parses `"a"`, `"a/b"` or a finite decimal such as `"-1.25"` exactly.
pub fn parse(s: &str) -> Result<Amount> {
    let s = s.trim();
    let bad = || Error::Config(format!("not a rational amount: {s:?}"));
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().map_err(|_| bad())?;
        let d: BigInt = d.trim().parse().map_err(|_| bad())?;
        if d.is_zero() {
            return Err(bad());
        }
        return Ok(Amount::new(n, d));
    }
    if let Some((whole, frac)) = s.split_once('.') {
        if frac.is_empty() || !frac.bytes().all(|b| b.is_ascii_digit()) {
            return Err(bad());
        }
        let negative = whole.starts_with('-');
        let digits = format!("{}{}", whole.trim_start_matches(['-', '+']), frac);
        let mut n: BigInt = digits.parse().map_err(|_| bad())?;
        if negative {
            n = -n;
        }
        let d = num_traits::pow(BigInt::from(10), frac.len());
        return Ok(Amount::new(n, d));
    }
    let n: BigInt = s.parse().map_err(|_| bad())?;
    Ok(Amount::from_integer(n))
}

pub fn format(a: &Amount) -> String {
    if a.is_integer() {
        a.numer().to_string()
    } else {
        format!("{}/{}", a.numer(), a.denom())
    }
}

pub fn is_positive(a: &Amount) -> bool {
    a.is_positive()
}

/// Serde adapter: `#[serde(with = "crate::amount::serde_str")]`.
pub mod serde_str {
    use super::Amount;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &Amount, s: S) -> Result<S::Ok, S::Error> {
        s.serialize_str(&super::format(a))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Amount, D::Error> {
        let s = String::deserialize(d)?;
        super::parse(&s).map_err(serde::de::Error::custom)
    }
}

pub mod serde_str_opt {
    use super::Amount;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(a: &Option<Amount>, s: S) -> Result<S::Ok, S::Error> {
        match a {
            Some(a) => s.serialize_some(&super::format(a)),
            None => s.serialize_none(),
        }
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Option<Amount>, D::Error> {
        let s = Option::<String>::deserialize(d)?;
        s.map(|s| super::parse(&s).map_err(serde::de::Error::custom))
            .transpose()
    }
}
