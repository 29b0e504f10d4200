//! Exact rational helpers and the `"num/den"` text encoding used in traces
//! and scenario files.

use std::fmt;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_integer::Integer;
use num_traits::{One, Signed, ToPrimitive, Zero};
use thiserror::Error;

#[derive(Debug, Clone, PartialEq, Eq, Error)]
#[error("malformed rational {input:?}: {reason}")]
pub struct ParseRatioError {
    pub input: String,
    pub reason: &'static str,
}

/// Parses `"num/den"` or a bare integer `"num"`.
pub fn parse_ratio(input: &str) -> Result<BigRational, ParseRatioError> {
    let err = |reason| ParseRatioError {
        input: input.to_string(),
        reason,
    };
    let trimmed = input.trim();
    let (num, den) = match trimmed.split_once('/') {
        Some((n, d)) => (n.trim(), d.trim()),
        None => (trimmed, "1"),
    };
    let num: BigInt = num.parse().map_err(|_| err("numerator is not an integer"))?;
    let den: BigInt = den
        .parse()
        .map_err(|_| err("denominator is not an integer"))?;
    if den.is_zero() {
        return Err(err("zero denominator"));
    }
    Ok(BigRational::new(num, den))
}

/// Always renders both parts, so `1` becomes `"1/1"` and `0` becomes `"0/1"`.
pub fn format_ratio(value: &BigRational) -> String {
    format!("{}/{}", value.numer(), value.denom())
}

/// Display adapter for `"num/den"` rendering.
pub struct RatioDisplay<'a>(pub &'a BigRational);

impl fmt::Display for RatioDisplay<'_> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}/{}", self.0.numer(), self.0.denom())
    }
}

/// Nearest `f64`; saturates to 0 for values too small to represent.
pub fn ratio_to_f64(value: &BigRational) -> f64 {
    value.to_f64().unwrap_or_else(|| {
        if value.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

/// Exact rational image of a finite float.
pub fn f64_to_ratio(value: f64) -> Option<BigRational> {
    BigRational::from_float(value)
}

/// Least common multiple of the denominators. Cheap when they divide one
/// another, as the powers of a single base do.
pub fn common_denominator<'a>(dens: impl IntoIterator<Item = &'a BigInt>) -> BigInt {
    let mut acc = BigInt::one();
    for d in dens {
        if (&acc % d).is_zero() {
            continue;
        }
        acc = if (d % &acc).is_zero() {
            d.clone()
        } else {
            acc.lcm(d)
        };
    }
    acc
}

/// Exact sum of `num / den` pairs, reduced once at the end.
pub fn sum_fractions<'a>(terms: impl IntoIterator<Item = (BigInt, &'a BigInt)>) -> BigRational {
    let terms: Vec<(BigInt, &BigInt)> = terms.into_iter().collect();
    let den = common_denominator(terms.iter().map(|(_, d)| *d));
    let num: BigInt = terms.into_iter().map(|(n, d)| n * (&den / d)).sum();
    BigRational::new(num, den)
}

/// Exact sum with a single reduction.
pub fn sum_ratios<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigRational {
    sum_fractions(values.into_iter().map(|v| (v.numer().clone(), v.denom())))
}

/// Serde adapter storing a `BigRational` as a `"num/den"` string.
pub mod serde_ratio {
    use super::*;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(value: &BigRational, s: S) -> Result<S::Ok, S::Error> {
        s.collect_str(&RatioDisplay(value))
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<BigRational, D::Error> {
        let text = String::deserialize(d)?;
        parse_ratio(&text).map_err(serde::de::Error::custom)
    }
}

/// Same as [`serde_ratio`] for vectors.
pub mod serde_ratio_vec {
    use super::*;
    use serde::ser::SerializeSeq;
    use serde::{Deserialize, Deserializer, Serializer};

    pub fn serialize<S: Serializer>(values: &[BigRational], s: S) -> Result<S::Ok, S::Error> {
        let mut seq = s.serialize_seq(Some(values.len()))?;
        for v in values {
            seq.serialize_element(&format_ratio(v))?;
        }
        seq.end()
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<BigRational>, D::Error> {
        let texts = Vec::<String>::deserialize(d)?;
        texts
            .iter()
            .map(|t| parse_ratio(t).map_err(serde::de::Error::custom))
            .collect()
    }
}
