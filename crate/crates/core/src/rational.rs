//! Exact rationals and their JSON form `{"num": .., "den": ..}`.
//!
//! Numerators and denominators are written as JSON integers when they fit in
//! an `i64` and as decimal strings otherwise. Both forms are accepted on input.

use std::str::FromStr;

use num_bigint::BigInt;
use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive, Zero};
use serde::{de, Deserialize, Deserializer, Serialize, Serializer};

pub type Rational = BigRational;

pub fn rat(num: i64, den: i64) -> Rational {
    BigRational::new(BigInt::from(num), BigInt::from(den))
}

pub fn int(v: i64) -> Rational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn to_f64(q: &Rational) -> f64 {
    // Ratio::to_f64 handles large numerators and denominators without overflow.
    q.to_f64().unwrap_or_else(|| {
        if q.is_negative() {
            f64::NEG_INFINITY
        } else {
            f64::INFINITY
        }
    })
}

#[derive(Serialize, Deserialize)]
#[serde(untagged)]
enum IntRepr {
    Small(i64),
    Big(String),
}

impl IntRepr {
    fn from_big(v: &BigInt) -> Self {
        match v.to_i64() {
            Some(s) => IntRepr::Small(s),
            None => IntRepr::Big(v.to_string()),
        }
    }

    fn to_big(&self) -> Result<BigInt, String> {
        match self {
            IntRepr::Small(v) => Ok(BigInt::from(*v)),
            IntRepr::Big(s) => BigInt::from_str(s.trim()).map_err(|e| format!("bad integer `{s}`: {e}")),
        }
    }
}

#[derive(Serialize, Deserialize)]
#[serde(deny_unknown_fields)]
struct RatRepr {
    num: IntRepr,
    den: IntRepr,
}

impl RatRepr {
    fn from_rat(q: &Rational) -> Self {
        RatRepr {
            num: IntRepr::from_big(q.numer()),
            den: IntRepr::from_big(q.denom()),
        }
    }

    fn to_rat(&self) -> Result<Rational, String> {
        let num = self.num.to_big()?;
        let den = self.den.to_big()?;
        if den.is_zero() {
            return Err("zero denominator".into());
        }
        Ok(BigRational::new(num, den))
    }
}

/// `#[serde(with = "serde_rat")]` for a single rational.
pub mod serde_rat {
    use super::*;

    pub fn serialize<S: Serializer>(q: &Rational, s: S) -> Result<S::Ok, S::Error> {
        RatRepr::from_rat(q).serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Rational, D::Error> {
        RatRepr::deserialize(d)?.to_rat().map_err(de::Error::custom)
    }
}

/// `#[serde(with = "serde_rat_vec")]` for a vector of rationals.
pub mod serde_rat_vec {
    use super::*;

    pub fn serialize<S: Serializer>(v: &[Rational], s: S) -> Result<S::Ok, S::Error> {
        let reprs: Vec<RatRepr> = v.iter().map(RatRepr::from_rat).collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Rational>, D::Error> {
        let reprs = Vec::<RatRepr>::deserialize(d)?;
        reprs
            .iter()
            .map(|r| r.to_rat().map_err(de::Error::custom))
            .collect()
    }
}

/// `#[serde(with = "serde_rat_mat")]` for a matrix of rationals.
pub mod serde_rat_mat {
    use super::*;

    pub fn serialize<S: Serializer>(m: &[Vec<Rational>], s: S) -> Result<S::Ok, S::Error> {
        let reprs: Vec<Vec<RatRepr>> = m
            .iter()
            .map(|row| row.iter().map(RatRepr::from_rat).collect())
            .collect();
        reprs.serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(d: D) -> Result<Vec<Vec<Rational>>, D::Error> {
        let reprs = Vec::<Vec<RatRepr>>::deserialize(d)?;
        reprs
            .iter()
            .map(|row| {
                row.iter()
                    .map(|r| r.to_rat().map_err(de::Error::custom))
                    .collect()
            })
            .collect()
    }
}

/// `#[serde(with = "serde_rat_pair_opt")]` for an optional position.
pub mod serde_rat_pair_opt {
    use super::*;

    pub fn serialize<S: Serializer>(
        p: &Option<(Rational, Rational)>,
        s: S,
    ) -> Result<S::Ok, S::Error> {
        p.as_ref()
            .map(|(x, y)| [RatRepr::from_rat(x), RatRepr::from_rat(y)])
            .serialize(s)
    }

    pub fn deserialize<'de, D: Deserializer<'de>>(
        d: D,
    ) -> Result<Option<(Rational, Rational)>, D::Error> {
        let p = Option::<[RatRepr; 2]>::deserialize(d)?;
        match p {
            None => Ok(None),
            Some([x, y]) => Ok(Some((
                x.to_rat().map_err(de::Error::custom)?,
                y.to_rat().map_err(de::Error::custom)?,
            ))),
        }
    }
}

/// Parse `"a/b"` or `"a"`.
pub fn parse(s: &str) -> Option<Rational> {
    let s = s.trim();
    match s.split_once('/') {
        Some((a, b)) => {
            let num = BigInt::from_str(a.trim()).ok()?;
            let den = BigInt::from_str(b.trim()).ok()?;
            (!den.is_zero()).then(|| BigRational::new(num, den))
        }
        None => BigInt::from_str(s).ok().map(BigRational::from_integer),
    }
}
