//! Extended reals `ℝ ∪ {−∞}`.
//!
//! t-entropy values and log spectral radii live here: a dead cycle or a
//! measure that charges a set killed by `Aⁿ` produces a genuine `−∞`, not a
//! float artifact. `−∞` absorbs addition and loses every `max`.

use std::cmp::Ordering;
use std::fmt;
use std::iter::Sum;
use std::ops::{Add, AddAssign, Div};

use serde::de::{self, Deserializer, Visitor};
use serde::ser::Serializer;
use serde::{Deserialize, Serialize};

/// A real number or `−∞`. `Finite` payloads are always finite floats.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum ExtendedReal {
    NegInf,
    Finite(f64),
}

pub use ExtendedReal::{Finite, NegInf};

impl ExtendedReal {
    /// Natural log with the convention `ln 0 = −∞`. Requires `x ≥ 0`.
    pub fn ln(x: f64) -> Self {
        debug_assert!(x >= 0.0, "ln of negative: {x}");
        if x == 0.0 {
            NegInf
        } else {
            Finite(x.ln())
        }
    }

    /// The summand `c·ln(num/den)` of a t-entropy sum, under the conventions
    /// that govern them: the term vanishes when `c = 0` (even if `num` or
    /// `den` is 0), and is `−∞` when `c > 0` and `num = 0`.
    ///
    /// Requires `c ≥ 0`, `num ≥ 0`, `den > 0` whenever `c > 0`; the t-entropy
    /// sums only form this term with `den = μ(g) ≥ c·(something positive)`,
    /// so the constraint holds by construction there.
    pub fn weighted_log_ratio(c: f64, num: f64, den: f64) -> Self {
        if c == 0.0 {
            return Finite(0.0);
        }
        debug_assert!(c > 0.0 && num >= 0.0 && den > 0.0);
        if num == 0.0 {
            NegInf
        } else {
            Finite(c * (num / den).ln())
        }
    }

    pub fn is_finite(self) -> bool {
        matches!(self, Finite(_))
    }

    pub fn is_neg_inf(self) -> bool {
        matches!(self, NegInf)
    }

    /// The finite payload, or `None` for `−∞`.
    pub fn finite(self) -> Option<f64> {
        match self {
            NegInf => None,
            Finite(x) => Some(x),
        }
    }

    /// The finite payload; panics on `−∞`. For call sites that have already
    /// proved finiteness (e.g. spectral radii of operators with a live cycle).
    pub fn expect_finite(self, what: &str) -> f64 {
        match self {
            NegInf => panic!("{what} is -inf"),
            Finite(x) => x,
        }
    }

    pub fn max(self, other: Self) -> Self {
        match (self, other) {
            (NegInf, b) => b,
            (a, NegInf) => a,
            (Finite(a), Finite(b)) => Finite(a.max(b)),
        }
    }

    pub fn min(self, other: Self) -> Self {
        match (self, other) {
            (NegInf, _) | (_, NegInf) => NegInf,
            (Finite(a), Finite(b)) => Finite(a.min(b)),
        }
    }

    /// `|self − other|`, with `|−∞ − (−∞)| = 0` and `∞` against a finite value.
    pub fn abs_diff(self, other: Self) -> f64 {
        match (self, other) {
            (NegInf, NegInf) => 0.0,
            (Finite(a), Finite(b)) => (a - b).abs(),
            _ => f64::INFINITY,
        }
    }

    /// Multiply a finite nonnegative scalar: `0·(−∞) = 0` here, matching the
    /// measure-theoretic convention used by the mixture formulas.
    pub fn scale(self, c: f64) -> Self {
        debug_assert!(c >= 0.0 && c.is_finite());
        match self {
            NegInf => {
                if c == 0.0 {
                    Finite(0.0)
                } else {
                    NegInf
                }
            }
            Finite(x) => Finite(c * x),
        }
    }
}

impl Add for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: Self) -> Self {
        match (self, rhs) {
            (NegInf, _) | (_, NegInf) => NegInf,
            (Finite(a), Finite(b)) => Finite(a + b),
        }
    }
}

impl Add<f64> for ExtendedReal {
    type Output = ExtendedReal;

    fn add(self, rhs: f64) -> Self {
        self + Finite(rhs)
    }
}

impl AddAssign for ExtendedReal {
    fn add_assign(&mut self, rhs: Self) {
        *self = *self + rhs;
    }
}

impl Div<f64> for ExtendedReal {
    type Output = ExtendedReal;

    /// Division by a strictly positive scalar (cycle means, 1/n scalings).
    fn div(self, rhs: f64) -> Self {
        debug_assert!(rhs > 0.0);
        match self {
            NegInf => NegInf,
            Finite(x) => Finite(x / rhs),
        }
    }
}

impl Sum for ExtendedReal {
    fn sum<I: Iterator<Item = Self>>(iter: I) -> Self {
        iter.fold(Finite(0.0), Add::add)
    }
}

impl PartialOrd for ExtendedReal {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        match (self, other) {
            (NegInf, NegInf) => Some(Ordering::Equal),
            (NegInf, Finite(_)) => Some(Ordering::Less),
            (Finite(_), NegInf) => Some(Ordering::Greater),
            (Finite(a), Finite(b)) => a.partial_cmp(b),
        }
    }
}

impl From<f64> for ExtendedReal {
    /// Finite floats map to `Finite`; `−∞` maps to `NegInf`. Other non-finite
    /// inputs are a caller bug.
    fn from(x: f64) -> Self {
        if x == f64::NEG_INFINITY {
            NegInf
        } else {
            debug_assert!(x.is_finite(), "ExtendedReal::from({x})");
            Finite(x)
        }
    }
}

impl fmt::Display for ExtendedReal {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            NegInf => write!(f, "-inf"),
            Finite(x) => write!(f, "{x}"),
        }
    }
}

impl Serialize for ExtendedReal {
    fn serialize<S: Serializer>(&self, s: S) -> std::result::Result<S::Ok, S::Error> {
        match self {
            NegInf => s.serialize_str("-inf"),
            Finite(x) => s.serialize_f64(*x),
        }
    }
}

impl<'de> Deserialize<'de> for ExtendedReal {
    fn deserialize<D: Deserializer<'de>>(d: D) -> std::result::Result<Self, D::Error> {
        struct XVisitor;

        impl<'de> Visitor<'de> for XVisitor {
            type Value = ExtendedReal;

            fn expecting(&self, f: &mut fmt::Formatter) -> fmt::Result {
                f.write_str("a finite number or the string \"-inf\"")
            }

            fn visit_f64<E: de::Error>(self, v: f64) -> std::result::Result<ExtendedReal, E> {
                if v.is_finite() {
                    Ok(Finite(v))
                } else {
                    Err(E::custom(format!("non-finite number {v}")))
                }
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> std::result::Result<ExtendedReal, E> {
                Ok(Finite(v as f64))
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> std::result::Result<ExtendedReal, E> {
                Ok(Finite(v as f64))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> std::result::Result<ExtendedReal, E> {
                if v == "-inf" {
                    Ok(NegInf)
                } else {
                    Err(E::custom(format!("expected \"-inf\", got {v:?}")))
                }
            }
        }

        d.deserialize_any(XVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn neginf_absorbs_addition() {
        assert_eq!(NegInf + Finite(3.0), NegInf);
        assert_eq!(Finite(3.0) + NegInf, NegInf);
        assert_eq!(Finite(1.0) + Finite(2.0), Finite(3.0));
    }

    #[test]
    fn neginf_loses_max() {
        assert_eq!(NegInf.max(Finite(-100.0)), Finite(-100.0));
        assert_eq!(Finite(-100.0).max(NegInf), Finite(-100.0));
        assert_eq!(NegInf.max(NegInf), NegInf);
    }

    #[test]
    fn ordering() {
        assert!(NegInf < Finite(-1e300));
        assert!(Finite(1.0) > NegInf);
        assert!(Finite(1.0) < Finite(2.0));
        assert_eq!(
            NegInf.partial_cmp(&NegInf),
            Some(std::cmp::Ordering::Equal)
        );
    }

    #[test]
    fn zero_coefficient_kills_the_term() {
        assert_eq!(ExtendedReal::weighted_log_ratio(0.0, 0.0, 0.0), Finite(0.0));
        assert_eq!(ExtendedReal::weighted_log_ratio(0.0, 5.0, 1.0), Finite(0.0));
        assert_eq!(ExtendedReal::weighted_log_ratio(0.5, 0.0, 0.5), NegInf);
        let t = ExtendedReal::weighted_log_ratio(0.3, 0.6, 0.3);
        assert!((t.expect_finite("t") - 0.3 * 2.0_f64.ln()).abs() < 1e-15);
    }

    #[test]
    fn scale_zero_times_neginf_is_zero() {
        assert_eq!(NegInf.scale(0.0), Finite(0.0));
        assert_eq!(NegInf.scale(0.5), NegInf);
        assert_eq!(Finite(4.0).scale(0.25), Finite(1.0));
    }

    #[test]
    fn serde_round_trip() {
        let v = vec![Finite(1.5), NegInf];
        let s = serde_json::to_string(&v).unwrap();
        assert_eq!(s, "[1.5,\"-inf\"]");
        let back: Vec<ExtendedReal> = serde_json::from_str(&s).unwrap();
        assert_eq!(back, v);
    }

    #[test]
    fn display_matches_serialization_token() {
        assert_eq!(NegInf.to_string(), "-inf");
        assert_eq!(Finite(2.0).to_string(), "2");
    }

    #[test]
    fn sum_of_empty_is_zero() {
        let terms: Vec<ExtendedReal> = vec![];
        assert_eq!(terms.into_iter().sum::<ExtendedReal>(), Finite(0.0));
    }
}
