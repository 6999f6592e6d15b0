//! Nonnegative integer weights extended with infinity.

use std::fmt;
use std::iter::Sum;
use std::ops::Add;

use serde::de::{self, Deserializer, Visitor};
use serde::{Deserialize, Serialize, Serializer};

/// A weight, heuristic value or priority.
///
/// `Finite` values order below `Infinite`, so the derived `Ord` is the
/// natural order on the extended nonnegative integers. Serialized as a JSON
/// integer or the string `"inf"`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, PartialOrd, Ord, Hash)]
pub enum Weight {
    Finite(u64),
    Infinite,
}

impl Weight {
    pub const ZERO: Weight = Weight::Finite(0);

    pub fn is_finite(self) -> bool {
        matches!(self, Weight::Finite(_))
    }

    pub fn finite(self) -> Option<u64> {
        match self {
            Weight::Finite(v) => Some(v),
            Weight::Infinite => None,
        }
    }

    /// `self - rhs`, with `inf - finite = inf`. Returns `None` on underflow or `inf - inf`.
    pub fn checked_sub(self, rhs: Weight) -> Option<Weight> {
        match (self, rhs) {
            (Weight::Finite(a), Weight::Finite(b)) => a.checked_sub(b).map(Weight::Finite),
            (Weight::Infinite, Weight::Finite(_)) => Some(Weight::Infinite),
            _ => None,
        }
    }

    pub fn as_f64(self) -> f64 {
        match self {
            Weight::Finite(v) => v as f64,
            Weight::Infinite => f64::INFINITY,
        }
    }
}

impl Default for Weight {
    fn default() -> Self {
        Weight::ZERO
    }
}

impl From<u64> for Weight {
    fn from(v: u64) -> Self {
        Weight::Finite(v)
    }
}

impl Add for Weight {
    type Output = Weight;

    fn add(self, rhs: Weight) -> Weight {
        match (self, rhs) {
            (Weight::Finite(a), Weight::Finite(b)) => match a.checked_add(b) {
                Some(v) => Weight::Finite(v),
                None => Weight::Infinite,
            },
            _ => Weight::Infinite,
        }
    }
}

impl Sum for Weight {
    fn sum<I: Iterator<Item = Weight>>(iter: I) -> Weight {
        iter.fold(Weight::ZERO, Add::add)
    }
}

impl fmt::Display for Weight {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            Weight::Finite(v) => write!(f, "{v}"),
            Weight::Infinite => f.write_str("inf"),
        }
    }
}

impl Serialize for Weight {
    fn serialize<S: Serializer>(&self, serializer: S) -> Result<S::Ok, S::Error> {
        match self {
            Weight::Finite(v) => serializer.serialize_u64(*v),
            Weight::Infinite => serializer.serialize_str("inf"),
        }
    }
}

impl<'de> Deserialize<'de> for Weight {
    fn deserialize<D: Deserializer<'de>>(deserializer: D) -> Result<Self, D::Error> {
        struct WeightVisitor;

        impl Visitor<'_> for WeightVisitor {
            type Value = Weight;

            fn expecting(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
                f.write_str("a nonnegative integer or \"inf\"")
            }

            fn visit_u64<E: de::Error>(self, v: u64) -> Result<Weight, E> {
                Ok(Weight::Finite(v))
            }

            fn visit_i64<E: de::Error>(self, v: i64) -> Result<Weight, E> {
                u64::try_from(v)
                    .map(Weight::Finite)
                    .map_err(|_| E::custom("negative weight"))
            }

            fn visit_str<E: de::Error>(self, v: &str) -> Result<Weight, E> {
                match v {
                    "inf" => Ok(Weight::Infinite),
                    _ => Err(E::custom(format!("unknown weight literal {v:?}"))),
                }
            }
        }

        deserializer.deserialize_any(WeightVisitor)
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn ordering_puts_infinity_last() {
        assert!(Weight::Finite(u64::MAX) < Weight::Infinite);
        assert!(Weight::Finite(2) < Weight::Finite(3));
    }

    #[test]
    fn addition_saturates_to_infinity() {
        assert_eq!(Weight::Finite(2) + Weight::Finite(3), Weight::Finite(5));
        assert_eq!(Weight::Finite(2) + Weight::Infinite, Weight::Infinite);
        assert_eq!(Weight::Finite(u64::MAX) + Weight::Finite(1), Weight::Infinite);
    }

    #[test]
    fn json_forms() {
        assert_eq!(serde_json::to_string(&Weight::Finite(3)).unwrap(), "3");
        assert_eq!(serde_json::to_string(&Weight::Infinite).unwrap(), "\"inf\"");
        let w: Weight = serde_json::from_str("\"inf\"").unwrap();
        assert_eq!(w, Weight::Infinite);
        assert!(serde_json::from_str::<Weight>("-1").is_err());
    }
}
