//! Scalar abstraction shared by polynomials and symmetric matrices.
//!
//! The same algebra runs over exact rationals (certificate construction and
//! verification) and over floats (numeric Gram factorizations, reports).

use std::fmt::{Debug, Display};

use num_rational::BigRational;
use num_traits::{Signed, ToPrimitive};

use crate::rational;

pub trait Scalar: Clone + Debug + Display + PartialOrd + Signed + Send + Sync + 'static {
    /// True when arithmetic on this type is exact.
    const EXACT: bool;

    fn from_rational(r: &BigRational) -> Self;

    fn from_i64(v: i64) -> Self;

    fn to_f64(&self) -> f64;

    /// Parses the textual forms accepted by the matrix and polynomial formats.
    fn parse(s: &str) -> Option<Self>;

    /// Equality used for symmetry validation: exact for rationals, 1e-12
    /// relative for floats.
    fn near(&self, other: &Self) -> bool;
}

impl Scalar for BigRational {
    const EXACT: bool = true;

    fn from_rational(r: &BigRational) -> Self {
        r.clone()
    }

    fn from_i64(v: i64) -> Self {
        BigRational::from_integer(v.into())
    }

    fn to_f64(&self) -> f64 {
        ToPrimitive::to_f64(self).unwrap_or(f64::NAN)
    }

    fn parse(s: &str) -> Option<Self> {
        rational::parse_rational(s)
    }

    fn near(&self, other: &Self) -> bool {
        self == other
    }
}

macro_rules! float_scalar {
    ($t:ty) => {
        impl Scalar for $t {
            const EXACT: bool = false;

            fn from_rational(r: &BigRational) -> Self {
                ToPrimitive::to_f64(r).unwrap_or(f64::NAN) as $t
            }

            fn from_i64(v: i64) -> Self {
                v as $t
            }

            fn to_f64(&self) -> f64 {
                *self as f64
            }

            fn parse(s: &str) -> Option<Self> {
                let s = s.trim().replace('\u{2212}', "-");
                if let Ok(v) = s.parse::<$t>() {
                    return Some(v);
                }
                rational::parse_rational(&s).map(|r| Self::from_rational(&r))
            }

            fn near(&self, other: &Self) -> bool {
                let scale = (1.0 as $t).max(self.abs()).max(other.abs());
                (self - other).abs() <= 1e-12 as $t * scale
            }
        }
    };
}

float_scalar!(f64);
float_scalar!(f32);
