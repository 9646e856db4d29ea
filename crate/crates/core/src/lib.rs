//! Certification of copositivity through Reznick-type sum-of-squares
//! hierarchies.
//!
//! The crate decides membership in the cones `K_n^(r)` of symmetric
//! matrices `M` for which `(x1^2 + ... + xn^2)^r * (x∘x)^T M (x∘x)` is a sum
//! of squares, computes the graph hierarchy `theta^(r)(G)` bounding the
//! stability number, and produces exact rational certificates that can be
//! checked by polynomial expansion alone.
//!
//! Polynomials and symmetric matrices are generic over [`Scalar`]; use the
//! aliases below for the exact and floating variants.

pub mod certify;
pub mod copositive;
pub mod error;
pub mod gram;
pub mod graphs;
pub mod poly;
pub mod rational;
pub mod scalar;
pub mod sdp;
pub mod symmat;

pub use num_rational::BigRational;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Rational = BigRational;
pub type ExactPolynomial = poly::Polynomial<BigRational>;
pub type FloatPolynomial = poly::Polynomial<f64>;
pub type ExactMatrix = symmat::SymmetricMatrix<BigRational>;
pub type FloatMatrix = symmat::SymmetricMatrix<f64>;
