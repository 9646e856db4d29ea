//! Sparse multivariate polynomials over a [`Scalar`] coefficient type.
//!
//! Terms are kept in a map keyed by [`Monomial`] under graded lexicographic
//! order; zero coefficients are never stored, so structural equality is
//! polynomial equality.

use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;
use std::ops::{Add, Mul, Neg, Sub};

use num_rational::BigRational;
use num_traits::One;

use crate::error::{Error, Result};
use crate::rational::parse_rational;
use crate::scalar::Scalar;

/// Exponent vector `x1^e1 * ... * xn^en`.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct Monomial(Vec<u32>);

impl Monomial {
    pub fn new(exponents: Vec<u32>) -> Self {
        Monomial(exponents)
    }

    pub fn one(n: usize) -> Self {
        Monomial(vec![0; n])
    }

    pub fn var(n: usize, i: usize) -> Self {
        let mut e = vec![0; n];
        e[i] = 1;
        Monomial(e)
    }

    pub fn exponents(&self) -> &[u32] {
        &self.0
    }

    pub fn nvars(&self) -> usize {
        self.0.len()
    }

    pub fn degree(&self) -> u32 {
        self.0.iter().sum()
    }

    pub fn is_even(&self) -> bool {
        self.0.iter().all(|e| e % 2 == 0)
    }

    /// Exponent vector mod 2.
    pub fn parity(&self) -> Vec<u8> {
        self.0.iter().map(|e| (e % 2) as u8).collect()
    }

    pub fn mul(&self, other: &Monomial) -> Monomial {
        debug_assert_eq!(self.0.len(), other.0.len());
        Monomial(self.0.iter().zip(&other.0).map(|(a, b)| a + b).collect())
    }

    /// `x^(2e)` for this monomial `x^e`.
    pub fn squared(&self) -> Monomial {
        Monomial(self.0.iter().map(|e| 2 * e).collect())
    }

    /// Monomial with the given number of variables; extra variables get
    /// exponent zero.
    pub fn embed(&self, n: usize) -> Monomial {
        let mut e = self.0.clone();
        e.resize(n, 0);
        Monomial(e)
    }

    /// All monomials in `n` variables of total degree exactly `d`, ascending.
    pub fn all_of_degree(n: usize, d: u32) -> Vec<Monomial> {
        let mut out = Vec::new();
        let mut cur = vec![0u32; n];
        fn rec(i: usize, left: u32, cur: &mut Vec<u32>, out: &mut Vec<Monomial>) {
            let n = cur.len();
            if i + 1 == n {
                cur[i] = left;
                out.push(Monomial(cur.clone()));
                return;
            }
            for e in 0..=left {
                cur[i] = e;
                rec(i + 1, left - e, cur, out);
            }
            cur[i] = 0;
        }
        if n == 0 {
            if d == 0 {
                out.push(Monomial(Vec::new()));
            }
            return out;
        }
        rec(0, d, &mut cur, &mut out);
        out.sort();
        out
    }

    /// All monomials of degree at most `d`, ascending.
    pub fn all_up_to_degree(n: usize, d: u32) -> Vec<Monomial> {
        (0..=d).flat_map(|k| Monomial::all_of_degree(n, k)).collect()
    }
}

impl Ord for Monomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.degree()
            .cmp(&other.degree())
            .then_with(|| self.0.cmp(&other.0))
    }
}

impl PartialOrd for Monomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

impl fmt::Debug for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

impl fmt::Display for Monomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let mut first = true;
        for (i, &e) in self.0.iter().enumerate() {
            if e == 0 {
                continue;
            }
            if !first {
                f.write_str("*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "x{}", i + 1)?;
            } else {
                write!(f, "x{}^{}", i + 1, e)?;
            }
        }
        if first {
            f.write_str("1")?;
        }
        Ok(())
    }
}

#[derive(Clone, PartialEq)]
pub struct Polynomial<T> {
    nvars: usize,
    terms: BTreeMap<Monomial, T>,
}

impl<T: Scalar> Polynomial<T> {
    pub fn zero(nvars: usize) -> Self {
        Polynomial {
            nvars,
            terms: BTreeMap::new(),
        }
    }

    pub fn constant(nvars: usize, c: T) -> Self {
        Self::term(Monomial::one(nvars), c)
    }

    pub fn one(nvars: usize) -> Self {
        Self::constant(nvars, T::one())
    }

    /// The variable `x_{i+1}` (zero-based index `i`).
    pub fn var(nvars: usize, i: usize) -> Self {
        Self::term(Monomial::var(nvars, i), T::one())
    }

    pub fn term(monomial: Monomial, c: T) -> Self {
        let nvars = monomial.nvars();
        let mut terms = BTreeMap::new();
        if !c.is_zero() {
            terms.insert(monomial, c);
        }
        Polynomial { nvars, terms }
    }

    /// Builds a polynomial from possibly repeated terms, merging and
    /// dropping zeros.
    pub fn from_terms(nvars: usize, terms: impl IntoIterator<Item = (Monomial, T)>) -> Result<Self> {
        let mut p = Self::zero(nvars);
        for (m, c) in terms {
            if m.nvars() != nvars {
                return Err(Error::VariableCount {
                    left: nvars,
                    right: m.nvars(),
                });
            }
            p.add_term(m, c);
        }
        Ok(p)
    }

    pub fn nvars(&self) -> usize {
        self.nvars
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn len(&self) -> usize {
        self.terms.len()
    }

    pub fn is_empty(&self) -> bool {
        self.terms.is_empty()
    }

    /// Total degree; `-1` for the zero polynomial.
    pub fn degree(&self) -> i64 {
        self.terms
            .keys()
            .map(|m| m.degree() as i64)
            .max()
            .unwrap_or(-1)
    }

    /// Terms in ascending graded-lex order.
    pub fn terms(&self) -> impl DoubleEndedIterator<Item = (&Monomial, &T)> {
        self.terms.iter()
    }

    pub fn coefficient(&self, m: &Monomial) -> T {
        self.terms.get(m).cloned().unwrap_or_else(T::zero)
    }

    pub fn add_term(&mut self, m: Monomial, c: T) {
        if c.is_zero() {
            return;
        }
        debug_assert_eq!(m.nvars(), self.nvars);
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(v) => {
                v.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut o) => {
                let sum = o.get().clone() + c;
                if sum.is_zero() {
                    o.remove();
                } else {
                    *o.get_mut() = sum;
                }
            }
        }
    }

    fn check_nvars(&self, other: &Self) -> Result<()> {
        if self.nvars != other.nvars {
            return Err(Error::VariableCount {
                left: self.nvars,
                right: other.nvars,
            });
        }
        Ok(())
    }

    pub fn try_add(&self, other: &Self) -> Result<Self> {
        self.check_nvars(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), c.clone());
        }
        Ok(out)
    }

    pub fn try_sub(&self, other: &Self) -> Result<Self> {
        self.check_nvars(other)?;
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.add_term(m.clone(), -c.clone());
        }
        Ok(out)
    }

    pub fn try_mul(&self, other: &Self) -> Result<Self> {
        self.check_nvars(other)?;
        let mut out = Self::zero(self.nvars);
        for (ma, ca) in &self.terms {
            for (mb, cb) in &other.terms {
                out.add_term(ma.mul(mb), ca.clone() * cb.clone());
            }
        }
        Ok(out)
    }

    pub fn scale(&self, c: &T) -> Self {
        if c.is_zero() {
            return Self::zero(self.nvars);
        }
        Polynomial {
            nvars: self.nvars,
            terms: self
                .terms
                .iter()
                .map(|(m, v)| (m.clone(), v.clone() * c.clone()))
                .collect(),
        }
    }

    pub fn square(&self) -> Self {
        self * self
    }

    pub fn pow(&self, k: u32) -> Self {
        let mut result = Self::one(self.nvars);
        let mut base = self.clone();
        let mut k = k;
        while k > 0 {
            if k & 1 == 1 {
                result = &result * &base;
            }
            k >>= 1;
            if k > 0 {
                base = base.square();
            }
        }
        result
    }

    pub fn eval(&self, point: &[T]) -> Result<T> {
        if point.len() != self.nvars {
            return Err(Error::Dimension {
                expected: self.nvars,
                found: point.len(),
            });
        }
        let mut total = T::zero();
        for (m, c) in &self.terms {
            let mut v = c.clone();
            for (x, &e) in point.iter().zip(m.exponents()) {
                for _ in 0..e {
                    v = v * x.clone();
                }
            }
            total = total + v;
        }
        Ok(total)
    }

    pub fn is_even(&self) -> bool {
        self.terms.keys().all(Monomial::is_even)
    }

    /// `p(sqrt(c1) x1, ..., sqrt(cn) xn)` for an even polynomial: the
    /// coefficient of `x^e` is multiplied by `prod c_i^(e_i/2)`.
    pub fn scale_variables(&self, c: &[T]) -> Result<Self> {
        if c.len() != self.nvars {
            return Err(Error::Dimension {
                expected: self.nvars,
                found: c.len(),
            });
        }
        if let Some(i) = c.iter().position(|v| *v <= T::zero()) {
            return Err(Error::NonPositive(i));
        }
        if !self.is_even() {
            return Err(Error::NotEven);
        }
        let mut out = Self::zero(self.nvars);
        for (m, coef) in &self.terms {
            let mut v = coef.clone();
            for (ci, &e) in c.iter().zip(m.exponents()) {
                for _ in 0..e / 2 {
                    v = v * ci.clone();
                }
            }
            out.add_term(m.clone(), v);
        }
        Ok(out)
    }

    /// Same polynomial viewed in `n >= nvars` variables.
    pub fn embed(&self, n: usize) -> Result<Self> {
        if n < self.nvars {
            return Err(Error::VariableCount {
                left: self.nvars,
                right: n,
            });
        }
        Ok(Polynomial {
            nvars: n,
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.embed(n), c.clone()))
                .collect(),
        })
    }

    pub fn map_coefficients<U: Scalar>(&self, f: impl Fn(&T) -> U) -> Polynomial<U> {
        let mut out = Polynomial::zero(self.nvars);
        for (m, c) in &self.terms {
            out.add_term(m.clone(), f(c));
        }
        out
    }

    pub fn to_f64(&self) -> Polynomial<f64> {
        self.map_coefficients(|c| c.to_f64())
    }

    /// Largest absolute coefficient, as a float.
    pub fn max_abs_coefficient(&self) -> f64 {
        self.terms
            .values()
            .map(|c| c.to_f64().abs())
            .fold(0.0, f64::max)
    }
}

/// `(x1^2 + ... + xn^2)^r`.
pub fn power_sum_squares<T: Scalar>(n: usize, r: u32) -> Polynomial<T> {
    let mut s = Polynomial::zero(n);
    for i in 0..n {
        let mut e = vec![0; n];
        e[i] = 2;
        s.add_term(Monomial::new(e), T::one());
    }
    s.pow(r)
}

/// `(w1 x1^2 + ... + wn xn^2)^r`.
pub fn weighted_power_sum_squares<T: Scalar>(weights: &[T], r: u32) -> Polynomial<T> {
    let n = weights.len();
    let mut s = Polynomial::zero(n);
    for (i, w) in weights.iter().enumerate() {
        let mut e = vec![0; n];
        e[i] = 2;
        s.add_term(Monomial::new(e), w.clone());
    }
    s.pow(r)
}

macro_rules! binop {
    ($tr:ident, $method:ident, $checked:ident) => {
        impl<T: Scalar> $tr<&Polynomial<T>> for &Polynomial<T> {
            type Output = Polynomial<T>;

            /// Panics if the variable counts differ.
            fn $method(self, rhs: &Polynomial<T>) -> Polynomial<T> {
                self.$checked(rhs).expect("polynomial variable counts differ")
            }
        }

        impl<T: Scalar> $tr<Polynomial<T>> for Polynomial<T> {
            type Output = Polynomial<T>;

            fn $method(self, rhs: Polynomial<T>) -> Polynomial<T> {
                (&self).$method(&rhs)
            }
        }
    };
}

binop!(Add, add, try_add);
binop!(Sub, sub, try_sub);
binop!(Mul, mul, try_mul);

impl<T: Scalar> Neg for &Polynomial<T> {
    type Output = Polynomial<T>;

    fn neg(self) -> Polynomial<T> {
        self.scale(&-T::one())
    }
}

impl<T: Scalar> Neg for Polynomial<T> {
    type Output = Polynomial<T>;

    fn neg(self) -> Polynomial<T> {
        -&self
    }
}

impl<T: Scalar> fmt::Debug for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "Polynomial[{}]({self})", self.nvars)
    }
}

/// Text form: terms in descending graded-lex order, e.g.
/// `3/2*x1^2*x2^2 - x3^4`.
impl<T: Scalar> fmt::Display for Polynomial<T> {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return f.write_str("0");
        }
        for (k, (m, c)) in self.terms.iter().rev().enumerate() {
            let negative = c.is_negative();
            match (k, negative) {
                (0, true) => f.write_str("-")?,
                (0, false) => {}
                (_, true) => f.write_str(" - ")?,
                (_, false) => f.write_str(" + ")?,
            }
            let abs = c.abs();
            if m.degree() == 0 {
                write!(f, "{abs}")?;
            } else if abs.is_one() {
                write!(f, "{m}")?;
            } else {
                write!(f, "{abs}*{m}")?;
            }
        }
        Ok(())
    }
}

/// Parses the text form produced by `Display` for exact polynomials.
///
/// Accepts terms `c*x1^a*x2^b`, optional coefficient, `+`/`-` separators,
/// arbitrary whitespace, and `0` for the zero polynomial.
pub fn parse_polynomial(text: &str, nvars: usize) -> std::result::Result<Polynomial<BigRational>, String> {
    let s: String = text.chars().filter(|c| !c.is_whitespace()).collect();
    let s = s.replace('\u{2212}', "-");
    if s.is_empty() {
        return Err("empty polynomial".into());
    }
    let bytes = s.as_bytes();
    let mut poly = Polynomial::zero(nvars);
    let mut pos = 0;
    while pos < bytes.len() {
        let mut sign = BigRational::one();
        match bytes[pos] {
            b'+' => pos += 1,
            b'-' => {
                sign = -sign;
                pos += 1;
            }
            _ if pos > 0 => return Err(format!("expected '+' or '-' at offset {pos}")),
            _ => {}
        }
        let start = pos;
        while pos < bytes.len() && bytes[pos] != b'+' && bytes[pos] != b'-' {
            pos += 1;
        }
        let term = &s[start..pos];
        if term.is_empty() {
            return Err(format!("empty term at offset {start}"));
        }
        let mut coef = sign;
        let mut exps = vec![0u32; nvars];
        for factor in term.split('*') {
            if let Some(var) = factor.strip_prefix('x') {
                let (idx, exp) = match var.split_once('^') {
                    Some((i, e)) => (i, e.parse::<u32>().map_err(|_| format!("bad exponent in '{factor}'"))?),
                    None => (var, 1),
                };
                let idx: usize = idx.parse().map_err(|_| format!("bad variable in '{factor}'"))?;
                if idx == 0 || idx > nvars {
                    return Err(format!("variable x{idx} out of range 1..={nvars}"));
                }
                exps[idx - 1] += exp;
            } else {
                let c = parse_rational(factor).ok_or_else(|| format!("bad coefficient '{factor}'"))?;
                coef *= c;
            }
        }
        poly.add_term(Monomial::new(exps), coef);
    }
    Ok(poly)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::rational::{int, ratio};

    type P = Polynomial<BigRational>;

    fn x(n: usize, i: usize) -> P {
        P::var(n, i)
    }

    fn mono(e: &[u32]) -> Monomial {
        Monomial::new(e.to_vec())
    }

    #[test]
    fn additive_inverse_is_empty() {
        let a = &x(2, 0) * &x(2, 0);
        let z = &a + &(-&a);
        assert!(z.is_zero());
        assert_eq!(z.degree(), -1);
    }

    #[test]
    fn disjoint_supports_add() {
        let p = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 1) * &x(2, 1));
        assert_eq!(p.len(), 2);
        assert_eq!(p.coefficient(&mono(&[2, 0])), int(1));
        assert_eq!(p.coefficient(&mono(&[0, 2])), int(1));
    }

    #[test]
    fn merge_of_shared_monomial() {
        let x1x2 = &x(2, 0) * &x(2, 1);
        let p = &(&x(2, 0) * &x(2, 0)) + &x1x2;
        let s = &p + &x1x2;
        // term-map merge: x1^2 keeps 1, x1x2 accumulates 1 + 1
        assert_eq!(s.coefficient(&mono(&[2, 0])), int(1));
        assert_eq!(s.coefficient(&mono(&[1, 1])), int(2));
        assert_eq!(s.len(), 2);
    }

    #[test]
    fn mismatched_variable_counts_error() {
        assert!(matches!(
            x(2, 0).try_add(&x(3, 0)),
            Err(Error::VariableCount { left: 2, right: 3 })
        ));
        assert!(x(2, 0).try_mul(&x(3, 0)).is_err());
    }

    #[test]
    fn difference_of_squares_and_zero() {
        let p = &(&x(2, 0) - &x(2, 1)) * &(&x(2, 0) + &x(2, 1));
        assert_eq!(p.to_string(), "x1^2 - x2^2");
        assert!((&p * &P::zero(2)).is_zero());
    }

    #[test]
    fn square_of_sum_of_squares_matches_convolution() {
        let s = &(&x(2, 0) * &x(2, 0)) + &(&x(2, 1) * &x(2, 1));
        let sq = &s * &s;
        // convolution over exponent vectors {(2,0),(0,2)} x {(2,0),(0,2)}
        let mut expected: BTreeMap<Vec<u32>, i64> = BTreeMap::new();
        for a in [[2u32, 0], [0, 2]] {
            for b in [[2u32, 0], [0, 2]] {
                *expected.entry(vec![a[0] + b[0], a[1] + b[1]]).or_default() += 1;
            }
        }
        assert_eq!(sq.len(), expected.len());
        for (e, c) in expected {
            assert_eq!(sq.coefficient(&Monomial::new(e)), int(c));
        }
    }

    #[test]
    fn power_sum_squares_examples() {
        assert_eq!(power_sum_squares::<BigRational>(2, 0), P::one(2));
        assert_eq!(power_sum_squares::<BigRational>(2, 1).to_string(), "x1^2 + x2^2");
        let p = power_sum_squares::<BigRational>(3, 2);
        let s = power_sum_squares::<BigRational>(3, 1);
        assert_eq!(p, &s * &s);
        assert_eq!(p.len(), 6);
        assert_eq!(p.coefficient(&mono(&[2, 2, 0])), int(2));
        assert_eq!(p.coefficient(&mono(&[4, 0, 0])), int(1));
    }

    #[test]
    fn eval_at_origin_is_constant_term() {
        let p = &(&x(2, 0) * &x(2, 1)) + &P::constant(2, ratio(7, 3));
        assert_eq!(p.eval(&[int(0), int(0)]).unwrap(), ratio(7, 3));
        assert!(p.eval(&[int(0)]).is_err());
    }

    #[test]
    fn scale_variables_examples() {
        let p = P::term(mono(&[4]), int(1));
        assert_eq!(p.scale_variables(&[int(4)]).unwrap(), P::term(mono(&[4]), int(16)));
        let q = P::term(mono(&[2, 2]), int(1));
        assert_eq!(q.scale_variables(&[int(2), int(3)]).unwrap(), P::term(mono(&[2, 2]), int(6)));
        assert!(matches!(x(1, 0).scale_variables(&[int(2)]), Err(Error::NotEven)));
        assert!(matches!(q.scale_variables(&[int(0), int(1)]), Err(Error::NonPositive(0))));
    }

    #[test]
    fn evenness() {
        assert!(P::term(mono(&[2, 2]), int(1)).is_even());
        assert!(!(&x(2, 0) * &x(2, 1)).is_even());
    }

    #[test]
    fn text_form_and_parse() {
        let p = &P::term(mono(&[2, 2, 0]), ratio(3, 2)) - &P::term(mono(&[0, 0, 4]), int(1));
        assert_eq!(p.to_string(), "3/2*x1^2*x2^2 - x3^4");
        assert_eq!(parse_polynomial("3/2*x1^2*x2^2 - x3^4", 3).unwrap(), p);
        assert_eq!(parse_polynomial(" - x3^4+ 3/2 * x2^2*x1^2", 3).unwrap(), p);
        assert_eq!(parse_polynomial("0", 3).unwrap(), P::zero(3));
        let c = &P::constant(2, int(-5)) + &x(2, 1);
        assert_eq!(c.to_string(), "x2 - 5");
        assert_eq!(parse_polynomial(&c.to_string(), 2).unwrap(), c);
        assert!(parse_polynomial("x4", 3).is_err());
        assert!(parse_polynomial("2**x1", 3).is_err());
    }

    #[test]
    fn enumerates_monomials() {
        assert_eq!(Monomial::all_of_degree(5, 3).len(), 35);
        assert_eq!(Monomial::all_up_to_degree(2, 2).len(), 6);
        let ms = Monomial::all_of_degree(3, 2);
        assert!(ms.windows(2).all(|w| w[0] < w[1]));
    }
}
