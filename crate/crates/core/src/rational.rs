//! Rational parsing, rounding, and exact dense linear algebra.

use num_bigint::BigInt;
use num_integer::Integer;
use num_rational::BigRational;
use num_traits::{One, Signed, ToPrimitive, Zero};

pub fn int(v: i64) -> BigRational {
    BigRational::from_integer(BigInt::from(v))
}

pub fn ratio(n: i64, d: i64) -> BigRational {
    BigRational::new(BigInt::from(n), BigInt::from(d))
}

/// Parses `"-3"`, `"3/2"`, `"0.25"`, or `"1e-3"` into an exact rational.
/// Decimal inputs are read exactly, not through a float.
pub fn parse_rational(s: &str) -> Option<BigRational> {
    let s = s.trim().replace('\u{2212}', "-");
    if s.is_empty() {
        return None;
    }
    if let Some((n, d)) = s.split_once('/') {
        let n: BigInt = n.trim().parse().ok()?;
        let d: BigInt = d.trim().parse().ok()?;
        if d.is_zero() {
            return None;
        }
        return Some(BigRational::new(n, d));
    }
    if let Ok(n) = s.parse::<BigInt>() {
        return Some(BigRational::from_integer(n));
    }
    parse_decimal(&s)
}

fn parse_decimal(s: &str) -> Option<BigRational> {
    let (mantissa, exponent) = match s.find(['e', 'E']) {
        Some(pos) => (&s[..pos], s[pos + 1..].parse::<i32>().ok()?),
        None => (s, 0),
    };
    let (negative, digits) = match mantissa.strip_prefix('-') {
        Some(rest) => (true, rest),
        None => (false, mantissa.strip_prefix('+').unwrap_or(mantissa)),
    };
    let (whole, frac) = digits.split_once('.').unwrap_or((digits, ""));
    if whole.is_empty() && frac.is_empty() {
        return None;
    }
    if !whole.chars().chain(frac.chars()).all(|c| c.is_ascii_digit()) {
        return None;
    }
    let joined = format!("{whole}{frac}");
    let mut value = BigRational::from_integer(joined.parse::<BigInt>().ok()?);
    let shift = exponent - frac.len() as i32;
    let ten = BigRational::from_integer(BigInt::from(10));
    if shift >= 0 {
        value *= num_traits::pow(ten, shift as usize);
    } else {
        value /= num_traits::pow(ten, (-shift) as usize);
    }
    Some(if negative { -value } else { value })
}

/// Exact rational value of a finite float.
pub fn from_f64_exact(x: f64) -> Option<BigRational> {
    BigRational::from_float(x)
}

/// Best rational approximation of `x` with denominator at most `max_den`,
/// by continued-fraction convergents and the final semiconvergent.
pub fn best_approximation(x: f64, max_den: u64) -> BigRational {
    assert!(max_den >= 1);
    if !x.is_finite() {
        return BigRational::zero();
    }
    let target = match from_f64_exact(x) {
        Some(t) => t,
        None => return BigRational::zero(),
    };
    let max_den = BigInt::from(max_den);
    // Convergents p/q of the exact binary value of x.
    let (mut p0, mut q0) = (BigInt::zero(), BigInt::one());
    let (mut p1, mut q1) = (BigInt::one(), BigInt::zero());
    let mut rest = target.clone();
    loop {
        let a = rest.floor().to_integer();
        let p2 = &a * &p1 + &p0;
        let q2 = &a * &q1 + &q0;
        if q2 > max_den {
            // Largest semiconvergent within the bound.
            let k = (&max_den - &q0) / &q1;
            let ps = &k * &p1 + &p0;
            let qs = &k * &q1 + &q0;
            let conv = BigRational::new(p1.clone(), q1.clone());
            let semi = BigRational::new(ps, qs);
            let dc = (&conv - &target).abs();
            let ds = (&semi - &target).abs();
            return if ds < dc { semi } else { conv };
        }
        p0 = std::mem::replace(&mut p1, p2);
        q0 = std::mem::replace(&mut q1, q2);
        let frac = &rest - BigRational::from_integer(a);
        if frac.is_zero() {
            return BigRational::new(p1, q1);
        }
        rest = frac.recip();
    }
}

pub fn to_f64(r: &BigRational) -> f64 {
    r.to_f64().unwrap_or(f64::NAN)
}

/// Reduced row echelon form in place; returns the pivot columns.
pub fn rref(rows: &mut [Vec<BigRational>], ncols: usize) -> Vec<usize> {
    let mut pivots = Vec::new();
    let mut r = 0;
    for c in 0..ncols {
        if r == rows.len() {
            break;
        }
        let Some(p) = (r..rows.len()).find(|&i| !rows[i][c].is_zero()) else {
            continue;
        };
        rows.swap(r, p);
        let inv = rows[r][c].recip();
        for v in rows[r].iter_mut() {
            if !v.is_zero() {
                *v *= &inv;
            }
        }
        let pivot_row = rows[r].clone();
        for (i, row) in rows.iter_mut().enumerate() {
            if i == r || row[c].is_zero() {
                continue;
            }
            let f = row[c].clone();
            for (v, pv) in row.iter_mut().zip(&pivot_row) {
                if !pv.is_zero() {
                    *v -= &f * pv;
                }
            }
        }
        pivots.push(c);
        r += 1;
    }
    pivots
}

/// Solves `a x = b` exactly. Returns a particular solution (free variables
/// set to zero), or `None` when the system is inconsistent.
pub fn solve_consistent(a: &[Vec<BigRational>], b: &[BigRational]) -> Option<Vec<BigRational>> {
    let ncols = a.first().map_or(0, Vec::len);
    let mut rows: Vec<Vec<BigRational>> = a
        .iter()
        .zip(b)
        .map(|(row, rhs)| {
            let mut r = row.clone();
            r.push(rhs.clone());
            r
        })
        .collect();
    let pivots = rref(&mut rows, ncols);
    for row in rows.iter().skip(pivots.len()) {
        if !row[ncols].is_zero() {
            return None;
        }
    }
    let mut x = vec![BigRational::zero(); ncols];
    for (row, &c) in rows.iter().zip(&pivots) {
        x[c] = row[ncols].clone();
    }
    Some(x)
}

/// Exact basis of the right null space of `a` (rows of length `ncols`).
pub fn nullspace(a: &[Vec<BigRational>], ncols: usize) -> Vec<Vec<BigRational>> {
    let mut rows = a.to_vec();
    let pivots = rref(&mut rows, ncols);
    let free: Vec<usize> = (0..ncols).filter(|c| !pivots.contains(c)).collect();
    free.iter()
        .map(|&f| {
            let mut v = vec![BigRational::zero(); ncols];
            v[f] = BigRational::one();
            for (row, &p) in rows.iter().zip(&pivots) {
                v[p] = -row[f].clone();
            }
            v
        })
        .collect()
}

pub fn lcm_of_denominators<'a>(values: impl IntoIterator<Item = &'a BigRational>) -> BigInt {
    values
        .into_iter()
        .fold(BigInt::one(), |acc, v| acc.lcm(v.denom()))
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn parses_fraction_integer_and_decimal() {
        assert_eq!(parse_rational("3/2"), Some(ratio(3, 2)));
        assert_eq!(parse_rational("-1"), Some(int(-1)));
        assert_eq!(parse_rational("\u{2212}1"), Some(int(-1)));
        assert_eq!(parse_rational("0.25"), Some(ratio(1, 4)));
        assert_eq!(parse_rational("-1.5e2"), Some(int(-150)));
        assert_eq!(parse_rational("1/0"), None);
        assert_eq!(parse_rational("x"), None);
    }

    #[test]
    fn best_approximation_respects_bound() {
        assert_eq!(best_approximation(0.5, 10), ratio(1, 2));
        assert_eq!(best_approximation(std::f64::consts::PI, 7), ratio(22, 7));
        assert_eq!(best_approximation(std::f64::consts::PI, 113), ratio(355, 113));
        assert_eq!(best_approximation(-0.333333333, 100), ratio(-1, 3));
        assert_eq!(best_approximation(2.0, 1), int(2));
    }

    #[test]
    fn solves_consistent_singular_system() {
        let a = vec![vec![int(1), int(1)], vec![int(2), int(2)]];
        let x = solve_consistent(&a, &[int(3), int(6)]).unwrap();
        assert_eq!(&x[0] + &x[1], int(3));
        assert!(solve_consistent(&a, &[int(3), int(5)]).is_none());
    }

    #[test]
    fn nullspace_is_annihilated() {
        let a = vec![vec![int(1), int(2), int(3)]];
        let ns = nullspace(&a, 3);
        assert_eq!(ns.len(), 2);
        for v in ns {
            let dot: BigRational = a[0].iter().zip(&v).map(|(x, y)| x * y).sum();
            assert!(dot.is_zero());
        }
    }
}
