//! Exact arithmetic helpers: rational linear solves and square roots of
//! rationals kept in closed form.

use std::collections::BTreeMap;
use std::fmt;

use num::bigint::BigUint;
use num::{BigInt, BigRational, Integer, One, Signed, Zero};

/// Solves `a x = b` by Gaussian elimination with exact rationals.
/// Returns `None` when `a` is singular.
pub fn solve_rational(mut a: Vec<Vec<BigRational>>, mut b: Vec<BigRational>) -> Option<Vec<BigRational>> {
    let n = b.len();
    for col in 0..n {
        let pivot = (col..n).find(|&r| !a[r][col].is_zero())?;
        a.swap(col, pivot);
        b.swap(col, pivot);
        let inv = a[col][col].recip();
        for r in col + 1..n {
            if a[r][col].is_zero() {
                continue;
            }
            let factor = &a[r][col] * &inv;
            for c in col..n {
                let delta = &factor * &a[col][c];
                a[r][c] -= delta;
            }
            let delta = &factor * &b[col];
            b[r] -= delta;
        }
    }
    let mut x = vec![BigRational::zero(); n];
    for r in (0..n).rev() {
        let mut acc = b[r].clone();
        for c in r + 1..n {
            acc -= &a[r][c] * &x[c];
        }
        x[r] = acc / &a[r][r];
    }
    Some(x)
}

/// `coeff * sqrt(radicand)` with an integer radicand free of factors of 4.
#[derive(Clone, Debug, PartialEq, Eq)]
pub struct Surd {
    pub coeff: BigRational,
    pub radicand: BigUint,
}

impl Surd {
    pub fn rational(q: BigRational) -> Self {
        Surd {
            coeff: q,
            radicand: BigUint::one(),
        }
    }

    pub fn zero() -> Self {
        Surd::rational(BigRational::zero())
    }

    /// `sqrt(q)` for `q >= 0`.
    pub fn sqrt(q: &BigRational) -> Option<Self> {
        if q.is_negative() {
            return None;
        }
        if q.is_zero() {
            return Some(Surd::zero());
        }
        let num = q.numer().magnitude().clone();
        let den = q.denom().magnitude().clone();
        // sqrt(p/q) = sqrt(p q) / q
        let (outer, radicand) = extract_square(num * &den);
        Some(Surd {
            coeff: BigRational::new(BigInt::from(outer), BigInt::from(den)),
            radicand,
        })
    }

    pub fn scale(&self, q: &BigRational) -> Self {
        Surd {
            coeff: &self.coeff * q,
            radicand: self.radicand.clone(),
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn square(&self) -> BigRational {
        &self.coeff * &self.coeff * BigRational::from_integer(BigInt::from(self.radicand.clone()))
    }

    pub fn to_f64(&self) -> f64 {
        use num::ToPrimitive;
        self.coeff.to_f64().unwrap_or(f64::NAN) * self.radicand.to_f64().unwrap_or(f64::NAN).sqrt()
    }

    pub fn mul(&self, other: &Surd) -> Surd {
        let (outer, radicand) = extract_square(&self.radicand * &other.radicand);
        Surd {
            coeff: &self.coeff * &other.coeff * BigRational::from_integer(BigInt::from(outer)),
            radicand,
        }
    }
}

impl fmt::Display for Surd {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radicand.is_one() {
            write!(f, "{}", self.coeff)
        } else {
            write!(f, "{}*sqrt({})", self.coeff, self.radicand)
        }
    }
}

/// Splits `v = outer^2 * rest`, removing square factors of primes below
/// 1000 and finishing with a perfect-square test on the remainder.
fn extract_square(mut v: BigUint) -> (BigUint, BigUint) {
    if v.is_zero() {
        return (BigUint::zero(), BigUint::one());
    }
    let mut outer = BigUint::one();
    for p in 2u32..1000 {
        if !(2..p).take_while(|d| d * d <= p).all(|d| p % d != 0) {
            continue;
        }
        let sq = BigUint::from(p * p);
        while v.is_multiple_of(&sq) {
            v /= &sq;
            outer *= p;
        }
    }
    let root = v.sqrt();
    if &root * &root == v {
        return (outer * root, BigUint::one());
    }
    (outer, v)
}

/// A finite sum of surds, grouped by radicand.
#[derive(Clone, Debug, Default, PartialEq, Eq)]
pub struct SurdSum {
    terms: BTreeMap<BigUint, BigRational>,
}

impl SurdSum {
    pub fn new() -> Self {
        Self::default()
    }

    pub fn add(&mut self, s: &Surd) {
        if s.is_zero() {
            return;
        }
        let entry = self
            .terms
            .entry(s.radicand.clone())
            .or_insert_with(BigRational::zero);
        *entry += &s.coeff;
        if entry.is_zero() {
            self.terms.remove(&s.radicand);
        }
    }

    /// The value when it is rational.
    pub fn as_rational(&self) -> Option<BigRational> {
        match self.terms.len() {
            0 => Some(BigRational::zero()),
            1 => self.terms.get(&BigUint::one()).cloned(),
            _ => None,
        }
    }

    pub fn to_f64(&self) -> f64 {
        self.terms
            .iter()
            .map(|(r, c)| {
                Surd {
                    coeff: c.clone(),
                    radicand: r.clone(),
                }
                .to_f64()
            })
            .sum()
    }
}

impl fmt::Display for SurdSum {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.terms.is_empty() {
            return write!(f, "0");
        }
        for (i, (r, c)) in self.terms.iter().enumerate() {
            if i > 0 {
                write!(f, " + ")?;
            }
            write!(
                f,
                "{}",
                Surd {
                    coeff: c.clone(),
                    radicand: r.clone()
                }
            )?;
        }
        Ok(())
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::scalar::rational;

    #[test]
    fn rational_solve() {
        let a = vec![
            vec![rational(2, 1), rational(1, 1)],
            vec![rational(1, 1), rational(3, 1)],
        ];
        let x = solve_rational(a, vec![rational(1, 1), rational(2, 1)]).unwrap();
        assert_eq!(x, vec![rational(1, 5), rational(3, 5)]);
        let singular = vec![vec![rational(1, 1), rational(1, 1)]; 2];
        assert!(solve_rational(singular, vec![rational(1, 1); 2]).is_none());
    }

    #[test]
    fn surds() {
        let s = Surd::sqrt(&rational(9, 4)).unwrap();
        assert_eq!(s, Surd::rational(rational(3, 2)));
        let two = Surd::sqrt(&rational(2, 1)).unwrap();
        assert_eq!(two.mul(&two), Surd::rational(rational(2, 1)));
        let half = Surd::sqrt(&rational(1, 2)).unwrap();
        assert!((half.to_f64() - 0.5f64.sqrt()).abs() < 1e-15);
        // sqrt(w) * (p / sqrt(w)) = p
        let w = rational(3, 8);
        let sw = Surd::sqrt(&w).unwrap();
        let u = sw.scale(&(rational(1, 3) / &w));
        assert_eq!(sw.mul(&u), Surd::rational(rational(1, 3)));
        let mut sum = SurdSum::new();
        sum.add(&two);
        assert!(sum.as_rational().is_none());
        sum.add(&two.scale(&rational(-1, 1)));
        assert_eq!(sum.as_rational(), Some(rational(0, 1)));
        assert_eq!(two.square(), rational(2, 1));
        let eighteen = Surd::sqrt(&rational(18, 1)).unwrap();
        assert_eq!(eighteen, two.scale(&rational(3, 1)));
    }
}
