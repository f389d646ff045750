//! Exact scalar arithmetic: arbitrary-precision rationals and polynomials in
//! the deformation parameter `N`.

use num::bigint::BigInt;
use num::{One, Zero};
use std::fmt;
use std::ops::{Add, AddAssign, Mul, Neg, Sub};

/// Exact rational scalar. `num` keeps the canonical form (positive
/// denominator, reduced fraction) after every operation.
pub type Rational = num::BigRational;

/// The rational `n/d`.
pub fn rat(n: i64, d: i64) -> Rational {
    Rational::new(BigInt::from(n), BigInt::from(d))
}

/// The rational `n`.
pub fn rint(n: i64) -> Rational {
    Rational::from(BigInt::from(n))
}

/// Polynomial in `N` over the rationals, stored densely by ascending power.
///
/// Trailing zero coefficients are stripped, so the zero polynomial is the
/// empty vector and `degree()` returns `None` for it.
#[derive(Clone, PartialEq, Eq, Hash, Default)]
pub struct NPoly {
    coeffs: Vec<Rational>,
}

impl NPoly {
    pub fn zero() -> Self {
        NPoly { coeffs: Vec::new() }
    }

    pub fn one() -> Self {
        NPoly::constant(Rational::one())
    }

    pub fn constant(c: Rational) -> Self {
        NPoly::from_coeffs(vec![c])
    }

    /// The monomial `c * N^pow`.
    pub fn monomial(c: Rational, pow: usize) -> Self {
        if c.is_zero() {
            return NPoly::zero();
        }
        let mut coeffs = vec![Rational::zero(); pow + 1];
        coeffs[pow] = c;
        NPoly { coeffs }
    }

    /// The variable `N` itself.
    pub fn n() -> Self {
        NPoly::monomial(Rational::one(), 1)
    }

    pub fn from_coeffs(coeffs: Vec<Rational>) -> Self {
        let mut p = NPoly { coeffs };
        p.strip();
        p
    }

    fn strip(&mut self) {
        while self.coeffs.last().map_or(false, |c| c.is_zero()) {
            self.coeffs.pop();
        }
    }

    pub fn is_zero(&self) -> bool {
        self.coeffs.is_empty()
    }

    /// Degree in `N`; `None` for the zero polynomial.
    pub fn degree(&self) -> Option<usize> {
        self.coeffs.len().checked_sub(1)
    }

    /// Coefficient of `N^k` (zero when `k` exceeds the degree).
    pub fn coeff(&self, k: usize) -> Rational {
        self.coeffs.get(k).cloned().unwrap_or_else(Rational::zero)
    }

    pub fn coeffs(&self) -> &[Rational] {
        &self.coeffs
    }

    /// `Some(c)` when the polynomial is the constant `c` (including zero).
    pub fn as_constant(&self) -> Option<Rational> {
        match self.coeffs.len() {
            0 => Some(Rational::zero()),
            1 => Some(self.coeffs[0].clone()),
            _ => None,
        }
    }

    pub fn eval(&self, n: &Rational) -> Rational {
        let mut acc = Rational::zero();
        for c in self.coeffs.iter().rev() {
            acc = acc * n + c;
        }
        acc
    }

    pub fn scale(&self, c: &Rational) -> Self {
        if c.is_zero() {
            return NPoly::zero();
        }
        NPoly {
            coeffs: self.coeffs.iter().map(|a| a * c).collect(),
        }
    }

    /// Exact division; `None` when `self` is not a polynomial multiple of
    /// `div` (or `div` is zero).
    pub fn div_exact(&self, div: &NPoly) -> Option<NPoly> {
        if div.is_zero() {
            return None;
        }
        if self.is_zero() {
            return Some(NPoly::zero());
        }
        let dd = div.degree().unwrap();
        let lead = &div.coeffs[dd];
        let mut rem = self.coeffs.clone();
        if rem.len() < div.coeffs.len() {
            return None;
        }
        let qd = rem.len() - div.coeffs.len();
        let mut quot = vec![Rational::zero(); qd + 1];
        for i in (0..=qd).rev() {
            let c = &rem[i + dd] / lead;
            if !c.is_zero() {
                for (j, dc) in div.coeffs.iter().enumerate() {
                    let t = dc * &c;
                    rem[i + j] -= t;
                }
            }
            quot[i] = c;
        }
        if rem.iter().all(|c| c.is_zero()) {
            Some(NPoly::from_coeffs(quot))
        } else {
            None
        }
    }

    /// Canonical text form: rational strings ascending in `N`-power.
    pub fn to_strings(&self) -> Vec<String> {
        self.coeffs.iter().map(|c| c.to_string()).collect()
    }

    pub fn from_strings(strs: &[String]) -> Result<Self, String> {
        let mut coeffs = Vec::with_capacity(strs.len());
        for s in strs {
            coeffs.push(s.parse::<Rational>().map_err(|e| format!("bad rational {s:?}: {e}"))?);
        }
        Ok(NPoly::from_coeffs(coeffs))
    }
}

impl From<Rational> for NPoly {
    fn from(c: Rational) -> Self {
        NPoly::constant(c)
    }
}

impl Add for &NPoly {
    type Output = NPoly;
    fn add(self, rhs: &NPoly) -> NPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(self.coeff(i) + rhs.coeff(i));
        }
        NPoly::from_coeffs(coeffs)
    }
}

impl AddAssign<&NPoly> for NPoly {
    fn add_assign(&mut self, rhs: &NPoly) {
        if self.coeffs.len() < rhs.coeffs.len() {
            self.coeffs.resize(rhs.coeffs.len(), Rational::zero());
        }
        for (i, c) in rhs.coeffs.iter().enumerate() {
            self.coeffs[i] += c;
        }
        self.strip();
    }
}

impl Sub for &NPoly {
    type Output = NPoly;
    fn sub(self, rhs: &NPoly) -> NPoly {
        let n = self.coeffs.len().max(rhs.coeffs.len());
        let mut coeffs = Vec::with_capacity(n);
        for i in 0..n {
            coeffs.push(self.coeff(i) - rhs.coeff(i));
        }
        NPoly::from_coeffs(coeffs)
    }
}

impl Mul for &NPoly {
    type Output = NPoly;
    fn mul(self, rhs: &NPoly) -> NPoly {
        if self.is_zero() || rhs.is_zero() {
            return NPoly::zero();
        }
        let mut coeffs = vec![Rational::zero(); self.coeffs.len() + rhs.coeffs.len() - 1];
        for (i, a) in self.coeffs.iter().enumerate() {
            if a.is_zero() {
                continue;
            }
            for (j, b) in rhs.coeffs.iter().enumerate() {
                coeffs[i + j] += a * b;
            }
        }
        NPoly::from_coeffs(coeffs)
    }
}

impl Neg for &NPoly {
    type Output = NPoly;
    fn neg(self) -> NPoly {
        NPoly {
            coeffs: self.coeffs.iter().map(|c| -c).collect(),
        }
    }
}

impl fmt::Display for NPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (k, c) in self.coeffs.iter().enumerate() {
            if c.is_zero() {
                continue;
            }
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            match k {
                0 => write!(f, "{c}")?,
                1 if c.is_one() => write!(f, "N")?,
                1 => write!(f, "{c}*N")?,
                _ if c.is_one() => write!(f, "N^{k}")?,
                _ => write!(f, "{c}*N^{k}")?,
            }
        }
        Ok(())
    }
}

impl fmt::Debug for NPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn canonical_form_strips_trailing_zeros() {
        let p = NPoly::from_coeffs(vec![rat(1, 2), rint(0), rint(0)]);
        assert_eq!(p.degree(), Some(0));
        assert_eq!(NPoly::from_coeffs(vec![rint(0)]), NPoly::zero());
        assert_eq!(NPoly::zero().degree(), None);
    }

    #[test]
    fn arithmetic_and_eval() {
        // 1/8 + 3/2 N^2 at N = 0 and N = 2.
        let p = &NPoly::constant(rat(1, 8)) + &NPoly::monomial(rat(3, 2), 2);
        assert_eq!(p.eval(&rint(0)), rat(1, 8));
        assert_eq!(p.eval(&rint(2)), rat(49, 8));
        let q = &p - &p;
        assert!(q.is_zero());
        let r = &p * &NPoly::n();
        assert_eq!(r.coeff(1), rat(1, 8));
        assert_eq!(r.coeff(3), rat(3, 2));
    }

    #[test]
    fn exact_division() {
        let p = &(&NPoly::n() + &NPoly::one()) * &(&NPoly::n() - &NPoly::one());
        let q = p.div_exact(&(&NPoly::n() + &NPoly::one())).unwrap();
        assert_eq!(q, &NPoly::n() - &NPoly::one());
        // N^2 - 1 is not divisible by N.
        assert!(p.div_exact(&NPoly::n()).is_none());
    }

    #[test]
    fn string_round_trip() {
        let p = &NPoly::constant(rat(-7, 3)) + &NPoly::monomial(rint(2), 1);
        let s = p.to_strings();
        assert_eq!(s, vec!["-7/3".to_string(), "2".to_string()]);
        assert_eq!(NPoly::from_strings(&s).unwrap(), p);
    }
}
