//! Scalars of the form `q * sqrt(r)` with `q` in `Q[N]` and `r` a squarefree
//! positive integer. The current normalizations (`1/sqrt(2)`, `sqrt(3/2)`,
//! `1/sqrt(6)`, ...) live here while operators are assembled; every finished
//! operator term must come out rational, i.e. with radicand 1.

use crate::npoly::{rat, NPoly, Rational};
use std::fmt;

#[derive(Clone, PartialEq, Eq)]
pub struct SqrtScalar {
    coeff: NPoly,
    radicand: u64, // squarefree, >= 1; forced to 1 when coeff is zero
}

impl Default for SqrtScalar {
    fn default() -> Self {
        SqrtScalar::zero()
    }
}

impl SqrtScalar {
    pub fn new(coeff: NPoly, radicand: u64) -> Self {
        assert!(radicand >= 1, "radicand must be positive");
        if coeff.is_zero() {
            return SqrtScalar { coeff, radicand: 1 };
        }
        let (square, free) = split_square(radicand);
        let coeff = if square == 1 {
            coeff
        } else {
            coeff.scale(&Rational::from_integer(square.into()))
        };
        SqrtScalar { coeff, radicand: free }
    }

    pub fn zero() -> Self {
        SqrtScalar { coeff: NPoly::zero(), radicand: 1 }
    }

    pub fn rational(coeff: NPoly) -> Self {
        SqrtScalar { coeff, radicand: 1 }
    }

    pub fn from_rat(n: i64, d: i64) -> Self {
        SqrtScalar::rational(NPoly::constant(rat(n, d)))
    }

    /// `scale * sqrt(num/den)`, normalized: `sqrt(num/den) = sqrt(num*den)/den`.
    pub fn sqrt_frac(num: u64, den: u64, scale: Rational) -> Self {
        assert!(num >= 1 && den >= 1);
        let coeff = NPoly::constant(scale * Rational::new(1.into(), den.into()));
        SqrtScalar::new(coeff, num * den)
    }

    pub fn is_zero(&self) -> bool {
        self.coeff.is_zero()
    }

    pub fn coeff(&self) -> &NPoly {
        &self.coeff
    }

    pub fn radicand(&self) -> u64 {
        self.radicand
    }

    /// The square of the scalar, always rational.
    pub fn squared(&self) -> NPoly {
        (&self.coeff * &self.coeff).scale(&Rational::from_integer(self.radicand.into()))
    }

    pub fn mul(&self, other: &SqrtScalar) -> SqrtScalar {
        if self.is_zero() || other.is_zero() {
            return SqrtScalar::zero();
        }
        SqrtScalar::new(&self.coeff * &other.coeff, self.radicand * other.radicand)
    }

    pub fn scale_npoly(&self, c: &NPoly) -> SqrtScalar {
        SqrtScalar::new(&self.coeff * c, self.radicand)
    }

    pub fn neg(&self) -> SqrtScalar {
        SqrtScalar { coeff: -&self.coeff, radicand: self.radicand }
    }

    /// Addition is only defined for matching radicands (or a zero side).
    pub fn checked_add(&self, other: &SqrtScalar) -> Option<SqrtScalar> {
        if self.is_zero() {
            return Some(other.clone());
        }
        if other.is_zero() {
            return Some(self.clone());
        }
        if self.radicand != other.radicand {
            return None;
        }
        Some(SqrtScalar::new(&self.coeff + &other.coeff, self.radicand))
    }

    /// `Some(coeff)` when the value is rational.
    pub fn to_npoly(&self) -> Option<NPoly> {
        (self.radicand == 1).then(|| self.coeff.clone())
    }
}

/// Split `r` as `square^2 * free` with `free` squarefree.
fn split_square(r: u64) -> (u64, u64) {
    let mut free = r;
    let mut square = 1u64;
    let mut d = 2u64;
    while d * d <= free {
        while free % (d * d) == 0 {
            free /= d * d;
            square *= d;
        }
        d += 1;
    }
    (square, free)
}

impl fmt::Display for SqrtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.radicand == 1 {
            write!(f, "{}", self.coeff)
        } else {
            write!(f, "({})*sqrt({})", self.coeff, self.radicand)
        }
    }
}

impl fmt::Debug for SqrtScalar {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::npoly::rint;
    use num::One;

    #[test]
    fn normalization_extracts_squares() {
        // sqrt(8/3) = 2*sqrt(6)/3
        let s = SqrtScalar::sqrt_frac(8, 3, Rational::one());
        assert_eq!(s.radicand(), 6);
        assert_eq!(s.coeff(), &NPoly::constant(rat(2, 3)));
    }

    #[test]
    fn current_normalizations() {
        // 1/sqrt(2) = sqrt(2)/2, sqrt(3/2) = sqrt(6)/2, sqrt(2/3) = sqrt(6)/3
        let inv_sqrt2 = SqrtScalar::sqrt_frac(1, 2, Rational::one());
        assert_eq!((inv_sqrt2.radicand(), inv_sqrt2.coeff().clone()), (2, NPoly::constant(rat(1, 2))));
        let s32 = SqrtScalar::sqrt_frac(3, 2, Rational::one());
        assert_eq!((s32.radicand(), s32.coeff().clone()), (6, NPoly::constant(rat(1, 2))));
        let s23 = SqrtScalar::sqrt_frac(2, 3, Rational::one());
        assert_eq!((s23.radicand(), s23.coeff().clone()), (6, NPoly::constant(rat(1, 3))));
        // sqrt(3/2) * sqrt(2/3) = 1
        assert_eq!(s32.mul(&s23).to_npoly(), Some(NPoly::one()));
        // squares are rational
        assert_eq!(s32.squared(), NPoly::constant(rat(3, 2)));
    }

    #[test]
    fn irrational_values_report_no_npoly() {
        let s = SqrtScalar::new(NPoly::one(), 2);
        assert!(s.to_npoly().is_none());
        assert!(s.checked_add(&SqrtScalar::new(NPoly::one(), 3)).is_none());
        let sum = s.checked_add(&SqrtScalar::new(NPoly::constant(rint(-1)), 2)).unwrap();
        assert!(sum.is_zero());
    }
}
