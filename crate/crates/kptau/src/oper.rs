//! Normal-ordered operator expressions: finite sums of terms, each a scalar
//! in `Q[N]` times multiplications by time variables times partial
//! derivatives, with all derivatives acting before all multiplications.

use crate::npoly::{NPoly, Rational};
use crate::tpoly::{TMonomial, TPoly};
use rayon::prelude::*;
use std::collections::BTreeMap;
use std::fmt;

/// A normal-ordered term shape: sorted multiplication variables and sorted
/// derivative variables, multiplicity by repetition.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Hash, Debug)]
pub struct TermKey {
    pub mults: Vec<u32>,
    pub derivs: Vec<u32>,
}

impl TermKey {
    pub fn new(mut mults: Vec<u32>, mut derivs: Vec<u32>) -> Self {
        mults.sort_unstable();
        derivs.sort_unstable();
        TermKey { mults, derivs }
    }

    pub fn mult_weight(&self) -> i64 {
        self.mults.iter().map(|&v| v as i64).sum()
    }

    pub fn deriv_weight(&self) -> i64 {
        self.derivs.iter().map(|&v| v as i64).sum()
    }

    /// Weight shift of the term: multiplications minus derivatives.
    pub fn shift(&self) -> i64 {
        self.mult_weight() - self.deriv_weight()
    }

    /// Apply to a monomial: derivatives first, then multiplications. Returns
    /// the image monomial and the integer factor from differentiation, or
    /// `None` when some derivative kills the monomial.
    pub fn apply_to_monomial(&self, m: &TMonomial) -> Option<(TMonomial, Rational)> {
        let mut cur = m.clone();
        let mut factor: i64 = 1;
        for &d in &self.derivs {
            let (e, next) = cur.deriv_var(d)?;
            factor *= e as i64;
            cur = next;
        }
        for &v in &self.mults {
            cur = cur.times_var(v);
        }
        Some((cur, Rational::from_integer(factor.into())))
    }
}

/// Finite normal-ordered operator, truncated for action below a weight
/// cutoff: only terms with multiplication weight and derivative weight both
/// at most `cutoff` are kept (anything else either annihilates every
/// monomial of weight <= cutoff or lands strictly above it).
///
/// `shift` is the declared weight shift: homogeneous operators have every
/// term at exactly this shift; operators that pick up the dilaton shift have
/// terms at `shift - 3j`, `j >= 0` (the grading carried by `hbar^j`).
#[derive(Clone, PartialEq, Eq)]
pub struct OperatorExpr {
    terms: BTreeMap<TermKey, NPoly>,
    cutoff: i64,
    shift: i64,
}

impl OperatorExpr {
    pub fn new(cutoff: i64, shift: i64) -> Self {
        OperatorExpr { terms: BTreeMap::new(), cutoff, shift }
    }

    pub fn cutoff(&self) -> i64 {
        self.cutoff
    }

    pub fn shift(&self) -> i64 {
        self.shift
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn terms(&self) -> impl Iterator<Item = (&TermKey, &NPoly)> {
        self.terms.iter()
    }

    /// Coefficient of the term with these multiplications and derivatives.
    pub fn term_coeff(&self, mults: Vec<u32>, derivs: Vec<u32>) -> NPoly {
        self.terms
            .get(&TermKey::new(mults, derivs))
            .cloned()
            .unwrap_or_else(NPoly::zero)
    }

    /// Add a term, merging like shapes and applying the cutoff filter.
    pub fn add_term(&mut self, mults: Vec<u32>, derivs: Vec<u32>, coeff: NPoly) {
        if coeff.is_zero() {
            return;
        }
        let key = TermKey::new(mults, derivs);
        if key.mult_weight() > self.cutoff || key.deriv_weight() > self.cutoff {
            return;
        }
        match self.terms.entry(key) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(coeff);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &coeff;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    /// Add `scale * other` into `self`; cutoffs must agree.
    pub fn absorb(&mut self, other: &OperatorExpr, scale: &NPoly) {
        assert_eq!(self.cutoff, other.cutoff, "cutoff mismatch in absorb");
        for (key, c) in &other.terms {
            self.add_term(key.mults.clone(), key.derivs.clone(), c * scale);
        }
    }

    pub fn scale(&self, c: &NPoly) -> OperatorExpr {
        let mut out = OperatorExpr::new(self.cutoff, self.shift);
        out.absorb(self, c);
        out
    }

    pub fn scale_rat(&self, c: &Rational) -> OperatorExpr {
        self.scale(&NPoly::constant(c.clone()))
    }

    pub fn add(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut out = self.clone();
        out.absorb(other, &NPoly::one());
        out
    }

    pub fn sub(&self, other: &OperatorExpr) -> OperatorExpr {
        let mut out = self.clone();
        out.absorb(other, &NPoly::constant(Rational::from_integer((-1).into())));
        out
    }

    /// Left-multiply by `t_v` (stays normal-ordered: one more multiplication).
    pub fn left_mul_time(&self, v: u32) -> OperatorExpr {
        let mut out = OperatorExpr::new(self.cutoff, self.shift + v as i64);
        for (key, c) in &self.terms {
            let mut mults = key.mults.clone();
            mults.push(v);
            out.add_term(mults, key.derivs.clone(), c.clone());
        }
        out
    }

    /// Evaluate every scalar at `N = n`.
    pub fn eval_n(&self, n: &Rational) -> OperatorExpr {
        let mut out = OperatorExpr::new(self.cutoff, self.shift);
        for (key, c) in &self.terms {
            out.add_term(
                key.mults.clone(),
                key.derivs.clone(),
                NPoly::constant(c.eval(n)),
            );
        }
        out
    }

    /// Exact action on a polynomial. The input must fit under the build
    /// cutoff; the result is then exact at every weight up to the cutoff
    /// (components above it may be incomplete and are the caller's business
    /// to truncate).
    pub fn apply(&self, p: &TPoly) -> TPoly {
        self.apply_truncated(p, i64::MAX)
    }

    /// Action truncated to output weight `w`.
    pub fn apply_truncated(&self, p: &TPoly, w: i64) -> TPoly {
        if let Some(wmax) = p.max_weight() {
            assert!(
                wmax <= self.cutoff,
                "operator built at cutoff {} applied to weight-{} input",
                self.cutoff,
                wmax
            );
        }
        let monos: Vec<(&TMonomial, &NPoly)> = p.iter().collect();
        let chunk_work = |chunk: &[(&TMonomial, &NPoly)]| -> TPoly {
            let mut out = TPoly::zero();
            for &(m, a) in chunk {
                for (key, c) in &self.terms {
                    if m.weight() + key.shift() > w {
                        continue;
                    }
                    if let Some((img, factor)) = key.apply_to_monomial(m) {
                        out.insert_add(img, &a.scale(&factor) * c);
                    }
                }
            }
            out
        };
        if monos.len() >= 64 {
            monos
                .par_chunks(16)
                .map(chunk_work)
                .reduce(TPoly::zero, |mut a, b| {
                    a.add_assign(&b);
                    a
                })
        } else {
            chunk_work(&monos)
        }
    }

    /// Action on a single monomial.
    pub fn apply_monomial(&self, m: &TMonomial) -> TPoly {
        self.apply(&TPoly::from_monomial(m.clone(), NPoly::one()))
    }

    /// True when every term sits exactly at the declared shift.
    pub fn is_homogeneous(&self) -> bool {
        self.terms.keys().all(|k| k.shift() == self.shift)
    }

    /// True when every term shift is `shift - 3j` for some integer `j >= 0`
    /// (the dilaton-shift grading).
    pub fn is_hbar_graded(&self) -> bool {
        self.terms.keys().all(|k| {
            let d = self.shift - k.shift();
            d >= 0 && d % 3 == 0
        })
    }

    /// Largest weight increase any term can produce.
    pub fn max_raise(&self) -> i64 {
        self.terms.keys().map(|k| k.shift()).max().unwrap_or(0).max(0)
    }

    /// Most negative term shift (0 for the empty operator).
    pub fn min_term_shift(&self) -> i64 {
        self.terms.keys().map(|k| k.shift()).min().unwrap_or(0)
    }

    /// Canonical text dump: one line per term, sorted by (multiplication
    /// multiset, derivative multiset).
    pub fn canonical_dump(&self) -> String {
        use std::fmt::Write;
        let mut s = String::new();
        for (key, c) in &self.terms {
            write!(s, "({c})").unwrap();
            for &v in &key.mults {
                write!(s, " t_{v}").unwrap();
            }
            for &v in &key.derivs {
                write!(s, " d_{v}").unwrap();
            }
            s.push('\n');
        }
        s
    }
}

impl fmt::Display for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{}", self.canonical_dump())
    }
}

impl fmt::Debug for OperatorExpr {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "OperatorExpr(shift {}, cutoff {})\n{}", self.shift, self.cutoff, self)
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::npoly::{rat, rint};
    use crate::tpoly::TMonomial;

    #[test]
    fn apply_derivative() {
        // d/dt_3 on t_3^2 -> 2 t_3
        let mut op = OperatorExpr::new(10, -3);
        op.add_term(vec![], vec![3], NPoly::one());
        let p = TPoly::from_monomial(TMonomial::from_exps([(3, 2)]), NPoly::one());
        let r = op.apply(&p);
        assert_eq!(r.coeff(&TMonomial::var(3)), NPoly::constant(rint(2)));
        assert_eq!(r.num_terms(), 1);
    }

    #[test]
    fn normal_order_merges_like_terms() {
        let mut op = OperatorExpr::new(10, 0);
        op.add_term(vec![2, 1], vec![3], NPoly::one());
        op.add_term(vec![1, 2], vec![3], NPoly::one());
        assert_eq!(op.num_terms(), 1);
        assert_eq!(op.term_coeff(vec![1, 2], vec![3]), NPoly::constant(rint(2)));
    }

    #[test]
    fn cutoff_filters_terms() {
        let mut op = OperatorExpr::new(4, 0);
        op.add_term(vec![5], vec![5], NPoly::one()); // both weights above cutoff
        assert!(op.is_zero());
        op.add_term(vec![2], vec![2], NPoly::one());
        assert_eq!(op.num_terms(), 1);
    }

    #[test]
    fn homogeneity_flags() {
        let mut op = OperatorExpr::new(12, 0);
        op.add_term(vec![3], vec![3], NPoly::one());
        op.add_term(vec![], vec![3], NPoly::constant(rat(-1, 2)));
        assert!(!op.is_homogeneous());
        assert!(op.is_hbar_graded()); // shifts 0 and -3
        assert_eq!(op.max_raise(), 0);
        assert_eq!(op.min_term_shift(), -3);
    }
}
