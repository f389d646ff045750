//! Graded sparse polynomials in the time variables `t_1, t_2, ...` with
//! `NPoly` coefficients. The weight of `t_k` is `k`; the weight-`3g` layer of
//! a series is its `hbar^g` coefficient.

use crate::npoly::{NPoly, Rational};
use num::One;
use std::cmp::Ordering;
use std::collections::BTreeMap;
use std::fmt;

/// Sparse monomial in the time variables: exponents keyed by variable index,
/// no zero exponents stored, weight cached.
#[derive(Clone, PartialEq, Eq, Hash)]
pub struct TMonomial {
    exps: Vec<(u32, u32)>, // (variable index, exponent), sorted by variable
    weight: i64,
}

impl TMonomial {
    /// The empty monomial `1`.
    pub fn one() -> Self {
        TMonomial { exps: Vec::new(), weight: 0 }
    }

    /// The single variable `t_k`.
    pub fn var(k: u32) -> Self {
        assert!(k >= 1, "time variables are indexed from 1");
        TMonomial { exps: vec![(k, 1)], weight: k as i64 }
    }

    /// Build from (variable, exponent) pairs; duplicates merge, zeros drop.
    pub fn from_exps<I: IntoIterator<Item = (u32, u32)>>(pairs: I) -> Self {
        let mut map: BTreeMap<u32, u32> = BTreeMap::new();
        for (v, e) in pairs {
            assert!(v >= 1, "time variables are indexed from 1");
            if e > 0 {
                *map.entry(v).or_insert(0) += e;
            }
        }
        let exps: Vec<(u32, u32)> = map.into_iter().collect();
        let weight = exps.iter().map(|&(v, e)| v as i64 * e as i64).sum();
        TMonomial { exps, weight }
    }

    /// Total weight `sum_k k * e_k`.
    pub fn weight(&self) -> i64 {
        self.weight
    }

    pub fn is_one(&self) -> bool {
        self.exps.is_empty()
    }

    pub fn exps(&self) -> &[(u32, u32)] {
        &self.exps
    }

    pub fn exp_of(&self, v: u32) -> u32 {
        self.exps
            .binary_search_by_key(&v, |&(w, _)| w)
            .map(|i| self.exps[i].1)
            .unwrap_or(0)
    }

    pub fn mul(&self, other: &TMonomial) -> TMonomial {
        let mut exps = Vec::with_capacity(self.exps.len() + other.exps.len());
        let (mut i, mut j) = (0, 0);
        while i < self.exps.len() || j < other.exps.len() {
            match (self.exps.get(i), other.exps.get(j)) {
                (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                    Ordering::Less => {
                        exps.push((va, ea));
                        i += 1;
                    }
                    Ordering::Greater => {
                        exps.push((vb, eb));
                        j += 1;
                    }
                    Ordering::Equal => {
                        exps.push((va, ea + eb));
                        i += 1;
                        j += 1;
                    }
                },
                (Some(&p), None) => {
                    exps.push(p);
                    i += 1;
                }
                (None, Some(&p)) => {
                    exps.push(p);
                    j += 1;
                }
                (None, None) => unreachable!(),
            }
        }
        TMonomial { exps, weight: self.weight + other.weight }
    }

    /// Multiply by `t_v`.
    pub fn times_var(&self, v: u32) -> TMonomial {
        self.mul(&TMonomial::var(v))
    }

    /// Apply `d/dt_v`: returns the old exponent and the reduced monomial, or
    /// `None` when `t_v` is absent.
    pub fn deriv_var(&self, v: u32) -> Option<(u32, TMonomial)> {
        let i = self.exps.binary_search_by_key(&v, |&(w, _)| w).ok()?;
        let e = self.exps[i].1;
        let mut exps = self.exps.clone();
        if e == 1 {
            exps.remove(i);
        } else {
            exps[i].1 = e - 1;
        }
        Some((e, TMonomial { exps, weight: self.weight - v as i64 }))
    }

    /// True when every variable index is odd.
    pub fn is_odd_vars_only(&self) -> bool {
        self.exps.iter().all(|&(v, _)| v % 2 == 1)
    }
}

impl PartialOrd for TMonomial {
    fn partial_cmp(&self, other: &Self) -> Option<Ordering> {
        Some(self.cmp(other))
    }
}

/// Graded lexicographic order: by weight, then by the exponent vector read on
/// ascending variable index with the larger exponent first (so `t_1^3` sorts
/// before `t_1 t_2` before `t_3`). Deterministic serialization relies on it.
impl Ord for TMonomial {
    fn cmp(&self, other: &Self) -> Ordering {
        self.weight.cmp(&other.weight).then_with(|| {
            let (mut i, mut j) = (0, 0);
            loop {
                match (self.exps.get(i), other.exps.get(j)) {
                    (None, None) => return Ordering::Equal,
                    (Some(_), None) => return Ordering::Less,
                    (None, Some(_)) => return Ordering::Greater,
                    (Some(&(va, ea)), Some(&(vb, eb))) => match va.cmp(&vb) {
                        Ordering::Less => return Ordering::Less,
                        Ordering::Greater => return Ordering::Greater,
                        Ordering::Equal => {
                            if ea != eb {
                                return eb.cmp(&ea);
                            }
                            i += 1;
                            j += 1;
                        }
                    },
                }
            }
        })
    }
}

impl fmt::Display for TMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_one() {
            return write!(f, "1");
        }
        let mut first = true;
        for &(v, e) in &self.exps {
            if !first {
                write!(f, "*")?;
            }
            first = false;
            if e == 1 {
                write!(f, "t_{v}")?;
            } else {
                write!(f, "t_{v}^{e}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for TMonomial {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// Sparse polynomial: monomial -> coefficient, no zero coefficients stored.
#[derive(Clone, PartialEq, Eq, Default)]
pub struct TPoly {
    terms: BTreeMap<TMonomial, NPoly>,
}

impl TPoly {
    pub fn zero() -> Self {
        TPoly::default()
    }

    pub fn one() -> Self {
        TPoly::constant(NPoly::one())
    }

    pub fn constant(c: NPoly) -> Self {
        let mut p = TPoly::zero();
        p.insert_add(TMonomial::one(), c);
        p
    }

    pub fn var(k: u32) -> Self {
        TPoly::from_monomial(TMonomial::var(k), NPoly::one())
    }

    pub fn from_monomial(m: TMonomial, c: NPoly) -> Self {
        let mut p = TPoly::zero();
        p.insert_add(m, c);
        p
    }

    pub fn is_zero(&self) -> bool {
        self.terms.is_empty()
    }

    pub fn num_terms(&self) -> usize {
        self.terms.len()
    }

    pub fn iter(&self) -> impl Iterator<Item = (&TMonomial, &NPoly)> {
        self.terms.iter()
    }

    pub fn coeff(&self, m: &TMonomial) -> NPoly {
        self.terms.get(m).cloned().unwrap_or_else(NPoly::zero)
    }

    /// Coefficient of the monomial with the given (variable, exponent) pairs.
    pub fn coeff_of<I: IntoIterator<Item = (u32, u32)>>(&self, pairs: I) -> NPoly {
        self.coeff(&TMonomial::from_exps(pairs))
    }

    pub fn insert_add(&mut self, m: TMonomial, c: NPoly) {
        if c.is_zero() {
            return;
        }
        match self.terms.entry(m) {
            std::collections::btree_map::Entry::Vacant(e) => {
                e.insert(c);
            }
            std::collections::btree_map::Entry::Occupied(mut e) => {
                *e.get_mut() += &c;
                if e.get().is_zero() {
                    e.remove();
                }
            }
        }
    }

    pub fn add_assign(&mut self, other: &TPoly) {
        for (m, c) in &other.terms {
            self.insert_add(m.clone(), c.clone());
        }
    }

    pub fn add(&self, other: &TPoly) -> TPoly {
        let mut out = self.clone();
        out.add_assign(other);
        out
    }

    pub fn sub(&self, other: &TPoly) -> TPoly {
        let mut out = self.clone();
        for (m, c) in &other.terms {
            out.insert_add(m.clone(), -c);
        }
        out
    }

    pub fn neg(&self) -> TPoly {
        TPoly {
            terms: self.terms.iter().map(|(m, c)| (m.clone(), -c)).collect(),
        }
    }

    pub fn scale(&self, c: &NPoly) -> TPoly {
        if c.is_zero() {
            return TPoly::zero();
        }
        let mut out = TPoly::zero();
        for (m, a) in &self.terms {
            out.insert_add(m.clone(), a * c);
        }
        out
    }

    pub fn scale_rat(&self, c: &Rational) -> TPoly {
        self.scale(&NPoly::constant(c.clone()))
    }

    /// Full product (use [`TPoly::mul_truncated`] for bounded work).
    pub fn mul(&self, other: &TPoly) -> TPoly {
        self.mul_truncated(other, i64::MAX)
    }

    /// Product with all monomials of weight above `w` dropped.
    pub fn mul_truncated(&self, other: &TPoly, w: i64) -> TPoly {
        let mut out = TPoly::zero();
        for (ma, ca) in &self.terms {
            if ma.weight() > w {
                continue;
            }
            for (mb, cb) in &other.terms {
                if ma.weight() + mb.weight() > w {
                    continue;
                }
                out.insert_add(ma.mul(mb), ca * cb);
            }
        }
        out
    }

    /// Drop monomials of weight above `w`.
    pub fn truncate(&self, w: i64) -> TPoly {
        TPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.weight() <= w)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    pub fn max_weight(&self) -> Option<i64> {
        self.terms.keys().map(|m| m.weight()).max()
    }

    /// The weight-`w` homogeneous part.
    pub fn weight_layer(&self, w: i64) -> TPoly {
        TPoly {
            terms: self
                .terms
                .iter()
                .filter(|(m, _)| m.weight() == w)
                .map(|(m, c)| (m.clone(), c.clone()))
                .collect(),
        }
    }

    /// True when every stored monomial has weight exactly `w`.
    pub fn is_homogeneous_of(&self, w: i64) -> bool {
        self.terms.keys().all(|m| m.weight() == w)
    }

    /// `d/dt_v`.
    pub fn deriv(&self, v: u32) -> TPoly {
        let mut out = TPoly::zero();
        for (m, c) in &self.terms {
            if let Some((e, reduced)) = m.deriv_var(v) {
                out.insert_add(reduced, c.scale(&Rational::from_integer(e.into())));
            }
        }
        out
    }

    /// Multiply by `t_v`.
    pub fn mul_var(&self, v: u32) -> TPoly {
        TPoly {
            terms: self
                .terms
                .iter()
                .map(|(m, c)| (m.times_var(v), c.clone()))
                .collect(),
        }
    }

    /// Evaluate every coefficient at `N = n` (result has constant NPolys).
    pub fn eval_n(&self, n: &Rational) -> TPoly {
        let mut out = TPoly::zero();
        for (m, c) in &self.terms {
            out.insert_add(m.clone(), NPoly::constant(c.eval(n)));
        }
        out
    }

    /// `exp(self)` truncated at weight `w`; requires zero constant term.
    pub fn exp_truncated(&self, w: i64) -> TPoly {
        assert!(
            self.coeff(&TMonomial::one()).is_zero(),
            "exp_truncated needs a zero constant term"
        );
        let p = self.truncate(w);
        let mut acc = TPoly::one();
        let mut term = TPoly::one();
        let mut k: i64 = 1;
        loop {
            term = term.mul_truncated(&p, w).scale_rat(&Rational::new(1.into(), k.into()));
            if term.is_zero() {
                break;
            }
            acc.add_assign(&term);
            k += 1;
        }
        acc
    }

    /// `log(self)` truncated at weight `w`; requires constant term 1.
    pub fn log_truncated(&self, w: i64) -> TPoly {
        assert!(
            self.coeff(&TMonomial::one()).as_constant() == Some(Rational::one()),
            "log_truncated needs constant term 1"
        );
        let mut u = self.truncate(w);
        u.insert_add(TMonomial::one(), -&NPoly::one()); // u = self - 1
        let mut acc = TPoly::zero();
        let mut pow = TPoly::one();
        let mut k: i64 = 1;
        loop {
            pow = pow.mul_truncated(&u, w);
            if pow.is_zero() {
                break;
            }
            let sign = if k % 2 == 1 { 1 } else { -1 };
            acc.add_assign(&pow.scale_rat(&Rational::new(sign.into(), k.into())));
            k += 1;
        }
        acc
    }
}

impl fmt::Display for TPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        if self.is_zero() {
            return write!(f, "0");
        }
        let mut first = true;
        for (m, c) in &self.terms {
            if !first {
                write!(f, " + ")?;
            }
            first = false;
            let cs = c.to_string();
            let needs_parens = cs.contains('+') || cs.contains(' ');
            if m.is_one() {
                write!(f, "{cs}")?;
            } else if needs_parens {
                write!(f, "({cs})*{m}")?;
            } else if cs == "1" {
                write!(f, "{m}")?;
            } else {
                write!(f, "{cs}*{m}")?;
            }
        }
        Ok(())
    }
}

impl fmt::Debug for TPoly {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{self}")
    }
}

/// All monomials of weight exactly `w` (partitions of `w`), canonically
/// ordered.
pub fn monomials_of_weight(w: i64) -> Vec<TMonomial> {
    let mut out = Vec::new();
    if w < 0 {
        return out;
    }
    let mut parts: Vec<u32> = Vec::new();
    fn rec(remaining: i64, max_part: i64, parts: &mut Vec<u32>, out: &mut Vec<TMonomial>) {
        if remaining == 0 {
            let mono = TMonomial::from_exps(parts.iter().map(|&p| (p, 1)));
            out.push(mono);
            return;
        }
        let top = remaining.min(max_part);
        for p in (1..=top).rev() {
            parts.push(p as u32);
            rec(remaining - p, p, parts, out);
            parts.pop();
        }
    }
    rec(w, w, &mut parts, &mut out);
    out.sort();
    out
}

/// All monomials of weight at most `w`, canonically ordered.
pub fn monomials_up_to_weight(w: i64) -> Vec<TMonomial> {
    let mut out = Vec::new();
    for v in 0..=w.max(0) {
        out.extend(monomials_of_weight(v));
    }
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::npoly::{rat, rint};

    fn mono(pairs: &[(u32, u32)]) -> TMonomial {
        TMonomial::from_exps(pairs.iter().copied())
    }

    #[test]
    fn weight_examples() {
        assert_eq!(TMonomial::var(3).weight(), 3);
        assert_eq!(mono(&[(1, 2), (2, 1)]).weight(), 4);
        assert_eq!(TMonomial::one().weight(), 0);
    }

    #[test]
    fn mul_truncated_examples() {
        // (1 + t_1)^2 at W=2.
        let p = TPoly::one().add(&TPoly::var(1));
        let sq = p.mul_truncated(&p, 2);
        assert_eq!(sq.coeff(&TMonomial::one()), NPoly::one());
        assert_eq!(sq.coeff(&mono(&[(1, 1)])), NPoly::constant(rint(2)));
        assert_eq!(sq.coeff(&mono(&[(1, 2)])), NPoly::one());

        // t_3 * t_1 at W=3 is dropped entirely.
        assert!(TPoly::var(3).mul_truncated(&TPoly::var(1), 3).is_zero());

        // (N t_2)^2 at W=4.
        let nt2 = TPoly::var(2).scale(&NPoly::n());
        let r = nt2.mul_truncated(&nt2, 4);
        assert_eq!(r.coeff(&mono(&[(2, 2)])), NPoly::monomial(rint(1), 2));
    }

    #[test]
    fn eval_n_examples() {
        let c = &NPoly::constant(rat(1, 8)) + &NPoly::monomial(rat(3, 2), 2);
        let p = TPoly::from_monomial(TMonomial::var(3), c);
        assert_eq!(
            p.eval_n(&rint(0)).coeff(&TMonomial::var(3)),
            NPoly::constant(rat(1, 8))
        );
        let q = TPoly::from_monomial(mono(&[(1, 1), (2, 1)]), NPoly::monomial(rint(2), 1));
        assert_eq!(
            q.eval_n(&rint(1)).coeff(&mono(&[(1, 1), (2, 1)])),
            NPoly::constant(rint(2))
        );
        assert!(q.eval_n(&rint(0)).is_zero());
    }

    #[test]
    fn canonical_order_weight_then_lex() {
        let w3 = monomials_of_weight(3);
        let names: Vec<String> = w3.iter().map(|m| m.to_string()).collect();
        assert_eq!(names, vec!["t_1^3", "t_1*t_2", "t_3"]);
        assert_eq!(monomials_of_weight(0), vec![TMonomial::one()]);
        // partition counts: p(6) = 11
        assert_eq!(monomials_of_weight(6).len(), 11);
    }

    #[test]
    fn exp_log_inverse_pair() {
        let mut p = TPoly::var(1).scale(&NPoly::n());
        p.add_assign(&TPoly::var(3).scale(&NPoly::constant(rat(1, 8))));
        let w = 9;
        let e = p.exp_truncated(w);
        assert_eq!(e.log_truncated(w), p.truncate(w));
    }

    mod props {
        use super::*;
        use proptest::prelude::*;

        fn arb_mono() -> impl Strategy<Value = TMonomial> {
            proptest::collection::vec((1u32..5, 1u32..3), 0..3)
                .prop_map(|pairs| TMonomial::from_exps(pairs))
        }

        fn arb_poly() -> impl Strategy<Value = TPoly> {
            proptest::collection::vec((arb_mono(), -4i64..5, 0usize..2), 0..4).prop_map(|terms| {
                let mut p = TPoly::zero();
                for (m, num, pow) in terms {
                    p.insert_add(m, NPoly::monomial(rint(num), pow));
                }
                p
            })
        }

        proptest! {
            #[test]
            fn weight_additive_under_mul(a in arb_mono(), b in arb_mono()) {
                prop_assert_eq!(a.mul(&b).weight(), a.weight() + b.weight());
            }

            #[test]
            fn ring_axioms(a in arb_poly(), b in arb_poly(), c in arb_poly()) {
                // associativity and distributivity, exactly
                let ab_c = a.mul(&b).mul(&c);
                let a_bc = a.mul(&b.mul(&c));
                prop_assert_eq!(ab_c, a_bc);
                let left = a.mul(&b.add(&c));
                let right = a.mul(&b).add(&a.mul(&c));
                prop_assert_eq!(left, right);
            }

            #[test]
            fn truncated_mul_matches_full(a in arb_poly(), b in arb_poly(), w in 0i64..12) {
                prop_assert_eq!(a.mul_truncated(&b, w), a.mul(&b).truncate(w));
            }
        }
    }
}
