//! Builders for every named operator of the engine, plus action-level
//! commutators on the monomial basis and the Miura cross-check machinery.
//!
//! All displayed sums are built lazily below a weight cutoff `w`: only terms
//! that can act nontrivially on, and land within, weight `w` are kept.
//! Wherever a display produces `t_k` or `d/dt_k` with `k <= 0`, the engine
//! sets it to zero (the `dt0=0` convention); the explicit `N`-terms written
//! in the displays carry all the `N`-dependence.

use crate::current::{product_coefficient, CurrentId, Factor};
use crate::npoly::{rat, rint, NPoly, Rational};
use crate::oper::OperatorExpr;
use crate::sqrt::SqrtScalar;
use crate::tpoly::{monomials_up_to_weight, TMonomial, TPoly};
use num::One;
use rayon::prelude::*;
use std::collections::{BTreeMap, HashMap};
use std::fmt;
use std::sync::Arc;

/// Which hierarchy a `W_{1+infinity}` operator belongs to; the MKP variants
/// shift the current's zero mode by `N`.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum Hier {
    Kp,
    Mkp,
}

/// Every operator the engine can build.
#[derive(Clone, Copy, PartialEq, Eq, Hash, Debug)]
pub enum OperatorName {
    /// Current modes `J_k`.
    J(Hier, i64),
    /// Virasoro modes `L_k` from `(1/2)::J^2::`.
    L(Hier, i64),
    /// Cubic modes `M_k` from `(1/3)::J^3::`.
    M(Hier, i64),
    /// Constraint Virasoro operator (sans-serif L).
    Lsf(i64),
    /// Constraint W-operator (sans-serif M).
    Msf(i64),
    /// `M'_k = M_k - (k+2) N L_k`.
    MPrime(i64),
    /// `M*_k`, the W-basis with canonical commutators.
    MStar(i64),
    /// Free-field Virasoro `CalL_k` from the twisted/even currents.
    CalL(i64),
    /// Free-field W-generator `CalM_k`.
    CalM(i64),
    /// Virasoro operator annihilating the `N = 0` (closed) series.
    KwL(i64),
    /// Virasoro generator from the rank-3 Miura expansion.
    R3L(i64),
    /// W-generator from the rank-3 Miura expansion.
    R3M(i64),
    /// Degree operator `(1/3) sum k t_k d_k`.
    D,
    /// Weight +3 cut-and-join operator.
    W1,
    /// Weight +6 cut-and-join operator.
    W2,
}

impl OperatorName {
    /// Declared weight shift of the built operator (terms picking up the
    /// dilaton shift sit at this value minus multiples of 3).
    pub fn shift(&self) -> i64 {
        match *self {
            OperatorName::J(_, k) | OperatorName::L(_, k) | OperatorName::M(_, k) => -k,
            OperatorName::Lsf(k)
            | OperatorName::Msf(k)
            | OperatorName::MPrime(k)
            | OperatorName::MStar(k)
            | OperatorName::CalL(k)
            | OperatorName::CalM(k)
            | OperatorName::KwL(k)
            | OperatorName::R3L(k)
            | OperatorName::R3M(k) => -2 * k,
            OperatorName::D => 0,
            OperatorName::W1 => 3,
            OperatorName::W2 => 6,
        }
    }

    /// Largest weight increase the operator can produce.
    pub fn raise(&self) -> i64 {
        self.shift().max(0)
    }
}

impl fmt::Display for OperatorName {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match *self {
            OperatorName::J(Hier::Kp, k) => write!(f, "J_{k}"),
            OperatorName::J(Hier::Mkp, k) => write!(f, "J^MKP_{k}"),
            OperatorName::L(Hier::Kp, k) => write!(f, "L_{k}"),
            OperatorName::L(Hier::Mkp, k) => write!(f, "L^MKP_{k}"),
            OperatorName::M(Hier::Kp, k) => write!(f, "M_{k}"),
            OperatorName::M(Hier::Mkp, k) => write!(f, "M^MKP_{k}"),
            OperatorName::Lsf(k) => write!(f, "Lc_{k}"),
            OperatorName::Msf(k) => write!(f, "Mc_{k}"),
            OperatorName::MPrime(k) => write!(f, "Mprime_{k}"),
            OperatorName::MStar(k) => write!(f, "Mstar_{k}"),
            OperatorName::CalL(k) => write!(f, "CalL_{k}"),
            OperatorName::CalM(k) => write!(f, "CalM_{k}"),
            OperatorName::KwL(k) => write!(f, "KwL_{k}"),
            OperatorName::R3L(k) => write!(f, "R3L_{k}"),
            OperatorName::R3M(k) => write!(f, "R3M_{k}"),
            OperatorName::D => write!(f, "D"),
            OperatorName::W1 => write!(f, "W1"),
            OperatorName::W2 => write!(f, "W2"),
        }
    }
}

/// Build a named operator, truncated to act below weight `w`.
pub fn build(name: OperatorName, w: i64) -> OperatorExpr {
    match name {
        OperatorName::J(h, k) => build_j(h, k, w),
        OperatorName::L(h, k) => build_l(h, k, w),
        OperatorName::M(h, k) => build_m(h, k, w),
        OperatorName::Lsf(k) => build_lsf(k, w),
        OperatorName::Msf(k) => build_msf(k, w),
        OperatorName::MPrime(k) => build_mprime(k, w),
        OperatorName::MStar(k) => build_mstar(k, w),
        OperatorName::CalL(k) => build_cal_l(k, w),
        OperatorName::CalM(k) => build_cal_m(k, w),
        OperatorName::KwL(k) => build_kw_l(k, w),
        OperatorName::R3L(k) => build_r3_l(k, w),
        OperatorName::R3M(k) => build_r3_m(k, w),
        OperatorName::D => build_d(w),
        OperatorName::W1 => build_w1(w),
        OperatorName::W2 => build_w2(w),
    }
}

fn build_j(h: Hier, k: i64, w: i64) -> OperatorExpr {
    let mut op = OperatorExpr::new(w, -k);
    if k > 0 {
        op.add_term(vec![], vec![k as u32], NPoly::one());
    } else if k < 0 {
        op.add_term(vec![(-k) as u32], vec![], NPoly::constant(rint(-k)));
    } else if h == Hier::Mkp {
        op.add_term(vec![], vec![], NPoly::n());
    }
    op
}

fn build_l_kp(m: i64, w: i64) -> OperatorExpr {
    let mut op = OperatorExpr::new(w, -m);
    // (1/2) sum_{a+b=-m} a b t_a t_b over ordered pairs
    if m <= -2 {
        for a in 1..=(-m - 1) {
            let b = -m - a;
            op.add_term(
                vec![a as u32, b as u32],
                vec![],
                NPoly::constant(rat(a * b, 2)),
            );
        }
    }
    // sum_{k>=1} k t_k d_{k+m}
    for k in 1..=w {
        let d = k + m;
        if d >= 1 && d <= w {
            op.add_term(vec![k as u32], vec![d as u32], NPoly::constant(rint(k)));
        }
    }
    // (1/2) sum_{a+b=m} d_a d_b over ordered pairs
    if m >= 2 {
        for a in 1..=(m - 1) {
            let b = m - a;
            op.add_term(vec![], vec![a as u32, b as u32], NPoly::constant(rat(1, 2)));
        }
    }
    op
}

fn build_l(h: Hier, m: i64, w: i64) -> OperatorExpr {
    let mut op = build_l_kp(m, w);
    if h == Hier::Mkp {
        op.absorb(&build_j(Hier::Kp, m, w), &NPoly::n());
        if m == 0 {
            op.add_term(vec![], vec![], NPoly::monomial(rat(1, 2), 2));
        }
    }
    op
}

fn build_m_kp(k: i64, w: i64) -> OperatorExpr {
    let mut op = OperatorExpr::new(w, -k);
    // (1/3) sum_{a+b+c=-k} abc t_a t_b t_c over ordered triples
    if k <= -3 {
        let s = -k;
        for a in 1..=(s - 2) {
            for b in 1..=(s - a - 1) {
                let c = s - a - b;
                op.add_term(
                    vec![a as u32, b as u32, c as u32],
                    vec![],
                    NPoly::constant(rat(a * b * c, 3)),
                );
            }
        }
    }
    // sum_{c-a-b=k} a b t_a t_b d_c over ordered pairs (a, b)
    for a in 1..=w {
        for b in 1..=(w - a).max(0) {
            let c = k + a + b;
            if c >= 1 && c <= w {
                op.add_term(
                    vec![a as u32, b as u32],
                    vec![c as u32],
                    NPoly::constant(rint(a * b)),
                );
            }
        }
    }
    // sum_{b+c-a=k} a t_a d_b d_c over ordered pairs (b, c)
    for a in 1..=w {
        for b in 1..=w {
            let c = a + k - b;
            if c >= 1 && b + c <= w {
                op.add_term(
                    vec![a as u32],
                    vec![b as u32, c as u32],
                    NPoly::constant(rint(a)),
                );
            }
        }
    }
    // (1/3) sum_{a+b+c=k} d_a d_b d_c over ordered triples
    if k >= 3 {
        for a in 1..=(k - 2) {
            for b in 1..=(k - a - 1) {
                let c = k - a - b;
                op.add_term(
                    vec![],
                    vec![a as u32, b as u32, c as u32],
                    NPoly::constant(rat(1, 3)),
                );
            }
        }
    }
    op
}

fn build_m(h: Hier, k: i64, w: i64) -> OperatorExpr {
    let mut op = build_m_kp(k, w);
    if h == Hier::Mkp {
        op.absorb(&build_l_kp(k, w), &NPoly::monomial(rint(2), 1));
        op.absorb(&build_j(Hier::Kp, k, w), &NPoly::monomial(rint(1), 2));
        if k == 0 {
            op.add_term(vec![], vec![], NPoly::monomial(rat(1, 3), 3));
        }
    }
    op
}

/// The constraint Virasoro operator:
/// `L_{2k} - d_{2k+3} + 3N d_{2k} + sum_{j=1}^{k-1} d_{2j} d_{2k-2j}
///  + (1/8 + 3N^2/2) delta_{k,0} + 2N t_2 delta_{k,-1}`.
fn build_lsf(k: i64, w: i64) -> OperatorExpr {
    let mut op = OperatorExpr::new(w, -2 * k);
    op.absorb(&build_l_kp(2 * k, w), &NPoly::one());
    if 2 * k + 3 >= 1 {
        op.add_term(vec![], vec![(2 * k + 3) as u32], NPoly::constant(rint(-1)));
    }
    if k >= 1 {
        op.add_term(vec![], vec![(2 * k) as u32], NPoly::monomial(rint(3), 1));
    }
    for j in 1..k {
        op.add_term(
            vec![],
            vec![(2 * j) as u32, (2 * k - 2 * j) as u32],
            NPoly::one(),
        );
    }
    if k == 0 {
        let c = &NPoly::constant(rat(1, 8)) + &NPoly::monomial(rat(3, 2), 2);
        op.add_term(vec![], vec![], c);
    }
    if k == -1 {
        op.add_term(vec![2], vec![], NPoly::monomial(rint(2), 1));
    }
    op
}

/// The constraint W-operator:
/// `M_{2k} - 2 L_{2k+3} + J_{2k+6} + (3(k+1)N^2 + 1/4) J_{2k}
///  + (k+4) N (L_{2k} - J_{2k+3}) + 2(N^2 + 1/4) N delta_{k,0}
///  + 4 N^2 t_2 delta_{k,-1} + 16 N^2 t_4 delta_{k,-2}
///  + (k-2) N sum_{j=1}^{k-1} d_{2j} d_{2k-2j}
///  - (4/3) sum_{i+j+l=k} d_{2i} d_{2j} d_{2l}`.
fn build_msf(k: i64, w: i64) -> OperatorExpr {
    let mut op = OperatorExpr::new(w, -2 * k);
    op.absorb(&build_m_kp(2 * k, w), &NPoly::one());
    op.absorb(&build_l_kp(2 * k + 3, w), &NPoly::constant(rint(-2)));
    op.absorb(&build_j(Hier::Kp, 2 * k + 6, w), &NPoly::one());
    let j2k_coeff = &NPoly::constant(rat(1, 4)) + &NPoly::monomial(rint(3 * (k + 1)), 2);
    op.absorb(&build_j(Hier::Kp, 2 * k, w), &j2k_coeff);
    let n_k4 = NPoly::monomial(rint(k + 4), 1);
    op.absorb(&build_l_kp(2 * k, w), &n_k4);
    op.absorb(&build_j(Hier::Kp, 2 * k + 3, w), &(-&n_k4));
    if k == 0 {
        // 2 (N^2 + 1/4) N = 2 N^3 + N/2
        let c = &NPoly::monomial(rint(2), 3) + &NPoly::monomial(rat(1, 2), 1);
        op.add_term(vec![], vec![], c);
    }
    if k == -1 {
        op.add_term(vec![2], vec![], NPoly::monomial(rint(4), 2));
    }
    if k == -2 {
        op.add_term(vec![4], vec![], NPoly::monomial(rint(16), 2));
    }
    for j in 1..k {
        op.add_term(
            vec![],
            vec![(2 * j) as u32, (2 * k - 2 * j) as u32],
            NPoly::monomial(rint(k - 2), 1),
        );
    }
    if k >= 3 {
        for i in 1..=(k - 2) {
            for j in 1..=(k - i - 1) {
                let l = k - i - j;
                op.add_term(
                    vec![],
                    vec![(2 * i) as u32, (2 * j) as u32, (2 * l) as u32],
                    NPoly::constant(rat(-4, 3)),
                );
            }
        }
    }
    op
}

fn build_mprime(k: i64, w: i64) -> OperatorExpr {
    let mut op = build_msf(k, w);
    op.absorb(&build_lsf(k, w), &NPoly::monomial(rint(-(k + 2)), 1));
    op
}

/// `M*_k = M'_k - (8/3) sum_a a t_{2a} L_{a+k}`, the sum running over
/// `a >= max(1, -1-k)` (only constraint indices `a+k >= -1` enter).
fn build_mstar(k: i64, w: i64) -> OperatorExpr {
    let mut op = build_mprime(k, w);
    let mut a = 1.max(-1 - k);
    while 2 * a <= w {
        let scaled = build_lsf(a + k, w)
            .left_mul_time((2 * a) as u32)
            .scale(&NPoly::constant(rat(-8 * a, 3)));
        for (key, c) in scaled.terms() {
            op.add_term(key.mults.clone(), key.derivs.clone(), c.clone());
        }
        a += 1;
    }
    op
}

/// `CalL_k`: mode `k` of `(1/2)(::CalJo^2:: + 1/(8x^2) + ::CalJe^2::)`.
fn build_cal_l(k: i64, w: i64) -> OperatorExpr {
    let half = SqrtScalar::from_rat(1, 2);
    let target = -2 * k - 4; // coefficient of x^{-k-2}
    let mut op = product_coefficient(
        &[Factor::Current(CurrentId::CalJo), Factor::Current(CurrentId::CalJo)],
        &half,
        target,
        w,
        -2 * k,
    );
    if k == 0 {
        op.add_term(vec![], vec![], NPoly::constant(rat(1, 16)));
    }
    let even = product_coefficient(
        &[Factor::Current(CurrentId::CalJe), Factor::Current(CurrentId::CalJe)],
        &half,
        target,
        w,
        -2 * k,
    );
    op.absorb(&even, &NPoly::one());
    op
}

/// `CalM_k`: mode `k` of
/// `(1/sqrt(6)) (::CalJe (CalJo^2 + 1/(8x^2)):: - (1/3)::CalJe^3::)`.
fn build_cal_m(k: i64, w: i64) -> OperatorExpr {
    let inv_sqrt6 = SqrtScalar::sqrt_frac(1, 6, Rational::one());
    let target = -2 * k - 6; // coefficient of x^{-k-3}
    let mut op = product_coefficient(
        &[
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJo),
            Factor::Current(CurrentId::CalJo),
        ],
        &inv_sqrt6,
        target,
        w,
        -2 * k,
    );
    let reg = product_coefficient(
        &[
            Factor::Current(CurrentId::CalJe),
            Factor::Const { dbl: -4, scale: SqrtScalar::from_rat(1, 8) },
        ],
        &inv_sqrt6,
        target,
        w,
        -2 * k,
    );
    op.absorb(&reg, &NPoly::one());
    let cubic = product_coefficient(
        &[
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJe),
        ],
        &inv_sqrt6.scale_npoly(&NPoly::constant(rat(-1, 3))),
        target,
        w,
        -2 * k,
    );
    op.absorb(&cubic, &NPoly::one());
    op
}

/// The closed-series Virasoro operator on odd times:
/// `(1/4) sum_{a+b=-1-m} (2a+1)(2b+1) tt_{2a+1} tt_{2b+1}
///  + (1/2) sum_{k>=0} (2k+1) tt_{2k+1} d_{2k+2m+1}
///  + (1/4) sum_{a+b=m-1} d_{2a+1} d_{2b+1} + (1/16) delta_{m,0}`,
/// with `tt_3 = t_3 - 1/3` and `tt_j = t_j` otherwise.
fn build_kw_l(m: i64, w: i64) -> OperatorExpr {
    let mut op = OperatorExpr::new(w, -2 * m);
    // quadratic multiplication part, a, b >= 0 ordered
    for a in 0..=(-1 - m).max(-1) {
        let b = -1 - m - a;
        if b < 0 {
            continue;
        }
        let (va, vb) = ((2 * a + 1) as u32, (2 * b + 1) as u32);
        let c = rat((2 * a + 1) * (2 * b + 1), 4);
        add_tilde_pair(&mut op, va, vb, &c);
    }
    // mixed part
    let mut kk = 0i64;
    while 2 * kk + 1 <= w {
        let v = (2 * kk + 1) as u32;
        let d = 2 * kk + 2 * m + 1;
        if d >= 1 && d <= w {
            let c = rat(2 * kk + 1, 2);
            op.add_term(vec![v], vec![d as u32], NPoly::constant(c.clone()));
            if v == 3 {
                op.add_term(vec![], vec![d as u32], NPoly::constant(-c / rint(3)));
            }
        }
        kk += 1;
    }
    // derivative part
    if m >= 1 {
        for a in 0..=(m - 1) {
            let b = m - 1 - a;
            op.add_term(
                vec![],
                vec![(2 * a + 1) as u32, (2 * b + 1) as u32],
                NPoly::constant(rat(1, 4)),
            );
        }
    }
    if m == 0 {
        op.add_term(vec![], vec![], NPoly::constant(rat(1, 16)));
    }
    op
}

/// Add `c * tt_va * tt_vb` expanding the dilaton shift on any index-3 factor.
fn add_tilde_pair(op: &mut OperatorExpr, va: u32, vb: u32, c: &Rational) {
    op.add_term(vec![va, vb], vec![], NPoly::constant(c.clone()));
    let third = rat(1, 3);
    if va == 3 {
        op.add_term(vec![vb], vec![], NPoly::constant(-(c * &third)));
    }
    if vb == 3 {
        op.add_term(vec![va], vec![], NPoly::constant(-(c * &third)));
    }
    if va == 3 && vb == 3 {
        op.add_term(vec![], vec![], NPoly::constant(c * &third * &third));
    }
}

/// Degree operator `(1/3) sum_k k t_k d_k`.
fn build_d(w: i64) -> OperatorExpr {
    let mut op = OperatorExpr::new(w, 0);
    for k in 1..=w {
        op.add_term(vec![k as u32], vec![k as u32], NPoly::constant(rat(k, 3)));
    }
    op
}

/// First cut-and-join operator (homogeneous weight shift +3): the residue
/// `(1/3) Res_x [ ::v_o(sqrt(x)) (CalJo'^2 + 1/(8x^2) + CalJe^2)
///              + (4/sqrt(3)) v_e(sqrt(x)) CalJe CalJo':: ]`,
/// with the unshifted odd current and unshifted multiplication series.
fn build_w1(w: i64) -> OperatorExpr {
    let third = SqrtScalar::from_rat(1, 3);
    let target = -2; // coefficient of x^{-1}
    let mut op = product_coefficient(
        &[
            Factor::OddTimes,
            Factor::Current(CurrentId::CalJoNoShift),
            Factor::Current(CurrentId::CalJoNoShift),
        ],
        &third,
        target,
        w,
        3,
    );
    let reg = product_coefficient(
        &[
            Factor::OddTimes,
            Factor::Const { dbl: -4, scale: SqrtScalar::from_rat(1, 8) },
        ],
        &third,
        target,
        w,
        3,
    );
    op.absorb(&reg, &NPoly::one());
    let even = product_coefficient(
        &[
            Factor::OddTimes,
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJe),
        ],
        &third,
        target,
        w,
        3,
    );
    op.absorb(&even, &NPoly::one());
    // (1/3) * 4/sqrt(3) = 4 sqrt(3) / 9
    let cross = product_coefficient(
        &[
            Factor::EvenTimes,
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJoNoShift),
        ],
        &SqrtScalar::sqrt_frac(1, 3, rat(4, 3)),
        target,
        w,
        3,
    );
    op.absorb(&cross, &NPoly::one());
    op
}

/// Second cut-and-join operator (homogeneous weight shift +6):
/// `-(2 sqrt(2) / 3 sqrt(3)) Res_x [ v_e(sqrt(x))
///    (::CalJe (CalJo'^2 + 1/(8x^2)) - (1/3) CalJe^3::) x^{-1/2} ]`.
fn build_w2(w: i64) -> OperatorExpr {
    // -(2/3) sqrt(2/3) = -(2/9) sqrt(6); the x^{-1/2} factor folds into the
    // target degree: residue at doubled degree -2 minus (-1) leaves -1.
    let pre = SqrtScalar::sqrt_frac(2, 3, rat(-2, 3));
    let target = -1;
    let mut op = product_coefficient(
        &[
            Factor::EvenTimes,
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJoNoShift),
            Factor::Current(CurrentId::CalJoNoShift),
        ],
        &pre,
        target,
        w,
        6,
    );
    let reg = product_coefficient(
        &[
            Factor::EvenTimes,
            Factor::Current(CurrentId::CalJe),
            Factor::Const { dbl: -4, scale: SqrtScalar::from_rat(1, 8) },
        ],
        &pre,
        target,
        w,
        6,
    );
    op.absorb(&reg, &NPoly::one());
    let cubic = product_coefficient(
        &[
            Factor::EvenTimes,
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJe),
        ],
        &pre.scale_npoly(&NPoly::constant(rat(-1, 3))),
        target,
        w,
        6,
    );
    op.absorb(&cubic, &NPoly::one());
    op
}

// ---------------------------------------------------------------------------
// Miura construction for the rank-3 W-algebra.

/// Weight vectors of the fundamental representation (rank 3):
/// `h_1 = (1/sqrt(2), 1/sqrt(6))`, `h_2 = (-1/sqrt(2), 1/sqrt(6))`,
/// `h_3 = (0, -2/sqrt(6))`.
pub fn h_vectors() -> [[SqrtScalar; 2]; 3] {
    let s2 = SqrtScalar::sqrt_frac(1, 2, Rational::one());
    let s6 = SqrtScalar::sqrt_frac(1, 6, Rational::one());
    [
        [s2.clone(), s6.clone()],
        [s2.neg(), s6.clone()],
        [SqrtScalar::zero(), s6.scale_npoly(&NPoly::constant(rint(-2)))],
    ]
}

/// Coefficients of the generating polynomial
/// `-::prod_m (u - h_m . J):: = -u^3 + u L(x) + M(x)` expanded over the two
/// abstract currents: `quad[p][q]` multiplies `::J_p J_q::` in `L`,
/// `cubic[multiset]` multiplies the cubic monomials in `M`.
pub struct MiuraExpansion {
    pub quad: [[SqrtScalar; 2]; 2],
    pub cubic: BTreeMap<[usize; 3], SqrtScalar>,
    /// Coefficient of `u^2`, which must vanish since the weights sum to zero.
    pub linear: [SqrtScalar; 2],
}

pub fn miura_expansion() -> MiuraExpansion {
    let h = h_vectors();
    // u^2 coefficient: sum_i h_i . J
    let mut linear = [SqrtScalar::zero(), SqrtScalar::zero()];
    for hi in &h {
        for p in 0..2 {
            linear[p] = linear[p]
                .checked_add(&hi[p])
                .expect("weight components share a radicand");
        }
    }
    // u coefficient: L = -sum_{i<j} (h_i . J)(h_j . J), symmetrized
    let mut quad: [[SqrtScalar; 2]; 2] = Default::default();
    for i in 0..3 {
        for j in (i + 1)..3 {
            for p in 0..2 {
                for q in 0..2 {
                    let term = h[i][p].mul(&h[j][q]).neg();
                    let (a, b) = if p <= q { (p, q) } else { (q, p) };
                    quad[a][b] = quad[a][b]
                        .checked_add(&term)
                        .expect("like monomials share a radicand");
                }
            }
        }
    }
    // u^0 coefficient: M = ::(h_1.J)(h_2.J)(h_3.J)::
    let mut cubic: BTreeMap<[usize; 3], SqrtScalar> = BTreeMap::new();
    for p in 0..2 {
        for q in 0..2 {
            for r in 0..2 {
                let term = h[0][p].mul(&h[1][q]).mul(&h[2][r]);
                if term.is_zero() {
                    continue;
                }
                let mut key = [p, q, r];
                key.sort_unstable();
                let entry = cubic.entry(key).or_insert_with(SqrtScalar::zero);
                *entry = entry
                    .checked_add(&term)
                    .expect("like monomials share a radicand");
            }
        }
    }
    cubic.retain(|_, v| !v.is_zero());
    MiuraExpansion { quad, cubic, linear }
}

/// Virasoro generator recovered from the Miura expansion with the
/// substitution `J_(1)^2 -> CalJo^2 + 1/(8x^2)`, `J_(2) -> CalJe`.
fn build_r3_l(k: i64, w: i64) -> OperatorExpr {
    let e = miura_expansion();
    assert!(e.linear.iter().all(SqrtScalar::is_zero), "weights must sum to zero");
    assert!(e.quad[0][1].is_zero(), "no J_(1) J_(2) cross term may survive");
    let target = -2 * k - 4;
    let mut op = product_coefficient(
        &[Factor::Current(CurrentId::CalJo), Factor::Current(CurrentId::CalJo)],
        &e.quad[0][0],
        target,
        w,
        -2 * k,
    );
    if k == 0 {
        let c = e.quad[0][0]
            .to_npoly()
            .expect("quadratic Miura coefficients are rational")
            .scale(&rat(1, 8));
        op.add_term(vec![], vec![], c);
    }
    let even = product_coefficient(
        &[Factor::Current(CurrentId::CalJe), Factor::Current(CurrentId::CalJe)],
        &e.quad[1][1],
        target,
        w,
        -2 * k,
    );
    op.absorb(&even, &NPoly::one());
    op
}

/// W-generator recovered from the Miura expansion with the same substitution.
fn build_r3_m(k: i64, w: i64) -> OperatorExpr {
    let e = miura_expansion();
    let zero = SqrtScalar::zero();
    let c112 = e.cubic.get(&[0, 0, 1]).unwrap_or(&zero).clone();
    let c222 = e.cubic.get(&[1, 1, 1]).unwrap_or(&zero).clone();
    assert!(
        !e.cubic.contains_key(&[0, 0, 0]) && !e.cubic.contains_key(&[0, 1, 1]),
        "only J_(1)^2 J_(2) and J_(2)^3 may survive"
    );
    let target = -2 * k - 6;
    let mut op = product_coefficient(
        &[
            Factor::Current(CurrentId::CalJo),
            Factor::Current(CurrentId::CalJo),
            Factor::Current(CurrentId::CalJe),
        ],
        &c112,
        target,
        w,
        -2 * k,
    );
    let reg = product_coefficient(
        &[
            Factor::Current(CurrentId::CalJe),
            Factor::Const { dbl: -4, scale: SqrtScalar::from_rat(1, 8) },
        ],
        &c112,
        target,
        w,
        -2 * k,
    );
    op.absorb(&reg, &NPoly::one());
    let cubic = product_coefficient(
        &[
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJe),
            Factor::Current(CurrentId::CalJe),
        ],
        &c222,
        target,
        w,
        -2 * k,
    );
    op.absorb(&cubic, &NPoly::one());
    op
}

// ---------------------------------------------------------------------------
// Cached building and action-level commutators.

/// Cache of built operators keyed by name and cutoff.
#[derive(Default)]
pub struct OpCache {
    map: HashMap<(OperatorName, i64), Arc<OperatorExpr>>,
}

impl OpCache {
    pub fn new() -> Self {
        OpCache::default()
    }

    pub fn get(&mut self, name: OperatorName, w: i64) -> Arc<OperatorExpr> {
        self.map
            .entry((name, w))
            .or_insert_with(|| Arc::new(build(name, w)))
            .clone()
    }
}

/// `(AB - BA)` applied to a monomial, exactly.
pub fn commutator_apply(a: &OperatorExpr, b: &OperatorExpr, m: &TMonomial) -> TPoly {
    let p = TPoly::from_monomial(m.clone(), NPoly::one());
    a.apply(&b.apply(&p)).sub(&b.apply(&a.apply(&p)))
}

/// `(AB - BA)` on every monomial of weight at most `w`, exact: the operators
/// are built with enough headroom that no intermediate truncation occurs.
pub fn commutator_on_basis(
    a: OperatorName,
    b: OperatorName,
    w: i64,
) -> BTreeMap<TMonomial, TPoly> {
    let cutoff = w + a.raise() + b.raise();
    let oa = build(a, cutoff);
    let ob = build(b, cutoff);
    let basis = monomials_up_to_weight(w);
    basis
        .par_iter()
        .map(|m| (m.clone(), commutator_apply(&oa, &ob, m)))
        .collect::<Vec<_>>()
        .into_iter()
        .collect()
}

/// Apply the quadratic composite
/// `Lambda_m = sum_{n<=-2} CalL_n CalL_{m-n} + sum_{n>-2} CalL_{m-n} CalL_n
///            - (3/10)(m+3)(m+2) CalL_m`
/// to a polynomial, exactly.
pub fn lambda_apply(m: i64, p: &TPoly, w_ctx: i64, cache: &mut OpCache) -> TPoly {
    let wp = p.max_weight().unwrap_or(0);
    let mut out = TPoly::zero();
    // first sum: inner factor CalL_{m-n} annihilates anything of weight
    // below 2(m-n), so n >= m - wp/2 - 2 (slack for the dilaton terms)
    let n_lo = m - wp / 2 - 2;
    for n in n_lo..=-2 {
        let inner = cache.get(OperatorName::CalL(m - n), w_ctx).apply(p);
        if inner.is_zero() {
            continue;
        }
        out.add_assign(&cache.get(OperatorName::CalL(n), w_ctx).apply(&inner));
    }
    // second sum: inner factor CalL_n needs 2n <= wp (same slack)
    let n_hi = wp / 2 + 2;
    for n in -1..=n_hi {
        let inner = cache.get(OperatorName::CalL(n), w_ctx).apply(p);
        if inner.is_zero() {
            continue;
        }
        out.add_assign(&cache.get(OperatorName::CalL(m - n), w_ctx).apply(&inner));
    }
    let c = rat(-3 * (m + 3) * (m + 2), 10);
    out.add_assign(&cache.get(OperatorName::CalL(m), w_ctx).apply(p).scale_rat(&c));
    out
}

/// Find the single constant `c` with `family_a(k) = c * family_b(k)` on the
/// whole basis of weight at most `w`, for every `k` in `ks`. Returns the
/// constant or a description of the first violation.
pub fn proportionality_constant(
    family_a: impl Fn(i64) -> OperatorName,
    family_b: impl Fn(i64) -> OperatorName,
    ks: &[i64],
    w: i64,
) -> Result<Rational, String> {
    let mut found: Option<Rational> = None;
    for &k in ks {
        let na = family_a(k);
        let nb = family_b(k);
        let cutoff = w + na.raise().max(nb.raise());
        let oa = build(na, cutoff);
        let ob = build(nb, cutoff);
        for m in monomials_up_to_weight(w) {
            let va = oa.apply_monomial(&m);
            let vb = ob.apply_monomial(&m);
            if found.is_none() {
                if let Some((mono, cb)) = vb.iter().next() {
                    // the ratio of the first nonzero matrix element must be
                    // an N-independent rational
                    let c = va
                        .coeff(mono)
                        .div_exact(cb)
                        .and_then(|q| q.as_constant())
                        .ok_or_else(|| format!("non-constant ratio at {na} on {m}"))?;
                    found = Some(c);
                }
            }
            match &found {
                Some(c) => {
                    if va != vb.scale_rat(c) {
                        return Err(format!("constant {c} fails at {na} on {m}"));
                    }
                }
                None => {
                    if !va.is_zero() {
                        return Err(format!("{na} acts on {m} but {nb} does not"));
                    }
                }
            }
        }
    }
    found.ok_or_else(|| "families act as zero on the whole basis".to_string())
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::tpoly::TMonomial;

    fn apply_to_one(op: &OperatorExpr) -> TPoly {
        op.apply(&TPoly::one())
    }

    #[test]
    fn lsf_minus_one_on_constant() {
        // Lc_{-1} 1 = (1/2) t_1^2 + 2N t_2
        let op = build(OperatorName::Lsf(-1), 8);
        let r = apply_to_one(&op);
        assert_eq!(r.coeff_of([(1, 2)]), NPoly::constant(rat(1, 2)));
        assert_eq!(r.coeff_of([(2, 1)]), NPoly::monomial(rint(2), 1));
        assert_eq!(r.num_terms(), 2);
    }

    #[test]
    fn j_kp_positive_mode_is_single_derivative() {
        let op = build(OperatorName::J(Hier::Kp, 5), 8);
        assert_eq!(op.num_terms(), 1);
        assert_eq!(op.term_coeff(vec![], vec![5]), NPoly::one());
    }

    #[test]
    fn cal_l_zero_mode_constant_part() {
        // CalL_0 1 = (1/16 + (3/4) N^2) * 1 (the d_3 term kills the constant)
        let op = build(OperatorName::CalL(0), 8);
        let r = apply_to_one(&op);
        let expected = &NPoly::constant(rat(1, 16)) + &NPoly::monomial(rat(3, 4), 2);
        assert_eq!(r.coeff(&TMonomial::one()), expected);
        assert_eq!(r.num_terms(), 1);
    }

    #[test]
    fn apply_examples() {
        // D on t_1 t_2 has eigenvalue (1+2)/3 = 1
        let d = build(OperatorName::D, 8);
        let m = TMonomial::from_exps([(1, 1), (2, 1)]);
        let p = TPoly::from_monomial(m.clone(), NPoly::one());
        assert_eq!(d.apply(&p), p);
    }

    #[test]
    fn lsf_zero_with_first_layer_annihilates_constant_mode() {
        // Lc_0 (1 + tau^(1)) has no constant term when
        // coeff(tau^(1), t_3) = 1/8 + (3/2) N^2.
        let mut tau1 = TPoly::one();
        tau1.insert_add(
            TMonomial::var(3),
            &NPoly::constant(rat(1, 8)) + &NPoly::monomial(rat(3, 2), 2),
        );
        let op = build(OperatorName::Lsf(0), 8);
        let r = op.apply(&tau1);
        assert!(r.coeff(&TMonomial::one()).is_zero());
    }

    #[test]
    fn msf_minus_two_on_constant_matches_hand_expansion() {
        // Mc_{-2} 1 = 2 t_1^2 t_2 + (1 + 4N^2) t_4 + 6N t_1 t_3 + 4N t_2^2 - 2N t_1
        let op = build(OperatorName::Msf(-2), 10);
        let r = apply_to_one(&op);
        assert_eq!(r.coeff_of([(1, 2), (2, 1)]), NPoly::constant(rint(2)));
        assert_eq!(
            r.coeff_of([(4, 1)]),
            &NPoly::one() + &NPoly::monomial(rint(4), 2)
        );
        assert_eq!(r.coeff_of([(1, 1), (3, 1)]), NPoly::monomial(rint(6), 1));
        assert_eq!(r.coeff_of([(2, 2)]), NPoly::monomial(rint(4), 1));
        assert_eq!(r.coeff_of([(1, 1)]), NPoly::monomial(rint(-2), 1));
        assert_eq!(r.num_terms(), 5);
    }

    #[test]
    fn mstar_minus_two_on_constant_matches_hand_expansion() {
        // Mstar_{-2} 1 = (2/3) t_1^2 t_2 + (1/3 - 4N^2) t_4 + 6N t_1 t_3
        //               - (4/3) N t_2^2 - 2N t_1
        let op = build(OperatorName::MStar(-2), 10);
        let r = apply_to_one(&op);
        assert_eq!(r.coeff_of([(1, 2), (2, 1)]), NPoly::constant(rat(2, 3)));
        assert_eq!(
            r.coeff_of([(4, 1)]),
            &NPoly::constant(rat(1, 3)) + &NPoly::monomial(rint(-4), 2)
        );
        assert_eq!(r.coeff_of([(1, 1), (3, 1)]), NPoly::monomial(rint(6), 1));
        assert_eq!(r.coeff_of([(2, 2)]), NPoly::monomial(rat(-4, 3), 1));
        assert_eq!(r.coeff_of([(1, 1)]), NPoly::monomial(rint(-2), 1));
    }

    #[test]
    fn cal_m_minus_two_is_quarter_of_mstar_on_constant() {
        let cal = apply_to_one(&build(OperatorName::CalM(-2), 10));
        let star = apply_to_one(&build(OperatorName::MStar(-2), 10));
        assert_eq!(cal, star.scale_rat(&rat(1, 4)));
    }

    #[test]
    fn hbar_grading_of_built_operators() {
        for k in -3..=3 {
            for name in [
                OperatorName::Lsf(k),
                OperatorName::Msf(k),
                OperatorName::MStar(k),
                OperatorName::CalL(k),
                OperatorName::CalM(k),
                OperatorName::KwL(k),
            ] {
                let op = build(name, 9);
                assert!(op.is_hbar_graded(), "{name} has a term off the hbar grading");
            }
        }
        for name in [
            OperatorName::D,
            OperatorName::W1,
            OperatorName::W2,
            OperatorName::L(Hier::Kp, -2),
            OperatorName::L(Hier::Mkp, 2),
            OperatorName::M(Hier::Mkp, -3),
        ] {
            let op = build(name, 9);
            assert!(op.is_homogeneous(), "{name} must be weight-homogeneous");
        }
    }

    #[test]
    fn miura_h_vector_identities() {
        let h = h_vectors();
        // h_i . h_j = delta_ij - 1/3
        for i in 0..3 {
            for j in 0..3 {
                let mut dot = SqrtScalar::zero();
                for p in 0..2 {
                    dot = dot.checked_add(&h[i][p].mul(&h[j][p])).unwrap();
                }
                let expected = if i == j { rat(2, 3) } else { rat(-1, 3) };
                assert_eq!(dot.to_npoly(), Some(NPoly::constant(expected)));
            }
        }
        // sum_j h_j = 0
        let e = miura_expansion();
        assert!(e.linear.iter().all(SqrtScalar::is_zero));
        // recovered normalizations: L = (1/2)(J1^2 + J2^2),
        // M = (1/sqrt(6)) (J1^2 J2 - J2^3/3)
        assert_eq!(e.quad[0][0].to_npoly(), Some(NPoly::constant(rat(1, 2))));
        assert_eq!(e.quad[1][1].to_npoly(), Some(NPoly::constant(rat(1, 2))));
        assert!(e.quad[0][1].is_zero());
        let c112 = &e.cubic[&[0, 0, 1]];
        let c222 = &e.cubic[&[1, 1, 1]];
        assert_eq!(c112.squared(), NPoly::constant(rat(1, 6)));
        assert_eq!(c222.squared(), NPoly::constant(rat(1, 54)));
        // c222 = -(1/3) c112
        assert!(c222
            .checked_add(&c112.scale_npoly(&NPoly::constant(rat(1, 3))))
            .unwrap()
            .is_zero());
    }
}
