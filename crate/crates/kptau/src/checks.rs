//! Verification suites: commutation relations on the monomial basis, the
//! Miura cross-check, proportionality of the two constraint bases, the
//! closed-series reduction, and cut-and-join grading. Each suite returns one
//! result per checked item so callers can print pass/fail lines.

use crate::constraints::{
    build, commutator_apply, lambda_apply, proportionality_constant, Hier, OpCache, OperatorName,
};
use crate::npoly::{rat, NPoly, Rational};
use crate::oper::OperatorExpr;
use crate::tau::{compute_tau_cutjoin, compute_tau_linear};
use crate::tpoly::{monomials_up_to_weight, TMonomial, TPoly};
use num::Zero;
use rayon::prelude::*;

#[derive(Clone, Debug)]
pub struct CheckResult {
    pub name: String,
    pub pass: bool,
    pub detail: String,
}

impl CheckResult {
    fn pass(name: String) -> Self {
        CheckResult { name, pass: true, detail: String::new() }
    }

    fn fail(name: String, detail: String) -> Self {
        CheckResult { name, pass: false, detail }
    }
}

pub fn all_pass(results: &[CheckResult]) -> bool {
    results.iter().all(|r| r.pass)
}

/// Check `[A, B] = sum_i c_i R_i + c0 * id` on every monomial of weight at
/// most `w`.
fn check_commutator(
    name: String,
    a: OperatorName,
    b: OperatorName,
    rhs_ops: &[(Rational, OperatorName)],
    rhs_scalar: Rational,
    w: i64,
) -> CheckResult {
    let cutoff = w
        + a.raise()
        + b.raise()
        + rhs_ops.iter().map(|(_, n)| n.raise()).max().unwrap_or(0);
    let oa = build(a, cutoff);
    let ob = build(b, cutoff);
    let rhs: Vec<(Rational, OperatorExpr)> = rhs_ops
        .iter()
        .map(|(c, n)| (c.clone(), build(*n, cutoff)))
        .collect();
    let basis = monomials_up_to_weight(w);
    let failure = basis.par_iter().find_map_any(|m| {
        let lhs = commutator_apply(&oa, &ob, m);
        let mut want = TPoly::from_monomial(m.clone(), NPoly::constant(rhs_scalar.clone()));
        for (c, op) in &rhs {
            want.add_assign(&op.apply_monomial(m).scale_rat(c));
        }
        if lhs == want {
            None
        } else {
            Some(format!("mismatch on {m}: got {lhs}, want {want}"))
        }
    });
    match failure {
        None => CheckResult::pass(name),
        Some(detail) => CheckResult::fail(name, detail),
    }
}

/// The five `W_{1+infinity}` commutation relations, KP or MKP variant, for
/// all `k, m` in the given range, on the basis of weight at most `w`.
pub fn wcomr_suite(h: Hier, k_lo: i64, k_hi: i64, w: i64) -> Vec<CheckResult> {
    let tag = match h {
        Hier::Kp => "KP",
        Hier::Mkp => "MKP",
    };
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        for m in k_lo..=k_hi {
            // [J_k, J_m] = k delta_{k,-m}
            out.push(check_commutator(
                format!("[{tag}] [J_{k}, J_{m}]"),
                OperatorName::J(h, k),
                OperatorName::J(h, m),
                &[],
                if k == -m { rat(k, 1) } else { rat(0, 1) },
                w,
            ));
            // [J_k, L_m] = k J_{k+m}
            out.push(check_commutator(
                format!("[{tag}] [J_{k}, L_{m}]"),
                OperatorName::J(h, k),
                OperatorName::L(h, m),
                &[(rat(k, 1), OperatorName::J(h, k + m))],
                rat(0, 1),
                w,
            ));
            // [L_k, L_m] = (k-m) L_{k+m} + (1/12) k (k^2-1) delta_{k,-m}
            out.push(check_commutator(
                format!("[{tag}] [L_{k}, L_{m}]"),
                OperatorName::L(h, k),
                OperatorName::L(h, m),
                &[(rat(k - m, 1), OperatorName::L(h, k + m))],
                if k == -m { rat(k * (k * k - 1), 12) } else { rat(0, 1) },
                w,
            ));
            // [L_k, M_m] = (2k-m) M_{k+m} + (1/6) k (k^2-1) J_{k+m}
            out.push(check_commutator(
                format!("[{tag}] [L_{k}, M_{m}]"),
                OperatorName::L(h, k),
                OperatorName::M(h, m),
                &[
                    (rat(2 * k - m, 1), OperatorName::M(h, k + m)),
                    (rat(k * (k * k - 1), 6), OperatorName::J(h, k + m)),
                ],
                rat(0, 1),
                w,
            ));
            // [J_k, M_m] = 2k L_{k+m}
            out.push(check_commutator(
                format!("[{tag}] [J_{k}, M_{m}]"),
                OperatorName::J(h, k),
                OperatorName::M(h, m),
                &[(rat(2 * k, 1), OperatorName::L(h, k + m))],
                rat(0, 1),
                w,
            ));
        }
    }
    out
}

/// The free-field W-algebra relations: Virasoro line with central charge 2
/// and the mixed line, for `k, m` in range, on the weight-`w` basis.
pub fn cal_virasoro_suite(k_lo: i64, k_hi: i64, w: i64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        for m in k_lo..=k_hi {
            // [CalL_k, CalL_m] = (k-m) CalL_{k+m} + (1/6) k(k^2-1) delta
            out.push(check_commutator(
                format!("[CalL_{k}, CalL_{m}]"),
                OperatorName::CalL(k),
                OperatorName::CalL(m),
                &[(rat(k - m, 1), OperatorName::CalL(k + m))],
                if k == -m { rat(k * (k * k - 1), 6) } else { rat(0, 1) },
                w,
            ));
            // [CalL_k, CalM_m] = (2k-m) CalM_{k+m}
            out.push(check_commutator(
                format!("[CalL_{k}, CalM_{m}]"),
                OperatorName::CalL(k),
                OperatorName::CalM(m),
                &[(rat(2 * k - m, 1), OperatorName::CalM(k + m))],
                rat(0, 1),
                w,
            ));
        }
    }
    out
}

/// The W-generator commutation relation with the quadratic composite, for
/// the canonically normalized generators `Wt_k = sqrt(3/2) CalM_k`:
/// `[Wt_k, Wt_m] = (1/2)(k-m) Lambda_{k+m}
///  + (1/180) k(k^2-1)(k^2-4) delta_{k,-m}
///  + (k-m) ((1/15)(k+m+3)(k+m+2) - (1/6)(k+2)(m+2)) CalL_{k+m}`.
///
/// The Miura construction hands us `CalM` with two-point normalization 4/9
/// instead of the canonical `c/3 = 2/3` (the sum over pairings of
/// `h_i . h_j = delta_ij - 1/3` evaluates to 4/9), so the composite line
/// closes for `sqrt(3/2) CalM`; the Virasoro and mixed lines are insensitive
/// to that rescaling. Checked as `(3/2) [CalM_k, CalM_m] = RHS`, exactly.
pub fn cal_w_suite(pairs: &[(i64, i64)], w: i64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    for &(k, m) in pairs {
        let name = format!("(3/2) [CalM_{k}, CalM_{m}]");
        let cutoff = w + 2 * (k.abs() + m.abs()) + 12;
        let mut cache = OpCache::new();
        let oa = build(OperatorName::CalM(k), cutoff);
        let ob = build(OperatorName::CalM(m), cutoff);
        let central = if k == -m {
            rat(k * (k * k - 1) * (k * k - 4), 180)
        } else {
            rat(0, 1)
        };
        let l_coeff = rat(k - m, 1)
            * (rat((k + m + 3) * (k + m + 2), 15) - rat((k + 2) * (m + 2), 6));
        let lambda_coeff = rat(k - m, 2);
        let ol = build(OperatorName::CalL(k + m), cutoff);
        let mut failure = None;
        for mono in monomials_up_to_weight(w) {
            let lhs = commutator_apply(&oa, &ob, &mono).scale_rat(&rat(3, 2));
            let p = TPoly::from_monomial(mono.clone(), NPoly::one());
            let mut want = lambda_apply(k + m, &p, cutoff, &mut cache).scale_rat(&lambda_coeff);
            want.add_assign(&p.scale_rat(&central));
            want.add_assign(&ol.apply(&p).scale_rat(&l_coeff));
            if lhs != want {
                failure = Some(format!("mismatch on {mono}"));
                break;
            }
        }
        out.push(match failure {
            None => CheckResult::pass(name),
            Some(d) => CheckResult::fail(name, d),
        });
    }
    out
}

/// Observed commutator of the two constraint bases:
/// `[Lc_k, Mstar_l] = 2 (2k - l) Mstar_{k+l}`.
pub fn lsf_mstar_suite(pairs: &[(i64, i64)], w: i64) -> Vec<CheckResult> {
    pairs
        .iter()
        .map(|&(k, l)| {
            check_commutator(
                format!("[Lc_{k}, Mstar_{l}]"),
                OperatorName::Lsf(k),
                OperatorName::MStar(l),
                &[(rat(2 * (2 * k - l), 1), OperatorName::MStar(k + l))],
                rat(0, 1),
                w,
            )
        })
        .collect()
}

/// Miura cross-check: the rank-3 expansion with the substitution
/// `J_(1)^2 -> CalJo^2 + 1/(8x^2)`, `J_(2) -> CalJe` reproduces the directly
/// built generators, operator by operator, plus on the weight-`w` basis.
pub fn miura_suite(k_lo: i64, k_hi: i64, w: i64) -> Vec<CheckResult> {
    let mut out = Vec::new();
    // weight-vector identities are asserted inside miura_expansion and the
    // R3 builders; surface them as one named check
    out.push(
        std::panic::catch_unwind(|| {
            crate::constraints::miura_expansion();
        })
        .map(|_| CheckResult::pass("Miura weight-vector identities".into()))
        .unwrap_or_else(|_| {
            CheckResult::fail(
                "Miura weight-vector identities".into(),
                "h-vector expansion violated an identity".into(),
            )
        }),
    );
    let basis = monomials_up_to_weight(w);
    for k in k_lo..=k_hi {
        let cutoff = w + OperatorName::CalL(k).raise();
        for (name, lhs, rhs) in [
            ("L", OperatorName::R3L(k), OperatorName::CalL(k)),
            ("M", OperatorName::R3M(k), OperatorName::CalM(k)),
        ] {
            let a = build(lhs, cutoff);
            let b = build(rhs, cutoff);
            let label = format!("Miura {name} mode {k}");
            if a != b {
                out.push(CheckResult::fail(
                    label,
                    "operator-level term mismatch".into(),
                ));
                continue;
            }
            let bad = basis
                .par_iter()
                .find_map_any(|m| (a.apply_monomial(m) != b.apply_monomial(m)).then(|| m.to_string()));
            out.push(match bad {
                None => CheckResult::pass(label),
                Some(m) => CheckResult::fail(label, format!("action mismatch on {m}")),
            });
        }
    }
    out
}

/// The two constraint bases agree up to single constants: `CalL = c_L Lc`
/// and `CalM = c_M Mstar` on the whole basis, with `c` independent of the
/// mode index. The identification only holds on the constraint ranges
/// (`k >= -1` for the Virasoro family, `k >= -2` for the W one), where the
/// negative parts of the generating functions were matched; the constants
/// themselves are pinned (1/2 and 1/4).
pub fn proportionality_suite(k_lo: i64, k_hi: i64, w: i64) -> Vec<CheckResult> {
    let ks: Vec<i64> = (k_lo.max(-1)..=k_hi).collect();
    let mut out = Vec::new();
    match proportionality_constant(OperatorName::CalL, OperatorName::Lsf, &ks, w) {
        Ok(c) if c == rat(1, 2) => out.push(CheckResult::pass("CalL = (1/2) Lc".into())),
        Ok(c) => out.push(CheckResult::fail(
            "CalL = (1/2) Lc".into(),
            format!("constant came out as {c}"),
        )),
        Err(e) => out.push(CheckResult::fail("CalL = (1/2) Lc".into(), e)),
    }
    let ks: Vec<i64> = (k_lo.max(-2)..=k_hi).collect();
    match proportionality_constant(OperatorName::CalM, OperatorName::MStar, &ks, w) {
        Ok(c) if c == rat(1, 4) => out.push(CheckResult::pass("CalM = (1/4) Mstar".into())),
        Ok(c) => out.push(CheckResult::fail(
            "CalM = (1/4) Mstar".into(),
            format!("constant came out as {c}"),
        )),
        Err(e) => out.push(CheckResult::fail("CalM = (1/4) Mstar".into(), e)),
    }
    out
}

/// Closed-series reduction at `N = 0`: on odd-variable monomials,
/// `(1/2) Lc_k` coincides with `(1/2) L_{2k} - (1/2) J_{2k+3} + (1/16) delta_{k,0}`.
pub fn kw_reduction_suite(k_lo: i64, k_hi: i64, w: i64) -> Vec<CheckResult> {
    let zero = Rational::zero();
    let basis: Vec<TMonomial> = monomials_up_to_weight(w)
        .into_iter()
        .filter(TMonomial::is_odd_vars_only)
        .collect();
    let mut out = Vec::new();
    for k in k_lo..=k_hi {
        let cutoff = w + OperatorName::Lsf(k).raise();
        let lsf0 = build(OperatorName::Lsf(k), cutoff).eval_n(&zero);
        let l2k = build(OperatorName::L(Hier::Kp, 2 * k), cutoff);
        let j = build(OperatorName::J(Hier::Kp, 2 * k + 3), cutoff);
        let name = format!("KW reduction of Lc_{k}");
        let bad = basis.par_iter().find_map_any(|m| {
            let p = TPoly::from_monomial(m.clone(), NPoly::one());
            let lhs = lsf0.apply(&p).scale_rat(&rat(1, 2));
            let mut want = l2k.apply(&p).scale_rat(&rat(1, 2));
            want.add_assign(&j.apply(&p).scale_rat(&rat(-1, 2)));
            if k == 0 {
                want.add_assign(&p.scale_rat(&rat(1, 16)));
            }
            (lhs != want).then(|| m.to_string())
        });
        out.push(match bad {
            None => CheckResult::pass(name),
            Some(m) => CheckResult::fail(name, format!("mismatch on {m}")),
        });
    }
    out
}

/// Cut-and-join grading: `W1` shifts every basis monomial of weight at most
/// `w` by exactly +3, `W2` by exactly +6; `D` is weight-preserving with
/// eigenvalue weight/3.
pub fn w_shift_suite(w: i64) -> Vec<CheckResult> {
    let basis = monomials_up_to_weight(w);
    let mut out = Vec::new();
    for (name, op_name, shift) in [
        ("W1 shifts weight by +3", OperatorName::W1, 3),
        ("W2 shifts weight by +6", OperatorName::W2, 6),
    ] {
        let op = build(op_name, w + shift);
        let bad = basis.par_iter().find_map_any(|m| {
            let img = op.apply_monomial(m);
            (!img.is_homogeneous_of(m.weight() + shift)).then(|| m.to_string())
        });
        out.push(match bad {
            None => CheckResult::pass(name.into()),
            Some(m) => CheckResult::fail(name.into(), format!("inhomogeneous image of {m}")),
        });
    }
    let d = build(OperatorName::D, w);
    let bad = basis.par_iter().find_map_any(|m| {
        let got = d.apply_monomial(m);
        let want = TPoly::from_monomial(m.clone(), NPoly::constant(rat(m.weight(), 3)));
        (got != want).then(|| m.to_string())
    });
    out.push(match bad {
        None => CheckResult::pass("D has eigenvalue weight/3".into()),
        Some(m) => CheckResult::fail("D has eigenvalue weight/3".into(), format!("on {m}")),
    });
    out
}

/// The boundary-index convention audit: with `d/dt_0 = 0` the constant mode
/// of `Lc_0` matches twice the free-field `CalL_0` on the constant; the
/// alternative reading `d/dt_0 -> N` (an extra `3N^2`) does not.
pub fn convention_suite(w: i64) -> Vec<CheckResult> {
    let one = TPoly::one();
    let lsf0 = build(OperatorName::Lsf(0), w);
    let cal0 = build(OperatorName::CalL(0), w);
    let standard = lsf0.apply(&one).scale_rat(&rat(1, 2));
    let free_field = cal0.apply(&one);
    let mut out = Vec::new();
    out.push(if standard == free_field {
        CheckResult::pass("dt0=0 convention agrees with free-field zero mode".into())
    } else {
        CheckResult::fail(
            "dt0=0 convention agrees with free-field zero mode".into(),
            format!("(1/2) Lc_0 1 = {standard} vs CalL_0 1 = {free_field}"),
        )
    });
    // alternative convention: 3N d_0 -> 3N^2
    let mut alt = lsf0.clone();
    alt.add_term(vec![], vec![], NPoly::monomial(rat(3, 1), 2));
    let alt_val = alt.apply(&one).scale_rat(&rat(1, 2));
    out.push(if alt_val != free_field {
        CheckResult::pass("alternative d0->N convention is rejected".into())
    } else {
        CheckResult::fail(
            "alternative d0->N convention is rejected".into(),
            "the alternative agreed; the audit is vacuous".into(),
        )
    });
    out
}

/// Oracle equivalence: the cut-and-join series equals the constraint-solved
/// series layer by layer.
pub fn oracle_suite(g_max: usize) -> Vec<CheckResult> {
    let a = compute_tau_cutjoin(g_max);
    match compute_tau_linear(g_max) {
        Err(e) => vec![CheckResult::fail(
            format!("linear solve through g = {g_max}"),
            e.to_string(),
        )],
        Ok(b) => (0..=g_max)
            .map(|g| {
                let name = format!("cut-and-join = constraint solve at layer {g}");
                if a.layer(g) == b.layer(g) {
                    CheckResult::pass(name)
                } else {
                    CheckResult::fail(name, "layers differ".into())
                }
            })
            .collect(),
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn wcomr_small_range() {
        for h in [Hier::Kp, Hier::Mkp] {
            let results = wcomr_suite(h, -2, 2, 6);
            for r in &results {
                assert!(r.pass, "{}: {}", r.name, r.detail);
            }
        }
    }

    #[test]
    fn cal_virasoro_small_range() {
        let results = cal_virasoro_suite(-2, 2, 6);
        for r in &results {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn cal_w_pairs() {
        let results = cal_w_suite(&[(1, -1), (2, -2)], 6);
        for r in &results {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn miura_small() {
        let results = miura_suite(-3, 3, 6);
        for r in &results {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn proportionality_small() {
        let results = proportionality_suite(-2, 2, 6);
        for r in &results {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn kw_reduction_small() {
        let results = kw_reduction_suite(-1, 2, 7);
        for r in &results {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }

    #[test]
    fn shifts_and_convention() {
        assert!(all_pass(&w_shift_suite(7)));
        assert!(all_pass(&convention_suite(8)));
    }

    #[test]
    fn lsf_mstar_observed_relation() {
        let results = lsf_mstar_suite(&[(1, -1), (0, 1), (-1, 0), (2, -2)], 6);
        for r in &results {
            assert!(r.pass, "{}: {}", r.name, r.detail);
        }
    }
}
