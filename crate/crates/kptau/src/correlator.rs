//! From the tau series to open intersection numbers: free energy, geometric
//! time variables, correlator extraction, and the closed (N = 0) reduction.
//!
//! Conventions: `t_{2a+1} = T_a / (2a+1)!!` carries an interior insertion
//! with descendent `a`; `t_{2b+2} = S_b / (2^{b+1} (b+1)!)` a boundary one
//! with descendent `b`. The power of `N` counts boundaries, and the layer
//! (`hbar`-degree) fixes the genus through `2h - 2 + b + k + l = g`.

use crate::npoly::Rational;
#[cfg(test)]
use num::Zero as _;
use crate::tau::{SeriesKind, TauSeries};
use crate::tpoly::{TMonomial, TPoly};
use num::{BigInt, One, Zero};
use std::fmt::Write as _;

/// Layer-wise logarithm: `F = log tau`, exact.
pub fn free_energy(tau: &TauSeries) -> TauSeries {
    assert_eq!(tau.kind(), SeriesKind::Tau);
    let w = 3 * tau.g_max() as i64;
    let f = tau.total().log_truncated(w);
    let layers = (0..=tau.g_max()).map(|g| f.weight_layer(3 * g as i64)).collect();
    TauSeries::new(SeriesKind::FreeEnergy, layers, tau.n_eval().cloned())
}

/// Inverse of [`free_energy`]: `tau = exp F`, exact.
pub fn exp_free_energy(f: &TauSeries) -> TauSeries {
    assert_eq!(f.kind(), SeriesKind::FreeEnergy);
    let w = 3 * f.g_max() as i64;
    let t = f.total().exp_truncated(w);
    let layers = (0..=f.g_max()).map(|g| t.weight_layer(3 * g as i64)).collect();
    TauSeries::new(SeriesKind::Tau, layers, f.n_eval().cloned())
}

/// `(2k+1)!!`.
fn double_factorial_odd(k: u32) -> Rational {
    let mut acc = BigInt::one();
    let mut m = 1i64;
    while m <= 2 * k as i64 + 1 {
        acc *= m;
        m += 2;
    }
    Rational::from_integer(acc)
}

/// `2^{k+1} (k+1)!`.
fn even_time_factor(k: u32) -> Rational {
    let mut acc = BigInt::one();
    for i in 1..=(k as i64 + 1) {
        acc *= 2 * i;
    }
    Rational::from_integer(acc)
}

fn factorial(n: u32) -> Rational {
    let mut acc = BigInt::one();
    for i in 1..=n as i64 {
        acc *= i;
    }
    Rational::from_integer(acc)
}

/// Per-variable rescaling from the `t` normalization to the geometric one:
/// returns the factor `c_v` with `t_v = (geometric variable) / c_v`.
fn geometric_factor(v: u32) -> Rational {
    if v % 2 == 1 {
        double_factorial_odd((v - 1) / 2)
    } else {
        even_time_factor(v / 2 - 1)
    }
}

/// Change variables to the geometric times: `t_{2k+1} -> T_k / (2k+1)!!`
/// read backwards, i.e. the returned series uses the same variable slots
/// with slot `2k+1` holding `T_k` and slot `2k+2` holding `S_k`.
pub fn to_geometric_times(f: &TauSeries) -> TauSeries {
    let layers = f
        .layers()
        .iter()
        .map(|layer| {
            let mut out = TPoly::zero();
            for (m, c) in layer.iter() {
                let mut factor = Rational::one();
                for &(v, e) in m.exps() {
                    let base = geometric_factor(v);
                    for _ in 0..e {
                        factor = factor / &base;
                    }
                }
                out.insert_add(m.clone(), c.scale(&factor));
            }
            out
        })
        .collect();
    TauSeries::new(f.kind(), layers, f.n_eval().cloned())
}

/// A correlator label: interior descendents `alphas`, boundary descendents
/// `betas`, genus `h`, boundary count `b`.
#[derive(Clone, PartialEq, Eq, PartialOrd, Ord, Debug)]
pub struct CorrelatorKey {
    pub alphas: Vec<u32>,
    pub betas: Vec<u32>,
    pub h: i64,
    pub b: i64,
}

impl CorrelatorKey {
    pub fn new(mut alphas: Vec<u32>, mut betas: Vec<u32>, h: i64, b: i64) -> Self {
        alphas.sort_unstable();
        betas.sort_unstable();
        CorrelatorKey { alphas, betas, h, b }
    }

    /// Real dimension of the moduli space: `6h - 6 + 3b + k + 2l`.
    pub fn dimension(&self) -> i64 {
        let k = self.betas.len() as i64;
        let l = self.alphas.len() as i64;
        6 * self.h - 6 + 3 * self.b + k + 2 * l
    }

    /// Total descendent degree `2 sum alpha + 2 sum beta`.
    pub fn form_degree(&self) -> i64 {
        2 * (self.alphas.iter().map(|&a| a as i64).sum::<i64>()
            + self.betas.iter().map(|&b| b as i64).sum::<i64>())
    }

    /// `4h - 4 + 2b + k + 2l > 0`.
    pub fn is_stable(&self) -> bool {
        let k = self.betas.len() as i64;
        let l = self.alphas.len() as i64;
        4 * self.h - 4 + 2 * self.b + k + 2 * l > 0
    }

    /// The time monomial carrying this correlator.
    pub fn monomial(&self) -> TMonomial {
        TMonomial::from_exps(
            self.alphas
                .iter()
                .map(|&a| (2 * a + 1, 1))
                .chain(self.betas.iter().map(|&b| (2 * b + 2, 1))),
        )
    }
}

/// Outcome of a correlator lookup.
#[derive(Clone, PartialEq, Eq, Debug)]
pub enum CorrelatorValue {
    Value(Rational),
    /// Dimension is odd: reported as zero, flagged for the caller.
    OddDimension,
    /// Dimension constraint violated: the value is zero by grading.
    DimensionMismatch { dimension: i64, form_degree: i64 },
}

impl CorrelatorValue {
    pub fn rational(&self) -> Rational {
        match self {
            CorrelatorValue::Value(v) => v.clone(),
            _ => Rational::zero(),
        }
    }
}

/// Read one correlator off the free energy: the coefficient of the key's
/// monomial in geometric variables, restricted to `N^b`, times the symmetry
/// factor (product of descendent multiplicity factorials).
pub fn correlator(f: &TauSeries, key: &CorrelatorKey) -> CorrelatorValue {
    assert_eq!(f.kind(), SeriesKind::FreeEnergy);
    assert!(
        f.n_eval().is_none(),
        "correlator extraction needs the symbolic N dependence"
    );
    let dim = key.dimension();
    if dim % 2 != 0 {
        return CorrelatorValue::OddDimension;
    }
    if dim != key.form_degree() {
        return CorrelatorValue::DimensionMismatch { dimension: dim, form_degree: key.form_degree() };
    }
    let mono = key.monomial();
    let coeff = f.coeff(&mono);
    if key.b < 0 {
        return CorrelatorValue::Value(Rational::zero());
    }
    let n_part = coeff.coeff(key.b as usize);
    // convert from t-normalization and apply the symmetry factor
    let mut value = n_part;
    for &(v, e) in mono.exps() {
        let base = geometric_factor(v);
        for _ in 0..e {
            value = value / &base;
        }
        value = value * factorial(e);
    }
    CorrelatorValue::Value(value)
}

#[derive(Debug, thiserror::Error)]
pub enum KwError {
    #[error("coefficient of {0} involves an even time variable at N = 0")]
    EvenSurvivor(String),
}

/// Specialize to the closed series: evaluate at `N = 0`, check that every
/// even-variable coefficient vanishes, and return the odd-time series.
pub fn kw_specialize(tau: &TauSeries) -> Result<TauSeries, KwError> {
    let at_zero = tau.eval_n(&Rational::zero());
    for layer in at_zero.layers() {
        for (m, _) in layer.iter() {
            if !m.is_odd_vars_only() {
                return Err(KwError::EvenSurvivor(m.to_string()));
            }
        }
    }
    Ok(at_zero)
}

/// One row of the exported correlator table.
#[derive(Clone, PartialEq, Eq, Debug)]
pub struct CorrelatorRow {
    pub key: CorrelatorKey,
    pub value: Rational,
}

#[derive(Debug, thiserror::Error)]
pub enum TableError {
    #[error("monomial {0} with N^{1} forces a non-integral or negative genus")]
    BadGenus(String, usize),
}

/// Enumerate every nonzero correlator the series determines, in canonical
/// order. Each free-energy coefficient belongs to a unique topology:
/// `b` is the `N`-power and the genus follows from the layer.
pub fn correlator_table(f: &TauSeries) -> Result<Vec<CorrelatorRow>, TableError> {
    assert_eq!(f.kind(), SeriesKind::FreeEnergy);
    let mut rows = Vec::new();
    for (g, layer) in f.layers().iter().enumerate() {
        for (m, c) in layer.iter() {
            let mut alphas = Vec::new();
            let mut betas = Vec::new();
            for &(v, e) in m.exps() {
                for _ in 0..e {
                    if v % 2 == 1 {
                        alphas.push((v - 1) / 2);
                    } else {
                        betas.push(v / 2 - 1);
                    }
                }
            }
            let k = betas.len() as i64;
            let l = alphas.len() as i64;
            for b in 0..=c.degree().unwrap_or(0) {
                if c.coeff(b).is_zero() {
                    continue;
                }
                // 2h - 2 + b + k + l = g
                let two_h = g as i64 + 2 - b as i64 - k - l;
                if two_h < 0 || two_h % 2 != 0 {
                    return Err(TableError::BadGenus(m.to_string(), b));
                }
                let key = CorrelatorKey::new(alphas.clone(), betas.clone(), two_h / 2, b as i64);
                match correlator(f, &key) {
                    CorrelatorValue::Value(v) if !v.is_zero() => {
                        rows.push(CorrelatorRow { key, value: v })
                    }
                    _ => {}
                }
            }
        }
    }
    rows.sort_by(|a, b| a.key.cmp(&b.key));
    Ok(rows)
}

/// Render a table as aligned text.
pub fn table_to_text(rows: &[CorrelatorRow]) -> String {
    let mut lines: Vec<(String, String, String, String, String)> = Vec::new();
    for r in rows {
        lines.push((
            format!("{:?}", r.key.alphas),
            format!("{:?}", r.key.betas),
            r.key.h.to_string(),
            r.key.b.to_string(),
            r.value.to_string(),
        ));
    }
    let width = |sel: fn(&(String, String, String, String, String)) -> &String| {
        lines.iter().map(|l| sel(l).len()).max().unwrap_or(1)
    };
    let (wa, wb, wh, wn) = (
        width(|l| &l.0).max(6),
        width(|l| &l.1).max(5),
        width(|l| &l.2).max(1),
        width(|l| &l.3).max(1),
    );
    let mut s = String::new();
    let _ = writeln!(s, "{:<wa$}  {:<wb$}  {:>wh$}  {:>wn$}  value", "alphas", "betas", "h", "b");
    for l in &lines {
        let _ = writeln!(s, "{:<wa$}  {:<wb$}  {:>wh$}  {:>wn$}  {}", l.0, l.1, l.2, l.3, l.4);
    }
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::npoly::{rat, rint, NPoly};
    use crate::tau::compute_tau_cutjoin;

    #[test]
    fn free_energy_round_trip() {
        let tau = compute_tau_cutjoin(4);
        let f = free_energy(&tau);
        assert!(f.layer(0).is_zero());
        let back = exp_free_energy(&f);
        for g in 0..=4 {
            assert_eq!(back.layer(g), tau.layer(g), "layer {g}");
        }
    }

    #[test]
    fn geometric_factors() {
        // t_1 -> T_0 (factor 1), t_2 -> S_0/2, t_3 -> T_1/3
        assert_eq!(geometric_factor(1), rint(1));
        assert_eq!(geometric_factor(2), rint(2));
        assert_eq!(geometric_factor(3), rint(3));
        assert_eq!(geometric_factor(4), rint(8)); // 2^2 * 2!
        assert_eq!(geometric_factor(5), rint(15));
    }

    #[test]
    fn desk_correlators() {
        let f = free_energy(&compute_tau_cutjoin(2));
        // <tau_0^3>_{0,0} = 1
        let c = correlator(&f, &CorrelatorKey::new(vec![0, 0, 0], vec![], 0, 0));
        assert_eq!(c, CorrelatorValue::Value(rint(1)));
        // <tau_0 sigma_0>_{0,1} = 1
        let c = correlator(&f, &CorrelatorKey::new(vec![0], vec![0], 0, 1));
        assert_eq!(c, CorrelatorValue::Value(rint(1)));
        // <tau_1>_{1,0} = 1/24
        let c = correlator(&f, &CorrelatorKey::new(vec![1], vec![], 1, 0));
        assert_eq!(c, CorrelatorValue::Value(rat(1, 24)));
    }

    #[test]
    fn dimension_flags() {
        let f = free_energy(&compute_tau_cutjoin(1));
        // odd total dimension (6h - 6 + 3b + k + 2l = -1): flagged, value zero
        let key = CorrelatorKey::new(vec![], vec![0, 0], 0, 1);
        assert_eq!(correlator(&f, &key), CorrelatorValue::OddDimension);
        assert_eq!(correlator(&f, &key).rational(), Rational::zero());
        // dimension mismatch: <tau_2>_{0,0} has dim -4 but degree 4
        let key = CorrelatorKey::new(vec![2], vec![], 0, 0);
        assert!(matches!(
            correlator(&f, &key),
            CorrelatorValue::DimensionMismatch { .. }
        ));
    }

    #[test]
    fn kw_specialization() {
        let tau = compute_tau_cutjoin(2);
        let closed = kw_specialize(&tau).unwrap();
        // coeff(t_3) = 1/8, coeff(t_1^3) = 1/6 at N = 0
        assert_eq!(
            closed.coeff(&TMonomial::var(3)),
            NPoly::constant(rat(1, 8))
        );
        assert_eq!(
            closed.coeff(&TMonomial::from_exps([(1, 3)])),
            NPoly::constant(rat(1, 6))
        );
        for layer in closed.layers() {
            for (m, _) in layer.iter() {
                assert!(m.is_odd_vars_only());
            }
        }
    }

    #[test]
    fn table_contains_desk_rows_and_reconstructs_free_energy() {
        let f = free_energy(&compute_tau_cutjoin(2));
        let rows = correlator_table(&f).unwrap();
        let find = |alphas: &[u32], betas: &[u32], h: i64, b: i64| {
            rows.iter()
                .find(|r| r.key == CorrelatorKey::new(alphas.to_vec(), betas.to_vec(), h, b))
                .map(|r| r.value.clone())
        };
        assert_eq!(find(&[0, 0, 0], &[], 0, 0), Some(rint(1)));
        assert_eq!(find(&[0], &[0], 0, 1), Some(rint(1)));
        assert_eq!(find(&[1], &[], 1, 0), Some(rat(1, 24)));

        // symmetry-factor round trip: rebuild F from the rows
        let mut rebuilt = TPoly::zero();
        for r in &rows {
            let mono = r.key.monomial();
            let mut c = r.value.clone();
            for &(v, e) in mono.exps() {
                let base = geometric_factor(v);
                for _ in 0..e {
                    c = c * &base;
                }
                c = c / factorial(e);
            }
            rebuilt.insert_add(mono, NPoly::monomial(c, r.key.b as usize));
        }
        assert_eq!(rebuilt, f.total());

        // every emitted row is stable and of even dimension
        for r in &rows {
            assert!(r.key.is_stable(), "unstable row {:?}", r.key);
            assert_eq!(r.key.dimension() % 2, 0);
            assert_eq!(r.key.dimension(), r.key.form_degree());
        }
    }
}
