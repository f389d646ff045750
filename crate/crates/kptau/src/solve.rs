//! Exact linear systems over `Q[N]`.
//!
//! The constraint systems the tau-engine assembles are triangular in
//! practice, so a propagation pass resolves almost everything. The residue,
//! if any, goes through elimination with constant pivots (fraction-free over
//! `Q[N]` reduces to ordinary row reduction then); when only `N`-dependent
//! pivots remain the solver falls back to sampling `N` at rational points
//! and interpolating, with a tracked degree bound. Every solution is
//! verified against all rows before being returned.

use crate::npoly::{NPoly, Rational};
use num::{One, Zero};

/// One linear equation `sum_i c_i x_i = rhs`.
#[derive(Clone, Debug)]
pub struct Row {
    pub coeffs: Vec<(usize, NPoly)>,
    pub rhs: NPoly,
}

impl Row {
    fn normalize(&mut self) {
        self.coeffs.retain(|(_, c)| !c.is_zero());
        self.coeffs.sort_by_key(|&(i, _)| i);
        let mut merged: Vec<(usize, NPoly)> = Vec::with_capacity(self.coeffs.len());
        for (i, c) in self.coeffs.drain(..) {
            match merged.last_mut() {
                Some((j, acc)) if *j == i => *acc += &c,
                _ => merged.push((i, c)),
            }
        }
        merged.retain(|(_, c)| !c.is_zero());
        self.coeffs = merged;
    }
}

#[derive(Debug, thiserror::Error, PartialEq, Eq)]
pub enum SolveError {
    #[error("inconsistent system: {0}")]
    Inconsistent(String),
    #[error("underdetermined system: {0}")]
    Underdetermined(String),
    #[error("sampling fallback failed: {0}")]
    Sampling(String),
}

/// Solve for the unique solution of an (over)determined system.
/// `degree_bound` bounds the `N`-degree of every unknown; it is only
/// consulted by the sampling fallback.
pub fn solve_unique(
    n_unknowns: usize,
    rows: Vec<Row>,
    degree_bound: usize,
) -> Result<Vec<NPoly>, SolveError> {
    let original: Vec<Row> = {
        let mut rs = rows;
        for r in &mut rs {
            r.normalize();
        }
        rs
    };
    let mut solution: Vec<Option<NPoly>> = vec![None; n_unknowns];
    let mut active: Vec<Row> = original.clone();

    // Propagation: repeatedly pin unknowns from single-unknown rows.
    loop {
        let mut progress = false;
        let mut next: Vec<Row> = Vec::with_capacity(active.len());
        for mut row in active.drain(..) {
            let mut rhs = row.rhs.clone();
            row.coeffs.retain(|(i, c)| match &solution[*i] {
                Some(v) => {
                    rhs = &rhs - &(c * v);
                    false
                }
                None => true,
            });
            row.rhs = rhs;
            match row.coeffs.len() {
                0 => {
                    if !row.rhs.is_zero() {
                        return Err(SolveError::Inconsistent(format!(
                            "0 = {} after substitution",
                            row.rhs
                        )));
                    }
                }
                1 => {
                    let (i, c) = row.coeffs[0].clone();
                    let value = row.rhs.div_exact(&c).ok_or_else(|| {
                        SolveError::Inconsistent(format!(
                            "({c}) x_{i} = {} has no polynomial solution",
                            row.rhs
                        ))
                    })?;
                    match &solution[i] {
                        Some(v) if *v != value => {
                            return Err(SolveError::Inconsistent(format!(
                                "x_{i} pinned to both {v} and {value}"
                            )));
                        }
                        Some(_) => {}
                        None => {
                            solution[i] = Some(value);
                            progress = true;
                        }
                    }
                }
                _ => next.push(row),
            }
        }
        active = next;
        if !progress {
            break;
        }
    }

    if !active.is_empty() {
        // Residual subsystem on the still-unknown variables.
        let vars: Vec<usize> = {
            let mut vs: Vec<usize> = active
                .iter()
                .flat_map(|r| r.coeffs.iter().map(|&(i, _)| i))
                .collect();
            vs.sort_unstable();
            vs.dedup();
            vs
        };
        let sub = eliminate_dense(&active, &vars, degree_bound)?;
        for (local, value) in sub.into_iter().enumerate() {
            let i = vars[local];
            match &solution[i] {
                Some(v) if *v != value => {
                    return Err(SolveError::Inconsistent(format!(
                        "x_{i} pinned to both {v} and {value}"
                    )));
                }
                _ => solution[i] = Some(value),
            }
        }
    }

    let mut out = Vec::with_capacity(n_unknowns);
    for (i, v) in solution.into_iter().enumerate() {
        match v {
            Some(v) => out.push(v),
            None => {
                return Err(SolveError::Underdetermined(format!(
                    "unknown x_{i} is not constrained by any equation"
                )))
            }
        }
    }

    // Exact verification of every original row.
    for (r, row) in original.iter().enumerate() {
        let mut acc = NPoly::zero();
        for (i, c) in &row.coeffs {
            acc += &(c * &out[*i]);
        }
        if acc != row.rhs {
            return Err(SolveError::Inconsistent(format!(
                "row {r} violated by the computed solution"
            )));
        }
    }
    Ok(out)
}

/// Dense elimination on a small residual subsystem, preferring constant
/// pivots; when a column admits only `N`-dependent pivots, solve by sampling.
fn eliminate_dense(
    rows: &[Row],
    vars: &[usize],
    degree_bound: usize,
) -> Result<Vec<NPoly>, SolveError> {
    let n = vars.len();
    let col_of = |i: usize| vars.binary_search(&i).expect("var in subsystem");
    let mut mat: Vec<Vec<NPoly>> = rows
        .iter()
        .map(|r| {
            let mut row = vec![NPoly::zero(); n + 1];
            for (i, c) in &r.coeffs {
                row[col_of(*i)] = c.clone();
            }
            row[n] = r.rhs.clone();
            row
        })
        .collect();

    let mut pivot_rows: Vec<usize> = Vec::new();
    let mut pivot_cols: Vec<usize> = Vec::new();
    let mut used = vec![false; mat.len()];
    for col in 0..n {
        let pick = (0..mat.len())
            .filter(|&r| !used[r] && !mat[r][col].is_zero())
            .min_by_key(|&r| mat[r][col].degree().unwrap_or(0));
        let Some(r0) = pick else { continue };
        if mat[r0][col].degree() != Some(0) {
            return solve_by_sampling(rows, vars, degree_bound);
        }
        used[r0] = true;
        pivot_rows.push(r0);
        pivot_cols.push(col);
        let pivot = mat[r0][col].clone();
        for r in 0..mat.len() {
            if r == r0 || mat[r][col].is_zero() {
                continue;
            }
            let factor = mat[r][col]
                .div_exact(&pivot)
                .expect("division by a constant pivot is exact");
            for c in 0..=n {
                let t = &mat[r0][c] * &factor;
                mat[r][c] = &mat[r][c] - &t;
            }
        }
    }

    if pivot_cols.len() < n {
        let missing: Vec<usize> = (0..n)
            .filter(|c| !pivot_cols.contains(c))
            .map(|c| vars[c])
            .collect();
        return Err(SolveError::Underdetermined(format!(
            "no pivot for unknowns {missing:?}"
        )));
    }
    for (r, row) in mat.iter().enumerate() {
        if !used[r] && row[..n].iter().all(NPoly::is_zero) && !row[n].is_zero() {
            return Err(SolveError::Inconsistent(format!(
                "residual row {r} reads 0 = {}",
                row[n]
            )));
        }
    }

    let mut out = vec![NPoly::zero(); n];
    for (r0, col) in pivot_rows.iter().zip(&pivot_cols) {
        let value = mat[*r0][n]
            .div_exact(&mat[*r0][*col])
            .ok_or_else(|| SolveError::Inconsistent("non-polynomial solution".into()))?;
        out[*col] = value;
    }
    Ok(out)
}

/// Solve the subsystem at `degree_bound + 1` rational values of `N` and
/// interpolate each unknown; the caller re-verifies symbolically.
fn solve_by_sampling(
    rows: &[Row],
    vars: &[usize],
    degree_bound: usize,
) -> Result<Vec<NPoly>, SolveError> {
    let n = vars.len();
    let col_of = |i: usize| vars.binary_search(&i).expect("var in subsystem");
    let needed = degree_bound + 1;
    let mut points: Vec<Rational> = Vec::with_capacity(needed);
    let mut samples: Vec<Vec<Rational>> = Vec::with_capacity(needed);
    let mut candidate: i64 = 0;
    while samples.len() < needed {
        candidate += 1;
        if candidate > 8 * needed as i64 + 64 {
            return Err(SolveError::Sampling(
                "could not find enough regular sample points".into(),
            ));
        }
        let point = Rational::from_integer(candidate.into());
        let mut mat: Vec<Vec<Rational>> = rows
            .iter()
            .map(|r| {
                let mut row = vec![Rational::zero(); n + 1];
                for (i, c) in &r.coeffs {
                    row[col_of(*i)] = c.eval(&point);
                }
                row[n] = r.rhs.eval(&point);
                row
            })
            .collect();
        match gauss_unique(&mut mat, n) {
            Ok(sol) => {
                points.push(point);
                samples.push(sol);
            }
            Err(GaussOutcome::Singular) => continue, // unlucky point
            Err(GaussOutcome::Inconsistent) => {
                return Err(SolveError::Inconsistent(format!(
                    "numeric sample at N = {candidate} is inconsistent"
                )))
            }
        }
    }
    let mut out = Vec::with_capacity(n);
    for j in 0..n {
        let values: Vec<Rational> = samples.iter().map(|s| s[j].clone()).collect();
        out.push(lagrange(&points, &values));
    }
    Ok(out)
}

enum GaussOutcome {
    Singular,
    Inconsistent,
}

/// Plain rational Gaussian elimination expecting a unique solution.
fn gauss_unique(mat: &mut [Vec<Rational>], n: usize) -> Result<Vec<Rational>, GaussOutcome> {
    let m = mat.len();
    let mut pivot_of_col: Vec<usize> = Vec::with_capacity(n);
    let mut used = vec![false; m];
    for col in 0..n {
        let Some(r0) = (0..m).find(|&r| !used[r] && !mat[r][col].is_zero()) else {
            return Err(GaussOutcome::Singular);
        };
        used[r0] = true;
        pivot_of_col.push(r0);
        let pivot = mat[r0][col].clone();
        for r in 0..m {
            if r == r0 || mat[r][col].is_zero() {
                continue;
            }
            let factor = &mat[r][col] / &pivot;
            for c in 0..=n {
                let t = &mat[r0][c] * &factor;
                mat[r][c] -= t;
            }
        }
    }
    for (r, row) in mat.iter().enumerate() {
        if !used[r] && row[..n].iter().all(Zero::is_zero) && !row[n].is_zero() {
            return Err(GaussOutcome::Inconsistent);
        }
    }
    Ok((0..n)
        .map(|col| {
            let r = pivot_of_col[col];
            &mat[r][n] / &mat[r][col]
        })
        .collect())
}

/// Interpolating polynomial through `(points[i], values[i])`.
fn lagrange(points: &[Rational], values: &[Rational]) -> NPoly {
    let mut acc = NPoly::zero();
    for (i, (xi, yi)) in points.iter().zip(values).enumerate() {
        let mut basis = NPoly::constant(Rational::one());
        for (j, xj) in points.iter().enumerate() {
            if j == i {
                continue;
            }
            let lin = NPoly::from_coeffs(vec![-xj, Rational::one()]);
            basis = &basis * &lin;
            basis = basis.scale(&(Rational::one() / (xi - xj)));
        }
        acc += &basis.scale(yi);
    }
    acc
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::npoly::{rat, rint};

    fn row(coeffs: &[(usize, NPoly)], rhs: NPoly) -> Row {
        Row { coeffs: coeffs.to_vec(), rhs }
    }

    #[test]
    fn triangular_system() {
        // 2 x0 = 1, x0 + x1 = N
        let rows = vec![
            row(&[(0, NPoly::constant(rint(2)))], NPoly::one()),
            row(&[(0, NPoly::one()), (1, NPoly::one())], NPoly::n()),
        ];
        let sol = solve_unique(2, rows, 2).unwrap();
        assert_eq!(sol[0], NPoly::constant(rat(1, 2)));
        assert_eq!(sol[1], &NPoly::n() - &NPoly::constant(rat(1, 2)));
    }

    #[test]
    fn dense_elimination_with_constant_pivots() {
        // x0 + x1 = 2 + N, x0 - x1 = -N  =>  x0 = 1, x1 = 1 + N
        let rows = vec![
            row(
                &[(0, NPoly::one()), (1, NPoly::one())],
                &NPoly::constant(rint(2)) + &NPoly::n(),
            ),
            row(
                &[(0, NPoly::one()), (1, NPoly::constant(rint(-1)))],
                -&NPoly::n(),
            ),
        ];
        let sol = solve_unique(2, rows, 1).unwrap();
        assert_eq!(sol[0], NPoly::one());
        assert_eq!(sol[1], &NPoly::one() + &NPoly::n());
    }

    #[test]
    fn sampling_fallback_for_n_dependent_pivots() {
        // N x0 + (N+1) x1 = N^2 + N + 1, (N-1) x0 + N x1 = N^2
        // unique solution x0 = N, x1 = 1 (determinant is 1)
        let rows = vec![
            row(
                &[(0, NPoly::n()), (1, &NPoly::n() + &NPoly::one())],
                &(&NPoly::monomial(rint(1), 2) + &NPoly::n()) + &NPoly::one(),
            ),
            row(
                &[(0, &NPoly::n() - &NPoly::one()), (1, NPoly::n())],
                NPoly::monomial(rint(1), 2),
            ),
        ];
        let sol = solve_unique(2, rows, 3).unwrap();
        assert_eq!(sol[0], NPoly::n());
        assert_eq!(sol[1], NPoly::one());
    }

    #[test]
    fn inconsistent_and_underdetermined_are_reported() {
        let rows = vec![
            row(&[(0, NPoly::one())], NPoly::one()),
            row(&[(0, NPoly::one())], NPoly::constant(rint(2))),
        ];
        assert!(matches!(
            solve_unique(1, rows, 1),
            Err(SolveError::Inconsistent(_))
        ));

        let rows = vec![row(&[(0, NPoly::one()), (1, NPoly::one())], NPoly::one())];
        assert!(matches!(
            solve_unique(2, rows, 1),
            Err(SolveError::Underdetermined(_))
        ));

        // an unknown untouched by any row
        let rows = vec![row(&[(0, NPoly::one())], NPoly::one())];
        assert!(matches!(
            solve_unique(2, rows, 1),
            Err(SolveError::Underdetermined(_))
        ));
    }

    #[test]
    fn overdetermined_consistent_system() {
        // x0 = 3 stated three ways, one of them N-dependent
        let rows = vec![
            row(&[(0, NPoly::one())], NPoly::constant(rint(3))),
            row(&[(0, NPoly::constant(rint(2)))], NPoly::constant(rint(6))),
            row(&[(0, NPoly::n())], NPoly::monomial(rint(3), 1)),
        ];
        let sol = solve_unique(1, rows, 1).unwrap();
        assert_eq!(sol[0], NPoly::constant(rint(3)));
    }
}
