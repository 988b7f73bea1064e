//! Exact Gaussian elimination over [`Expr`].

use super::expr::Expr;
use super::zero::{Probe, ZeroTest};
use super::SymError;

#[derive(Clone, Debug, PartialEq)]
pub struct LinearSolution {
    pub particular: Vec<Expr>,
    pub nullspace: Vec<Vec<Expr>>,
    /// Pivot candidates or consistency checks that had to be assumed zero.
    pub warnings: Vec<String>,
}

/// Solves `coeffs · x = rhs`, returning a particular solution and a nullspace
/// basis. Pivots are chosen among certified nonzero entries, preferring
/// atom-free ones.
pub fn solve_linear(coeffs: &[Vec<Expr>], rhs: &[Expr], probe: &Probe) -> Result<LinearSolution, SymError> {
    let rows = coeffs.len();
    assert_eq!(rows, rhs.len(), "row count mismatch");
    let cols = coeffs.first().map_or(0, Vec::len);
    let mut m: Vec<Vec<Expr>> = coeffs
        .iter()
        .zip(rhs)
        .map(|(r, b)| {
            assert_eq!(r.len(), cols, "ragged matrix");
            let mut row = r.clone();
            row.push(b.clone());
            row
        })
        .collect();
    let mut warnings = Vec::new();
    let mut pivots: Vec<(usize, usize)> = Vec::new();
    let mut next = 0;
    for col in 0..cols {
        if next == rows {
            break;
        }
        let mut best: Option<(usize, bool)> = None;
        let mut unknown = false;
        for (r, row) in m.iter().enumerate().skip(next) {
            let e = &row[col];
            match probe.zero_test(e) {
                ZeroTest::Zero => {}
                ZeroTest::Unknown => unknown = true,
                ZeroTest::NonZero => {
                    let cheap = e.is_atom_free();
                    if best.is_none_or(|(_, c)| cheap && !c) {
                        best = Some((r, cheap));
                    }
                    if cheap {
                        break;
                    }
                }
            }
        }
        let Some((pr, _)) = best else {
            if unknown {
                warnings.push(format!("column {col}: undecided pivot candidates assumed zero"));
            }
            continue;
        };
        m.swap(next, pr);
        // fraction-free: r ← p·r − f·pivot_row, so no division happens here
        let pivot_row = m[next].clone();
        let p = &pivot_row[col];
        for (r, row) in m.iter_mut().enumerate() {
            if r == next || row[col].is_zero() {
                continue;
            }
            let f = row[col].clone();
            for (x, y) in row.iter_mut().zip(&pivot_row) {
                let scaled = if x.is_zero() { Expr::zero() } else { p * &*x };
                *x = if y.is_zero() { scaled } else { &scaled - &(&f * y) };
            }
        }
        pivots.push((next, col));
        next += 1;
    }
    for &(r, c) in &pivots {
        let inv = Expr::one().div_unchecked(&m[r][c])?;
        m[r] = m[r].iter().map(|e| if e.is_zero() { Expr::zero() } else { e * &inv }).collect();
    }
    for row in m.iter().skip(next) {
        match probe.zero_test(&row[cols]) {
            ZeroTest::Zero => {}
            ZeroTest::NonZero => return Err(SymError::Inconsistent),
            ZeroTest::Unknown => warnings.push("undecided consistency condition assumed zero".to_string()),
        }
    }
    let mut particular = vec![Expr::zero(); cols];
    let mut is_pivot = vec![false; cols];
    for &(r, c) in &pivots {
        particular[c] = m[r][cols].clone();
        is_pivot[c] = true;
    }
    let mut nullspace = Vec::new();
    for free in (0..cols).filter(|&c| !is_pivot[c]) {
        let mut v = vec![Expr::zero(); cols];
        v[free] = Expr::one();
        for &(r, c) in &pivots {
            v[c] = -&m[r][free];
        }
        nullspace.push(v);
    }
    let sol = LinearSolution { particular, nullspace, warnings };
    if !sol.warnings.is_empty() {
        verify(coeffs, rhs, &sol, probe)?;
    }
    Ok(sol)
}

fn verify(coeffs: &[Vec<Expr>], rhs: &[Expr], sol: &LinearSolution, probe: &Probe) -> Result<(), SymError> {
    let zero = vec![Expr::zero(); rhs.len()];
    let checks = std::iter::once((&sol.particular, rhs)).chain(sol.nullspace.iter().map(|v| (v, zero.as_slice())));
    for (x, b) in checks {
        for (row, bi) in coeffs.iter().zip(b) {
            if probe.zero_test(&(&dot(row, x) - bi)) == ZeroTest::NonZero {
                return Err(SymError::PivotUnknown);
            }
        }
    }
    Ok(())
}

pub fn dot(a: &[Expr], b: &[Expr]) -> Expr {
    a.iter()
        .zip(b)
        .filter(|(x, y)| !x.is_zero() && !y.is_zero())
        .fold(Expr::zero(), |acc, (x, y)| &acc + &(x * y))
}
