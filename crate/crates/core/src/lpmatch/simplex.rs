//! Phase-1 simplex on a dense tableau, generic over the scalar field so the
//! same pivoting code runs in `f64` and in exact rational arithmetic.
//!
//! The only question asked here is feasibility of `A x = b, x >= 0`: we
//! minimize the sum of one artificial variable per row and report the
//! minimum together with the structural solution. Bland's rule (smallest
//! eligible index enters; ties in the ratio test go to the smallest basic
//! index) makes the pivot sequence deterministic and, with exact arithmetic,
//! provably finite.

use num::{One, Zero};
use std::ops::{Div, Neg, Sub};

pub(crate) trait LpNum:
    Clone + PartialOrd + Zero + One + Neg<Output = Self> + Sub<Output = Self> + Div<Output = Self>
{
}

impl<T> LpNum for T where
    T: Clone
        + PartialOrd
        + Zero
        + One
        + Neg<Output = Self>
        + Sub<Output = Self>
        + Div<Output = Self>
{
}

/// One equality row: sparse structural coefficients and a right-hand side.
pub(crate) struct Row<T> {
    pub cols: Vec<(usize, T)>,
    pub rhs: T,
}

pub(crate) struct Phase1Solution<T> {
    /// Minimum of the artificial sum; zero (within the caller's tolerance)
    /// means the original system is feasible.
    pub objective: T,
    /// Structural variable values at the minimum.
    pub x: Vec<T>,
}

#[derive(Debug)]
pub(crate) enum SimplexError {
    /// The pivot loop exceeded its iteration budget; with inexact arithmetic
    /// this signals numerical stalling.
    Stalled { iterations: usize },
}

/// Minimizes the artificial sum for `A x = b, x >= 0` with `ncols`
/// structural variables. Right-hand sides must be nonnegative. `eps` is the
/// pivot tolerance: zero for exact arithmetic.
pub(crate) fn phase1<T: LpNum>(
    ncols: usize,
    rows: &[Row<T>],
    eps: T,
) -> Result<Phase1Solution<T>, SimplexError> {
    let m = rows.len();
    let width = ncols + m + 1; // structural + artificial + rhs
    let rhs_col = ncols + m;

    // Tableau rows [A | I | b] with artificial i basic in row i.
    let mut tab: Vec<Vec<T>> = Vec::with_capacity(m);
    for (i, row) in rows.iter().enumerate() {
        debug_assert!(row.rhs >= T::zero());
        let mut dense = vec![T::zero(); width];
        for (j, coeff) in &row.cols {
            debug_assert!(*j < ncols);
            dense[*j] = coeff.clone();
        }
        dense[ncols + i] = T::one();
        dense[rhs_col] = row.rhs.clone();
        tab.push(dense);
    }
    let mut basis: Vec<usize> = (ncols..ncols + m).collect();

    // Price out the artificial basis: obj[j] becomes the reduced cost of
    // column j and -obj[rhs] the current objective value.
    let mut obj = vec![T::zero(); width];
    for a in 0..m {
        obj[ncols + a] = T::one();
    }
    for row in &tab {
        for j in 0..width {
            obj[j] = obj[j].clone() - row[j].clone();
        }
    }

    let neg_eps = -eps.clone();
    let max_iters = 200 * (m + ncols) + 10_000;
    for iteration in 0.. {
        if iteration >= max_iters {
            return Err(SimplexError::Stalled {
                iterations: iteration,
            });
        }

        // Entering column: smallest structural index with negative reduced
        // cost. Artificial columns never re-enter.
        let Some(pivot_col) = (0..ncols).find(|&j| obj[j] < neg_eps) else {
            break;
        };

        // Ratio test over rows with a positive pivot-column entry.
        let mut pivot_row: Option<usize> = None;
        let mut best_ratio: Option<T> = None;
        for i in 0..m {
            if tab[i][pivot_col] <= eps {
                continue;
            }
            let ratio = tab[i][rhs_col].clone() / tab[i][pivot_col].clone();
            let better = match &best_ratio {
                None => true,
                Some(best) => {
                    ratio < *best
                        || (ratio == *best
                            && basis[i] < basis[pivot_row.expect("row set with ratio")])
                }
            };
            if better {
                best_ratio = Some(ratio);
                pivot_row = Some(i);
            }
        }
        let Some(pr) = pivot_row else {
            // A negative reduced cost with no blocking row would mean the
            // artificial sum is unbounded below, which cannot happen; treat
            // it as numerical breakdown.
            return Err(SimplexError::Stalled {
                iterations: iteration,
            });
        };

        // Normalize the pivot row, eliminate the column elsewhere.
        let pivot = tab[pr][pivot_col].clone();
        for j in 0..width {
            tab[pr][j] = tab[pr][j].clone() / pivot.clone();
        }
        for i in 0..m {
            if i == pr || tab[i][pivot_col].is_zero() {
                continue;
            }
            let factor = tab[i][pivot_col].clone();
            for j in 0..width {
                tab[i][j] = tab[i][j].clone() - factor.clone() * tab[pr][j].clone();
            }
        }
        if !obj[pivot_col].is_zero() {
            let factor = obj[pivot_col].clone();
            for j in 0..width {
                obj[j] = obj[j].clone() - factor.clone() * tab[pr][j].clone();
            }
        }
        basis[pr] = pivot_col;

        // Keep right-hand sides clean: exact zeros can come out as tiny
        // negatives in floating point.
        for row in tab.iter_mut() {
            if row[rhs_col] < T::zero() {
                row[rhs_col] = T::zero();
            }
        }
    }

    let mut x = vec![T::zero(); ncols];
    for (i, &b) in basis.iter().enumerate() {
        if b < ncols {
            x[b] = tab[i][rhs_col].clone();
        }
    }
    let mut objective = -obj[rhs_col].clone();
    if objective < T::zero() {
        objective = T::zero();
    }
    Ok(Phase1Solution { objective, x })
}
