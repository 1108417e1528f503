//! Exact rational re-solve of a matching problem.
//!
//! Floating right-hand sides convert losslessly to rationals (every finite
//! `f64` is dyadic), so the phase-1 minimum computed here is the exact
//! infeasibility amount of the system as posed in floating point.

use num::rational::BigRational;
use num::{FromPrimitive, ToPrimitive, Zero};

use super::simplex::{phase1, Row, SimplexError};

/// Hard cap on cells for the exact solver; rational pivots are expensive.
pub const EXACT_CELL_CAP: usize = 1 << 12;

pub(crate) fn to_rational(x: f64) -> Option<BigRational> {
    BigRational::from_f64(x)
}

pub(crate) fn to_float(x: &BigRational) -> f64 {
    x.to_f64().unwrap_or(f64::NAN)
}

pub(crate) struct ExactOutcome {
    pub objective: BigRational,
    pub x: Vec<BigRational>,
}

/// Runs exact phase-1 on rows given in `f64`. Returns `None` if any
/// right-hand side fails to convert (non-finite input).
pub(crate) fn solve_rows(
    ncols: usize,
    rows: &[Row<f64>],
) -> Option<Result<ExactOutcome, SimplexError>> {
    let mut exact_rows = Vec::with_capacity(rows.len());
    for row in rows {
        let mut cols = Vec::with_capacity(row.cols.len());
        for (j, c) in &row.cols {
            cols.push((*j, to_rational(*c)?));
        }
        exact_rows.push(Row {
            cols,
            rhs: to_rational(row.rhs)?,
        });
    }
    Some(
        phase1(ncols, &exact_rows, BigRational::zero()).map(|sol| ExactOutcome {
            objective: sol.objective,
            x: sol.x,
        }),
    )
}
