//! CHSH and three-variable Bell inequality evaluation.
//!
//! For four binary variables measured in the cycle pattern (1,3), (1,4),
//! (2,3), (2,4), Fine's theorem says a joint probability matching the four
//! pair marginals exists iff the eight CHSH inequalities `|S_k| <= 2` hold.
//! For three binary variables with all three pair correlators known and
//! unbiased singles, the analogous criterion is the four Bell expressions
//! `B_k <= 1`.

use thiserror::Error;

#[derive(Debug, Error)]
pub enum FineError {
    #[error("correlator {name} = {value} lies outside [-1, 1]")]
    OutOfRange { name: &'static str, value: f64 },
}

/// The four cycle pair correlators `C_ij = <s_i s_j>` entering CHSH, for
/// variables 1, 2 on one side and 3, 4 on the other.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ChshInput {
    pub c13: f64,
    pub c14: f64,
    pub c23: f64,
    pub c24: f64,
}

/// The three pair correlators of a three-variable system.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct BellInput {
    pub c12: f64,
    pub c13: f64,
    pub c23: f64,
}

const RANGE_TOL: f64 = 1e-9;

fn check_range(name: &'static str, value: f64) -> Result<(), FineError> {
    if !value.is_finite() || value.abs() > 1.0 + RANGE_TOL {
        return Err(FineError::OutOfRange { name, value });
    }
    Ok(())
}

/// The four CHSH combinations, each bounded by 2 in absolute value for
/// classically realizable correlators:
///
/// ```text
/// S1 =  C13 + C14 + C23 - C24
/// S2 =  C13 + C14 - C23 + C24
/// S3 =  C13 - C14 + C23 + C24
/// S4 = -C13 + C14 + C23 + C24
/// ```
///
/// Validates that each correlator lies in `[-1, 1]` (up to 1e-9).
pub fn chsh_values(c: &ChshInput) -> Result<[f64; 4], FineError> {
    check_range("C13", c.c13)?;
    check_range("C14", c.c14)?;
    check_range("C23", c.c23)?;
    check_range("C24", c.c24)?;
    Ok(chsh_values_unchecked(c))
}

/// [`chsh_values`] without the range validation, for correlators produced
/// internally (for instance from a relaxed or perturbed model).
pub fn chsh_values_unchecked(c: &ChshInput) -> [f64; 4] {
    [
        c.c13 + c.c14 + c.c23 - c.c24,
        c.c13 + c.c14 - c.c23 + c.c24,
        c.c13 - c.c14 + c.c23 + c.c24,
        -c.c13 + c.c14 + c.c23 + c.c24,
    ]
}

/// True iff all eight CHSH inequalities `|S_k| <= 2 + tol` hold.
pub fn chsh_satisfied(c: &ChshInput, tol: f64) -> bool {
    chsh_values_unchecked(c)
        .iter()
        .all(|s| s.abs() <= 2.0 + tol)
}

/// The four three-variable Bell combinations, each bounded by 1 for
/// classically realizable correlators:
///
/// ```text
/// B1 =  C12 + C13 - C23
/// B2 =  C12 - C13 + C23
/// B3 = -C12 + C13 + C23
/// B4 = -C12 - C13 - C23
/// ```
///
/// These are necessary for any three pair correlators of +-1 variables
/// (each is an expectation of `1 - s_i s_j s_i s_k ...` style combinations
/// bounded pointwise by 1). With unbiased singles they are also sufficient
/// for a matching joint distribution; with biased singles they are not, and
/// a feasibility solver is authoritative.
pub fn bell_values(c: &BellInput) -> Result<[f64; 4], FineError> {
    check_range("C12", c.c12)?;
    check_range("C13", c.c13)?;
    check_range("C23", c.c23)?;
    Ok([
        c.c12 + c.c13 - c.c23,
        c.c12 - c.c13 + c.c23,
        -c.c12 + c.c13 + c.c23,
        -c.c12 - c.c13 - c.c23,
    ])
}

/// True iff all four Bell combinations are `<= 1 + tol`.
pub fn bell_satisfied(c: &BellInput, tol: f64) -> Result<bool, FineError> {
    Ok(bell_values(c)?.iter().all(|b| *b <= 1.0 + tol))
}
