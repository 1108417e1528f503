//! The EPRB example: two spin-half particles in the singlet state, two
//! measurement directions per side, all four directions in one plane.
//!
//! Side A measures along `a` then `a'`, side B along `b` then `b'`, with
//! angles `(a, b, b', a') = (0, theta, -theta, 2*theta)` in the x-z plane.
//! The four-variable quasi-probability comes from the real-part construction
//! of [`crate::quantum::gp_quasiprob`]; because the geometry is so symmetric
//! it also has a short closed form, implemented independently here and used
//! as a cross-check.
//!
//! Variable order is `(s1, s2, s3, s4) = (a, a', b, b')`, so the four
//! measured (cross-side) pairs are [`CYCLE_PAIRS`].

use std::io::Write;

use thiserror::Error;

use crate::fine::{chsh_satisfied, ChshInput};
use crate::lpmatch::{LpError, MatchingProblem, Verdict};
use crate::qdist::{QdistError, QuasiDistribution, Spin};
use crate::quantum::{
    gp_quasiprob, linear_positivity, singlet, CMatrix, ProjectiveDecomposition, QuantumError,
};
use crate::sig12;

/// The measured pairs: each of A's settings against each of B's.
pub const CYCLE_PAIRS: [[usize; 2]; 4] = [[0, 2], [0, 3], [1, 2], [1, 3]];

#[derive(Debug, Error)]
pub enum EprbError {
    #[error("a sweep needs at least 2 steps, got {steps}")]
    BadSteps { steps: usize },
    #[error(transparent)]
    Quantum(#[from] QuantumError),
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Dist(#[from] QdistError),
}

/// The four coplanar measurement directions for a separation angle `theta`.
#[derive(Debug, Clone, PartialEq)]
pub struct PlanarConfig {
    pub theta: f64,
    pub a: [f64; 3],
    pub a_prime: [f64; 3],
    pub b: [f64; 3],
    pub b_prime: [f64; 3],
}

/// The unit vector at angle `phi` from the z axis in the x-z plane.
pub fn direction(phi: f64) -> [f64; 3] {
    [phi.sin(), 0.0, phi.cos()]
}

impl PlanarConfig {
    pub fn new(theta: f64) -> Self {
        PlanarConfig {
            theta,
            a: direction(0.0),
            b: direction(theta),
            b_prime: direction(-theta),
            a_prime: direction(2.0 * theta),
        }
    }
}

fn dot(u: [f64; 3], v: [f64; 3]) -> f64 {
    u[0] * v[0] + u[1] * v[1] + u[2] * v[2]
}

/// The quasi-probability of one outcome tuple, in closed form.
///
/// For the singlet state and the real-part construction with `b'` measured
/// first (order `a, a', b, b'` reading away from the state),
///
/// ```text
/// 16 q = (1 + s1 s2 a.a')(1 + s3 s4 b.b')
///        - (s1 a + s2 a') . (s3 b + s4 b')
///        + s1 s2 s3 s4 (a.b a'.b' - a.b' a'.b)
/// ```
///
/// The last term is the one order can reach: reversing exactly one side's
/// measurement sequence flips its sign.
pub fn closed_form_q(config: &PlanarConfig, outcome: [Spin; 4]) -> f64 {
    let [s1, s2, s3, s4] = [
        outcome[0].sign(),
        outcome[1].sign(),
        outcome[2].sign(),
        outcome[3].sign(),
    ];
    let (a, ap, b, bp) = (config.a, config.a_prime, config.b, config.b_prime);
    let va: Vec<f64> = (0..3).map(|i| s1 * a[i] + s2 * ap[i]).collect();
    let vb: Vec<f64> = (0..3).map(|i| s3 * b[i] + s4 * bp[i]).collect();
    let cross = va[0] * vb[0] + va[1] * vb[1] + va[2] * vb[2];
    let pair_a = 1.0 + s1 * s2 * dot(a, ap);
    let pair_b = 1.0 + s3 * s4 * dot(b, bp);
    let wedge = dot(a, b) * dot(ap, bp) - dot(a, bp) * dot(ap, b);
    (pair_a * pair_b - cross + s1 * s2 * s3 * s4 * wedge) / 16.0
}

/// The full 16-cell closed-form distribution at angle `theta`.
pub fn closed_form_distribution(theta: f64) -> Result<QuasiDistribution, EprbError> {
    let config = PlanarConfig::new(theta);
    let space = crate::qdist::OutcomeSpace::spins(4);
    let mut values = Vec::with_capacity(16);
    for cell in 0..16usize {
        let o = space.decode(cell);
        let outcome = [
            Spin::from_index(o[0]).expect("binary"),
            Spin::from_index(o[1]).expect("binary"),
            Spin::from_index(o[2]).expect("binary"),
            Spin::from_index(o[3]).expect("binary"),
        ];
        values.push(closed_form_q(&config, outcome));
    }
    Ok(QuasiDistribution::new(space, values)?)
}

/// The four two-outcome decompositions on the two-qubit space, in variable
/// order `(a, a', b, b')`: side A acts on the first factor, side B on the
/// second.
pub fn decompositions(config: &PlanarConfig) -> Result<[ProjectiveDecomposition; 4], EprbError> {
    let id = CMatrix::identity(2)?;
    let lift_a = |dir: [f64; 3]| -> Result<ProjectiveDecomposition, EprbError> {
        let d = ProjectiveDecomposition::spin(dir)?;
        Ok(ProjectiveDecomposition::new(vec![
            d.projectors()[0].tensor(&id)?,
            d.projectors()[1].tensor(&id)?,
        ])?)
    };
    let lift_b = |dir: [f64; 3]| -> Result<ProjectiveDecomposition, EprbError> {
        let d = ProjectiveDecomposition::spin(dir)?;
        Ok(ProjectiveDecomposition::new(vec![
            id.tensor(&d.projectors()[0])?,
            id.tensor(&d.projectors()[1])?,
        ])?)
    };
    Ok([
        lift_a(config.a)?,
        lift_a(config.a_prime)?,
        lift_b(config.b)?,
        lift_b(config.b_prime)?,
    ])
}

/// The order producing the reference string `P^a P^a' P^b P^b'` applied to
/// the state: `b'` first, then `b`, `a'`, `a`.
pub const REFERENCE_ORDER: [usize; 4] = [3, 2, 1, 0];

/// The four application orders that differ only in the within-side
/// sequencing; cross-side projectors commute, so every one of the 24
/// permutations is equivalent to one of these.
pub fn ordering_variants() -> [[usize; 4]; 4] {
    [[3, 2, 1, 0], [3, 2, 0, 1], [2, 3, 1, 0], [2, 3, 0, 1]]
}

/// The quasi-distribution from the trace construction at angle `theta`, in
/// the reference order.
pub fn trace_distribution(theta: f64) -> Result<QuasiDistribution, EprbError> {
    trace_distribution_with_order(theta, REFERENCE_ORDER)
}

/// Same, with an explicit application order over the four decompositions.
pub fn trace_distribution_with_order(
    theta: f64,
    order: [usize; 4],
) -> Result<QuasiDistribution, EprbError> {
    let config = PlanarConfig::new(theta);
    let decomps = decompositions(&config)?;
    Ok(gp_quasiprob(&decomps, &order, &singlet())?)
}

/// The all-plus cell in closed form: with `c = cos theta`,
/// `q(+,+,+,+) = c^2 (2c + 1)(c - 1) / 4`, which is negative exactly when
/// `c` lies in `(-1/2, 1)` excluding zero.
pub fn q_pppp(theta: f64) -> f64 {
    let c = theta.cos();
    c * c * (2.0 * c + 1.0) * (c - 1.0) / 4.0
}

/// The two independent reduced CHSH functions: `g1 = 2c^3 - 3c` and
/// `g2 = 2c^3 - c`. The four CHSH combinations of the cycle correlators are
/// `S1 = 2 g1` and `S2 = S3 = S4 = -2 g2`, so all eight inequalities hold
/// iff `|g1| <= 1` and `|g2| <= 1`.
pub fn chsh_reduced(theta: f64) -> (f64, f64) {
    let c = theta.cos();
    (2.0 * c * c * c - 3.0 * c, 2.0 * c * c * c - c)
}

/// The measured pair correlators: `C13 = C14 = C23 = -cos theta` and
/// `C24 = -cos 3 theta`.
pub fn cycle_correlators(theta: f64) -> ChshInput {
    let c = theta.cos();
    ChshInput {
        c13: -c,
        c14: -c,
        c23: -c,
        c24: -(3.0 * theta).cos(),
    }
}

/// One row of the angle sweep.
#[derive(Debug, Clone, PartialEq)]
pub struct SweepRow {
    pub theta: f64,
    pub q_pppp: f64,
    pub q_pppp_x4: f64,
    pub g1: f64,
    pub g2: f64,
    /// All eight CHSH inequalities hold for the measured pair correlators.
    pub chsh_ok: bool,
    /// Every cell of the quasi-distribution is nonnegative (within `tol`).
    pub lin_pos_ok: bool,
    /// A true probability matching the four measured pair marginals exists.
    pub lp_feasible: bool,
}

/// Evaluates one sweep row at angle `theta`.
///
/// `lp_feasible` solves the marginal-matching problem for the four measured
/// pairs; by Fine's theorem it must agree with `chsh_ok`, which makes the
/// sweep a standing cross-check of the solver against the closed form.
pub fn sweep_row(theta: f64, tol: f64) -> Result<SweepRow, EprbError> {
    let q = closed_form_distribution(theta)?;
    let (g1, g2) = chsh_reduced(theta);
    let chsh_ok = chsh_satisfied(&cycle_correlators(theta), tol);
    let lin_pos_ok = linear_positivity(&q, tol);
    let subsets: Vec<Vec<usize>> = CYCLE_PAIRS.iter().map(|p| p.to_vec()).collect();
    let problem = MatchingProblem::from_marginals_of(&q, &subsets, tol)?;
    let lp_feasible = problem.solve(tol)?.verdict == Verdict::Feasible;
    let qp = q_pppp(theta);
    Ok(SweepRow {
        theta,
        q_pppp: qp,
        q_pppp_x4: 4.0 * qp,
        g1,
        g2,
        chsh_ok,
        lin_pos_ok,
        lp_feasible,
    })
}

/// Sweeps `steps` evenly spaced angles from `min` to `max` inclusive.
pub fn sweep(min: f64, max: f64, steps: usize, tol: f64) -> Result<Vec<SweepRow>, EprbError> {
    if steps < 2 {
        return Err(EprbError::BadSteps { steps });
    }
    let mut rows = Vec::with_capacity(steps);
    for i in 0..steps {
        let theta = min + (i as f64) * (max - min) / ((steps - 1) as f64);
        rows.push(sweep_row(theta, tol)?);
    }
    Ok(rows)
}

/// Writes sweep rows as CSV: reals with 12 significant digits, booleans as
/// 0 or 1, so repeated runs are byte-identical.
pub fn write_sweep_csv(rows: &[SweepRow], out: &mut impl Write) -> std::io::Result<()> {
    writeln!(
        out,
        "theta,q_pppp,q_pppp_x4,g1,g2,chsh_ok,lin_pos_ok,lp_feasible"
    )?;
    for row in rows {
        writeln!(
            out,
            "{},{},{},{},{},{},{},{}",
            sig12(row.theta),
            sig12(row.q_pppp),
            sig12(row.q_pppp_x4),
            sig12(row.g1),
            sig12(row.g2),
            u8::from(row.chsh_ok),
            u8::from(row.lin_pos_ok),
            u8::from(row.lp_feasible),
        )?;
    }
    Ok(())
}
