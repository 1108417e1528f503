//! Quasi-probability distributions and viability analysis.
//!
//! A quasi-probability distribution assigns a real weight to every joint
//! outcome of a finite collection of variables. The weights sum to one but
//! individual entries may be negative or exceed one, as happens for the
//! candidate joint distributions produced by sequences of non-commuting
//! projective measurements. This crate provides:
//!
//! * [`qdist`] - outcome spaces, quasi-distributions, marginals, positivity
//!   queries, coarse graining.
//! * [`correl`] - the parity (correlation-function) expansion of binary
//!   quasi-distributions and its inverse.
//! * [`fine`] - the eight CHSH inequalities and the four three-variable Bell
//!   inequalities as closed-form feasibility criteria.
//! * [`lpmatch`] - linear-programming feasibility: does a true probability
//!   distribution exist with a prescribed family of marginals? Includes an
//!   exact rational mode for adjudicating boundary cases.
//! * [`quantum`] - dense complex matrices, spin projectors, density states,
//!   and real-part-of-trace quasi-probabilities for ordered projector strings.
//! * [`eprb`] - the two-spin EPRB example in a coplanar measurement
//!   configuration: closed-form cells, reduced CHSH functions, and a sweep
//!   over the separation angle.
//! * [`viability`] - the end-to-end viability verdict for a
//!   quasi-distribution, plus a coarse-graining search for explicit
//!   inequality-violation certificates of non-viability.
//! * [`composite`] - product distributions for independent subsystems, the
//!   Diosi composite check, and a demonstration that single-subsystem linear
//!   positivity fails to survive composition.
//!
//! Conventions used throughout: outcome tables are stored row-major with the
//! last variable varying fastest; for binary (spin) variables index 0 encodes
//! spin +1 and index 1 encodes spin -1.

#![forbid(unsafe_code)]

pub mod composite;
pub mod correl;
pub mod eprb;
pub mod fine;
pub mod lpmatch;
pub mod qdist;
pub mod quantum;
pub mod viability;

pub use composite::{CompositeProblem, DiosiDemoResult, DiosiReport, Lp2Counterexample};
pub use correl::ParityCoefficients;
pub use eprb::{PlanarConfig, SweepRow};
pub use fine::{BellInput, ChshInput};
pub use lpmatch::{MarginalTarget, MatchingProblem, MatchingResult, Verdict, VerifyReport};
pub use qdist::{Marginal, OutcomeSpace, QuasiDistribution, Spin, Variable};
pub use quantum::{CMatrix, DensityState, ProjectiveDecomposition, ProjectorString};
pub use viability::{Certificate, CoarseGrainCertificate, Mode, Status, ViabilityReport};

/// Formats a float with 12 significant digits in scientific notation.
///
/// Used for all numeric text output so that repeated runs are byte-identical.
pub fn sig12(x: f64) -> String {
    // Collapse negative zero so the sign of a vanishing result cannot leak
    // into serialized output.
    let x = if x == 0.0 { 0.0 } else { x };
    format!("{x:.11e}")
}
