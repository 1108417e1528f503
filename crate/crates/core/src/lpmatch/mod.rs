//! Feasibility of marginal-matching: does a true probability distribution
//! exist with the given marginal tables?
//!
//! A [`MatchingProblem`] fixes an outcome space, a family of marginal targets
//! (each a probability table over a variable subset), and optionally a set of
//! cells forced to zero. [`MatchingProblem::solve`] decides feasibility by
//! phase-1 simplex over the cell probabilities; [`MatchingProblem::solve_exact`]
//! repeats the decision in exact rational arithmetic for small spaces.
//!
//! Feasibility here is exactly the question behind Fine's theorem: the CHSH
//! inequalities answer it in closed form for the four-variable cycle, while
//! this module answers it for arbitrary target families.

mod exact;
mod simplex;

pub use exact::EXACT_CELL_CAP;

use num::Zero;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qdist::{OutcomeSpace, QdistError, QuasiDistribution, DEFAULT_TOL};
use simplex::Row;

/// Cell cap for the floating-point solver; the dense tableau grows with the
/// product of cells and target rows.
pub const LP_CELL_CAP: usize = 1 << 16;

/// Feasibility below this phase-1 objective is treated as exact; between
/// this and the caller's tolerance it is flagged as numerically marginal.
pub const MARGINAL_FLOOR: f64 = 1e-13;

#[derive(Debug, Error)]
pub enum LpError {
    #[error("problem has {cells} cells, exceeding the solver cap of {cap}")]
    CapExceeded { cells: usize, cap: usize },
    #[error("target {index} is invalid: {reason}")]
    BadTarget { index: usize, reason: String },
    #[error("targets {first} and {second} disagree on their overlap (deviation {deviation:.3e})")]
    InconsistentTargets {
        first: usize,
        second: usize,
        deviation: f64,
    },
    #[error("zero-support cell is invalid: {reason}")]
    BadZeroSupport { reason: String },
    #[error("witness lives on a different outcome space")]
    SpaceMismatch,
    #[error("the pivot loop stalled after {iterations} iterations")]
    Numerical { iterations: usize },
    #[error("target values could not be converted to rationals")]
    NotRational,
    #[error(transparent)]
    Dist(#[from] QdistError),
}

/// One marginal constraint: the distribution restricted to `subset` must
/// equal `values` (a probability table over the subspace, row-major with the
/// last listed variable fastest).
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MarginalTarget {
    pub subset: Vec<usize>,
    pub values: Vec<f64>,
}

#[derive(Serialize, Deserialize)]
struct ProblemRepr {
    space: OutcomeSpace,
    targets: Vec<MarginalTarget>,
    #[serde(default)]
    zero_support: Vec<Vec<usize>>,
}

/// A marginal-matching feasibility problem.
#[derive(Debug, Clone, Serialize, Deserialize)]
#[serde(try_from = "ProblemRepr", into = "ProblemRepr")]
pub struct MatchingProblem {
    space: OutcomeSpace,
    targets: Vec<MarginalTarget>,
    /// Cell indices forced to zero, sorted and deduplicated.
    zero_cells: Vec<usize>,
}

impl TryFrom<ProblemRepr> for MatchingProblem {
    type Error = LpError;
    fn try_from(repr: ProblemRepr) -> Result<Self, LpError> {
        MatchingProblem::with_zero_support(repr.space, repr.targets, repr.zero_support)
    }
}

impl From<MatchingProblem> for ProblemRepr {
    fn from(p: MatchingProblem) -> ProblemRepr {
        let zero_support = p.zero_cells.iter().map(|&c| p.space.decode(c)).collect();
        ProblemRepr {
            space: p.space,
            targets: p.targets,
            zero_support,
        }
    }
}

/// The answer of a feasibility solve.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    Feasible,
    Infeasible,
}

/// Outcome of [`MatchingProblem::solve`].
#[derive(Debug, Clone)]
pub struct MatchingResult {
    pub verdict: Verdict,
    /// A matching probability distribution, present iff feasible.
    pub witness: Option<QuasiDistribution>,
    /// Max constraint residual of the witness, present iff feasible.
    pub residual: Option<f64>,
    /// The phase-1 minimum: total constraint violation at the closest point.
    pub phase1_objective: f64,
    /// True when the objective landed between [`MARGINAL_FLOOR`] and the
    /// decision tolerance: the verdict is right at the numerical boundary
    /// and worth double-checking with [`MatchingProblem::solve_exact`].
    pub numerically_marginal: bool,
}

/// Residuals of a candidate witness against a problem's constraints.
#[derive(Debug, Clone)]
pub struct VerifyReport {
    pub min_value: f64,
    pub normalization_residual: f64,
    /// Per target, the largest entry deviation of the witness marginal.
    pub target_residuals: Vec<f64>,
    /// Largest witness mass on a forced-zero cell.
    pub zero_support_residual: f64,
    pub max_residual: f64,
}

impl VerifyReport {
    /// True iff all residuals are within `tol` and no entry is below `-tol`.
    pub fn passes(&self, tol: f64) -> bool {
        self.max_residual <= tol && self.min_value >= -tol
    }
}

impl MatchingProblem {
    pub fn new(space: OutcomeSpace, targets: Vec<MarginalTarget>) -> Result<Self, LpError> {
        Self::with_zero_support(space, targets, Vec::new())
    }

    /// Builds a problem that additionally forces the listed outcome tuples
    /// to carry zero probability.
    pub fn with_zero_support(
        space: OutcomeSpace,
        targets: Vec<MarginalTarget>,
        zero_support: Vec<Vec<usize>>,
    ) -> Result<Self, LpError> {
        for (index, t) in targets.iter().enumerate() {
            space
                .check_subset(&t.subset)
                .map_err(|e| LpError::BadTarget {
                    index,
                    reason: e.to_string(),
                })?;
            let sub = space.subspace(&t.subset);
            if t.values.len() != sub.cells() {
                return Err(LpError::BadTarget {
                    index,
                    reason: format!("expected {} values, got {}", sub.cells(), t.values.len()),
                });
            }
            if !t.values.iter().all(|v| v.is_finite()) {
                return Err(LpError::BadTarget {
                    index,
                    reason: "non-finite value".into(),
                });
            }
            if t.values.iter().any(|&v| v < -DEFAULT_TOL) {
                return Err(LpError::BadTarget {
                    index,
                    reason: "a marginal target must be nonnegative".into(),
                });
            }
            let sum: f64 = t.values.iter().sum();
            if (sum - 1.0).abs() > DEFAULT_TOL {
                return Err(LpError::BadTarget {
                    index,
                    reason: format!("values sum to {sum}, not 1"),
                });
            }
        }

        // Overlapping targets must agree on their common variables, else the
        // problem is trivially infeasible by construction rather than by LP.
        for a in 0..targets.len() {
            for b in (a + 1)..targets.len() {
                if let Some(dev) = overlap_deviation(&space, &targets[a], &targets[b]) {
                    if dev > DEFAULT_TOL {
                        return Err(LpError::InconsistentTargets {
                            first: a,
                            second: b,
                            deviation: dev,
                        });
                    }
                }
            }
        }

        let mut zero_cells = Vec::with_capacity(zero_support.len());
        for tuple in &zero_support {
            if tuple.len() != space.num_vars() {
                return Err(LpError::BadZeroSupport {
                    reason: format!(
                        "outcome tuple {:?} has {} entries, expected {}",
                        tuple,
                        tuple.len(),
                        space.num_vars()
                    ),
                });
            }
            for (k, &v) in tuple.iter().enumerate() {
                if v >= space.arity(k) {
                    return Err(LpError::BadZeroSupport {
                        reason: format!("value {v} out of range for variable {k}"),
                    });
                }
            }
            zero_cells.push(space.encode(tuple));
        }
        zero_cells.sort_unstable();
        zero_cells.dedup();

        Ok(MatchingProblem {
            space,
            targets,
            zero_cells,
        })
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn targets(&self) -> &[MarginalTarget] {
        &self.targets
    }

    /// Forced-zero cells as outcome tuples.
    pub fn zero_support(&self) -> Vec<Vec<usize>> {
        self.zero_cells
            .iter()
            .map(|&c| self.space.decode(c))
            .collect()
    }

    /// The positive-marginal matching problem of `q`: targets are the
    /// marginals of `q` on the given subsets (each must be a probability
    /// within `tol`).
    pub fn from_marginals_of(
        q: &QuasiDistribution,
        subsets: &[Vec<usize>],
        tol: f64,
    ) -> Result<Self, LpError> {
        let mut targets = Vec::with_capacity(subsets.len());
        for (index, subset) in subsets.iter().enumerate() {
            let m = q.marginalize(subset)?;
            if !m.dist.is_probability(tol) {
                return Err(LpError::BadTarget {
                    index,
                    reason: "marginal on this subset is not a probability".into(),
                });
            }
            targets.push(MarginalTarget {
                subset: m.subset,
                values: m.dist.values().to_vec(),
            });
        }
        MatchingProblem::new(q.space().clone(), targets)
    }

    /// Decides feasibility in floating point. `tol` is the decision
    /// threshold on the phase-1 objective (typically 1e-9).
    pub fn solve(&self, tol: f64) -> Result<MatchingResult, LpError> {
        let cells = self.space.cells();
        if cells > LP_CELL_CAP {
            return Err(LpError::CapExceeded {
                cells,
                cap: LP_CELL_CAP,
            });
        }
        let (ncols, cell_of_col, rows) = self.build_rows();
        let sol = simplex::phase1(ncols, &rows, 1e-12).map_err(
            |simplex::SimplexError::Stalled { iterations }| LpError::Numerical { iterations },
        )?;
        // Collapse -0.0 so serialized reports read cleanly.
        let objective = if sol.objective == 0.0 {
            0.0
        } else {
            sol.objective
        };
        let feasible = objective <= tol;
        let numerically_marginal = objective > MARGINAL_FLOOR && objective <= tol;
        if !feasible {
            return Ok(MatchingResult {
                verdict: Verdict::Infeasible,
                witness: None,
                residual: None,
                phase1_objective: objective,
                numerically_marginal,
            });
        }
        let witness = self.witness_from(&cell_of_col, |j| sol.x[j].max(0.0))?;
        let residual = self.verify(&witness)?.max_residual;
        Ok(MatchingResult {
            verdict: Verdict::Feasible,
            witness: Some(witness),
            residual: Some(residual),
            phase1_objective: objective,
            numerically_marginal,
        })
    }

    /// Decides feasibility in exact rational arithmetic. Every finite `f64`
    /// target is dyadic, so the verdict is exact for the stated numbers.
    /// Restricted to spaces of at most [`EXACT_CELL_CAP`] cells.
    pub fn solve_exact(&self) -> Result<MatchingResult, LpError> {
        let cells = self.space.cells();
        if cells > EXACT_CELL_CAP {
            return Err(LpError::CapExceeded {
                cells,
                cap: EXACT_CELL_CAP,
            });
        }
        let (ncols, cell_of_col, rows) = self.build_rows();
        let outcome = exact::solve_rows(ncols, &rows)
            .ok_or(LpError::NotRational)?
            .map_err(
                |simplex::SimplexError::Stalled { iterations }| LpError::Numerical { iterations },
            )?;
        let feasible = outcome.objective.is_zero();
        let objective = exact::to_float(&outcome.objective);
        if !feasible {
            return Ok(MatchingResult {
                verdict: Verdict::Infeasible,
                witness: None,
                residual: None,
                phase1_objective: objective,
                numerically_marginal: false,
            });
        }
        let witness =
            self.witness_from(&cell_of_col, |j| exact::to_float(&outcome.x[j]).max(0.0))?;
        let residual = self.verify(&witness)?.max_residual;
        Ok(MatchingResult {
            verdict: Verdict::Feasible,
            witness: Some(witness),
            residual: Some(residual),
            phase1_objective: objective,
            numerically_marginal: false,
        })
    }

    /// Residuals of an arbitrary candidate distribution on the same space.
    pub fn verify(&self, witness: &QuasiDistribution) -> Result<VerifyReport, LpError> {
        if witness.space() != &self.space {
            return Err(LpError::SpaceMismatch);
        }
        let min_value = witness
            .values()
            .iter()
            .copied()
            .fold(f64::INFINITY, f64::min);
        let sum: f64 = witness.values().iter().sum();
        let normalization_residual = (sum - 1.0).abs();
        let mut target_residuals = Vec::with_capacity(self.targets.len());
        for t in &self.targets {
            let m = witness.marginalize(&t.subset)?.dist;
            let dev = m
                .values()
                .iter()
                .zip(&t.values)
                .map(|(a, b)| (a - b).abs())
                .fold(0.0f64, f64::max);
            target_residuals.push(dev);
        }
        let zero_support_residual = self
            .zero_cells
            .iter()
            .map(|&c| witness.values()[c].abs())
            .fold(0.0f64, f64::max);
        let max_residual = target_residuals
            .iter()
            .copied()
            .fold(normalization_residual.max(zero_support_residual), f64::max);
        Ok(VerifyReport {
            min_value,
            normalization_residual,
            target_residuals,
            zero_support_residual,
            max_residual,
        })
    }

    /// Equality rows of the LP: one normalization row plus one row per entry
    /// of every target. Columns are the non-forced-zero cells.
    fn build_rows(&self) -> (usize, Vec<usize>, Vec<Row<f64>>) {
        let cells = self.space.cells();
        let mut col_of_cell: Vec<Option<usize>> = vec![None; cells];
        let mut cell_of_col: Vec<usize> = Vec::with_capacity(cells - self.zero_cells.len());
        let mut zero_iter = self.zero_cells.iter().peekable();
        for cell in 0..cells {
            if zero_iter.peek() == Some(&&cell) {
                zero_iter.next();
                continue;
            }
            col_of_cell[cell] = Some(cell_of_col.len());
            cell_of_col.push(cell);
        }
        let ncols = cell_of_col.len();

        let mut rows = Vec::new();
        rows.push(Row {
            cols: (0..ncols).map(|j| (j, 1.0)).collect(),
            rhs: 1.0,
        });

        let mut outcome = vec![0usize; self.space.num_vars()];
        for t in &self.targets {
            let sub = self.space.subspace(&t.subset);
            let mut buckets: Vec<Vec<(usize, f64)>> = vec![Vec::new(); sub.cells()];
            let mut sub_outcome = vec![0usize; t.subset.len()];
            for (cell, col) in col_of_cell.iter().enumerate() {
                let Some(col) = col else { continue };
                self.space.decode_into(cell, &mut outcome);
                for (pos, &var) in t.subset.iter().enumerate() {
                    sub_outcome[pos] = outcome[var];
                }
                buckets[sub.encode(&sub_outcome)].push((*col, 1.0));
            }
            for (s, cols) in buckets.into_iter().enumerate() {
                // Tiny negative targets (within tolerance) clamp to zero so
                // right-hand sides satisfy the phase-1 precondition.
                rows.push(Row {
                    cols,
                    rhs: t.values[s].max(0.0),
                });
            }
        }
        (ncols, cell_of_col, rows)
    }

    fn witness_from(
        &self,
        cell_of_col: &[usize],
        value: impl Fn(usize) -> f64,
    ) -> Result<QuasiDistribution, LpError> {
        let mut values = vec![0.0f64; self.space.cells()];
        for (j, &cell) in cell_of_col.iter().enumerate() {
            values[cell] = value(j);
        }
        let sum: f64 = values.iter().sum();
        if sum > 0.0 {
            values.iter_mut().for_each(|v| *v /= sum);
        }
        // Rounding in the division can leave the total a few ulps off one;
        // absorb the residue into the largest entry so the normalization
        // invariant holds exactly enough.
        let sum: f64 = values.iter().sum();
        if let Some(largest) = values
            .iter()
            .enumerate()
            .max_by(|a, b| a.1.total_cmp(b.1))
            .map(|(i, _)| i)
        {
            values[largest] += 1.0 - sum;
        }
        Ok(QuasiDistribution::new(self.space.clone(), values)?)
    }
}

/// Largest disagreement of two targets on their overlapping variables, or
/// `None` when the subsets are disjoint.
fn overlap_deviation(space: &OutcomeSpace, a: &MarginalTarget, b: &MarginalTarget) -> Option<f64> {
    let common: Vec<usize> = a
        .subset
        .iter()
        .copied()
        .filter(|k| b.subset.contains(k))
        .collect();
    if common.is_empty() {
        return None;
    }
    let restrict = |t: &MarginalTarget| {
        let sub = space.subspace(&t.subset);
        let dist = QuasiDistribution::from_parts(sub, t.values.clone());
        let positions: Vec<usize> = common
            .iter()
            .map(|k| t.subset.iter().position(|x| x == k).expect("common subset"))
            .collect();
        dist.marginalize(&positions)
            .expect("positions are valid")
            .dist
    };
    let ma = restrict(a);
    let mb = restrict(b);
    Some(
        ma.values()
            .iter()
            .zip(mb.values())
            .map(|(x, y)| (x - y).abs())
            .fold(0.0f64, f64::max),
    )
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::qdist::Variable;

    fn spins(n: usize) -> OutcomeSpace {
        OutcomeSpace::spins(n)
    }

    fn pair_table(c: f64) -> Vec<f64> {
        // Zero singles, correlator c.
        vec![
            (1.0 + c) / 4.0,
            (1.0 - c) / 4.0,
            (1.0 - c) / 4.0,
            (1.0 + c) / 4.0,
        ]
    }

    #[test]
    fn singles_only_is_feasible() {
        let problem = MatchingProblem::new(
            spins(2),
            vec![
                MarginalTarget {
                    subset: vec![0],
                    values: vec![0.3, 0.7],
                },
                MarginalTarget {
                    subset: vec![1],
                    values: vec![0.6, 0.4],
                },
            ],
        )
        .unwrap();
        let result = problem.solve(1e-9).unwrap();
        assert_eq!(result.verdict, Verdict::Feasible);
        let witness = result.witness.unwrap();
        assert!(problem.verify(&witness).unwrap().passes(1e-9));
        assert!(witness.is_probability(1e-12));
        assert!(result.phase1_objective <= 1e-12);
    }

    #[test]
    fn nonlocal_box_pairs_are_infeasible() {
        let problem = MatchingProblem::new(
            spins(4),
            vec![
                MarginalTarget {
                    subset: vec![0, 2],
                    values: pair_table(1.0),
                },
                MarginalTarget {
                    subset: vec![0, 3],
                    values: pair_table(1.0),
                },
                MarginalTarget {
                    subset: vec![1, 2],
                    values: pair_table(1.0),
                },
                MarginalTarget {
                    subset: vec![1, 3],
                    values: pair_table(-1.0),
                },
            ],
        )
        .unwrap();
        let result = problem.solve(1e-9).unwrap();
        assert_eq!(result.verdict, Verdict::Infeasible);
        assert!(result.witness.is_none());
        assert!(result.phase1_objective > 1e-6);

        // Exact arithmetic agrees.
        let exact = problem.solve_exact().unwrap();
        assert_eq!(exact.verdict, Verdict::Infeasible);
    }

    #[test]
    fn perpendicular_settings_six_pair_problem_is_feasible() {
        // Perfect anticorrelation within each side, independence across:
        // matched by p = 1/4 [s2 = -s1][s4 = -s3].
        let anti = pair_table(-1.0);
        let flat = pair_table(0.0);
        let problem = MatchingProblem::new(
            spins(4),
            vec![
                MarginalTarget {
                    subset: vec![0, 1],
                    values: anti.clone(),
                },
                MarginalTarget {
                    subset: vec![0, 2],
                    values: flat.clone(),
                },
                MarginalTarget {
                    subset: vec![0, 3],
                    values: flat.clone(),
                },
                MarginalTarget {
                    subset: vec![1, 2],
                    values: flat.clone(),
                },
                MarginalTarget {
                    subset: vec![1, 3],
                    values: flat,
                },
                MarginalTarget {
                    subset: vec![2, 3],
                    values: anti,
                },
            ],
        )
        .unwrap();
        let result = problem.solve(1e-9).unwrap();
        assert_eq!(result.verdict, Verdict::Feasible);
        let witness = result.witness.unwrap();
        let report = problem.verify(&witness).unwrap();
        assert!(report.passes(1e-9), "residual {}", report.max_residual);

        // The anticipated hand-built witness also verifies.
        let mut values = vec![0.0f64; 16];
        for cell in 0..16usize {
            let s = |k: usize| (cell >> (3 - k)) & 1;
            if s(1) == 1 - s(0) && s(3) == 1 - s(2) {
                values[cell] = 0.25;
            }
        }
        let hand = QuasiDistribution::new(spins(4), values).unwrap();
        assert!(problem.verify(&hand).unwrap().passes(1e-12));
    }

    #[test]
    fn verify_reports_residuals() {
        let problem = MatchingProblem::new(
            spins(2),
            vec![MarginalTarget {
                subset: vec![0, 1],
                values: vec![0.0, 0.5, 0.5, 0.0],
            }],
        )
        .unwrap();
        let uniform = QuasiDistribution::new(spins(2), vec![0.25; 4]).unwrap();
        let report = problem.verify(&uniform).unwrap();
        assert!((report.max_residual - 0.25).abs() < 1e-15);
        assert!(!report.passes(1e-9));
        assert_eq!(report.min_value, 0.25);
        assert!(report.normalization_residual < 1e-15);
    }

    #[test]
    fn zero_support_changes_the_verdict() {
        let targets = vec![
            MarginalTarget {
                subset: vec![0],
                values: vec![1.0, 0.0],
            },
            MarginalTarget {
                subset: vec![1],
                values: vec![0.5, 0.5],
            },
        ];
        // Any match needs p(+,+) = 0.5; forcing that cell to zero breaks it.
        let blocked =
            MatchingProblem::with_zero_support(spins(2), targets.clone(), vec![vec![0, 0]])
                .unwrap();
        let result = blocked.solve(1e-9).unwrap();
        assert_eq!(result.verdict, Verdict::Infeasible);
        assert!(result.phase1_objective > 0.1);

        // Forcing an unneeded cell to zero leaves it feasible.
        let open = MatchingProblem::with_zero_support(spins(2), targets, vec![vec![1, 1]]).unwrap();
        let result = open.solve(1e-9).unwrap();
        assert_eq!(result.verdict, Verdict::Feasible);
        let witness = result.witness.unwrap();
        assert_eq!(witness.value(&[1, 1]), 0.0);
        assert!(open.verify(&witness).unwrap().passes(1e-9));
    }

    #[test]
    fn inconsistent_targets_rejected_at_construction() {
        let err = MatchingProblem::new(
            spins(3),
            vec![
                MarginalTarget {
                    subset: vec![0, 1],
                    values: vec![0.5, 0.0, 0.0, 0.5],
                },
                // Implies single s1 = (0.2, 0.8), conflicting with (0.5, 0.5).
                MarginalTarget {
                    subset: vec![0, 2],
                    values: vec![0.1, 0.1, 0.4, 0.4],
                },
            ],
        )
        .unwrap_err();
        match err {
            LpError::InconsistentTargets {
                first: 0,
                second: 1,
                deviation,
            } => {
                assert!((deviation - 0.3).abs() < 1e-12);
            }
            other => panic!("unexpected error {other:?}"),
        }
    }

    #[test]
    fn target_validation() {
        let bad_sum = MatchingProblem::new(
            spins(2),
            vec![MarginalTarget {
                subset: vec![0],
                values: vec![0.5, 0.4],
            }],
        );
        assert!(matches!(bad_sum, Err(LpError::BadTarget { .. })));
        let negative = MatchingProblem::new(
            spins(2),
            vec![MarginalTarget {
                subset: vec![0],
                values: vec![1.2, -0.2],
            }],
        );
        assert!(matches!(negative, Err(LpError::BadTarget { .. })));
        let bad_subset = MatchingProblem::new(
            spins(2),
            vec![MarginalTarget {
                subset: vec![2],
                values: vec![0.5, 0.5],
            }],
        );
        assert!(matches!(bad_subset, Err(LpError::BadTarget { .. })));
        let bad_zero = MatchingProblem::with_zero_support(spins(2), vec![], vec![vec![0, 2]]);
        assert!(matches!(bad_zero, Err(LpError::BadZeroSupport { .. })));
    }

    #[test]
    fn from_marginals_of_quasi_distribution() {
        // A quasi-distribution with positive pair marginals; the matching
        // problem built from all three pairs is solvable or not purely on
        // the strength of the correlators.
        let q = QuasiDistribution::new(spins(3), vec![0.3, -0.05, 0.1, 0.15, 0.2, 0.05, 0.15, 0.1])
            .unwrap();
        let pairs: Vec<Vec<usize>> = vec![vec![0, 1], vec![0, 2], vec![1, 2]];
        for p in &pairs {
            assert!(q.marginalize(p).unwrap().dist.is_probability(1e-12));
        }
        let problem = MatchingProblem::from_marginals_of(&q, &pairs, 1e-9).unwrap();
        let result = problem.solve(1e-9).unwrap();
        // Whatever the verdict, a feasible witness must verify.
        if let Some(w) = &result.witness {
            assert!(problem.verify(w).unwrap().passes(1e-9));
        }
        // Requesting a non-positive marginal as a target fails.
        let full: Vec<Vec<usize>> = vec![vec![0, 1, 2]];
        assert!(matches!(
            MatchingProblem::from_marginals_of(&q, &full, 1e-9),
            Err(LpError::BadTarget { .. })
        ));
    }

    #[test]
    fn exact_and_float_agree_on_dyadic_instances() {
        let instances: Vec<Vec<f64>> = vec![
            pair_table(0.5),
            pair_table(-0.25),
            pair_table(0.75),
            pair_table(-1.0),
        ];
        for (i, t02) in instances.iter().enumerate() {
            for (j, t13) in instances.iter().enumerate() {
                let problem = MatchingProblem::new(
                    spins(4),
                    vec![
                        MarginalTarget {
                            subset: vec![0, 2],
                            values: t02.clone(),
                        },
                        MarginalTarget {
                            subset: vec![0, 3],
                            values: instances[0].clone(),
                        },
                        MarginalTarget {
                            subset: vec![1, 2],
                            values: instances[1].clone(),
                        },
                        MarginalTarget {
                            subset: vec![1, 3],
                            values: t13.clone(),
                        },
                    ],
                )
                .unwrap();
                let float = problem.solve(1e-9).unwrap();
                let exact = problem.solve_exact().unwrap();
                assert_eq!(float.verdict, exact.verdict, "instance ({i},{j})");
            }
        }
    }

    #[test]
    fn solver_is_deterministic() {
        let problem = MatchingProblem::new(
            spins(3),
            vec![
                MarginalTarget {
                    subset: vec![0, 1],
                    values: pair_table(0.5),
                },
                MarginalTarget {
                    subset: vec![1, 2],
                    values: pair_table(-0.5),
                },
            ],
        )
        .unwrap();
        let a = problem.solve(1e-9).unwrap();
        let b = problem.solve(1e-9).unwrap();
        assert_eq!(a.verdict, b.verdict);
        assert_eq!(
            a.witness.as_ref().unwrap().values(),
            b.witness.as_ref().unwrap().values()
        );
    }

    #[test]
    fn cell_cap_is_enforced() {
        let space = OutcomeSpace::new((0..17).map(|k| Variable::new(format!("v{k}"), 2)).collect())
            .unwrap();
        let problem = MatchingProblem::new(space, vec![]).unwrap();
        assert!(matches!(
            problem.solve(1e-9),
            Err(LpError::CapExceeded { .. })
        ));
        assert!(matches!(
            problem.solve_exact(),
            Err(LpError::CapExceeded { .. })
        ));
    }

    #[test]
    fn empty_target_family_is_feasible() {
        let problem = MatchingProblem::new(spins(2), vec![]).unwrap();
        let result = problem.solve(1e-9).unwrap();
        assert_eq!(result.verdict, Verdict::Feasible);
        assert!(problem
            .verify(&result.witness.unwrap())
            .unwrap()
            .passes(1e-9));
    }

    #[test]
    fn json_round_trip() {
        let problem = MatchingProblem::with_zero_support(
            spins(2),
            vec![MarginalTarget {
                subset: vec![0],
                values: vec![0.5, 0.5],
            }],
            vec![vec![1, 1]],
        )
        .unwrap();
        let text = serde_json::to_string(&problem).unwrap();
        let back: MatchingProblem = serde_json::from_str(&text).unwrap();
        assert_eq!(back.targets(), problem.targets());
        assert_eq!(back.zero_support(), problem.zero_support());

        let bad = r#"{
            "space": {"variables": [{"label": "s1", "arity": 2}]},
            "targets": [{"subset": [0], "values": [0.9, 0.9]}]
        }"#;
        assert!(serde_json::from_str::<MatchingProblem>(bad).is_err());
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        proptest! {
            /// Pair marginals of a true probability are always matchable,
            /// and the returned witness verifies.
            #[test]
            fn marginals_of_probabilities_are_feasible(
                raw in proptest::collection::vec(0.01f64..1.0, 8),
            ) {
                let mut values = raw;
                let sum: f64 = values.iter().sum();
                values.iter_mut().for_each(|x| *x /= sum);
                let s: f64 = values.iter().sum();
                values[0] += 1.0 - s;
                let q = QuasiDistribution::new(spins(3), values).unwrap();
                let pairs = vec![vec![0, 1], vec![0, 2], vec![1, 2]];
                let problem =
                    MatchingProblem::from_marginals_of(&q, &pairs, 1e-9).unwrap();
                let result = problem.solve(1e-9).unwrap();
                prop_assert_eq!(result.verdict, Verdict::Feasible);
                let witness = result.witness.unwrap();
                prop_assert!(problem.verify(&witness).unwrap().passes(1e-7));
                prop_assert!(witness.is_probability(1e-9));
            }
        }
    }
}
