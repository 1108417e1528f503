//! The end-to-end viability verdict: does a true probability distribution
//! exist whose marginals agree with the positive marginals of a given
//! quasi-distribution?
//!
//! The decision itself is the linear program of [`crate::lpmatch`]. What this
//! module adds is packaging: selection of the marginal family (either the
//! maximal positive marginals or a caller-specified list), a report type that
//! serializes cleanly, and a search for status-independent *certificates* of
//! non-viability. A certificate binarizes a handful of variables by coarse
//! graining and exhibits a CHSH or three-variable Bell inequality that the
//! resulting pair correlators violate; any joint distribution matching the
//! pair marginals would have to satisfy it, so the violation is a
//! self-contained proof that the LP had to be infeasible.

use std::collections::HashMap;

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::fine::{bell_values, chsh_values_unchecked, BellInput, ChshInput, FineError};
use crate::lpmatch::{LpError, MatchingProblem, Verdict};
use crate::qdist::{QdistError, QuasiDistribution};

/// Default number of inequality evaluations [`coarse_grain_search`] may spend.
pub const DEFAULT_SEARCH_BUDGET: usize = 100_000;

#[derive(Debug, Error)]
pub enum ViabilityError {
    #[error("specified marginal {subset:?} is not a probability within tolerance")]
    NonPositiveSpecifiedMarginal { subset: Vec<usize> },
    #[error("certificate does not apply to this distribution: {reason}")]
    BadCertificate { reason: String },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Dist(#[from] QdistError),
    #[error(transparent)]
    Fine(#[from] FineError),
}

/// Which marginals a matching probability must reproduce.
#[derive(Debug, Clone, PartialEq, Eq)]
pub enum Mode {
    /// The maximal nonnegative marginals of the quasi-distribution itself.
    AllPositive,
    /// An explicit family; every member must be a nonnegative marginal.
    Specified(Vec<Vec<usize>>),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Status {
    Viable,
    NonViable,
    /// The instance exceeded an enumeration or solver cap; no verdict.
    Unknown,
}

/// Names the violated inequality: `S1..S4` are the CHSH combinations with
/// bound 2, `B1..B4` the three-variable Bell combinations with bound 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum InequalityId {
    S1,
    S2,
    S3,
    S4,
    B1,
    B2,
    B3,
    B4,
}

impl InequalityId {
    fn chsh(k: usize) -> Self {
        [Self::S1, Self::S2, Self::S3, Self::S4][k]
    }

    fn bell(k: usize) -> Self {
        [Self::B1, Self::B2, Self::B3, Self::B4][k]
    }

    /// True for the CHSH family, false for the Bell family.
    pub fn is_chsh(self) -> bool {
        matches!(self, Self::S1 | Self::S2 | Self::S3 | Self::S4)
    }

    fn index(self) -> usize {
        match self {
            Self::S1 | Self::B1 => 0,
            Self::S2 | Self::B2 => 1,
            Self::S3 | Self::B3 => 2,
            Self::S4 | Self::B4 => 3,
        }
    }
}

/// A self-contained witness of non-viability.
///
/// Each listed variable is coarse grained to a spin: parent values in its
/// `plus_blocks` entry map to +1, the rest to -1. For a CHSH certificate the
/// variables are ordered `(a1, a2, b1, b2)` and the correlators are
/// `(C(a1,b1), C(a1,b2), C(a2,b1), C(a2,b2))`; for a Bell certificate the
/// three variables are ascending and the correlators are
/// `(C12, C13, C23)`. `value` violates `bound`.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CoarseGrainCertificate {
    pub variables: Vec<usize>,
    pub plus_blocks: Vec<Vec<usize>>,
    pub correlators: Vec<f64>,
    pub inequality: InequalityId,
    pub value: f64,
    pub bound: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Certificate {
    /// The linear program itself was infeasible but no small inequality
    /// certificate was found within budget; the phase-1 objective is the
    /// total constraint violation at the closest point.
    LpInfeasible {
        phase1_objective: f64,
        subsets: Vec<Vec<usize>>,
    },
    CoarseGraining(CoarseGrainCertificate),
}

#[derive(Debug, Clone, Serialize, Deserialize)]
pub struct ViabilityReport {
    pub status: Status,
    /// The marginal family the verdict refers to.
    pub subsets: Vec<Vec<usize>>,
    /// A matching probability distribution, present iff viable.
    pub witness: Option<QuasiDistribution>,
    pub certificate: Option<Certificate>,
    pub phase1_objective: Option<f64>,
    pub numerically_marginal: bool,
    /// Present iff the status is `Unknown`; says which cap was hit.
    pub note: Option<String>,
}

/// Decides viability of `q` for the marginal family selected by `mode`.
///
/// Cap overruns (too many subsets to enumerate, or an outcome space beyond
/// the solver limit) produce `Status::Unknown` rather than an error, so a
/// caller sweeping many instances can keep going. When the verdict is
/// non-viable a coarse-graining certificate is attached if one can be found
/// within the default budget; the LP infeasibility record is kept otherwise.
pub fn viability_test(
    q: &QuasiDistribution,
    mode: Mode,
    tol: f64,
) -> Result<ViabilityReport, ViabilityError> {
    let subsets = match mode {
        Mode::AllPositive => match q.positive_marginals(tol, None) {
            Ok(s) => s,
            Err(QdistError::CapExceeded { needed, budget }) => {
                return Ok(unknown_report(
                    Vec::new(),
                    format!(
                        "positive-marginal enumeration needs {needed} subsets, budget {budget}"
                    ),
                ));
            }
            Err(e) => return Err(e.into()),
        },
        Mode::Specified(s) => {
            for subset in &s {
                if !q.marginalize(subset)?.dist.is_probability(tol) {
                    return Err(ViabilityError::NonPositiveSpecifiedMarginal {
                        subset: subset.clone(),
                    });
                }
            }
            s
        }
    };

    // A family member covering every variable means q itself is nonnegative,
    // so it is its own witness and the LP is unnecessary.
    let n = q.space().num_vars();
    if subsets.iter().any(|s| s.len() == n) {
        return Ok(ViabilityReport {
            status: Status::Viable,
            subsets,
            witness: Some(q.clone()),
            certificate: None,
            phase1_objective: Some(0.0),
            numerically_marginal: false,
            note: None,
        });
    }

    let problem = MatchingProblem::from_marginals_of(q, &subsets, tol)?;
    let result = match problem.solve(tol) {
        Ok(r) => r,
        Err(LpError::CapExceeded { cells, cap }) => {
            return Ok(unknown_report(
                subsets,
                format!("outcome space has {cells} cells, solver cap {cap}"),
            ));
        }
        Err(e) => return Err(e.into()),
    };

    match result.verdict {
        Verdict::Feasible => Ok(ViabilityReport {
            status: Status::Viable,
            subsets,
            witness: result.witness,
            certificate: None,
            phase1_objective: Some(result.phase1_objective),
            numerically_marginal: result.numerically_marginal,
            note: None,
        }),
        Verdict::Infeasible => {
            let cg = coarse_grain_search(q, &subsets, DEFAULT_SEARCH_BUDGET, tol)?;
            let certificate = match cg {
                Some(c) => Certificate::CoarseGraining(c),
                None => Certificate::LpInfeasible {
                    phase1_objective: result.phase1_objective,
                    subsets: subsets.clone(),
                },
            };
            Ok(ViabilityReport {
                status: Status::NonViable,
                subsets,
                witness: None,
                certificate: Some(certificate),
                phase1_objective: Some(result.phase1_objective),
                numerically_marginal: result.numerically_marginal,
                note: None,
            })
        }
    }
}

fn unknown_report(subsets: Vec<Vec<usize>>, note: String) -> ViabilityReport {
    ViabilityReport {
        status: Status::Unknown,
        subsets,
        witness: None,
        certificate: None,
        phase1_objective: None,
        numerically_marginal: false,
        note: Some(note),
    }
}

/// Searches for a coarse-graining certificate against the family `subsets`.
///
/// Only pairs contained in some family member (and whose marginals are
/// probabilities within `tol`) may enter an inequality, so a returned
/// certificate refutes exactly the constraints the family imposes. The scan
/// is deterministic: three-variable Bell triples in ascending lexicographic
/// order first, then CHSH over four-variable subsets with the three side
/// splits in a fixed order; for each subset, binarizations are enumerated
/// per variable by the block of parent values mapped to +1, which always
/// contains value 0 (the complementary choice gives the same inequalities up
/// to sign bookkeeping). `budget` bounds the number of inequality
/// evaluations; exhaustion returns `None`.
pub fn coarse_grain_search(
    q: &QuasiDistribution,
    subsets: &[Vec<usize>],
    budget: usize,
    tol: f64,
) -> Result<Option<CoarseGrainCertificate>, ViabilityError> {
    let n = q.space().num_vars();
    let mut pairs = PairCache::new(q, subsets, tol);
    let mut spent = 0usize;

    // Bell stage: every triple whose three pairs the family covers.
    for i in 0..n {
        for j in (i + 1)..n {
            for k in (j + 1)..n {
                if !(pairs.usable(i, j)? && pairs.usable(i, k)? && pairs.usable(j, k)?) {
                    continue;
                }
                let vars = [i, j, k];
                let choices: Vec<Vec<Vec<usize>>> = vars
                    .iter()
                    .map(|&v| binarizations(q.space().arity(v)))
                    .collect();
                for combo in cartesian(&choices) {
                    if spent + 4 > budget {
                        return Ok(None);
                    }
                    spent += 4;
                    let c = BellInput {
                        c12: pairs.correlator(i, j, &combo[0], &combo[1])?,
                        c13: pairs.correlator(i, k, &combo[0], &combo[2])?,
                        c23: pairs.correlator(j, k, &combo[1], &combo[2])?,
                    };
                    let values = bell_values(&c)?;
                    for (idx, &value) in values.iter().enumerate() {
                        if value > 1.0 + tol {
                            return Ok(Some(CoarseGrainCertificate {
                                variables: vars.to_vec(),
                                plus_blocks: combo,
                                correlators: vec![c.c12, c.c13, c.c23],
                                inequality: InequalityId::bell(idx),
                                value,
                                bound: 1.0,
                            }));
                        }
                    }
                }
            }
        }
    }

    // CHSH stage: four variables split into two per side; only the four
    // cross-side pairs are constrained.
    for a in 0..n {
        for b in (a + 1)..n {
            for c in (b + 1)..n {
                for d in (c + 1)..n {
                    let quad = [a, b, c, d];
                    for split in [[0, 1, 2, 3], [0, 2, 1, 3], [0, 3, 1, 2]] {
                        let [a1, a2, b1, b2] = split.map(|s| quad[s]);
                        if !(pairs.usable(a1, b1)?
                            && pairs.usable(a1, b2)?
                            && pairs.usable(a2, b1)?
                            && pairs.usable(a2, b2)?)
                        {
                            continue;
                        }
                        let vars = [a1, a2, b1, b2];
                        let choices: Vec<Vec<Vec<usize>>> = vars
                            .iter()
                            .map(|&v| binarizations(q.space().arity(v)))
                            .collect();
                        for combo in cartesian(&choices) {
                            if spent + 8 > budget {
                                return Ok(None);
                            }
                            spent += 8;
                            let c = ChshInput {
                                c13: pairs.correlator(a1, b1, &combo[0], &combo[2])?,
                                c14: pairs.correlator(a1, b2, &combo[0], &combo[3])?,
                                c23: pairs.correlator(a2, b1, &combo[1], &combo[2])?,
                                c24: pairs.correlator(a2, b2, &combo[1], &combo[3])?,
                            };
                            let values = chsh_values_unchecked(&c);
                            for (idx, &value) in values.iter().enumerate() {
                                if value.abs() > 2.0 + tol {
                                    return Ok(Some(CoarseGrainCertificate {
                                        variables: vars.to_vec(),
                                        plus_blocks: combo,
                                        correlators: vec![c.c13, c.c14, c.c23, c.c24],
                                        inequality: InequalityId::chsh(idx),
                                        value,
                                        bound: 2.0,
                                    }));
                                }
                            }
                        }
                    }
                }
            }
        }
    }
    Ok(None)
}

/// Re-derives a certificate's correlators and inequality value from `q` and
/// reports whether the violation still stands.
///
/// Returns `Ok(false)` when the certificate is well-formed but stale (its
/// recorded correlators or value disagree with the distribution, a pair
/// marginal is no longer a probability, or the bound is respected after
/// all); malformed certificates are an error.
pub fn recheck_certificate(
    q: &QuasiDistribution,
    cert: &CoarseGrainCertificate,
    tol: f64,
) -> Result<bool, ViabilityError> {
    let n = q.space().num_vars();
    let expect = if cert.inequality.is_chsh() { 4 } else { 3 };
    if cert.variables.len() != expect
        || cert.plus_blocks.len() != expect
        || cert.correlators.len() != expect
    {
        return Err(ViabilityError::BadCertificate {
            reason: format!("expected {expect} variables, blocks and correlators"),
        });
    }
    let mut seen = vec![false; n];
    for (&v, block) in cert.variables.iter().zip(&cert.plus_blocks) {
        if v >= n || seen[v] {
            return Err(ViabilityError::BadCertificate {
                reason: format!("variable {v} out of range or repeated"),
            });
        }
        seen[v] = true;
        let arity = q.space().arity(v);
        if block.is_empty() || block.len() >= arity {
            return Err(ViabilityError::BadCertificate {
                reason: format!("plus block for variable {v} must be a proper nonempty subset"),
            });
        }
        let mut marks = vec![false; arity];
        for &value in block {
            if value >= arity || marks[value] {
                return Err(ViabilityError::BadCertificate {
                    reason: format!("bad parent value {value} for variable {v}"),
                });
            }
            marks[value] = true;
        }
    }
    let expected_bound = if cert.inequality.is_chsh() { 2.0 } else { 1.0 };
    if cert.bound != expected_bound {
        return Err(ViabilityError::BadCertificate {
            reason: format!("bound {} does not match the inequality family", cert.bound),
        });
    }

    let pair_indices: &[(usize, usize)] = if cert.inequality.is_chsh() {
        &[(0, 2), (0, 3), (1, 2), (1, 3)]
    } else {
        &[(0, 1), (0, 2), (1, 2)]
    };
    let mut recomputed = Vec::with_capacity(pair_indices.len());
    for &(p, r) in pair_indices {
        let (i, j) = (cert.variables[p], cert.variables[r]);
        let marg = pair_marginal(q, i, j)?;
        if !marg.is_probability(tol) {
            return Ok(false);
        }
        recomputed.push(binarized_correlator(
            &marg,
            i < j,
            &cert.plus_blocks[p],
            &cert.plus_blocks[r],
        ));
    }
    for (got, recorded) in recomputed.iter().zip(&cert.correlators) {
        if (got - recorded).abs() > 1e-9 {
            return Ok(false);
        }
    }
    let (value, violated) = if cert.inequality.is_chsh() {
        let c = ChshInput {
            c13: recomputed[0],
            c14: recomputed[1],
            c23: recomputed[2],
            c24: recomputed[3],
        };
        let v = chsh_values_unchecked(&c)[cert.inequality.index()];
        (v, v.abs() > 2.0 + tol)
    } else {
        let c = BellInput {
            c12: recomputed[0],
            c13: recomputed[1],
            c23: recomputed[2],
        };
        let v = bell_values(&c)?[cert.inequality.index()];
        (v, v > 1.0 + tol)
    };
    Ok(violated && (value - cert.value).abs() <= 1e-9)
}

/// All coarse grainings of a `d`-valued variable to a spin, identified by
/// the block of parent values sent to +1. Fixing value 0 inside the plus
/// block halves the count without losing any inequality: complementing a
/// block only flips signs. Blocks are ordered by the bitmask over values
/// `1..d`, so the pure `{0}` binarization comes first.
fn binarizations(arity: usize) -> Vec<Vec<usize>> {
    let extra = arity - 1;
    let mut out = Vec::with_capacity((1usize << extra) - 1);
    for mask in 0..(1usize << extra) - 1 {
        let mut block = vec![0];
        for v in 0..extra {
            if mask & (1 << v) != 0 {
                block.push(v + 1);
            }
        }
        out.push(block);
    }
    out
}

/// Cartesian product preserving lexicographic order (first axis slowest).
fn cartesian(choices: &[Vec<Vec<usize>>]) -> Vec<Vec<Vec<usize>>> {
    let mut out: Vec<Vec<Vec<usize>>> = vec![Vec::new()];
    for axis in choices {
        let mut next = Vec::with_capacity(out.len() * axis.len());
        for prefix in &out {
            for choice in axis {
                let mut row = prefix.clone();
                row.push(choice.clone());
                next.push(row);
            }
        }
        out = next;
    }
    out
}

fn pair_marginal(
    q: &QuasiDistribution,
    i: usize,
    j: usize,
) -> Result<QuasiDistribution, ViabilityError> {
    let (lo, hi) = if i < j { (i, j) } else { (j, i) };
    Ok(q.marginalize(&[lo, hi])?.dist)
}

/// The spin correlator of a two-variable marginal under given plus blocks.
/// `first_is_lo` says whether the first block belongs to the marginal's
/// first (lower-index) variable.
fn binarized_correlator(
    marg: &QuasiDistribution,
    first_is_lo: bool,
    block_first: &[usize],
    block_second: &[usize],
) -> f64 {
    let (block_lo, block_hi) = if first_is_lo {
        (block_first, block_second)
    } else {
        (block_second, block_first)
    };
    let d_lo = marg.space().arity(0);
    let d_hi = marg.space().arity(1);
    let sign = |block: &[usize], v: usize| if block.contains(&v) { 1.0 } else { -1.0 };
    let mut c = 0.0;
    for u in 0..d_lo {
        for v in 0..d_hi {
            c += marg.value(&[u, v]) * sign(block_lo, u) * sign(block_hi, v);
        }
    }
    c
}

/// Memoizes pair marginals and their usability for the certificate search.
struct PairCache<'a> {
    q: &'a QuasiDistribution,
    subsets: &'a [Vec<usize>],
    tol: f64,
    cache: HashMap<(usize, usize), Option<QuasiDistribution>>,
}

impl<'a> PairCache<'a> {
    fn new(q: &'a QuasiDistribution, subsets: &'a [Vec<usize>], tol: f64) -> Self {
        PairCache {
            q,
            subsets,
            tol,
            cache: HashMap::new(),
        }
    }

    fn entry(&mut self, i: usize, j: usize) -> Result<&Option<QuasiDistribution>, ViabilityError> {
        let key = if i < j { (i, j) } else { (j, i) };
        if !self.cache.contains_key(&key) {
            let covered = self
                .subsets
                .iter()
                .any(|s| s.contains(&key.0) && s.contains(&key.1));
            let value = if covered {
                let marg = self.q.marginalize(&[key.0, key.1])?.dist;
                if marg.is_probability(self.tol) {
                    Some(marg)
                } else {
                    None
                }
            } else {
                None
            };
            self.cache.insert(key, value);
        }
        Ok(&self.cache[&key])
    }

    fn usable(&mut self, i: usize, j: usize) -> Result<bool, ViabilityError> {
        Ok(self.entry(i, j)?.is_some())
    }

    fn correlator(
        &mut self,
        i: usize,
        j: usize,
        block_i: &[usize],
        block_j: &[usize],
    ) -> Result<f64, ViabilityError> {
        let first_is_lo = i < j;
        let marg = self
            .entry(i, j)?
            .as_ref()
            .expect("correlator requested for unusable pair")
            .clone();
        Ok(binarized_correlator(&marg, first_is_lo, block_i, block_j))
    }
}
