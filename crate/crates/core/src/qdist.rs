//! Outcome spaces and quasi-probability distributions.
//!
//! An [`OutcomeSpace`] is an ordered list of labelled variables with finite
//! arities; a cell is one joint outcome. A [`QuasiDistribution`] assigns a
//! real weight to every cell. Weights always sum to one, but entries may be
//! negative or exceed one, which is what distinguishes a quasi-probability
//! from a probability.
//!
//! Storage convention: cells are indexed row-major with the last variable
//! varying fastest. For binary variables, value index 0 encodes spin +1 and
//! index 1 encodes spin -1 (see [`Spin`]).

use serde::{Deserialize, Serialize};
use thiserror::Error;

use itertools::Itertools;

/// Hard cap on the number of cells in an outcome space.
pub const CELL_CAP: usize = 1 << 20;

/// Cap on the number of subsets [`QuasiDistribution::positive_marginals`]
/// will enumerate.
pub const SUBSET_BUDGET: usize = 1 << 16;

/// Default tolerance for positivity tests: entries must lie in
/// `[-tol, 1 + tol]`.
pub const DEFAULT_TOL: f64 = 1e-9;

/// Tolerance on `|sum - 1|` when validating normalization.
pub const NORMALIZATION_TOL: f64 = 1e-12;

/// Errors from outcome-space and distribution operations.
#[derive(Debug, Error)]
pub enum QdistError {
    #[error("outcome space needs at least one variable")]
    EmptySpace,
    #[error("variable `{label}` has arity {arity}; every arity must be at least 2")]
    BadArity { label: String, arity: usize },
    #[error("outcome space has {cells} cells, exceeding the cap of {cap}")]
    CellCapExceeded { cells: usize, cap: usize },
    #[error("expected {expected} values, got {got}")]
    LengthMismatch { expected: usize, got: usize },
    #[error("values sum to {sum:.17}, not 1")]
    NotNormalized { sum: f64 },
    #[error("values must all be finite")]
    NotFinite,
    #[error("invalid variable subset {subset:?}: {reason}")]
    BadSubset {
        subset: Vec<usize>,
        reason: &'static str,
    },
    #[error("enumerating {needed} subsets exceeds the budget of {budget}")]
    CapExceeded { needed: usize, budget: usize },
    #[error("single-variable marginal of `{label}` is not a probability (entry {value})")]
    NegativeSingle { label: String, value: f64 },
    #[error("bad partition for variable {variable}: {reason}")]
    BadPartition { variable: usize, reason: String },
    #[error("distributions live on different outcome spaces")]
    SpaceMismatch,
}

/// A binary spin outcome. `Plus` is stored at value index 0, `Minus` at 1.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum Spin {
    Plus,
    Minus,
}

impl Spin {
    pub const BOTH: [Spin; 2] = [Spin::Plus, Spin::Minus];

    /// The sign carried by this outcome: +1.0 or -1.0.
    pub fn sign(self) -> f64 {
        match self {
            Spin::Plus => 1.0,
            Spin::Minus => -1.0,
        }
    }

    /// The value index this outcome is stored at.
    pub fn index(self) -> usize {
        match self {
            Spin::Plus => 0,
            Spin::Minus => 1,
        }
    }

    pub fn from_index(index: usize) -> Option<Spin> {
        match index {
            0 => Some(Spin::Plus),
            1 => Some(Spin::Minus),
            _ => None,
        }
    }

    pub fn from_sign(sign: i32) -> Option<Spin> {
        match sign {
            1 => Some(Spin::Plus),
            -1 => Some(Spin::Minus),
            _ => None,
        }
    }
}

/// One variable of an outcome space.
#[derive(Debug, Clone, PartialEq, Eq, Serialize, Deserialize)]
pub struct Variable {
    pub label: String,
    pub arity: usize,
}

impl Variable {
    pub fn new(label: impl Into<String>, arity: usize) -> Self {
        Variable {
            label: label.into(),
            arity,
        }
    }
}

#[derive(Serialize, Deserialize)]
struct SpaceRepr {
    variables: Vec<Variable>,
}

/// An ordered list of labelled finite-arity variables.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "SpaceRepr", into = "SpaceRepr")]
pub struct OutcomeSpace {
    variables: Vec<Variable>,
    /// Row-major strides; `strides[k]` is the index step of variable `k`.
    strides: Vec<usize>,
    cells: usize,
}

impl TryFrom<SpaceRepr> for OutcomeSpace {
    type Error = QdistError;
    fn try_from(repr: SpaceRepr) -> Result<Self, QdistError> {
        OutcomeSpace::new(repr.variables)
    }
}

impl From<OutcomeSpace> for SpaceRepr {
    fn from(space: OutcomeSpace) -> SpaceRepr {
        SpaceRepr {
            variables: space.variables,
        }
    }
}

impl OutcomeSpace {
    /// Builds a space, validating arities and the total cell count.
    pub fn new(variables: Vec<Variable>) -> Result<Self, QdistError> {
        if variables.is_empty() {
            return Err(QdistError::EmptySpace);
        }
        for v in &variables {
            if v.arity < 2 {
                return Err(QdistError::BadArity {
                    label: v.label.clone(),
                    arity: v.arity,
                });
            }
        }
        let mut cells: usize = 1;
        for v in &variables {
            cells = cells.saturating_mul(v.arity);
            if cells > CELL_CAP {
                return Err(QdistError::CellCapExceeded {
                    cells,
                    cap: CELL_CAP,
                });
            }
        }
        let mut strides = vec![1usize; variables.len()];
        for k in (0..variables.len().saturating_sub(1)).rev() {
            strides[k] = strides[k + 1] * variables[k + 1].arity;
        }
        Ok(OutcomeSpace {
            variables,
            strides,
            cells,
        })
    }

    /// A space of `n` binary spin variables labelled `s1 ..= sn`.
    ///
    /// Panics if `n` is 0 or exceeds the cell cap; intended for the small
    /// spin systems used throughout this crate.
    pub fn spins(n: usize) -> Self {
        let vars = (1..=n).map(|k| Variable::new(format!("s{k}"), 2)).collect();
        OutcomeSpace::new(vars).expect("spin space within the cell cap")
    }

    /// Returns a copy of this space with fresh labels, shape unchanged.
    pub fn with_labels<S: Into<String>>(
        &self,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self, QdistError> {
        let labels: Vec<String> = labels.into_iter().map(Into::into).collect();
        if labels.len() != self.variables.len() {
            return Err(QdistError::LengthMismatch {
                expected: self.variables.len(),
                got: labels.len(),
            });
        }
        let vars = labels
            .into_iter()
            .zip(&self.variables)
            .map(|(label, v)| Variable {
                label,
                arity: v.arity,
            })
            .collect();
        OutcomeSpace::new(vars)
    }

    pub fn num_vars(&self) -> usize {
        self.variables.len()
    }

    pub fn cells(&self) -> usize {
        self.cells
    }

    pub fn variables(&self) -> &[Variable] {
        &self.variables
    }

    pub fn arity(&self, var: usize) -> usize {
        self.variables[var].arity
    }

    /// Cell index of a full outcome tuple.
    pub fn encode(&self, outcome: &[usize]) -> usize {
        debug_assert_eq!(outcome.len(), self.variables.len());
        outcome
            .iter()
            .zip(&self.strides)
            .map(|(&v, &s)| v * s)
            .sum()
    }

    /// Outcome tuple of a cell index.
    pub fn decode(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0usize; self.variables.len()];
        self.decode_into(index, &mut out);
        out
    }

    pub fn decode_into(&self, index: usize, out: &mut [usize]) {
        debug_assert!(index < self.cells);
        let mut rest = index;
        for (k, v) in self.variables.iter().enumerate() {
            out[k] = (rest / self.strides[k]) % v.arity;
            rest %= self.strides[k];
        }
        debug_assert_eq!(rest, 0);
    }

    /// Validates that `subset` is a non-empty strictly increasing list of
    /// variable indices. The full set is allowed.
    pub fn check_subset(&self, subset: &[usize]) -> Result<(), QdistError> {
        let bad = |reason| QdistError::BadSubset {
            subset: subset.to_vec(),
            reason,
        };
        if subset.is_empty() {
            return Err(bad("subset is empty"));
        }
        for window in subset.windows(2) {
            if window[0] >= window[1] {
                return Err(bad("indices must be strictly increasing"));
            }
        }
        if *subset.last().unwrap() >= self.variables.len() {
            return Err(bad("index out of range"));
        }
        Ok(())
    }

    /// The space induced on a valid subset of variables.
    pub fn subspace(&self, subset: &[usize]) -> OutcomeSpace {
        let vars: Vec<Variable> = subset.iter().map(|&k| self.variables[k].clone()).collect();
        OutcomeSpace::new(vars).expect("subspace of a valid space is valid")
    }
}

#[derive(Serialize, Deserialize)]
struct DistributionRepr {
    variables: Vec<Variable>,
    values: Vec<f64>,
}

/// A real-valued distribution over an outcome space, normalized to one.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "DistributionRepr", into = "DistributionRepr")]
pub struct QuasiDistribution {
    space: OutcomeSpace,
    values: Vec<f64>,
}

impl TryFrom<DistributionRepr> for QuasiDistribution {
    type Error = QdistError;
    fn try_from(repr: DistributionRepr) -> Result<Self, QdistError> {
        QuasiDistribution::new(OutcomeSpace::new(repr.variables)?, repr.values)
    }
}

impl From<QuasiDistribution> for DistributionRepr {
    fn from(q: QuasiDistribution) -> DistributionRepr {
        DistributionRepr {
            variables: q.space.variables,
            values: q.values,
        }
    }
}

/// A marginal of a quasi-distribution: the retained variable indices
/// (strictly increasing, relative to the parent space) and the summed table.
#[derive(Debug, Clone, PartialEq)]
pub struct Marginal {
    pub subset: Vec<usize>,
    pub dist: QuasiDistribution,
}

impl QuasiDistribution {
    /// Builds a distribution, validating length, finiteness, and
    /// normalization within [`NORMALIZATION_TOL`].
    pub fn new(space: OutcomeSpace, values: Vec<f64>) -> Result<Self, QdistError> {
        if values.len() != space.cells() {
            return Err(QdistError::LengthMismatch {
                expected: space.cells(),
                got: values.len(),
            });
        }
        if !values.iter().all(|v| v.is_finite()) {
            return Err(QdistError::NotFinite);
        }
        let sum: f64 = values.iter().sum();
        if (sum - 1.0).abs() > NORMALIZATION_TOL {
            return Err(QdistError::NotNormalized { sum });
        }
        Ok(QuasiDistribution { space, values })
    }

    /// Internal constructor for values already known to be normalized
    /// (marginalization and other sum-preserving transforms).
    pub(crate) fn from_parts(space: OutcomeSpace, values: Vec<f64>) -> Self {
        debug_assert_eq!(values.len(), space.cells());
        QuasiDistribution { space, values }
    }

    pub fn space(&self) -> &OutcomeSpace {
        &self.space
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    /// Weight of one joint outcome.
    pub fn value(&self, outcome: &[usize]) -> f64 {
        self.values[self.space.encode(outcome)]
    }

    /// Returns a copy with fresh variable labels, values unchanged.
    pub fn with_labels<S: Into<String>>(
        &self,
        labels: impl IntoIterator<Item = S>,
    ) -> Result<Self, QdistError> {
        Ok(QuasiDistribution {
            space: self.space.with_labels(labels)?,
            values: self.values.clone(),
        })
    }

    /// Sums out every variable not in `subset`. Sums are preserved, so the
    /// result is again normalized; positivity is not (and cannot be) implied.
    pub fn marginalize(&self, subset: &[usize]) -> Result<Marginal, QdistError> {
        self.space.check_subset(subset)?;
        let sub = self.space.subspace(subset);
        let mut values = vec![0.0f64; sub.cells()];
        let mut outcome = vec![0usize; self.space.num_vars()];
        for (index, &w) in self.values.iter().enumerate() {
            self.space.decode_into(index, &mut outcome);
            let mut s = 0usize;
            for (pos, &var) in subset.iter().enumerate() {
                s += outcome[var] * sub.strides[pos];
            }
            values[s] += w;
        }
        Ok(Marginal {
            subset: subset.to_vec(),
            dist: QuasiDistribution::from_parts(sub, values),
        })
    }

    /// True iff every entry lies in `[-tol, 1 + tol]`.
    pub fn is_probability(&self, tol: f64) -> bool {
        self.values.iter().all(|&v| v >= -tol && v <= 1.0 + tol)
    }

    /// The maximal variable subsets whose marginals are probabilities.
    ///
    /// Positivity is downward closed (entries of a smaller marginal are sums
    /// of entries of a larger one), so the full positive family is the
    /// downward closure of the returned subsets. Subsets are enumerated
    /// largest-first and lexicographically within each size; any subset
    /// contained in an already-established positive subset is skipped.
    ///
    /// `max_subset_size` truncates the search; maximality is then relative to
    /// the truncated family. Fails with `CapExceeded` when the enumeration
    /// would exceed [`SUBSET_BUDGET`].
    pub fn positive_marginals(
        &self,
        tol: f64,
        max_subset_size: Option<usize>,
    ) -> Result<Vec<Vec<usize>>, QdistError> {
        let n = self.space.num_vars();
        let top = max_subset_size.unwrap_or(n).min(n);
        if top == 0 {
            return Ok(Vec::new());
        }
        let needed: usize = (1..=top)
            .map(|k| binomial(n, k))
            .fold(0usize, usize::saturating_add);
        if needed > SUBSET_BUDGET {
            return Err(QdistError::CapExceeded {
                needed,
                budget: SUBSET_BUDGET,
            });
        }
        let mut maximal: Vec<Vec<usize>> = Vec::new();
        for size in (1..=top).rev() {
            for subset in (0..n).combinations(size) {
                if maximal.iter().any(|m| subset.iter().all(|i| m.contains(i))) {
                    continue;
                }
                if self.marginalize(&subset)?.dist.is_probability(tol) {
                    maximal.push(subset);
                }
            }
        }
        Ok(maximal)
    }

    /// The product of the single-variable marginals, as a distribution on the
    /// same space. Fails unless every single is a probability (within
    /// [`DEFAULT_TOL`]); the result is then a true probability.
    pub fn product_of_singles(&self) -> Result<QuasiDistribution, QdistError> {
        let n = self.space.num_vars();
        let mut singles: Vec<Vec<f64>> = Vec::with_capacity(n);
        for k in 0..n {
            let m = self.marginalize(&[k])?.dist;
            if !m.is_probability(DEFAULT_TOL) {
                let worst = m
                    .values
                    .iter()
                    .copied()
                    .min_by(|a, b| a.total_cmp(b))
                    .unwrap_or(f64::NAN);
                return Err(QdistError::NegativeSingle {
                    label: self.space.variables[k].label.clone(),
                    value: worst,
                });
            }
            singles.push(m.values);
        }
        let mut values = vec![0.0f64; self.space.cells()];
        let mut outcome = vec![0usize; n];
        for (index, slot) in values.iter_mut().enumerate() {
            self.space.decode_into(index, &mut outcome);
            *slot = outcome
                .iter()
                .enumerate()
                .map(|(k, &v)| singles[k][v])
                .product();
        }
        Ok(QuasiDistribution::from_parts(self.space.clone(), values))
    }

    /// Merges outcome values within variables and drops whole variables.
    ///
    /// `plan` must list one partition per variable of the parent space, in
    /// order; partitions of dropped variables are ignored. Each retained
    /// variable's partition must split its alphabet into non-empty, disjoint,
    /// covering blocks; block order defines the new value indexing and the
    /// variable's new arity is the block count. A retained variable needs at
    /// least two blocks (arity-1 variables are not representable); to erase a
    /// variable entirely, drop it. Dropped variables are summed out. Sums
    /// are preserved.
    pub fn coarse_grain(
        &self,
        plan: &[BlockPartition],
        drop: &[usize],
    ) -> Result<QuasiDistribution, QdistError> {
        let n = self.space.num_vars();
        if plan.len() != n {
            return Err(QdistError::LengthMismatch {
                expected: n,
                got: plan.len(),
            });
        }
        let mut dropped = vec![false; n];
        for &d in drop {
            if d >= n {
                return Err(QdistError::BadSubset {
                    subset: drop.to_vec(),
                    reason: "drop index out of range",
                });
            }
            if dropped[d] {
                return Err(QdistError::BadSubset {
                    subset: drop.to_vec(),
                    reason: "drop indices must be distinct",
                });
            }
            dropped[d] = true;
        }
        let kept: Vec<usize> = (0..n).filter(|&k| !dropped[k]).collect();
        if kept.is_empty() {
            return Err(QdistError::EmptySpace);
        }

        // Per kept variable: value -> block index, plus the new arity.
        let mut value_maps: Vec<Vec<usize>> = Vec::with_capacity(n);
        let mut new_vars: Vec<Variable> = Vec::with_capacity(kept.len());
        for k in 0..n {
            if dropped[k] {
                value_maps.push(Vec::new());
                continue;
            }
            let arity = self.space.arity(k);
            let partition = &plan[k];
            if partition.blocks.is_empty() {
                return Err(QdistError::BadPartition {
                    variable: k,
                    reason: "no blocks".into(),
                });
            }
            let mut map = vec![usize::MAX; arity];
            for (b, block) in partition.blocks.iter().enumerate() {
                if block.values.is_empty() {
                    return Err(QdistError::BadPartition {
                        variable: k,
                        reason: format!("block `{}` is empty", block.label),
                    });
                }
                for &v in &block.values {
                    if v >= arity {
                        return Err(QdistError::BadPartition {
                            variable: k,
                            reason: format!("value {v} out of range for arity {arity}"),
                        });
                    }
                    if map[v] != usize::MAX {
                        return Err(QdistError::BadPartition {
                            variable: k,
                            reason: format!("value {v} appears in two blocks"),
                        });
                    }
                    map[v] = b;
                }
            }
            if let Some(v) = map.iter().position(|&b| b == usize::MAX) {
                return Err(QdistError::BadPartition {
                    variable: k,
                    reason: format!("value {v} is not covered by any block"),
                });
            }
            new_vars.push(Variable::new(
                self.space.variables[k].label.clone(),
                partition.blocks.len(),
            ));
            value_maps.push(map);
        }

        let new_space = OutcomeSpace::new(new_vars)?;
        let mut values = vec![0.0f64; new_space.cells()];
        let mut outcome = vec![0usize; n];
        for (index, &w) in self.values.iter().enumerate() {
            self.space.decode_into(index, &mut outcome);
            let mut s = 0usize;
            for (pos, &k) in kept.iter().enumerate() {
                s += value_maps[k][outcome[k]] * new_space.strides[pos];
            }
            values[s] += w;
        }
        Ok(QuasiDistribution::from_parts(new_space, values))
    }
}

/// A partition of one variable's alphabet into labelled blocks.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct BlockPartition {
    pub blocks: Vec<Block>,
}

/// One block of a [`BlockPartition`].
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Block {
    pub label: String,
    pub values: Vec<usize>,
}

impl BlockPartition {
    pub fn new(blocks: Vec<(&str, Vec<usize>)>) -> Self {
        BlockPartition {
            blocks: blocks
                .into_iter()
                .map(|(label, values)| Block {
                    label: label.into(),
                    values,
                })
                .collect(),
        }
    }

    /// The identity partition on an alphabet of the given arity.
    pub fn identity(arity: usize) -> Self {
        BlockPartition {
            blocks: (0..arity)
                .map(|v| Block {
                    label: format!("{v}"),
                    values: vec![v],
                })
                .collect(),
        }
    }
}

/// How a probability `p` differs from the quasi-distribution `q` it repairs.
#[derive(Debug, Clone)]
pub struct ModificationReport {
    /// Entrywise difference `p - q`.
    pub delta: Vec<f64>,
    pub delta_sum: f64,
    /// True iff `|delta_sum| <= tol`.
    pub sums_to_zero: bool,
    /// The maximal positive subsets of `q` that were compared.
    pub checked_subsets: Vec<Vec<usize>>,
    /// Per subset: true iff the marginals of `p` and `q` agree within `tol`.
    pub subset_preserved: Vec<bool>,
    /// True iff every checked subset is preserved.
    pub marginals_preserved: bool,
}

/// Compares a candidate replacement `p` against `q`: the difference table,
/// whether it sums to zero, and whether `p` preserves the marginals of `q` on
/// each maximal positive subset of `q`.
pub fn modification(
    p: &QuasiDistribution,
    q: &QuasiDistribution,
    tol: f64,
) -> Result<ModificationReport, QdistError> {
    if p.space != q.space {
        return Err(QdistError::SpaceMismatch);
    }
    let delta: Vec<f64> = p.values.iter().zip(&q.values).map(|(a, b)| a - b).collect();
    let delta_sum: f64 = delta.iter().sum();
    let checked_subsets = q.positive_marginals(tol, None)?;
    let mut subset_preserved = Vec::with_capacity(checked_subsets.len());
    for subset in &checked_subsets {
        let mp = p.marginalize(subset)?.dist;
        let mq = q.marginalize(subset)?.dist;
        let dev = mp
            .values
            .iter()
            .zip(&mq.values)
            .map(|(a, b)| (a - b).abs())
            .fold(0.0f64, f64::max);
        subset_preserved.push(dev <= tol);
    }
    Ok(ModificationReport {
        sums_to_zero: delta_sum.abs() <= tol,
        marginals_preserved: subset_preserved.iter().all(|&ok| ok),
        delta,
        delta_sum,
        checked_subsets,
        subset_preserved,
    })
}

fn binomial(n: usize, k: usize) -> usize {
    if k > n {
        return 0;
    }
    let k = k.min(n - k);
    let mut acc: usize = 1;
    for i in 0..k {
        acc = acc.saturating_mul(n - i) / (i + 1);
    }
    acc
}
