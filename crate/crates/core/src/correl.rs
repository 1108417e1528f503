//! Parity (correlator) coefficients of binary quasi-distributions.
//!
//! A quasi-distribution over `n` spins has the expansion
//!
//! ```text
//! q(s_1, .., s_n) = 2^-n * sum_S K_S * prod_{k in S} s_k
//! ```
//!
//! over subsets `S` of the variables, with `K_S = <prod_{k in S} s_k>` and
//! `K_{} = 1` by normalization. [`ParityCoefficients`] stores all `2^n`
//! coefficients indexed by subset bitmask and converts both ways via a fast
//! Walsh-Hadamard transform.
//!
//! Mask convention: bit `n - 1 - k` of the mask corresponds to variable `k`,
//! matching the row-major cell indexing of [`crate::qdist`] where the last
//! variable varies fastest. With value index 0 meaning spin +1, the parity
//! character at cell `i` for mask `m` is `(-1)^popcount(i & m)`.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::qdist::{OutcomeSpace, QdistError, QuasiDistribution};

/// Largest spin count for which the full coefficient table is materialized.
pub const MAX_VARS: usize = 16;

/// Errors from parity-coefficient operations.
#[derive(Debug, Error)]
pub enum CorrelError {
    #[error("variable `{label}` has arity {arity}; parity coefficients need binary variables")]
    NotBinary { label: String, arity: usize },
    #[error("{n} variables exceed the limit of {max}")]
    TooManyVariables { n: usize, max: usize },
    #[error("empty-subset coefficient is {value:.17}, not 1")]
    NotNormalized { value: f64 },
    #[error("invalid variable subset {subset:?}: {reason}")]
    BadSubset {
        subset: Vec<usize>,
        reason: &'static str,
    },
    #[error("variable index {index} out of range for {n} variables")]
    BadIndex { index: usize, n: usize },
    #[error(transparent)]
    Dist(#[from] QdistError),
}

#[derive(Serialize, Deserialize)]
struct CoeffEntry {
    /// 1-based variable indices, strictly increasing.
    subset: Vec<usize>,
    value: f64,
}

#[derive(Serialize, Deserialize)]
struct CoeffsRepr {
    n: usize,
    coeffs: Vec<CoeffEntry>,
}

/// The full table of `2^n` parity coefficients of an `n`-spin distribution.
///
/// Serialized sparsely as 1-based subsets with nonzero values; on input,
/// absent subsets default to 0 and the absent empty subset defaults to 1.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "CoeffsRepr", into = "CoeffsRepr")]
pub struct ParityCoefficients {
    n: usize,
    /// Indexed by subset bitmask; entry 0 is `K_{}`.
    coeff: Vec<f64>,
}

impl TryFrom<CoeffsRepr> for ParityCoefficients {
    type Error = CorrelError;
    fn try_from(repr: CoeffsRepr) -> Result<Self, CorrelError> {
        if repr.n == 0 || repr.n > MAX_VARS {
            return Err(CorrelError::TooManyVariables {
                n: repr.n,
                max: MAX_VARS,
            });
        }
        let mut coeff = vec![0.0f64; 1usize << repr.n];
        coeff[0] = 1.0;
        for entry in &repr.coeffs {
            if entry.subset.is_empty() {
                coeff[0] = entry.value;
                continue;
            }
            for window in entry.subset.windows(2) {
                if window[0] >= window[1] {
                    return Err(CorrelError::BadSubset {
                        subset: entry.subset.clone(),
                        reason: "indices must be strictly increasing",
                    });
                }
            }
            let mut mask = 0usize;
            for &one_based in &entry.subset {
                if one_based == 0 || one_based > repr.n {
                    return Err(CorrelError::BadSubset {
                        subset: entry.subset.clone(),
                        reason: "index out of range (indices are 1-based)",
                    });
                }
                mask |= 1usize << (repr.n - one_based);
            }
            coeff[mask] = entry.value;
        }
        if (coeff[0] - 1.0).abs() > crate::qdist::NORMALIZATION_TOL {
            return Err(CorrelError::NotNormalized { value: coeff[0] });
        }
        Ok(ParityCoefficients { n: repr.n, coeff })
    }
}

impl From<ParityCoefficients> for CoeffsRepr {
    fn from(k: ParityCoefficients) -> CoeffsRepr {
        let mut coeffs = Vec::new();
        for mask in 1..k.coeff.len() {
            if k.coeff[mask] != 0.0 {
                coeffs.push(CoeffEntry {
                    subset: k.mask_to_subset(mask),
                    value: k.coeff[mask],
                });
            }
        }
        CoeffsRepr { n: k.n, coeffs }
    }
}

impl ParityCoefficients {
    /// All-zero correlators: the uniform distribution's coefficients.
    pub fn uniform(n: usize) -> Result<Self, CorrelError> {
        if n == 0 || n > MAX_VARS {
            return Err(CorrelError::TooManyVariables { n, max: MAX_VARS });
        }
        let mut coeff = vec![0.0f64; 1usize << n];
        coeff[0] = 1.0;
        Ok(ParityCoefficients { n, coeff })
    }

    /// Builds a table from explicit `(subset, value)` pairs with 0-based
    /// strictly increasing subsets; unspecified coefficients are 0 and
    /// `K_{}` is fixed at 1.
    pub fn from_subset_values(
        n: usize,
        entries: &[(Vec<usize>, f64)],
    ) -> Result<Self, CorrelError> {
        let mut k = ParityCoefficients::uniform(n)?;
        for (subset, value) in entries {
            k.set(subset, *value)?;
        }
        Ok(k)
    }

    /// Extracts all `2^n` coefficients from a binary distribution via a
    /// Walsh-Hadamard transform, `O(n 2^n)`.
    pub fn expand(q: &QuasiDistribution) -> Result<Self, CorrelError> {
        let space = q.space();
        let n = space.num_vars();
        if n > MAX_VARS {
            return Err(CorrelError::TooManyVariables { n, max: MAX_VARS });
        }
        for v in space.variables() {
            if v.arity != 2 {
                return Err(CorrelError::NotBinary {
                    label: v.label.clone(),
                    arity: v.arity,
                });
            }
        }
        let mut coeff: Vec<f64> = q.values().to_vec();
        wht(&mut coeff);
        Ok(ParityCoefficients { n, coeff })
    }

    /// Rebuilds the distribution on the given space. The space must consist
    /// of `n` binary variables; fails if `|K_{} - 1|` exceeds the
    /// normalization tolerance, since the result could not be normalized.
    pub fn reconstruct(&self, space: &OutcomeSpace) -> Result<QuasiDistribution, CorrelError> {
        if space.num_vars() != self.n {
            return Err(CorrelError::BadIndex {
                index: space.num_vars(),
                n: self.n,
            });
        }
        for v in space.variables() {
            if v.arity != 2 {
                return Err(CorrelError::NotBinary {
                    label: v.label.clone(),
                    arity: v.arity,
                });
            }
        }
        if (self.coeff[0] - 1.0).abs() > crate::qdist::NORMALIZATION_TOL {
            return Err(CorrelError::NotNormalized {
                value: self.coeff[0],
            });
        }
        let mut values = self.coeff.clone();
        wht(&mut values);
        let scale = 1.0 / (1usize << self.n) as f64;
        values.iter_mut().for_each(|v| *v *= scale);
        Ok(QuasiDistribution::new(space.clone(), values)?)
    }

    pub fn num_vars(&self) -> usize {
        self.n
    }

    /// Coefficient of a 0-based strictly increasing subset.
    pub fn get(&self, subset: &[usize]) -> Result<f64, CorrelError> {
        Ok(self.coeff[self.subset_to_mask(subset)?])
    }

    /// Sets the coefficient of a non-empty 0-based subset.
    pub fn set(&mut self, subset: &[usize], value: f64) -> Result<(), CorrelError> {
        let mask = self.subset_to_mask(subset)?;
        if mask == 0 {
            return Err(CorrelError::BadSubset {
                subset: subset.to_vec(),
                reason: "the empty-subset coefficient is fixed at 1",
            });
        }
        self.coeff[mask] = value;
        Ok(())
    }

    /// The single-variable coefficient `B_k = <s_k>`.
    pub fn single(&self, k: usize) -> Result<f64, CorrelError> {
        if k >= self.n {
            return Err(CorrelError::BadIndex {
                index: k,
                n: self.n,
            });
        }
        Ok(self.coeff[1usize << (self.n - 1 - k)])
    }

    /// The pair coefficient `C_ij = <s_i s_j>` for `i != j` (order ignored).
    pub fn pair(&self, i: usize, j: usize) -> Result<f64, CorrelError> {
        if i >= self.n || j >= self.n {
            return Err(CorrelError::BadIndex {
                index: i.max(j),
                n: self.n,
            });
        }
        if i == j {
            return Err(CorrelError::BadSubset {
                subset: vec![i, j],
                reason: "pair indices must differ",
            });
        }
        let (lo, hi) = (i.min(j), i.max(j));
        self.get(&[lo, hi])
    }

    /// The 2x2 pair marginal determined by singles and the pair coefficient:
    /// `p(s, s') = (1 + B_i s + B_j s' + C_ij s s') / 4` for `i < j`.
    pub fn pair_marginal(&self, i: usize, j: usize) -> Result<[f64; 4], CorrelError> {
        let (lo, hi) = (i.min(j), i.max(j));
        let c = self.pair(lo, hi)?;
        let b_lo = self.single(lo)?;
        let b_hi = self.single(hi)?;
        let mut table = [0.0f64; 4];
        for (cell, slot) in table.iter_mut().enumerate() {
            let s = if cell & 2 == 0 { 1.0 } else { -1.0 };
            let t = if cell & 1 == 0 { 1.0 } else { -1.0 };
            *slot = (1.0 + b_lo * s + b_hi * t + c * s * t) / 4.0;
        }
        Ok(table)
    }

    fn subset_to_mask(&self, subset: &[usize]) -> Result<usize, CorrelError> {
        for window in subset.windows(2) {
            if window[0] >= window[1] {
                return Err(CorrelError::BadSubset {
                    subset: subset.to_vec(),
                    reason: "indices must be strictly increasing",
                });
            }
        }
        let mut mask = 0usize;
        for &k in subset {
            if k >= self.n {
                return Err(CorrelError::BadIndex {
                    index: k,
                    n: self.n,
                });
            }
            mask |= 1usize << (self.n - 1 - k);
        }
        Ok(mask)
    }

    fn mask_to_subset(&self, mask: usize) -> Vec<usize> {
        (0..self.n)
            .filter(|&k| mask & (1usize << (self.n - 1 - k)) != 0)
            .map(|k| k + 1)
            .collect()
    }
}

/// In-place Walsh-Hadamard transform (involutive up to a factor `2^n`).
///
/// Applied to cell values it yields parity sums `sum_i (-1)^popcount(i & m) v_i`,
/// which with value index 0 meaning spin +1 are exactly the correlators.
fn wht(data: &mut [f64]) {
    debug_assert!(data.len().is_power_of_two());
    let mut half = 1;
    while half < data.len() {
        for start in (0..data.len()).step_by(half * 2) {
            for i in start..start + half {
                let (a, b) = (data[i], data[i + half]);
                data[i] = a + b;
                data[i + half] = a - b;
            }
        }
        half *= 2;
    }
}
