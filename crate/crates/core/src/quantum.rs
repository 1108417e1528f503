//! Finite-dimensional quantum states, projective decompositions, and the
//! real-part (Goldstein-Page) quasi-probability of a sequence of
//! non-commuting measurements.
//!
//! The central construction: given projective decompositions `P^(1) .. P^(n)`
//! of the identity on one Hilbert space, a state `rho`, and an application
//! order, the quasi-probability of the outcome tuple `(a_1, .., a_n)` is
//!
//! ```text
//! q(a_1, .., a_n) = Re Tr( P^(k_n)_{a_{k_n}} ... P^(k_1)_{a_{k_1}} rho )
//! ```
//!
//! where `k_1` is the decomposition applied first (written adjacent to
//! `rho`). Completeness of each decomposition makes the table sum to one
//! exactly; entries can be negative because the projectors need not commute.

use num_complex::Complex64;
use thiserror::Error;

use nalgebra::DMatrix;

use crate::qdist::{OutcomeSpace, QdistError, QuasiDistribution, Variable};

/// Largest Hilbert-space dimension accepted.
pub const MAX_DIM: usize = 64;

/// Tolerance for Hermiticity checks on states.
pub const HERMITIAN_TOL: f64 = 1e-12;

/// Tolerance for projector checks (Hermiticity and idempotence).
pub const PROJECTOR_TOL: f64 = 1e-10;

/// Tolerance on `sum_a P_a - I` for decompositions of the identity.
pub const COMPLETENESS_TOL: f64 = 1e-12;

/// Eigenvalues of a state may undershoot zero by at most this much.
pub const PSD_TOL: f64 = 1e-9;

/// Tolerance on `| |a| - 1 |` for measurement directions.
pub const UNIT_TOL: f64 = 1e-12;

/// Errors from quantum-state and projector operations.
#[derive(Debug, Error)]
pub enum QuantumError {
    #[error("dimension {dim} is invalid (must be 1..={max})")]
    BadDimension { dim: usize, max: usize },
    #[error("expected {expected} entries for a {dim}x{dim} matrix, got {got}")]
    LengthMismatch {
        dim: usize,
        expected: usize,
        got: usize,
    },
    #[error("matrix is not Hermitian (deviation {deviation:.3e})")]
    NotHermitian { deviation: f64 },
    #[error("matrix is not idempotent (deviation {deviation:.3e})")]
    NotIdempotent { deviation: f64 },
    #[error("projectors do not sum to the identity (deviation {deviation:.3e})")]
    NotComplete { deviation: f64 },
    #[error("state has a negative eigenvalue ({min_eig:.3e})")]
    NotPositive { min_eig: f64 },
    #[error("state trace is {trace:?}, not 1")]
    BadTrace { trace: Complex64 },
    #[error("direction has norm {norm:.17}, not 1")]
    NotUnit { norm: f64 },
    #[error("spin sign must be +1 or -1, got {sign}")]
    BadSign { sign: i32 },
    #[error("dimension mismatch: {a} vs {b}")]
    DimMismatch { a: usize, b: usize },
    #[error("invalid application order: {reason}")]
    BadOrder { reason: &'static str },
    #[error("a decomposition needs at least one projector")]
    EmptyDecomposition,
    #[error("a projector string needs at least one factor")]
    EmptyString,
    #[error(transparent)]
    Dist(#[from] QdistError),
}

/// A square complex matrix of dimension at most [`MAX_DIM`].
#[derive(Debug, Clone)]
pub struct CMatrix {
    inner: DMatrix<Complex64>,
}

impl CMatrix {
    /// Builds from row-major entries.
    pub fn from_row_major(dim: usize, entries: Vec<Complex64>) -> Result<Self, QuantumError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(QuantumError::BadDimension { dim, max: MAX_DIM });
        }
        if entries.len() != dim * dim {
            return Err(QuantumError::LengthMismatch {
                dim,
                expected: dim * dim,
                got: entries.len(),
            });
        }
        Ok(CMatrix {
            inner: DMatrix::from_row_slice(dim, dim, &entries),
        })
    }

    /// Builds from row-major real entries.
    pub fn from_real_row_major(dim: usize, entries: Vec<f64>) -> Result<Self, QuantumError> {
        Self::from_row_major(
            dim,
            entries
                .into_iter()
                .map(|x| Complex64::new(x, 0.0))
                .collect(),
        )
    }

    pub fn identity(dim: usize) -> Result<Self, QuantumError> {
        if dim == 0 || dim > MAX_DIM {
            return Err(QuantumError::BadDimension { dim, max: MAX_DIM });
        }
        Ok(CMatrix {
            inner: DMatrix::identity(dim, dim),
        })
    }

    fn from_inner(inner: DMatrix<Complex64>) -> Self {
        debug_assert_eq!(inner.nrows(), inner.ncols());
        CMatrix { inner }
    }

    pub fn dim(&self) -> usize {
        self.inner.nrows()
    }

    pub fn get(&self, row: usize, col: usize) -> Complex64 {
        self.inner[(row, col)]
    }

    /// Matrix product `self * rhs`.
    pub fn matmul(&self, rhs: &CMatrix) -> Result<CMatrix, QuantumError> {
        if self.dim() != rhs.dim() {
            return Err(QuantumError::DimMismatch {
                a: self.dim(),
                b: rhs.dim(),
            });
        }
        Ok(CMatrix::from_inner(&self.inner * &rhs.inner))
    }

    /// Kronecker product `self (x) rhs`; fails if the result would exceed
    /// [`MAX_DIM`].
    pub fn tensor(&self, rhs: &CMatrix) -> Result<CMatrix, QuantumError> {
        let dim = self.dim() * rhs.dim();
        if dim > MAX_DIM {
            return Err(QuantumError::BadDimension { dim, max: MAX_DIM });
        }
        Ok(CMatrix::from_inner(self.inner.kronecker(&rhs.inner)))
    }

    pub fn trace(&self) -> Complex64 {
        self.inner.trace()
    }

    pub fn adjoint(&self) -> CMatrix {
        CMatrix::from_inner(self.inner.adjoint())
    }

    /// Largest entrywise absolute difference from `rhs`.
    pub fn max_abs_diff(&self, rhs: &CMatrix) -> f64 {
        debug_assert_eq!(self.dim(), rhs.dim());
        self.inner
            .iter()
            .zip(rhs.inner.iter())
            .map(|(a, b)| (a - b).norm())
            .fold(0.0f64, f64::max)
    }

    pub fn is_hermitian(&self, tol: f64) -> bool {
        self.max_abs_diff(&self.adjoint()) <= tol
    }

    pub fn is_idempotent(&self, tol: f64) -> bool {
        let sq = CMatrix::from_inner(&self.inner * &self.inner);
        self.max_abs_diff(&sq) <= tol
    }

    /// Eigenvalues of a Hermitian matrix, ascending. The caller is expected
    /// to have checked Hermiticity; only the Hermitian part contributes.
    pub fn hermitian_eigenvalues(&self) -> Vec<f64> {
        let eig = self.inner.clone().symmetric_eigen();
        let mut values: Vec<f64> = eig.eigenvalues.iter().copied().collect();
        values.sort_by(f64::total_cmp);
        values
    }
}

/// `a . sigma` for a unit vector `a`: the traceless Hermitian matrix
/// `[[a_z, a_x - i a_y], [a_x + i a_y, -a_z]]`.
pub fn pauli_dot(a: [f64; 3]) -> Result<CMatrix, QuantumError> {
    let norm = (a[0] * a[0] + a[1] * a[1] + a[2] * a[2]).sqrt();
    if !norm.is_finite() || (norm - 1.0).abs() > UNIT_TOL {
        return Err(QuantumError::NotUnit { norm });
    }
    CMatrix::from_row_major(
        2,
        vec![
            Complex64::new(a[2], 0.0),
            Complex64::new(a[0], -a[1]),
            Complex64::new(a[0], a[1]),
            Complex64::new(-a[2], 0.0),
        ],
    )
}

/// The projector onto spin `s` (+1 or -1) along the unit direction `a`:
/// `(I + s a.sigma) / 2`.
pub fn spin_projector(a: [f64; 3], s: i32) -> Result<CMatrix, QuantumError> {
    if s != 1 && s != -1 {
        return Err(QuantumError::BadSign { sign: s });
    }
    let sigma = pauli_dot(a)?;
    let half = Complex64::new(0.5, 0.0);
    let sign = Complex64::new(s as f64, 0.0);
    let inner = DMatrix::<Complex64>::identity(2, 2) * half + &sigma.inner * (half * sign);
    Ok(CMatrix::from_inner(inner))
}

/// A validated density matrix: Hermitian, unit trace, positive semidefinite.
#[derive(Debug, Clone)]
pub struct DensityState {
    matrix: CMatrix,
}

impl DensityState {
    pub fn new(matrix: CMatrix) -> Result<Self, QuantumError> {
        if !matrix.is_hermitian(HERMITIAN_TOL) {
            let dev = matrix.max_abs_diff(&matrix.adjoint());
            return Err(QuantumError::NotHermitian { deviation: dev });
        }
        let trace = matrix.trace();
        if (trace - Complex64::new(1.0, 0.0)).norm() > HERMITIAN_TOL {
            return Err(QuantumError::BadTrace { trace });
        }
        let min_eig = matrix
            .hermitian_eigenvalues()
            .first()
            .copied()
            .unwrap_or(f64::NEG_INFINITY);
        if min_eig < -PSD_TOL {
            return Err(QuantumError::NotPositive { min_eig });
        }
        Ok(DensityState { matrix })
    }

    /// The pure state `|psi><psi|` for an unnormalized amplitude vector.
    pub fn pure(amplitudes: &[Complex64]) -> Result<Self, QuantumError> {
        let dim = amplitudes.len();
        if dim == 0 || dim > MAX_DIM {
            return Err(QuantumError::BadDimension { dim, max: MAX_DIM });
        }
        let norm_sq: f64 = amplitudes.iter().map(|a| a.norm_sqr()).sum();
        if norm_sq <= 0.0 || !norm_sq.is_finite() {
            return Err(QuantumError::NotUnit {
                norm: norm_sq.sqrt(),
            });
        }
        let mut entries = Vec::with_capacity(dim * dim);
        for i in 0..dim {
            for j in 0..dim {
                entries.push(amplitudes[i] * amplitudes[j].conj() / norm_sq);
            }
        }
        DensityState::new(CMatrix::from_row_major(dim, entries)?)
    }

    pub fn matrix(&self) -> &CMatrix {
        &self.matrix
    }

    pub fn dim(&self) -> usize {
        self.matrix.dim()
    }
}

/// The two-qubit spin singlet `|psi> = (|+-> - |-+>)/sqrt(2)` in the basis
/// `|++>, |+->, |-+>, |-->`, which satisfies
/// `Tr((a.sigma (x) b.sigma) rho) = -a.b`.
pub fn singlet() -> DensityState {
    let r = 1.0 / 2.0f64.sqrt();
    let psi = [
        Complex64::new(0.0, 0.0),
        Complex64::new(r, 0.0),
        Complex64::new(-r, 0.0),
        Complex64::new(0.0, 0.0),
    ];
    DensityState::pure(&psi).expect("singlet is a valid state")
}

/// A projective decomposition of the identity: Hermitian idempotents that
/// sum to `I`. Outcome `a` of the measurement corresponds to `projectors[a]`.
#[derive(Debug, Clone)]
pub struct ProjectiveDecomposition {
    projectors: Vec<CMatrix>,
}

impl ProjectiveDecomposition {
    pub fn new(projectors: Vec<CMatrix>) -> Result<Self, QuantumError> {
        let first = projectors.first().ok_or(QuantumError::EmptyDecomposition)?;
        let dim = first.dim();
        let mut sum = DMatrix::<Complex64>::zeros(dim, dim);
        for p in &projectors {
            if p.dim() != dim {
                return Err(QuantumError::DimMismatch { a: dim, b: p.dim() });
            }
            check_projector(p)?;
            sum += &p.inner;
        }
        let dev = CMatrix::from_inner(sum)
            .max_abs_diff(&CMatrix::identity(dim).expect("dim already validated"));
        if dev > COMPLETENESS_TOL {
            return Err(QuantumError::NotComplete { deviation: dev });
        }
        Ok(ProjectiveDecomposition { projectors })
    }

    /// The two-outcome spin decomposition along a unit direction, ordered
    /// `[P_+, P_-]` to match the value convention of [`crate::qdist::Spin`].
    pub fn spin(a: [f64; 3]) -> Result<Self, QuantumError> {
        ProjectiveDecomposition::new(vec![spin_projector(a, 1)?, spin_projector(a, -1)?])
    }

    pub fn projectors(&self) -> &[CMatrix] {
        &self.projectors
    }

    pub fn arity(&self) -> usize {
        self.projectors.len()
    }

    pub fn dim(&self) -> usize {
        self.projectors[0].dim()
    }
}

fn check_projector(p: &CMatrix) -> Result<(), QuantumError> {
    if !p.is_hermitian(PROJECTOR_TOL) {
        return Err(QuantumError::NotHermitian {
            deviation: p.max_abs_diff(&p.adjoint()),
        });
    }
    if !p.is_idempotent(PROJECTOR_TOL) {
        let sq = CMatrix::from_inner(&p.inner * &p.inner);
        return Err(QuantumError::NotIdempotent {
            deviation: p.max_abs_diff(&sq),
        });
    }
    Ok(())
}

/// An ordered product of projectors. `factors[0]` is applied first, that is,
/// written adjacent to the state: the string `(F_m .. F_2 F_1)` acts on
/// `rho` as `F_m ... F_1 rho`.
#[derive(Debug, Clone)]
pub struct ProjectorString {
    factors: Vec<CMatrix>,
}

impl ProjectorString {
    pub fn new(factors: Vec<CMatrix>) -> Result<Self, QuantumError> {
        let first = factors.first().ok_or(QuantumError::EmptyString)?;
        let dim = first.dim();
        for f in &factors {
            if f.dim() != dim {
                return Err(QuantumError::DimMismatch { a: dim, b: f.dim() });
            }
            check_projector(f)?;
        }
        Ok(ProjectorString { factors })
    }

    pub fn factors(&self) -> &[CMatrix] {
        &self.factors
    }

    pub fn dim(&self) -> usize {
        self.factors[0].dim()
    }
}

/// The (generally complex) trace `Tr(F_m ... F_1 rho)` of a projector string
/// applied to a state, `factors[0]` nearest `rho`.
///
/// Its real part is the quasi-probability of the corresponding outcome
/// sequence; a nonzero imaginary part signals genuine non-commutativity.
pub fn class_trace(
    string: &ProjectorString,
    rho: &DensityState,
) -> Result<Complex64, QuantumError> {
    if string.dim() != rho.dim() {
        return Err(QuantumError::DimMismatch {
            a: string.dim(),
            b: rho.dim(),
        });
    }
    let mut m = rho.matrix.inner.clone();
    for f in &string.factors {
        m = &f.inner * m;
    }
    Ok(m.trace())
}

/// Builds the full quasi-probability table for measuring the given
/// decompositions in the given order on `rho`.
///
/// Variable `k` of the result ranges over the outcomes of `decomps[k]` and is
/// labelled `s{k+1}`; `order` lists decomposition indices in application
/// order (`order[0]` acts first, adjacent to `rho`) and must be a permutation
/// of `0..decomps.len()`. Each cell is
/// `Re Tr(P^(order[last]) ... P^(order[0]) rho)`; the table sums to one by
/// completeness. Entries from commuting families are ordinary probabilities;
/// non-commuting families can produce negative entries.
pub fn gp_quasiprob(
    decomps: &[ProjectiveDecomposition],
    order: &[usize],
    rho: &DensityState,
) -> Result<QuasiDistribution, QuantumError> {
    if decomps.is_empty() {
        return Err(QuantumError::EmptyDecomposition);
    }
    let n = decomps.len();
    for d in decomps {
        if d.dim() != rho.dim() {
            return Err(QuantumError::DimMismatch {
                a: d.dim(),
                b: rho.dim(),
            });
        }
    }
    if order.len() != n {
        return Err(QuantumError::BadOrder {
            reason: "order length differs from decompositions",
        });
    }
    let mut seen = vec![false; n];
    for &k in order {
        if k >= n {
            return Err(QuantumError::BadOrder {
                reason: "order index out of range",
            });
        }
        if seen[k] {
            return Err(QuantumError::BadOrder {
                reason: "order repeats an index",
            });
        }
        seen[k] = true;
    }

    let space = OutcomeSpace::new(
        (0..n)
            .map(|k| Variable::new(format!("s{}", k + 1), decomps[k].arity()))
            .collect(),
    )?;
    let mut values = vec![0.0f64; space.cells()];
    let mut outcome = vec![0usize; n];

    // Depth-first over application order, reusing partial products: at depth
    // d the accumulated matrix is P^(order[d-1]) ... P^(order[0]) rho.
    fn descend(
        decomps: &[ProjectiveDecomposition],
        order: &[usize],
        depth: usize,
        acc: &DMatrix<Complex64>,
        outcome: &mut [usize],
        space: &OutcomeSpace,
        values: &mut [f64],
    ) {
        if depth == order.len() {
            values[space.encode(outcome)] = acc.trace().re;
            return;
        }
        let var = order[depth];
        for (a, p) in decomps[var].projectors().iter().enumerate() {
            outcome[var] = a;
            let next = &p.inner * acc;
            descend(decomps, order, depth + 1, &next, outcome, space, values);
        }
    }
    descend(
        decomps,
        order,
        0,
        &rho.matrix.inner,
        &mut outcome,
        &space,
        &mut values,
    );

    Ok(QuasiDistribution::new(space, values)?)
}

/// True iff every entry of `q` is at least `-tol`: the table passes the
/// linear-positivity requirement and can be read as a probability up to
/// numerical noise.
pub fn linear_positivity(q: &QuasiDistribution, tol: f64) -> bool {
    q.values().iter().all(|&v| v >= -tol)
}

#[cfg(test)]
mod tests {
    use super::*;

    const X: [f64; 3] = [1.0, 0.0, 0.0];
    const Y: [f64; 3] = [0.0, 1.0, 0.0];
    const Z: [f64; 3] = [0.0, 0.0, 1.0];

    fn c(re: f64, im: f64) -> Complex64 {
        Complex64::new(re, im)
    }

    fn up() -> DensityState {
        DensityState::pure(&[c(1.0, 0.0), c(0.0, 0.0)]).unwrap()
    }

    #[test]
    fn pauli_matrices() {
        let sx = pauli_dot(X).unwrap();
        assert_eq!(sx.get(0, 1), c(1.0, 0.0));
        assert_eq!(sx.get(1, 0), c(1.0, 0.0));
        assert_eq!(sx.get(0, 0), c(0.0, 0.0));
        let sy = pauli_dot(Y).unwrap();
        assert_eq!(sy.get(0, 1), c(0.0, -1.0));
        assert_eq!(sy.get(1, 0), c(0.0, 1.0));
        let sz = pauli_dot(Z).unwrap();
        assert_eq!(sz.get(0, 0), c(1.0, 0.0));
        assert_eq!(sz.get(1, 1), c(-1.0, 0.0));
        assert!(matches!(
            pauli_dot([0.5, 0.0, 0.0]),
            Err(QuantumError::NotUnit { .. })
        ));
    }

    #[test]
    fn spin_projectors_are_projective_decomposition() {
        for a in [X, Y, Z, [0.6, 0.0, 0.8]] {
            let p = spin_projector(a, 1).unwrap();
            let m = spin_projector(a, -1).unwrap();
            assert!(p.is_hermitian(1e-15));
            assert!(p.is_idempotent(1e-15));
            let sum = CMatrix::from_inner(&p.inner + &m.inner);
            assert!(sum.max_abs_diff(&CMatrix::identity(2).unwrap()) < 1e-15);
            let eigs = p.hermitian_eigenvalues();
            assert!((eigs[0] - 0.0).abs() < 1e-12 && (eigs[1] - 1.0).abs() < 1e-12);
            ProjectiveDecomposition::spin(a).unwrap();
        }
        assert!(matches!(
            spin_projector(Z, 2),
            Err(QuantumError::BadSign { .. })
        ));
    }

    #[test]
    fn density_state_validation() {
        // Not a state: trace 1 but an eigenvalue below zero.
        let bad = CMatrix::from_real_row_major(2, vec![1.5, 0.0, 0.0, -0.5]).unwrap();
        assert!(matches!(
            DensityState::new(bad),
            Err(QuantumError::NotPositive { .. })
        ));
        // Not Hermitian.
        let bad =
            CMatrix::from_row_major(2, vec![c(0.5, 0.0), c(0.3, 0.1), c(0.3, 0.3), c(0.5, 0.0)])
                .unwrap();
        assert!(matches!(
            DensityState::new(bad),
            Err(QuantumError::NotHermitian { .. })
        ));
        // Wrong trace.
        let bad = CMatrix::from_real_row_major(2, vec![0.7, 0.0, 0.0, 0.7]).unwrap();
        assert!(matches!(
            DensityState::new(bad),
            Err(QuantumError::BadTrace { .. })
        ));
        // Maximally mixed is fine.
        let ok = CMatrix::from_real_row_major(2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        DensityState::new(ok).unwrap();
    }

    #[test]
    fn singlet_matrix_entries() {
        let rho = singlet();
        let m = rho.matrix();
        assert_eq!(m.dim(), 4);
        for (i, j, want) in [
            (0usize, 0usize, 0.0),
            (1, 1, 0.5),
            (2, 2, 0.5),
            (3, 3, 0.0),
            (1, 2, -0.5),
            (2, 1, -0.5),
        ] {
            assert!(
                (m.get(i, j) - c(want, 0.0)).norm() < 1e-15,
                "entry ({i},{j})"
            );
        }
    }

    #[test]
    fn singlet_correlator_is_minus_dot_product() {
        let rho = singlet();
        let dirs = [X, Y, Z, [0.6, 0.0, 0.8], [0.0, 0.8, -0.6]];
        for a in dirs {
            for b in dirs {
                let op = pauli_dot(a)
                    .unwrap()
                    .tensor(&pauli_dot(b).unwrap())
                    .unwrap();
                let val = op.matmul(rho.matrix()).unwrap().trace();
                let dot = a[0] * b[0] + a[1] * b[1] + a[2] * b[2];
                assert!((val - c(-dot, 0.0)).norm() < 1e-14);
            }
        }
    }

    #[test]
    fn decomposition_validation() {
        let p = spin_projector(Z, 1).unwrap();
        let m = spin_projector(Z, -1).unwrap();
        assert!(ProjectiveDecomposition::new(vec![p.clone(), m]).is_ok());
        assert!(matches!(
            ProjectiveDecomposition::new(vec![p.clone(), p.clone()]),
            Err(QuantumError::NotComplete { .. })
        ));
        assert!(matches!(
            ProjectiveDecomposition::new(vec![]),
            Err(QuantumError::EmptyDecomposition)
        ));
        let not_proj = CMatrix::from_real_row_major(2, vec![0.5, 0.0, 0.0, 0.5]).unwrap();
        assert!(matches!(
            ProjectiveDecomposition::new(vec![not_proj]),
            Err(QuantumError::NotIdempotent { .. })
        ));
    }

    #[test]
    fn class_trace_two_axis_examples() {
        // Tr(P^x_+ P^z_+ rho_up): the z projector fixes |up>, the x projector
        // then passes half of it. Purely real despite non-commutativity.
        let rho = up();
        let string = ProjectorString::new(vec![
            spin_projector(Z, 1).unwrap(),
            spin_projector(X, 1).unwrap(),
        ])
        .unwrap();
        let z = class_trace(&string, &rho).unwrap();
        assert!((z - c(0.5, 0.0)).norm() < 1e-15);

        // Tr(P^x_+ P^y_+ rho_up) picks up a genuine imaginary part.
        let string = ProjectorString::new(vec![
            spin_projector(Y, 1).unwrap(),
            spin_projector(X, 1).unwrap(),
        ])
        .unwrap();
        let z = class_trace(&string, &rho).unwrap();
        assert!((z - c(0.25, 0.25)).norm() < 1e-15);
    }

    #[test]
    fn class_trace_closed_form_for_two_projectors_on_up() {
        // Tr(P^u_+ P^v_+ rho_up) = (1 + u_z + v_z + u.v + i (u x v)_z) / 4.
        let rho = up();
        let dirs = [
            X,
            Y,
            Z,
            [0.6, 0.0, 0.8],
            [0.0, -0.6, 0.8],
            [-0.48, 0.6, 0.64],
        ];
        for u in dirs {
            for v in dirs {
                let string = ProjectorString::new(vec![
                    spin_projector(v, 1).unwrap(),
                    spin_projector(u, 1).unwrap(),
                ])
                .unwrap();
                let z = class_trace(&string, &rho).unwrap();
                let dot = u[0] * v[0] + u[1] * v[1] + u[2] * v[2];
                let cross_z = u[0] * v[1] - u[1] * v[0];
                let want = c(1.0 + u[2] + v[2] + dot, cross_z) * 0.25;
                assert!((z - want).norm() < 1e-14, "u={u:?} v={v:?}: {z} vs {want}");
            }
        }
    }

    #[test]
    fn gp_commuting_case_is_diagonal_probability() {
        // Measuring the same z decomposition twice: q(a, b) = delta_ab p(a).
        let rho =
            DensityState::new(CMatrix::from_real_row_major(2, vec![0.7, 0.0, 0.0, 0.3]).unwrap())
                .unwrap();
        let d = ProjectiveDecomposition::spin(Z).unwrap();
        let q = gp_quasiprob(&[d.clone(), d], &[0, 1], &rho).unwrap();
        let want = [0.7, 0.0, 0.0, 0.3];
        for (a, b) in q.values().iter().zip(want) {
            assert!((a - b).abs() < 1e-14);
        }
        assert!(linear_positivity(&q, 0.0));
    }

    #[test]
    fn gp_non_commuting_case_sums_to_one() {
        let rho = up();
        let dx = ProjectiveDecomposition::spin(X).unwrap();
        let dy = ProjectiveDecomposition::spin(Y).unwrap();
        let dz = ProjectiveDecomposition::spin(Z).unwrap();
        let q = gp_quasiprob(&[dx, dy, dz], &[2, 1, 0], &rho).unwrap();
        let sum: f64 = q.values().iter().sum();
        assert!((sum - 1.0).abs() < 1e-14);
        // Summing over every other measurement telescopes it away, so the
        // first-applied measurement's marginal is its Born distribution:
        // z on |up> gives (1, 0).
        let mz = q.marginalize(&[2]).unwrap().dist;
        assert!((mz.values()[0] - 1.0).abs() < 1e-14);
        assert!(mz.values()[1].abs() < 1e-14);
    }

    #[test]
    fn gp_order_validation() {
        let rho = up();
        let d = ProjectiveDecomposition::spin(Z).unwrap();
        let two = [d.clone(), d];
        assert!(matches!(
            gp_quasiprob(&two, &[0, 0], &rho),
            Err(QuantumError::BadOrder { .. })
        ));
        assert!(matches!(
            gp_quasiprob(&two, &[0], &rho),
            Err(QuantumError::BadOrder { .. })
        ));
        assert!(matches!(
            gp_quasiprob(&two, &[0, 2], &rho),
            Err(QuantumError::BadOrder { .. })
        ));
    }

    #[test]
    fn gp_two_factor_reversal_leaves_real_part_invariant() {
        // Tr(Q P rho) and Tr(P Q rho) are complex conjugates for Hermitian
        // P, Q, rho, so two-measurement tables are order-independent.
        let rho = DensityState::new(
            CMatrix::from_row_major(2, vec![c(0.8, 0.0), c(0.1, 0.2), c(0.1, -0.2), c(0.2, 0.0)])
                .unwrap(),
        )
        .unwrap();
        let da = ProjectiveDecomposition::spin([0.6, 0.0, 0.8]).unwrap();
        let db = ProjectiveDecomposition::spin([0.0, 0.8, -0.6]).unwrap();
        let q_ab = gp_quasiprob(&[da.clone(), db.clone()], &[0, 1], &rho).unwrap();
        let q_ba = gp_quasiprob(&[da, db], &[1, 0], &rho).unwrap();
        for (x, y) in q_ab.values().iter().zip(q_ba.values()) {
            assert!((x - y).abs() < 1e-14);
        }
    }

    #[test]
    fn gp_three_factor_tables_depend_on_order() {
        // Swapping the first two of three measurements shifts the all-plus
        // cell by Re Tr(P^c [P^b, P^a] rho) = -(1/4) (c x (b x a)) . r for
        // rho = (I + r.sigma)/2; the axes below make that 0.6/(4 sqrt 2).
        let r = [0.6, 0.0, 0.48];
        let rho = DensityState::new(
            CMatrix::from_row_major(
                2,
                vec![
                    c(0.5 * (1.0 + r[2]), 0.0),
                    c(0.5 * r[0], -0.5 * r[1]),
                    c(0.5 * r[0], 0.5 * r[1]),
                    c(0.5 * (1.0 - r[2]), 0.0),
                ],
            )
            .unwrap(),
        )
        .unwrap();
        let s = 1.0 / 2.0f64.sqrt();
        let da = ProjectiveDecomposition::spin(X).unwrap();
        let db = ProjectiveDecomposition::spin([0.0, s, s]).unwrap();
        let dc = ProjectiveDecomposition::spin(Z).unwrap();
        let decomps = [da, db, dc];
        let q_abc = gp_quasiprob(&decomps, &[0, 1, 2], &rho).unwrap();
        let q_bac = gp_quasiprob(&decomps, &[1, 0, 2], &rho).unwrap();
        let diff = q_abc.value(&[0, 0, 0]) - q_bac.value(&[0, 0, 0]);
        let want = 0.6 / (4.0 * 2.0f64.sqrt());
        assert!(
            (diff - want).abs() < 1e-12,
            "order shift {diff} vs predicted {want}"
        );
    }

    #[test]
    fn tensor_dimensions_and_entries() {
        let sz = pauli_dot(Z).unwrap();
        let id = CMatrix::identity(2).unwrap();
        let t = sz.tensor(&id).unwrap();
        assert_eq!(t.dim(), 4);
        assert_eq!(t.get(0, 0), c(1.0, 0.0));
        assert_eq!(t.get(3, 3), c(-1.0, 0.0));
        assert_eq!(t.get(1, 1), c(1.0, 0.0));
        assert_eq!(t.get(2, 2), c(-1.0, 0.0));
    }

    #[test]
    fn matrix_constructors_validate() {
        assert!(matches!(
            CMatrix::from_real_row_major(0, vec![]),
            Err(QuantumError::BadDimension { .. })
        ));
        assert!(matches!(
            CMatrix::from_real_row_major(65, vec![0.0; 65 * 65]),
            Err(QuantumError::BadDimension { .. })
        ));
        assert!(matches!(
            CMatrix::from_real_row_major(2, vec![0.0; 3]),
            Err(QuantumError::LengthMismatch { .. })
        ));
    }

    mod properties {
        use super::*;
        use proptest::prelude::*;

        prop_compose! {
            fn unit_vector()(
                raw in [-1.0f64..1.0, -1.0f64..1.0, -1.0f64..1.0],
            ) -> [f64; 3] {
                let norm = (raw[0] * raw[0] + raw[1] * raw[1] + raw[2] * raw[2]).sqrt();
                if norm < 1e-3 {
                    [0.0, 0.0, 1.0]
                } else {
                    [raw[0] / norm, raw[1] / norm, raw[2] / norm]
                }
            }
        }

        proptest! {
            #[test]
            fn projector_properties(a in unit_vector()) {
                let p = spin_projector(a, 1).unwrap();
                prop_assert!(p.is_hermitian(1e-12));
                prop_assert!(p.is_idempotent(1e-12));
                let tr = p.trace();
                prop_assert!((tr - Complex64::new(1.0, 0.0)).norm() < 1e-12);
            }

            #[test]
            fn gp_tables_normalize(a in unit_vector(), b in unit_vector(), w in 0.0f64..1.0) {
                // rho = w |up><up| + (1-w) maximally mixed.
                let rho = DensityState::new(CMatrix::from_real_row_major(
                    2,
                    vec![w + (1.0 - w) * 0.5, 0.0, 0.0, (1.0 - w) * 0.5],
                ).unwrap()).unwrap();
                let da = ProjectiveDecomposition::spin(a).unwrap();
                let db = ProjectiveDecomposition::spin(b).unwrap();
                let q = gp_quasiprob(&[da, db], &[1, 0], &rho).unwrap();
                let sum: f64 = q.values().iter().sum();
                prop_assert!((sum - 1.0).abs() < 1e-12);
                // Two-projector tables are built from single Born terms and
                // one interference term; each single marginal must be the
                // Born probability of that decomposition alone.
                let mb = q.marginalize(&[1]).unwrap().dist;
                let p_plus = spin_projector(b, 1).unwrap()
                    .matmul(rho.matrix()).unwrap().trace().re;
                prop_assert!((mb.values()[0] - p_plus).abs() < 1e-12);
            }
        }
    }
}
