//! Composite systems: products of independent quasi-distributions, the
//! consistency check that viability survives composition, and a
//! demonstration that linear positivity does not.
//!
//! If each subsystem admits a true probability matching its positive
//! marginals, the product of those probabilities matches every product of
//! positive marginals, so the composite matching problem must again be
//! feasible. [`diosi_check`] verifies this numerically for concrete
//! components. By contrast, the real part of a projector-string trace can be
//! nonnegative for two strings separately while the combined string on the
//! product state has a negative real part; [`lp2_failure_demo`] searches a
//! supplied string family for such a pair and [`diosi_demo`] packages the
//! search over a grid of spin directions.

use num_complex::Complex64;
use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::lpmatch::{LpError, MatchingProblem, Verdict};
use crate::qdist::{OutcomeSpace, QdistError, QuasiDistribution};
use crate::quantum::{
    class_trace, spin_projector, CMatrix, DensityState, ProjectorString, QuantumError,
};

/// Real parts this close to zero still count as nonnegative when deciding
/// whether a string passes single-system linear positivity.
const REAL_TOL: f64 = 1e-12;

#[derive(Debug, Error)]
pub enum CompositeError {
    #[error("a composite needs at least one component")]
    Empty,
    #[error("components must have pairwise distinct variable labels; `{label}` repeats")]
    LabelClash { label: String },
    #[error("component {index} is itself non-viable; the composite check needs viable parts")]
    ComponentInfeasible { index: usize },
    #[error("direction grid needs positive counts, got {n_az} azimuthal x {n_pol} polar")]
    BadGrid { n_az: usize, n_pol: usize },
    #[error(transparent)]
    Lp(#[from] LpError),
    #[error(transparent)]
    Dist(#[from] QdistError),
    #[error(transparent)]
    Quantum(#[from] QuantumError),
}

/// A list of independent subsystems, each given by a quasi-distribution
/// over its own variables.
#[derive(Debug, Clone)]
pub struct CompositeProblem {
    components: Vec<QuasiDistribution>,
    product: QuasiDistribution,
}

impl CompositeProblem {
    /// Validates label disjointness and materializes the product space.
    pub fn new(components: Vec<QuasiDistribution>) -> Result<Self, CompositeError> {
        if components.is_empty() {
            return Err(CompositeError::Empty);
        }
        let mut variables = Vec::new();
        for comp in &components {
            for v in comp.space().variables() {
                if variables
                    .iter()
                    .any(|w: &crate::qdist::Variable| w.label == v.label)
                {
                    return Err(CompositeError::LabelClash {
                        label: v.label.clone(),
                    });
                }
                variables.push(v.clone());
            }
        }
        let space = OutcomeSpace::new(variables)?;
        let mut values = vec![1.0];
        for comp in &components {
            let mut next = Vec::with_capacity(values.len() * comp.values().len());
            for &a in &values {
                for &b in comp.values() {
                    next.push(a * b);
                }
            }
            values = next;
        }
        // Cell order matches the concatenated space: appended variables vary
        // fastest, exactly as the nested product above emits them. The sum
        // is the product of the component sums, so normalization carries
        // over without revalidation.
        let product = QuasiDistribution::from_parts(space, values);
        Ok(CompositeProblem {
            components,
            product,
        })
    }

    pub fn components(&self) -> &[QuasiDistribution] {
        &self.components
    }

    /// The joint quasi-distribution of all components taken independent.
    pub fn product_distribution(&self) -> &QuasiDistribution {
        &self.product
    }

    /// The index of each component's first variable in the product space.
    pub fn offsets(&self) -> Vec<usize> {
        let mut offsets = Vec::with_capacity(self.components.len());
        let mut next = 0;
        for comp in &self.components {
            offsets.push(next);
            next += comp.space().num_vars();
        }
        offsets
    }
}

/// Outcome of [`diosi_check`].
#[derive(Debug, Clone)]
pub struct DiosiReport {
    /// Per component, its positive-marginal family in local indices.
    pub families: Vec<Vec<Vec<usize>>>,
    /// The composite family: one union per choice of a member from each
    /// component's family, in product-space indices.
    pub product_subsets: Vec<Vec<usize>>,
    pub verdict: Verdict,
    pub witness: Option<QuasiDistribution>,
    /// Max constraint residual of the witness, present iff feasible.
    pub residual: Option<f64>,
    pub phase1_objective: f64,
}

/// Checks that viability composes: every product of component positive
/// marginals must be matchable by a true joint probability.
///
/// Errors with [`CompositeError::ComponentInfeasible`] if some component
/// fails its own matching problem, since the composite question is then
/// vacuous. For viable components the expected verdict is `Feasible` with a
/// tiny residual; anything else would falsify the product construction.
pub fn diosi_check(problem: &CompositeProblem, tol: f64) -> Result<DiosiReport, CompositeError> {
    let mut families = Vec::new();
    for (index, comp) in problem.components().iter().enumerate() {
        let family = comp.positive_marginals(tol, None)?;
        // A full-set member means the component is nonnegative and trivially
        // viable; otherwise ask the solver.
        let full = family.iter().any(|s| s.len() == comp.space().num_vars());
        if !full {
            let mp = MatchingProblem::from_marginals_of(comp, &family, tol)?;
            if mp.solve(tol)?.verdict == Verdict::Infeasible {
                return Err(CompositeError::ComponentInfeasible { index });
            }
        }
        families.push(family);
    }

    let offsets = problem.offsets();
    let mut product_subsets = vec![Vec::new()];
    for (family, &offset) in families.iter().zip(&offsets) {
        let mut next = Vec::with_capacity(product_subsets.len() * family.len());
        for prefix in &product_subsets {
            for member in family {
                let mut subset = prefix.clone();
                subset.extend(member.iter().map(|&v| v + offset));
                next.push(subset);
            }
        }
        product_subsets = next;
    }

    let product = problem.product_distribution();
    let mp = MatchingProblem::from_marginals_of(product, &product_subsets, tol)?;
    let result = mp.solve(tol)?;
    Ok(DiosiReport {
        families,
        product_subsets,
        verdict: result.verdict,
        witness: result.witness,
        residual: result.residual,
        phase1_objective: result.phase1_objective,
    })
}

/// A pair of strings that are linearly positive one system at a time while
/// their product is not: both real parts are nonnegative, yet the real part
/// of the product trace is below `-min_violation`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Lp2Counterexample {
    pub index_a: usize,
    pub index_b: usize,
    pub re_a: f64,
    pub im_a: f64,
    pub re_b: f64,
    pub im_b: f64,
    /// `Re(z_a z_b) = re_a re_b - im_a im_b`, the negative product real part.
    pub re_product: f64,
}

/// Scans two string families for a linear-positivity composition failure.
///
/// Traces factor across independent subsystems, so the combined string's
/// trace is `z_a z_b` and its real part can be driven negative by the
/// imaginary parts even when `Re z_a` and `Re z_b` are both nonnegative.
/// Returns the first such pair in scan order (`strings_a` outer,
/// `strings_b` inner), or `None` if the family contains none that exceed
/// `min_violation`.
pub fn lp2_failure_demo(
    rho_a: &DensityState,
    rho_b: &DensityState,
    strings_a: &[ProjectorString],
    strings_b: &[ProjectorString],
    min_violation: f64,
) -> Result<Option<Lp2Counterexample>, CompositeError> {
    let z_a = traces(rho_a, strings_a)?;
    let z_b = traces(rho_b, strings_b)?;
    Ok(scan_products(&z_a, &z_b, min_violation))
}

fn traces(
    rho: &DensityState,
    strings: &[ProjectorString],
) -> Result<Vec<Complex64>, CompositeError> {
    strings.iter().map(|s| Ok(class_trace(s, rho)?)).collect()
}

fn scan_products(
    z_a: &[Complex64],
    z_b: &[Complex64],
    min_violation: f64,
) -> Option<Lp2Counterexample> {
    // Only strings that pass single-system linear positivity qualify on
    // either side.
    let max_im_b = z_b
        .iter()
        .filter(|z| z.re >= -REAL_TOL)
        .map(|z| z.im.abs())
        .fold(0.0, f64::max);
    for (index_a, za) in z_a.iter().enumerate() {
        if za.re < -REAL_TOL {
            continue;
        }
        // Re(za zb) = re_a re_b - im_a im_b >= -|im_a| max|im_b| over
        // qualifying b, so this side can be ruled out wholesale.
        if za.im.abs() * max_im_b <= min_violation {
            continue;
        }
        for (index_b, zb) in z_b.iter().enumerate() {
            if zb.re < -REAL_TOL {
                continue;
            }
            let re_product = za.re * zb.re - za.im * zb.im;
            if re_product < -min_violation {
                return Some(Lp2Counterexample {
                    index_a,
                    index_b,
                    re_a: za.re,
                    im_a: za.im,
                    re_b: zb.re,
                    im_b: zb.im,
                    re_product,
                });
            }
        }
    }
    None
}

/// A deterministic grid of unit directions: polar angles
/// `pi (j + 1/2) / n_pol` avoid the poles, azimuths step by `2 pi / n_az`,
/// and direction `j * n_az + k` has polar index `j` and azimuthal index `k`.
pub fn direction_grid(n_az: usize, n_pol: usize) -> Result<Vec<[f64; 3]>, CompositeError> {
    if n_az == 0 || n_pol == 0 {
        return Err(CompositeError::BadGrid { n_az, n_pol });
    }
    let mut grid = Vec::with_capacity(n_az * n_pol);
    for j in 0..n_pol {
        let polar = std::f64::consts::PI * (j as f64 + 0.5) / (n_pol as f64);
        for k in 0..n_az {
            let az = 2.0 * std::f64::consts::PI * (k as f64) / (n_az as f64);
            grid.push([polar.sin() * az.cos(), polar.sin() * az.sin(), polar.cos()]);
        }
    }
    Ok(grid)
}

/// Outcome of [`diosi_demo`]: the counterexample plus the spin directions
/// behind the two string indices. On each side the string measures first
/// along `v`, then along `u`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct DiosiDemoResult {
    pub counterexample: Lp2Counterexample,
    pub u_a: [f64; 3],
    pub v_a: [f64; 3],
    pub u_b: [f64; 3],
    pub v_b: [f64; 3],
}

/// Runs [`lp2_failure_demo`] over all ordered pairs of grid directions.
///
/// Both subsystems are spin-up pure states and both use the same family of
/// two-projector strings `(u, v)`, indexed `iu * grid_len + iv`, with the
/// `v` projector applied first. Direction pairs close to the equator with
/// azimuths a step apart give traces with small positive real part and
/// sizable imaginary part, so the default grid (24 azimuthal by 12 polar
/// steps) finds a pair whose product real part is below `-min_violation`.
pub fn diosi_demo(
    n_az: usize,
    n_pol: usize,
    min_violation: f64,
) -> Result<Option<DiosiDemoResult>, CompositeError> {
    let grid = direction_grid(n_az, n_pol)?;
    let rho = DensityState::pure(&[Complex64::new(1.0, 0.0), Complex64::new(0.0, 0.0)])?;
    let projectors: Vec<CMatrix> = grid
        .iter()
        .map(|&dir| spin_projector(dir, 1))
        .collect::<Result<_, _>>()?;
    let n = grid.len();
    let mut z = Vec::with_capacity(n * n);
    for pu in &projectors {
        for pv in &projectors {
            let string = ProjectorString::new(vec![pv.clone(), pu.clone()])?;
            z.push(class_trace(&string, &rho)?);
        }
    }
    let Some(counterexample) = scan_products(&z, &z, min_violation) else {
        return Ok(None);
    };
    let resolve = |index: usize| (grid[index / n], grid[index % n]);
    let (u_a, v_a) = resolve(counterexample.index_a);
    let (u_b, v_b) = resolve(counterexample.index_b);
    Ok(Some(DiosiDemoResult {
        counterexample,
        u_a,
        v_a,
        u_b,
        v_b,
    }))
}
