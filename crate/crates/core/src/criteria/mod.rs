//! Entanglement criteria for finite-dimensional (possibly subnormalized)
//! states.
//!
//! A criterion either certifies entanglement or is inconclusive; nothing
//! here ever claims separability. Certification goes through a [`Witness`]:
//! a Hermitian `A` with a bound `f` on `tr(sigma A)` over separable
//! `sigma`, so that `tr(rho A) > f` proves `rho` entangled. Only bounds that
//! are provably on the safe side are allowed to certify (see
//! [`BoundKind::certifies`]).

mod seesaw;
mod witness;

pub use seesaw::{seesaw_fab, SeesawConfig, SeesawResult};
pub use witness::{
    extract_pt_witness, lift_certificate, BoundKind, projector_witness, realignment_witness, Certificate, Witness,
};

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::linalg::{
    eigh, group_bipartite, partial_transpose, permute_vector_modes, realign, svd, svd_values, trace_product,
    Bipartition, ComplexMatrix, ComplexVector, CompositeIndexMap, HermitianSpectrum,
};
use crate::states::{DensityState, PureStateVec};

/// Default absolute tolerance on signed criterion margins.
pub const DEFAULT_TOL_DETECT: f64 = 1e-9;

/// Spectral weights below this are dropped from decompositions.
pub const WEIGHT_CUTOFF: f64 = 1e-12;

/// Entanglement tests the escalation driver can run.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum CriterionKind {
    /// Negative eigenvalue of the partial transpose.
    Ppt,
    /// Computable cross-norm / realignment criterion.
    Realignment,
    /// Projector onto the dominant eigenvector, with the exact product-state bound.
    Witness,
}

impl CriterionKind {
    pub const ALL: [CriterionKind; 3] = [CriterionKind::Ppt, CriterionKind::Realignment, CriterionKind::Witness];

    pub fn name(self) -> &'static str {
        match self {
            CriterionKind::Ppt => "ppt",
            CriterionKind::Realignment => "realign",
            CriterionKind::Witness => "witness",
        }
    }

    /// Parses a comma-separated list such as `ppt,realign`.
    pub fn parse_list(text: &str) -> Result<Vec<Self>> {
        text.split(',').filter(|t| !t.trim().is_empty()).map(|t| t.trim().parse()).collect()
    }
}

impl fmt::Display for CriterionKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

impl FromStr for CriterionKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "ppt" => Ok(CriterionKind::Ppt),
            "realign" | "realignment" => Ok(CriterionKind::Realignment),
            "witness" => Ok(CriterionKind::Witness),
            other => Err(Error::InvalidParameter(format!(
                "unknown criterion '{other}' (expected ppt, realign or witness)"
            ))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Detection {
    Entangled,
    Inconclusive,
}

impl Detection {
    pub fn name(self) -> &'static str {
        match self {
            Detection::Entangled => "entangled",
            Detection::Inconclusive => "inconclusive",
        }
    }

    pub fn is_entangled(self) -> bool {
        self == Detection::Entangled
    }
}

impl fmt::Display for Detection {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Outcome of one criterion on one state.
#[derive(Debug, Clone, PartialEq)]
pub struct CriterionResult {
    pub criterion: CriterionKind,
    /// Signed margin; entangled iff `value - threshold > tol_detect`.
    pub value: f64,
    pub threshold: f64,
    pub verdict: Detection,
    /// Named diagnostics, in a stable order.
    pub detail: Vec<(&'static str, f64)>,
}

impl CriterionResult {
    pub fn detail(&self, key: &str) -> Option<f64> {
        self.detail.iter().find(|(k, _)| *k == key).map(|(_, v)| *v)
    }
}

fn decide(value: f64, threshold: f64, tol_detect: f64) -> Detection {
    if value - threshold > tol_detect {
        Detection::Entangled
    } else {
        Detection::Inconclusive
    }
}

/// `rho = sum_k p_k |psi_k><psi_k|` with `p_k` descending and above [`WEIGHT_CUTOFF`].
pub fn spectral_decompose(rho: &DensityState) -> Result<Vec<(f64, PureStateVec)>> {
    let spectrum = eigh(rho.matrix())?;
    let mut out = Vec::new();
    for k in (0..spectrum.eigenvalues.len()).rev() {
        let p = spectrum.eigenvalues[k];
        if p <= WEIGHT_CUTOFF {
            break;
        }
        out.push((p, PureStateVec::new(rho.map().clone(), spectrum.eigenvector(k))?));
    }
    Ok(out)
}

/// `psi = sum_l lambda_l |a_l> (x) |b_l>` across a bipartition.
#[derive(Debug, Clone)]
pub struct SchmidtDecomposition {
    /// Positive, descending.
    pub coefficients: Vec<f64>,
    pub left: Vec<ComplexVector>,
    pub right: Vec<ComplexVector>,
    pub partition: Bipartition,
    /// Per-mode dimensions of the original vector.
    pub map: CompositeIndexMap,
}

impl SchmidtDecomposition {
    /// Rebuilds the vector in the original mode order.
    pub fn reconstruct(&self) -> ComplexVector {
        let mut grouped = ComplexVector::zeros(self.map.total());
        for ((lambda, a), b) in self.coefficients.iter().zip(&self.left).zip(&self.right) {
            grouped += a.kronecker(b).scale(*lambda);
        }
        let order = self.partition.grouping_order();
        let permuted = self.map.select(&order).expect("valid order");
        permute_vector_modes(&grouped, &permuted, &crate::linalg::inverse_order(&order))
            .expect("matching dimensions")
            .0
    }

    pub fn largest(&self) -> f64 {
        self.coefficients.first().copied().unwrap_or(0.0)
    }
}

/// Schmidt decomposition from the SVD of the amplitude matrix reshaped by `partition`.
pub fn schmidt_decompose(psi: &PureStateVec, partition: &Bipartition) -> Result<SchmidtDecomposition> {
    let map = psi.map();
    if partition.num_modes() != map.num_modes() {
        return Err(Error::InvalidModes(format!("partition {partition} does not match {} modes", map.num_modes())));
    }
    let (grouped, _) = permute_vector_modes(psi.amplitudes(), map, &partition.grouping_order())?;
    let dl: usize = partition.left().iter().map(|&s| map.dims()[s]).product();
    let dr: usize = partition.right().iter().map(|&s| map.dims()[s]).product();
    let m = ComplexMatrix::from_fn(dl, dr, |i, j| grouped[i * dr + j]);
    let svd = svd(&m)?;
    let cutoff = 1e-14 * svd.singular_values.first().copied().unwrap_or(0.0).max(f64::MIN_POSITIVE);
    let mut out = SchmidtDecomposition {
        coefficients: Vec::new(),
        left: Vec::new(),
        right: Vec::new(),
        partition: partition.clone(),
        map: map.clone(),
    };
    for (l, &sigma) in svd.singular_values.iter().enumerate() {
        if sigma <= cutoff {
            break;
        }
        out.coefficients.push(sigma);
        out.left.push(svd.u.column(l).into_owned());
        out.right.push(svd.v_adjoint.row(l).transpose());
    }
    Ok(out)
}

/// Spectrum of the partial transpose on the right-hand group of `partition`.
pub fn pt_spectrum(rho: &DensityState, partition: &Bipartition) -> Result<HermitianSpectrum> {
    if partition.num_modes() != rho.map().num_modes() {
        return Err(Error::InvalidModes(format!(
            "partition {partition} does not match {} modes",
            rho.map().num_modes()
        )));
    }
    eigh(&partial_transpose(rho.matrix(), rho.map(), partition.right())?)
}

/// Positive-partial-transpose test on the raw (possibly subnormalized) matrix.
///
/// `value` is minus the smallest eigenvalue of the partial transpose.
pub fn ppt_check(rho: &DensityState, partition: &Bipartition, tol_detect: f64) -> Result<CriterionResult> {
    let spectrum = pt_spectrum(rho, partition)?;
    let min = spectrum.min();
    let negativity: f64 = spectrum.eigenvalues.iter().filter(|&&l| l < 0.0).map(|l| -l).sum();
    Ok(CriterionResult {
        criterion: CriterionKind::Ppt,
        value: -min,
        threshold: 0.0,
        verdict: decide(-min, 0.0, tol_detect),
        detail: vec![("min_eigenvalue", min), ("negativity", negativity)],
    })
}

/// Realignment test on the trace-normalized state: `value = ||R(rho)||_1 - 1`.
pub fn realignment_check(rho: &DensityState, partition: &Bipartition, tol_detect: f64) -> Result<CriterionResult> {
    let (grouped, gmap) = group_bipartite(&rho.normalized_matrix(), rho.map(), partition)?;
    let sum: f64 = svd_values(&realign(&grouped, &gmap)?)?.iter().sum();
    let value = sum - 1.0;
    Ok(CriterionResult {
        criterion: CriterionKind::Realignment,
        value,
        threshold: 0.0,
        verdict: decide(value, 0.0, tol_detect),
        detail: vec![("singular_value_sum", sum), ("trace", rho.trace())],
    })
}

/// `tr(rho A) - f_AB(A)` on the raw matrix. Only sound bound kinds certify.
pub fn witness_expectation(rho: &DensityState, w: &Witness, tol_detect: f64) -> Result<CriterionResult> {
    if rho.map() != &w.map {
        return Err(Error::DimensionMismatch { expected: w.map.total(), found: rho.map().total() });
    }
    let expectation = trace_product(rho.matrix(), &w.operator);
    let value = expectation - w.sep_bound;
    let verdict = if w.bound_kind.certifies() { decide(value, 0.0, tol_detect) } else { Detection::Inconclusive };
    Ok(CriterionResult {
        criterion: CriterionKind::Witness,
        value,
        threshold: 0.0,
        verdict,
        detail: vec![("expectation", expectation), ("sep_bound", w.sep_bound)],
    })
}

/// Exact separable bound of `|psi><psi|`: the largest squared Schmidt coefficient.
pub fn pure_projector_bound(psi: &PureStateVec, partition: &Bipartition) -> Result<f64> {
    if (psi.norm() - 1.0).abs() > 1e-10 {
        return Err(Error::InvalidNorm { norm: psi.norm(), reason: "projector witnesses need a unit vector" });
    }
    let largest = schmidt_decompose(psi, partition)?.largest();
    Ok(largest * largest)
}

/// Projector witness built from the dominant eigenvector of `rho`, evaluated on `rho`.
pub fn witness_check(rho: &DensityState, partition: &Bipartition, tol_detect: f64) -> Result<(CriterionResult, Witness)> {
    let spectrum = eigh(rho.matrix())?;
    let top = spectrum.eigenvector(spectrum.eigenvalues.len() - 1);
    let top = top.unscale(top.norm());
    let psi = PureStateVec::new(rho.map().clone(), top)?;
    let w = projector_witness(&psi, partition)?;
    let result = witness_expectation(rho, &w, tol_detect)?;
    Ok((result, w))
}

/// Runs one criterion.
pub fn run_criterion(
    kind: CriterionKind,
    rho: &DensityState,
    partition: &Bipartition,
    tol_detect: f64,
) -> Result<CriterionResult> {
    match kind {
        CriterionKind::Ppt => ppt_check(rho, partition, tol_detect),
        CriterionKind::Realignment => realignment_check(rho, partition, tol_detect),
        CriterionKind::Witness => witness_check(rho, partition, tol_detect).map(|(r, _)| r),
    }
}
