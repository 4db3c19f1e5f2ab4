//! Density operators, pure state vectors and the state families used by
//! the verifier.
//!
//! Subnormalized states are first class: compressing a state onto a finite
//! subspace loses trace, and that lost trace is information the escalation
//! driver reports. A [`DensityState`] therefore carries its own trace and a
//! truncation flag rather than being renormalized on construction.

mod io;

pub use io::{format_qstate, parse_qstate, parse_qstate_with, read_qstate, read_qstate_with, write_qstate, QState};

use crate::error::{Error, Result};
use crate::linalg::{
    c64, ensure_finite, ensure_square, eigh, hermitian_part, hermiticity_defect, outer, real_trace, ComplexMatrix,
    ComplexVector, CompositeIndexMap,
};
use crate::rng::{random_unit_vector, seeded};

/// Default validation tolerance: minimum admissible eigenvalue, trace slack
/// above 1 and Hermiticity mismatch of a density operator.
pub const PSD_TOL: f64 = 1e-10;
/// Slack above 1 allowed for the norm of a state vector.
pub const NORM_TOL: f64 = 1e-12;

/// Density operator on a multimode composite space.
#[derive(Debug, Clone, PartialEq)]
pub struct DensityState {
    map: CompositeIndexMap,
    matrix: ComplexMatrix,
    trace: f64,
    truncated: bool,
}

impl DensityState {
    /// Wraps the compression `P rho P` of a valid state without revalidating.
    ///
    /// Compressions of positive operators by projectors are positive, and the
    /// trace can only drop, so the only invariant that may fail is a
    /// positive trace; callers check `trace() > 0` before using the state.
    pub(crate) fn from_compression(map: CompositeIndexMap, matrix: ComplexMatrix) -> Self {
        let trace = real_trace(&matrix);
        Self { map, matrix, trace, truncated: true }
    }

    pub fn map(&self) -> &CompositeIndexMap {
        &self.map
    }

    pub fn dims(&self) -> &[usize] {
        self.map.dims()
    }

    pub fn matrix(&self) -> &ComplexMatrix {
        &self.matrix
    }

    pub fn into_matrix(self) -> ComplexMatrix {
        self.matrix
    }

    pub fn trace(&self) -> f64 {
        self.trace
    }

    /// Whether this state is a (possibly subnormalized) truncation.
    pub fn is_truncation(&self) -> bool {
        self.truncated
    }

    /// Marks the state as a truncation of a larger one.
    pub fn into_truncation(mut self) -> Self {
        self.truncated = true;
        self
    }

    /// `rho / tr(rho)`.
    pub fn normalized_matrix(&self) -> ComplexMatrix {
        self.matrix.unscale(self.trace)
    }
}

/// Checks and cleans a candidate density matrix.
///
/// The matrix is symmetrized, eigenvalues in `[-1e-10, 0)` are clamped to
/// zero, and if the clamp moves the trace by more than `1e-12` the result is
/// rescaled back to the original trace. Traces below 1 mark the state as a
/// truncation.
pub fn validate_density(matrix: ComplexMatrix, map: CompositeIndexMap) -> Result<DensityState> {
    validate_density_with(matrix, map, PSD_TOL)
}

/// [`validate_density`] with `tol` used for the Hermiticity, positivity and
/// trace checks in place of the defaults.
pub fn validate_density_with(matrix: ComplexMatrix, map: CompositeIndexMap, tol: f64) -> Result<DensityState> {
    if !(tol >= 0.0 && tol.is_finite()) {
        return Err(Error::InvalidParameter(format!("validation tolerance must be finite and nonnegative, got {tol}")));
    }
    let n = ensure_square(&matrix)?;
    if n != map.total() {
        return Err(Error::DimensionMismatch { expected: map.total(), found: n });
    }
    ensure_finite(&matrix)?;
    let (mismatch, row, col) = hermiticity_defect(&matrix);
    if mismatch > tol {
        return Err(Error::NotHermitian { row, col, mismatch });
    }
    let mut matrix = if mismatch == 0.0 { matrix } else { hermitian_part(&matrix) };
    let spectrum = eigh(&matrix)?;
    let min = spectrum.min();
    if min < -tol {
        return Err(Error::NotPositive { min_eigenvalue: min });
    }
    let trace = real_trace(&matrix);
    if !(trace > 0.0) || trace > 1.0 + tol {
        return Err(Error::InvalidTrace { trace });
    }
    // Eigenvalues at rounding level are left alone; rebuilding from the
    // spectrum would perturb every entry by about the same amount.
    let noise = f64::EPSILON * n as f64 * spectrum.max().abs().max(1.0);
    if min < -noise {
        let mut clamped = spectrum.clone();
        let mut removed = 0.0;
        for lambda in clamped.eigenvalues.iter_mut().filter(|l| **l < 0.0) {
            removed -= *lambda;
            *lambda = 0.0;
        }
        matrix = hermitian_part(&clamped.reconstruct());
        if removed > 1e-12 {
            let new_trace = real_trace(&matrix);
            matrix.scale_mut(trace / new_trace);
        }
    }
    let trace = real_trace(&matrix);
    Ok(DensityState { map, matrix, trace, truncated: trace < 1.0 - 1e-12 })
}

/// Complex amplitudes over a composite basis. Norm at most 1.
#[derive(Debug, Clone, PartialEq)]
pub struct PureStateVec {
    map: CompositeIndexMap,
    amplitudes: ComplexVector,
    norm: f64,
}

impl PureStateVec {
    pub fn new(map: CompositeIndexMap, amplitudes: ComplexVector) -> Result<Self> {
        if amplitudes.len() != map.total() {
            return Err(Error::DimensionMismatch { expected: map.total(), found: amplitudes.len() });
        }
        if let Some(i) = amplitudes.iter().position(|z| !z.re.is_finite() || !z.im.is_finite()) {
            return Err(Error::NonFinite { row: i, col: 0 });
        }
        let norm = amplitudes.norm();
        if norm > 1.0 + NORM_TOL {
            return Err(Error::InvalidNorm { norm, reason: "state vectors must have norm at most 1" });
        }
        if norm == 0.0 {
            return Err(Error::InvalidNorm { norm, reason: "the zero vector is not a state" });
        }
        Ok(Self { map, amplitudes, norm })
    }

    pub fn map(&self) -> &CompositeIndexMap {
        &self.map
    }

    pub fn dims(&self) -> &[usize] {
        self.map.dims()
    }

    pub fn amplitudes(&self) -> &ComplexVector {
        &self.amplitudes
    }

    pub fn norm(&self) -> f64 {
        self.norm
    }

    pub fn nnz(&self) -> usize {
        self.amplitudes.iter().filter(|z| z.re != 0.0 || z.im != 0.0).count()
    }

    /// `|psi><psi|`, with trace `norm^2`.
    pub fn projector(&self) -> DensityState {
        let matrix = outer(&self.amplitudes);
        let trace = real_trace(&matrix);
        DensityState { map: self.map.clone(), matrix, trace, truncated: trace < 1.0 - 1e-12 }
    }
}

/// Convex mixture of product states, `sum_k p_k (x)_s |a_{s,k}><a_{s,k}|`.
#[derive(Debug, Clone, PartialEq)]
pub struct SeparableEnsemble {
    map: CompositeIndexMap,
    weights: Vec<f64>,
    terms: Vec<Vec<ComplexVector>>,
}

impl SeparableEnsemble {
    pub fn new(map: CompositeIndexMap, weights: Vec<f64>, terms: Vec<Vec<ComplexVector>>) -> Result<Self> {
        if weights.is_empty() || weights.len() != terms.len() {
            return Err(Error::InvalidParameter(format!(
                "{} weights for {} terms",
                weights.len(),
                terms.len()
            )));
        }
        if weights.iter().any(|&p| !(p > 0.0)) {
            return Err(Error::InvalidParameter("ensemble weights must be positive".into()));
        }
        let total: f64 = weights.iter().sum();
        if (total - 1.0).abs() > 1e-12 {
            return Err(Error::InvalidParameter(format!("ensemble weights sum to {total}, not 1")));
        }
        for term in &terms {
            if term.len() != map.num_modes() {
                return Err(Error::DimensionMismatch { expected: map.num_modes(), found: term.len() });
            }
            for (s, v) in term.iter().enumerate() {
                if v.len() != map.dims()[s] {
                    return Err(Error::DimensionMismatch { expected: map.dims()[s], found: v.len() });
                }
                if (v.norm() - 1.0).abs() > 1e-12 {
                    return Err(Error::InvalidNorm { norm: v.norm(), reason: "local ensemble vectors must be unit" });
                }
            }
        }
        Ok(Self { map, weights, terms })
    }

    pub fn map(&self) -> &CompositeIndexMap {
        &self.map
    }

    pub fn weights(&self) -> &[f64] {
        &self.weights
    }

    pub fn terms(&self) -> &[Vec<ComplexVector>] {
        &self.terms
    }

    /// Density operator of the ensemble.
    pub fn assemble(&self) -> DensityState {
        let mut state = self.assemble_at(self.map.dims()).expect("native dims are valid");
        state.truncated = false;
        state
    }

    /// Ensemble density operator with every local vector cut or zero-padded
    /// to `dims`. This equals the compression of [`Self::assemble`] onto the
    /// leading basis vectors whenever `dims` does not exceed the native dims.
    pub fn assemble_at(&self, dims: &[usize]) -> Result<DensityState> {
        let map = CompositeIndexMap::new(dims.to_vec())?;
        if map.num_modes() != self.map.num_modes() {
            return Err(Error::DimensionMismatch { expected: self.map.num_modes(), found: map.num_modes() });
        }
        let mut matrix = ComplexMatrix::zeros(map.total(), map.total());
        for (p, term) in self.weights.iter().zip(&self.terms) {
            let mut product = ComplexVector::from_element(1, c64(1.0, 0.0));
            for (v, &d) in term.iter().zip(dims) {
                let local = ComplexVector::from_fn(d, |i, _| if i < v.len() { v[i] } else { c64(0.0, 0.0) });
                product = product.kronecker(&local);
            }
            matrix += outer(&product).scale(*p);
        }
        Ok(DensityState::from_compression(map, matrix))
    }
}

fn basis_amplitudes(map: &CompositeIndexMap, entries: &[(&[usize], f64)]) -> ComplexVector {
    let mut v = ComplexVector::zeros(map.total());
    for (tuple, amp) in entries {
        if tuple.iter().zip(map.dims()).all(|(n, d)| n < d) {
            v[map.index(tuple)] = c64(*amp, 0.0);
        }
    }
    v
}

/// `(|0,0> + |k,k>) / sqrt 2` restricted to `dims`; components outside are dropped.
pub fn chik_truncated(k: usize, dims: &[usize]) -> Result<PureStateVec> {
    let map = CompositeIndexMap::new(dims.to_vec())?;
    if map.num_modes() != 2 {
        return Err(Error::InvalidDims("|chi_k> lives on two modes".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let v = basis_amplitudes(&map, &[(&[0, 0], h), (&[k, k], h)]);
    PureStateVec::new(map, v)
}

/// `|chi_k> = (|0,0> + |k,k>) / sqrt 2` with both modes of dimension `local_dim`.
pub fn gen_chik(k: usize, local_dim: usize) -> Result<PureStateVec> {
    if k == 0 {
        return Err(Error::InvalidParameter("k must be a positive integer".into()));
    }
    if local_dim <= k {
        return Err(Error::InvalidParameter(format!(
            "|chi_{k}> needs local dimension > {k}, got {local_dim}"
        )));
    }
    chik_truncated(k, &[local_dim, local_dim])
}

fn check_lambda(lambda: f64) -> Result<()> {
    if !(0.0..1.0).contains(&lambda) {
        return Err(Error::InvalidParameter(format!("squeezing lambda must lie in [0, 1), got {lambda}")));
    }
    Ok(())
}

/// Fock-basis amplitudes `sqrt(1 - lambda^2) lambda^n |n, n>` for `n < min(dims)`.
pub fn tmsv_truncated(lambda: f64, dims: &[usize]) -> Result<PureStateVec> {
    check_lambda(lambda)?;
    let map = CompositeIndexMap::new(dims.to_vec())?;
    if map.num_modes() != 2 {
        return Err(Error::InvalidDims("two-mode squeezed vacuum lives on two modes".into()));
    }
    let scale = (1.0 - lambda * lambda).sqrt();
    let mut v = ComplexVector::zeros(map.total());
    for n in 0..dims[0].min(dims[1]) {
        v[map.index(&[n, n])] = c64(scale * lambda.powi(n as i32), 0.0);
    }
    PureStateVec::new(map, v)
}

/// Two-mode squeezed vacuum truncated to `local_dim` Fock states per mode.
/// The trace is `1 - lambda^(2 local_dim)`.
pub fn gen_tmsv(lambda: f64, local_dim: usize) -> Result<DensityState> {
    Ok(tmsv_truncated(lambda, &[local_dim, local_dim])?.projector().into_truncation())
}

/// `p |Phi_d><Phi_d| + (1 - p) I / d^2`.
pub fn gen_isotropic(p: f64, d: usize) -> Result<DensityState> {
    if !(0.0..=1.0).contains(&p) {
        return Err(Error::InvalidParameter(format!("isotropic weight p must lie in [0, 1], got {p}")));
    }
    let map = CompositeIndexMap::uniform(2, d)?;
    let n = map.total();
    let mut phi = ComplexVector::zeros(n);
    for i in 0..d {
        phi[map.index(&[i, i])] = c64(1.0 / (d as f64).sqrt(), 0.0);
    }
    let matrix = outer(&phi).scale(p) + ComplexMatrix::identity(n, n).scale((1.0 - p) / n as f64);
    validate_density(matrix, map)
}

/// `|0_A> (x) (|0_B 0_C> + |1_B 1_C>) / sqrt 2` restricted to `dims`.
pub fn partial_ent_truncated(dims: &[usize]) -> Result<PureStateVec> {
    let map = CompositeIndexMap::new(dims.to_vec())?;
    if map.num_modes() != 3 {
        return Err(Error::InvalidDims("the partially entangled example lives on three modes".into()));
    }
    let h = std::f64::consts::FRAC_1_SQRT_2;
    PureStateVec::new(map.clone(), basis_amplitudes(&map, &[(&[0, 0, 0], h), (&[0, 1, 1], h)]))
}

/// Three-mode state entangled across `B|C` only, each mode of dimension `local_dim`.
pub fn gen_partial_ent(local_dim: usize) -> Result<PureStateVec> {
    if local_dim < 2 {
        return Err(Error::InvalidParameter(format!("local dimension must be at least 2, got {local_dim}")));
    }
    partial_ent_truncated(&[local_dim; 3])
}

/// `(|0...0> + |1...1>) / sqrt 2` restricted to `dims`.
pub fn ghz_truncated(dims: &[usize]) -> Result<PureStateVec> {
    let map = CompositeIndexMap::new(dims.to_vec())?;
    let h = std::f64::consts::FRAC_1_SQRT_2;
    let zeros = vec![0; dims.len()];
    let ones = vec![1; dims.len()];
    PureStateVec::new(map.clone(), basis_amplitudes(&map, &[(&zeros, h), (&ones, h)]))
}

/// GHZ state on `modes` modes of dimension `local_dim`.
pub fn gen_ghz(modes: usize, local_dim: usize) -> Result<PureStateVec> {
    if modes < 2 || local_dim < 2 {
        return Err(Error::InvalidParameter("GHZ needs at least 2 modes of dimension at least 2".into()));
    }
    ghz_truncated(&vec![local_dim; modes])
}

/// Random separable ensemble with Haar local vectors and weights from a
/// normalized exponential sample. Deterministic for a fixed seed.
pub fn gen_separable_random(num_terms: usize, dims: &[usize], seed: u64) -> Result<SeparableEnsemble> {
    if num_terms == 0 {
        return Err(Error::InvalidParameter("a separable ensemble needs at least one term".into()));
    }
    let map = CompositeIndexMap::new(dims.to_vec())?;
    let mut rng = seeded(seed);
    let mut weights: Vec<f64> = (0..num_terms)
        .map(|_| {
            let u: f64 = rand::Rng::gen_range(&mut rng, f64::MIN_POSITIVE..1.0);
            -u.ln() + 1e-12
        })
        .collect();
    let total: f64 = weights.iter().sum();
    weights.iter_mut().for_each(|p| *p /= total);
    let terms = (0..num_terms)
        .map(|_| dims.iter().map(|&d| random_unit_vector(&mut rng, d)).collect())
        .collect();
    SeparableEnsemble::new(map, weights, terms)
}
