use std::fmt;

use crate::error::{Error, Result};
use crate::linalg::{
    c64, eigvalsh, group_bipartite, hermitian_part, outer, partial_transpose, realign, svd, trace_product,
    ungroup_bipartite, unrealign, Bipartition, ComplexMatrix, CompositeIndexMap,
};
use crate::states::{DensityState, PureStateVec};

use super::{pt_spectrum, pure_projector_bound};

/// Where a witness's separable bound comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub enum BoundKind {
    /// Exact supremum over product vectors (pure-projector witnesses).
    AnalyticExact,
    /// Value reached by an optimizer; never above the true supremum.
    SeesawLower,
    /// `-PT(P)` for a positive `P`: separable expectations are `<= 0`.
    NonnegByConstruction,
    /// Realignment witness: separable expectations are `<= 0` because the
    /// realignment of a separable operator has trace norm at most its trace.
    TraceNorm,
}

impl BoundKind {
    /// Whether `tr(rho A) > sep_bound` proves entanglement.
    pub fn certifies(self) -> bool {
        !matches!(self, BoundKind::SeesawLower)
    }

    /// Whether the bound holds for every separable operator regardless of
    /// its trace, so it survives compression and zero-padding.
    fn homogeneous(self) -> bool {
        matches!(self, BoundKind::NonnegByConstruction | BoundKind::TraceNorm)
    }

    pub fn name(self) -> &'static str {
        match self {
            BoundKind::AnalyticExact => "analytic-exact",
            BoundKind::SeesawLower => "seesaw-lower",
            BoundKind::NonnegByConstruction => "nonneg-by-construction",
            BoundKind::TraceNorm => "trace-norm",
        }
    }
}

impl fmt::Display for BoundKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

/// Hermitian test operator with a bound on its separable expectations.
#[derive(Debug, Clone, PartialEq)]
pub struct Witness {
    pub operator: ComplexMatrix,
    pub sep_bound: f64,
    pub bound_kind: BoundKind,
    pub map: CompositeIndexMap,
    pub partition: Bipartition,
}

impl Witness {
    /// `tr(rho A)` on the raw matrix.
    pub fn expectation(&self, rho: &DensityState) -> Result<f64> {
        if rho.map() != &self.map {
            return Err(Error::DimensionMismatch { expected: self.map.total(), found: rho.map().total() });
        }
        Ok(trace_product(rho.matrix(), &self.operator))
    }
}

/// `|psi><psi|` with its exact product-state bound `lambda_max^2`.
pub fn projector_witness(psi: &PureStateVec, partition: &Bipartition) -> Result<Witness> {
    let sep_bound = pure_projector_bound(psi, partition)?;
    Ok(Witness {
        operator: outer(psi.amplitudes()),
        sep_bound,
        bound_kind: BoundKind::AnalyticExact,
        map: psi.map().clone(),
        partition: partition.clone(),
    })
}

/// Witness `-PT(|eta><eta|)` from the most negative partial-transpose
/// eigenvector `eta`, so that `tr(rho A) = -mu > 0`.
pub fn extract_pt_witness(rho: &DensityState, partition: &Bipartition, tol_detect: f64) -> Result<Witness> {
    let spectrum = pt_spectrum(rho, partition)?;
    let min = spectrum.min();
    if min >= -tol_detect {
        return Err(Error::NoWitness { min_eigenvalue: min, tol: tol_detect });
    }
    let eta = spectrum.eigenvector(0);
    let operator = -partial_transpose(&outer(&eta), rho.map(), partition.right())?;
    Ok(Witness {
        operator,
        sep_bound: 0.0,
        bound_kind: BoundKind::NonnegByConstruction,
        map: rho.map().clone(),
        partition: partition.clone(),
    })
}

/// Realignment witness `A = Herm(W) - I` with `tr(sigma W) = tr(R(sigma) V U^dagger)`
/// for the SVD `R(rho) = U S V^dagger`.
///
/// `tr(rho A) = ||R(rho)||_1 - tr(rho)` and `tr(sigma A) <= 0` for every
/// separable `sigma`.
pub fn realignment_witness(rho: &DensityState, partition: &Bipartition) -> Result<Witness> {
    let (grouped, gmap) = group_bipartite(rho.matrix(), rho.map(), partition)?;
    let svd = svd(&realign(&grouped, &gmap)?)?;
    let g = (&svd.u * &svd.v_adjoint).map(|z| z.conj());
    let w = unrealign(&g, &gmap)?.transpose();
    let n = gmap.total();
    let a = hermitian_part(&w) - ComplexMatrix::identity(n, n);
    Ok(Witness {
        operator: ungroup_bipartite(&a, rho.map(), partition)?,
        sep_bound: 0.0,
        bound_kind: BoundKind::TraceNorm,
        map: rho.map().clone(),
        partition: partition.clone(),
    })
}

/// A witness together with the value that made it certify.
#[derive(Debug, Clone, PartialEq)]
pub struct Certificate {
    pub witness: Witness,
    pub measured_value: f64,
    /// `measured_value - sep_bound`; always positive.
    pub margin: f64,
    pub subspace_dims: Vec<usize>,
    pub lifted: bool,
}

impl Certificate {
    /// Evaluates `witness` on `rho`; fails unless the witness certifies with a positive margin.
    pub fn from_witness(witness: Witness, rho: &DensityState) -> Result<Self> {
        let measured_value = witness.expectation(rho)?;
        let margin = measured_value - witness.sep_bound;
        if !(margin > 0.0) || !witness.bound_kind.certifies() {
            return Err(Error::InvalidParameter(format!(
                "{} witness has margin {margin:e}; nothing to certify",
                witness.bound_kind
            )));
        }
        Ok(Self { subspace_dims: rho.dims().to_vec(), witness, measured_value, margin, lifted: false })
    }

    /// Margin of the stored witness on `rho`.
    pub fn margin_on(&self, rho: &DensityState) -> Result<f64> {
        Ok(self.witness.expectation(rho)? - self.witness.sep_bound)
    }
}

/// Zero-pads a certificate's witness from its subspace to `full_dims`.
///
/// Sound when the operator is positive semidefinite (product vectors of the
/// larger space project to subnormalized product vectors of the subspace) or
/// when the bound is homogeneous (`-PT(P)` and realignment witnesses, whose
/// bound 0 holds for every separable operator). The measured value carries
/// over unchanged because `tr(rho_full (C + 0)) = tr(rho_red C)`.
pub fn lift_certificate(cert: &Certificate, full_dims: &[usize]) -> Result<Certificate> {
    let small = &cert.witness.map;
    let full = CompositeIndexMap::new(full_dims.to_vec())?;
    if !small.fits_within(&full) {
        return Err(Error::InvalidDims(format!(
            "cannot lift from {:?} to {:?}: target must be componentwise larger",
            small.dims(),
            full_dims
        )));
    }
    if !cert.witness.bound_kind.homogeneous() {
        let min = eigvalsh(&cert.witness.operator)?[0];
        if min < -1e-10 {
            return Err(Error::UnsoundLift(format!(
                "{} witness is indefinite (minimum eigenvalue {min:e})",
                cert.witness.bound_kind
            )));
        }
    }
    let n = full.total();
    let mut operator = ComplexMatrix::from_element(n, n, c64(0.0, 0.0));
    let targets: Vec<usize> = (0..small.total()).map(|i| small.embed_index(i, &full)).collect();
    for (c, &tc) in targets.iter().enumerate() {
        for (r, &tr) in targets.iter().enumerate() {
            operator[(tr, tc)] = cert.witness.operator[(r, c)];
        }
    }
    Ok(Certificate {
        witness: Witness { operator, map: full, ..cert.witness.clone() },
        measured_value: cert.measured_value,
        margin: cert.margin,
        subspace_dims: cert.subspace_dims.clone(),
        lifted: cert.lifted || full_dims != small.dims(),
    })
}
