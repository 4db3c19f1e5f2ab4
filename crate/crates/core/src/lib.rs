//! Entanglement verification by finite-dimensional truncation.
//!
//! A state on a (possibly infinite) tensor-product space is compressed onto
//! the leading `d` basis vectors of every mode, `P_d rho P_d`, and the
//! compressed state is tested with the partial-transpose, realignment and
//! projector-witness criteria. Entanglement of the full state is always
//! visible in some finite truncation, so the driver in [`escalate`] grows
//! `d` until a criterion certifies or a budget runs out.
//!
//! Modules:
//! - [`linalg`]: dense complex kernels over composite mode indices.
//! - [`states`]: state families, validation and the QSTATE file format.
//! - [`criteria`]: entanglement tests, witnesses and certificates.
//! - [`escalate`]: truncation, dimension escalation and bipartition scans.

pub mod criteria;
pub mod error;
pub mod escalate;
pub mod linalg;
pub mod rng;
pub mod states;

pub use criteria::{
    BoundKind, Certificate, CriterionKind, CriterionResult, Detection, SchmidtDecomposition, SeesawConfig, Witness,
    DEFAULT_TOL_DETECT,
};
pub use error::{Error, Result};
pub use escalate::{
    AnalyticFamily, EscalationConfig, Growth, Outcome, ScanReport, StateProvider, StepRecord, TruncationResult,
    Verdict,
};
pub use linalg::{Bipartition, Complex64, ComplexMatrix, ComplexVector, CompositeIndexMap, HermitianSpectrum};
pub use states::{DensityState, PureStateVec, QState, SeparableEnsemble};
