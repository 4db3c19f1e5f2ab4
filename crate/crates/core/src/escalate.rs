//! Truncate, test, and grow the dimension until entanglement is certified.
//!
//! An entangled state is entangled on some finite product of local
//! subspaces, so compressing it with `P_d = (x)_s P_{s,d}` for increasing
//! `d` must eventually expose the entanglement. Which `d` does so is not
//! known in advance; running out of budget yields [`Outcome::Undecided`],
//! never a separability claim.

use std::fmt;
use std::str::FromStr;

use crate::criteria::{
    extract_pt_witness, lift_certificate, realignment_witness, run_criterion, witness_check, Certificate,
    CriterionKind, CriterionResult, DEFAULT_TOL_DETECT,
};
use crate::error::{Error, Result};
use crate::linalg::{Bipartition, ComplexMatrix, CompositeIndexMap};
use crate::states::{
    chik_truncated, ghz_truncated, partial_ent_truncated, tmsv_truncated, DensityState, SeparableEnsemble,
};

/// Captured traces at or below this are treated as zero.
pub const ZERO_TRACE: f64 = 1e-14;

/// A state known in closed form in its native (Fock) basis, which can be
/// emitted truncated to any per-mode dimensions.
#[derive(Debug, Clone, PartialEq)]
pub enum AnalyticFamily {
    /// `(|0,0> + |k,k>) / sqrt 2`.
    Chik { k: usize },
    /// Two-mode squeezed vacuum `sqrt(1 - lambda^2) sum_n lambda^n |n,n>`.
    Tmsv { lambda: f64 },
    /// `|0> (x) (|00> + |11>) / sqrt 2` on three modes.
    PartialEnt,
    /// `(|0...0> + |1...1>) / sqrt 2`.
    Ghz { modes: usize },
    /// Separable ensemble, zero-padded beyond its native dimensions.
    Separable(SeparableEnsemble),
}

impl AnalyticFamily {
    pub fn num_modes(&self) -> usize {
        match self {
            AnalyticFamily::Chik { .. } | AnalyticFamily::Tmsv { .. } => 2,
            AnalyticFamily::PartialEnt => 3,
            AnalyticFamily::Ghz { modes } => *modes,
            AnalyticFamily::Separable(e) => e.map().num_modes(),
        }
    }

    pub fn name(&self) -> &'static str {
        match self {
            AnalyticFamily::Chik { .. } => "chik",
            AnalyticFamily::Tmsv { .. } => "tmsv",
            AnalyticFamily::PartialEnt => "partial-ent",
            AnalyticFamily::Ghz { .. } => "ghz",
            AnalyticFamily::Separable(_) => "separable",
        }
    }

    /// `P_d rho P_d` for the family's state, with `P_d` keeping the first
    /// `dims[s]` basis vectors of mode `s`.
    pub fn emit(&self, dims: &[usize]) -> Result<DensityState> {
        if dims.len() != self.num_modes() {
            return Err(Error::DimensionMismatch { expected: self.num_modes(), found: dims.len() });
        }
        let state = match self {
            AnalyticFamily::Chik { k } => chik_truncated(*k, dims)?.projector(),
            AnalyticFamily::Tmsv { lambda } => tmsv_truncated(*lambda, dims)?.projector(),
            AnalyticFamily::PartialEnt => partial_ent_truncated(dims)?.projector(),
            AnalyticFamily::Ghz { .. } => ghz_truncated(dims)?.projector(),
            AnalyticFamily::Separable(e) => e.assemble_at(dims)?,
        };
        Ok(state.into_truncation())
    }
}

/// Where truncated states come from.
#[derive(Debug, Clone, PartialEq)]
pub enum StateProvider {
    /// A state given at fixed ambient dimensions.
    Finite(DensityState),
    /// A closed-form family emitted at any dimensions.
    Family(AnalyticFamily),
}

impl StateProvider {
    pub fn num_modes(&self) -> usize {
        match self {
            StateProvider::Finite(rho) => rho.map().num_modes(),
            StateProvider::Family(f) => f.num_modes(),
        }
    }

    /// Ambient dimensions, if the source is finite.
    pub fn ambient_dims(&self) -> Option<&[usize]> {
        match self {
            StateProvider::Finite(rho) => Some(rho.dims()),
            StateProvider::Family(_) => None,
        }
    }

    /// Trace of the untruncated state.
    pub fn source_trace(&self) -> f64 {
        match self {
            StateProvider::Finite(rho) => rho.trace(),
            StateProvider::Family(_) => 1.0,
        }
    }
}

/// A compressed state and how much trace it kept.
#[derive(Debug, Clone)]
pub struct TruncationResult {
    pub reduced: DensityState,
    pub captured_trace: f64,
    pub dims_used: Vec<usize>,
}

/// Compresses `source` onto the leading `dims[s]` basis vectors of each mode.
pub fn truncate(source: &StateProvider, dims: &[usize]) -> Result<TruncationResult> {
    let reduced = match source {
        StateProvider::Finite(rho) => {
            let small = CompositeIndexMap::new(dims.to_vec())?;
            if !small.fits_within(rho.map()) {
                return Err(Error::InvalidDims(format!(
                    "truncation dims {dims:?} exceed the source's ambient dims {:?}",
                    rho.dims()
                )));
            }
            let idx: Vec<usize> = (0..small.total()).map(|i| small.embed_index(i, rho.map())).collect();
            let m = ComplexMatrix::from_fn(small.total(), small.total(), |r, c| rho.matrix()[(idx[r], idx[c])]);
            DensityState::from_compression(small, m)
        }
        StateProvider::Family(f) => f.emit(dims)?,
    };
    Ok(TruncationResult { captured_trace: reduced.trace(), dims_used: dims.to_vec(), reduced })
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Growth {
    Increment,
    Double,
}

impl Growth {
    pub fn next(self, d: usize) -> usize {
        match self {
            Growth::Increment => d + 1,
            Growth::Double => 2 * d,
        }
    }
}

impl FromStr for Growth {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "increment" | "inc" | "+1" => Ok(Growth::Increment),
            "double" | "x2" => Ok(Growth::Double),
            other => Err(Error::InvalidParameter(format!("unknown growth rule '{other}' (increment or double)"))),
        }
    }
}

impl fmt::Display for Growth {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Growth::Increment => "increment",
            Growth::Double => "double",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EscalationConfig {
    pub d_start: usize,
    pub d_max: usize,
    pub growth: Growth,
    /// Criteria in the order they are tried at each dimension.
    pub criteria: Vec<CriterionKind>,
    pub tol_detect: f64,
    /// Split to test; `None` means mode 0 against the rest.
    pub partition: Option<Bipartition>,
}

impl Default for EscalationConfig {
    fn default() -> Self {
        Self {
            d_start: 2,
            d_max: 8,
            growth: Growth::Increment,
            criteria: CriterionKind::ALL.to_vec(),
            tol_detect: DEFAULT_TOL_DETECT,
            partition: None,
        }
    }
}

impl EscalationConfig {
    pub fn validate(&self) -> Result<()> {
        if self.d_start == 0 || self.d_start > self.d_max {
            return Err(Error::InvalidParameter(format!(
                "need 1 <= d_start <= d_max, got d_start={} d_max={}",
                self.d_start, self.d_max
            )));
        }
        if self.criteria.is_empty() {
            return Err(Error::InvalidParameter("at least one criterion is required".into()));
        }
        if !(self.tol_detect >= 0.0) {
            return Err(Error::InvalidParameter(format!("tol_detect must be nonnegative, got {}", self.tol_detect)));
        }
        Ok(())
    }
}

/// Everything evaluated at one dimension.
#[derive(Debug, Clone, PartialEq)]
pub struct StepRecord {
    pub d: usize,
    pub dims: Vec<usize>,
    pub captured_trace: f64,
    pub results: Vec<CriterionResult>,
    pub note: Option<String>,
}

#[derive(Debug, Clone, PartialEq)]
pub enum Outcome {
    Entangled {
        d: usize,
        dims: Vec<usize>,
        criterion: CriterionKind,
        /// Certificate on the truncated state where detection happened.
        certificate: Certificate,
        /// The same certificate zero-padded to a finite source's ambient dims.
        lifted: Option<Certificate>,
    },
    Undecided {
        d_max: usize,
        diagnostics: Vec<String>,
    },
}

#[derive(Debug, Clone, PartialEq)]
pub struct Verdict {
    pub partition: Bipartition,
    pub outcome: Outcome,
    pub history: Vec<StepRecord>,
}

impl Verdict {
    pub fn is_entangled(&self) -> bool {
        matches!(self.outcome, Outcome::Entangled { .. })
    }

    pub fn detecting_dimension(&self) -> Option<usize> {
        match self.outcome {
            Outcome::Entangled { d, .. } => Some(d),
            Outcome::Undecided { .. } => None,
        }
    }

    pub fn certificate(&self) -> Option<&Certificate> {
        match &self.outcome {
            Outcome::Entangled { certificate, .. } => Some(certificate),
            Outcome::Undecided { .. } => None,
        }
    }

    pub fn trace_capture_history(&self) -> Vec<(Vec<usize>, f64)> {
        self.history.iter().map(|s| (s.dims.clone(), s.captured_trace)).collect()
    }
}

fn context(d: usize, stage: impl Into<String>) -> impl FnOnce(Error) -> Error {
    let stage = stage.into();
    move |e| Error::Escalation { d, stage, source: Box::new(e) }
}

fn certify(
    kind: CriterionKind,
    reduced: &DensityState,
    partition: &Bipartition,
    tol_detect: f64,
) -> Result<Certificate> {
    let witness = match kind {
        CriterionKind::Ppt => extract_pt_witness(reduced, partition, tol_detect)?,
        CriterionKind::Realignment => realignment_witness(reduced, partition)?,
        CriterionKind::Witness => witness_check(reduced, partition, tol_detect)?.1,
    };
    Certificate::from_witness(witness, reduced)
}

/// Grows `d` from `config.d_start` and returns at the first dimension where
/// a criterion certifies. Finite sources are never truncated past their
/// ambient dimensions; once those are reached escalation stops.
pub fn verify_escalating(source: &StateProvider, config: &EscalationConfig) -> Result<Verdict> {
    config.validate()?;
    let modes = source.num_modes();
    let partition = match &config.partition {
        Some(p) => p.clone(),
        None => Bipartition::new(&[0], modes)?,
    };
    if partition.num_modes() != modes {
        return Err(Error::InvalidModes(format!("partition {partition} does not match {modes} modes")));
    }

    let mut history: Vec<StepRecord> = Vec::new();
    let mut diagnostics = Vec::new();
    let mut d = config.d_start;
    loop {
        let dims: Vec<usize> = match source.ambient_dims() {
            Some(ambient) => ambient.iter().map(|&a| d.min(a)).collect(),
            None => vec![d; modes],
        };
        if history.last().is_some_and(|s| s.dims == dims) {
            diagnostics.push(format!("source fully captured at dims {dims:?}; stopped before d={d}"));
            break;
        }
        let t = truncate(source, &dims).map_err(context(d, "truncate"))?;
        let mut step = StepRecord { d, dims: dims.clone(), captured_trace: t.captured_trace, results: Vec::new(), note: None };

        if t.captured_trace <= ZERO_TRACE {
            step.note = Some("zero captured trace; criteria skipped".into());
        } else {
            for &kind in &config.criteria {
                let result =
                    run_criterion(kind, &t.reduced, &partition, config.tol_detect).map_err(context(d, kind.name()))?;
                let detected = result.verdict.is_entangled();
                step.results.push(result);
                if !detected {
                    continue;
                }
                match certify(kind, &t.reduced, &partition, config.tol_detect) {
                    Ok(certificate) => {
                        let lifted = match source.ambient_dims() {
                            Some(ambient) if ambient != dims.as_slice() => Some(
                                lift_certificate(&certificate, ambient).map_err(context(d, "lift"))?,
                            ),
                            _ => None,
                        };
                        history.push(step);
                        return Ok(Verdict {
                            partition,
                            outcome: Outcome::Entangled { d, dims, criterion: kind, certificate, lifted },
                            history,
                        });
                    }
                    Err(e) => {
                        step.note = Some(format!("{kind} detected but no certificate: {e}"));
                    }
                }
            }
        }
        history.push(step);
        if d >= config.d_max {
            break;
        }
        d = config.growth.next(d).min(config.d_max);
    }

    for &kind in &config.criteria {
        let best = history
            .iter()
            .flat_map(|s| s.results.iter().filter(|r| r.criterion == kind).map(move |r| (s.d, r.value)))
            .max_by(|a, b| a.1.total_cmp(&b.1));
        if let Some((bd, value)) = best {
            diagnostics.push(format!("{kind}: largest margin {value:e} at d={bd}"));
        }
    }
    let d_max = history.last().map_or(config.d_start, |s| s.d);
    Ok(Verdict { partition, outcome: Outcome::Undecided { d_max, diagnostics }, history })
}

/// All `2^(M-1) - 1` splits of `M` modes. The side holding mode 0 is listed
/// first; splits are ordered by its size, then lexicographically.
pub fn bipartitions(num_modes: usize) -> Result<Vec<Bipartition>> {
    if num_modes < 2 {
        return Err(Error::InvalidModes(format!("bipartitions need at least 2 modes, got {num_modes}")));
    }
    let mut sides: Vec<Vec<usize>> = (0..1usize << (num_modes - 1))
        .map(|mask| {
            std::iter::once(0)
                .chain((1..num_modes).filter(|s| mask & (1 << (s - 1)) != 0))
                .collect::<Vec<_>>()
        })
        .filter(|side| side.len() < num_modes)
        .collect();
    sides.sort_by(|a, b| a.len().cmp(&b.len()).then_with(|| a.cmp(b)));
    sides.iter().map(|side| Bipartition::new(side, num_modes)).collect()
}

/// Per-bipartition escalation results.
#[derive(Debug, Clone, PartialEq)]
pub struct ScanReport {
    pub verdicts: Vec<Verdict>,
}

impl ScanReport {
    /// Entangled if any bipartition certifies.
    pub fn is_entangled(&self) -> bool {
        self.verdicts.iter().any(Verdict::is_entangled)
    }

    pub fn get(&self, partition: &Bipartition) -> Option<&Verdict> {
        self.verdicts.iter().find(|v| &v.partition == partition)
    }
}

/// Runs [`verify_escalating`] on every bipartition, in parallel; results come
/// back in [`bipartitions`] order. `config.partition` is ignored.
pub fn multipartite_scan(source: &StateProvider, config: &EscalationConfig) -> Result<ScanReport> {
    config.validate()?;
    let splits = bipartitions(source.num_modes())?;
    let verdicts = std::thread::scope(|scope| {
        let handles: Vec<_> = splits
            .into_iter()
            .map(|p| {
                let cfg = EscalationConfig { partition: Some(p), ..config.clone() };
                scope.spawn(move || verify_escalating(source, &cfg))
            })
            .collect();
        handles
            .into_iter()
            .map(|h| h.join().expect("bipartition worker panicked"))
            .collect::<Result<Vec<_>>>()
    })?;
    Ok(ScanReport { verdicts })
}
