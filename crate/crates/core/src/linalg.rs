//! Dense complex linear algebra on composite (multimode) index spaces.
//!
//! Every operator is a [`ComplexMatrix`] indexed by a [`CompositeIndexMap`].
//! The first mode is the most significant digit of the composite index,
//! which is the same convention as the Kronecker product: the basis vector
//! `|n_1, ..., n_M>` sits at `sum_s n_s * stride_s` with `stride_M = 1`.
//!
//! Eigen- and singular-value decompositions are delegated to `nalgebra`;
//! the multimode index gymnastics (partial transpose, partial trace,
//! realignment, mode permutation) live here.

use std::fmt;
use std::str::FromStr;

use nalgebra::{DMatrix, DVector, SymmetricEigen, SVD};
pub use num_complex::Complex64;

use crate::error::{Error, Result};

pub type ComplexMatrix = DMatrix<Complex64>;
pub type ComplexVector = DVector<Complex64>;

/// Absolute tolerance on `max |H_ij - conj(H_ji)|` for Hermitian inputs.
pub const HERMITIAN_TOL: f64 = 1e-10;

/// Eigenvalues closer than this to the top one count as degenerate.
pub const DEGENERACY_TOL: f64 = 1e-12;

#[inline]
pub fn c64(re: f64, im: f64) -> Complex64 {
    Complex64::new(re, im)
}

/// Per-mode dimensions of a tensor-product basis and the induced
/// mixed-radix index arithmetic.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct CompositeIndexMap {
    dims: Vec<usize>,
    strides: Vec<usize>,
    total: usize,
}

impl CompositeIndexMap {
    pub fn new(dims: Vec<usize>) -> Result<Self> {
        if dims.is_empty() {
            return Err(Error::InvalidDims("at least one mode is required".into()));
        }
        if let Some(s) = dims.iter().position(|&d| d == 0) {
            return Err(Error::InvalidDims(format!("mode {s} has dimension 0")));
        }
        let mut strides = vec![1usize; dims.len()];
        let mut total = 1usize;
        for s in (0..dims.len()).rev() {
            strides[s] = total;
            total = total
                .checked_mul(dims[s])
                .ok_or_else(|| Error::InvalidDims(format!("composite dimension of {dims:?} overflows")))?;
        }
        Ok(Self { dims, strides, total })
    }

    /// `modes` modes of equal dimension `d`.
    pub fn uniform(modes: usize, d: usize) -> Result<Self> {
        Self::new(vec![d; modes])
    }

    pub fn dims(&self) -> &[usize] {
        &self.dims
    }

    pub fn strides(&self) -> &[usize] {
        &self.strides
    }

    pub fn num_modes(&self) -> usize {
        self.dims.len()
    }

    /// Composite dimension `prod_s d_s`.
    pub fn total(&self) -> usize {
        self.total
    }

    pub fn index(&self, tuple: &[usize]) -> usize {
        debug_assert_eq!(tuple.len(), self.dims.len());
        tuple
            .iter()
            .zip(&self.strides)
            .map(|(n, stride)| n * stride)
            .sum()
    }

    pub fn tuple(&self, index: usize) -> Vec<usize> {
        let mut out = vec![0; self.dims.len()];
        self.write_tuple(index, &mut out);
        out
    }

    pub fn write_tuple(&self, mut index: usize, out: &mut [usize]) {
        for s in 0..self.dims.len() {
            out[s] = index / self.strides[s];
            index %= self.strides[s];
        }
    }

    #[inline]
    pub fn digit(&self, index: usize, mode: usize) -> usize {
        (index / self.strides[mode]) % self.dims[mode]
    }

    /// Dimensions of the listed modes, in the listed order.
    pub fn select(&self, modes: &[usize]) -> Result<Self> {
        Self::new(modes.iter().map(|&s| self.dims[s]).collect())
    }

    /// True when `other` has the same mode count and is componentwise no larger.
    pub fn fits_within(&self, other: &Self) -> bool {
        self.dims.len() == other.dims.len() && self.dims.iter().zip(&other.dims).all(|(a, b)| a <= b)
    }

    /// Index in `larger` of the basis vector with index `index` here.
    /// Requires `self.fits_within(larger)`.
    pub fn embed_index(&self, index: usize, larger: &Self) -> usize {
        (0..self.dims.len())
            .map(|s| self.digit(index, s) * larger.strides[s])
            .sum()
    }
}

/// Unordered split of the modes `0..M` into two nonempty groups.
///
/// The left group always contains mode 0; both groups are sorted.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct Bipartition {
    left: Vec<usize>,
    right: Vec<usize>,
}

impl Bipartition {
    /// Builds the split with `side` on one side and the remaining modes on the other.
    pub fn new(side: &[usize], num_modes: usize) -> Result<Self> {
        let mut in_side = vec![false; num_modes];
        for &s in side {
            if s >= num_modes {
                return Err(Error::InvalidModes(format!("mode {s} out of range for {num_modes} modes")));
            }
            if in_side[s] {
                return Err(Error::InvalidModes(format!("mode {s} listed twice")));
            }
            in_side[s] = true;
        }
        let a: Vec<usize> = (0..num_modes).filter(|&s| in_side[s]).collect();
        let b: Vec<usize> = (0..num_modes).filter(|&s| !in_side[s]).collect();
        if a.is_empty() || b.is_empty() {
            return Err(Error::InvalidModes("both sides of a bipartition must be nonempty".into()));
        }
        let (left, right) = if in_side[0] { (a, b) } else { (b, a) };
        Ok(Self { left, right })
    }

    /// The `{0}|{1}` split of a two-mode system.
    pub fn bipartite() -> Self {
        Self { left: vec![0], right: vec![1] }
    }

    /// Parses `"0|1,2"`; both sides must be listed and cover `0..num_modes`.
    pub fn parse(text: &str, num_modes: usize) -> Result<Self> {
        let raw: RawBipartition = text.parse()?;
        let mut all: Vec<usize> = raw.0.iter().chain(&raw.1).copied().collect();
        all.sort_unstable();
        if all != (0..num_modes).collect::<Vec<_>>() {
            return Err(Error::InvalidModes(format!(
                "partition '{text}' does not cover modes 0..{num_modes} exactly once"
            )));
        }
        Self::new(&raw.0, num_modes)
    }

    pub fn left(&self) -> &[usize] {
        &self.left
    }

    pub fn right(&self) -> &[usize] {
        &self.right
    }

    pub fn num_modes(&self) -> usize {
        self.left.len() + self.right.len()
    }

    /// Mode order that puts the left group first.
    pub fn grouping_order(&self) -> Vec<usize> {
        self.left.iter().chain(&self.right).copied().collect()
    }
}

impl fmt::Display for Bipartition {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        let join = |v: &[usize]| v.iter().map(|s| s.to_string()).collect::<Vec<_>>().join(",");
        write!(f, "{}|{}", join(&self.left), join(&self.right))
    }
}

struct RawBipartition(Vec<usize>, Vec<usize>);

impl FromStr for RawBipartition {
    type Err = Error;

    fn from_str(text: &str) -> Result<Self> {
        let (a, b) = text
            .split_once('|')
            .ok_or_else(|| Error::InvalidModes(format!("partition '{text}' must look like '0|1,2'")))?;
        let side = |s: &str| -> Result<Vec<usize>> {
            s.split(',')
                .map(|t| {
                    t.trim()
                        .parse::<usize>()
                        .map_err(|_| Error::InvalidModes(format!("bad mode '{t}' in partition '{text}'")))
                })
                .collect()
        };
        Ok(Self(side(a)?, side(b)?))
    }
}

/// Eigen-decomposition of a Hermitian matrix with ascending eigenvalues.
#[derive(Debug, Clone)]
pub struct HermitianSpectrum {
    pub eigenvalues: Vec<f64>,
    /// Orthonormal eigenvectors stored as columns, in eigenvalue order.
    pub eigenvectors: ComplexMatrix,
}

impl HermitianSpectrum {
    pub fn min(&self) -> f64 {
        self.eigenvalues[0]
    }

    pub fn max(&self) -> f64 {
        *self.eigenvalues.last().expect("nonempty spectrum")
    }

    pub fn eigenvector(&self, k: usize) -> ComplexVector {
        self.eigenvectors.column(k).into_owned()
    }

    /// `V diag(lambda) V^dagger`.
    pub fn reconstruct(&self) -> ComplexMatrix {
        let mut scaled = self.eigenvectors.clone();
        for (k, &lambda) in self.eigenvalues.iter().enumerate() {
            scaled.column_mut(k).scale_mut(lambda);
        }
        &scaled * self.eigenvectors.adjoint()
    }
}

pub fn ensure_square(m: &ComplexMatrix) -> Result<usize> {
    if m.nrows() != m.ncols() {
        return Err(Error::NotSquare { rows: m.nrows(), cols: m.ncols() });
    }
    Ok(m.nrows())
}

pub fn ensure_finite(m: &ComplexMatrix) -> Result<()> {
    for c in 0..m.ncols() {
        for r in 0..m.nrows() {
            let z = m[(r, c)];
            if !z.re.is_finite() || !z.im.is_finite() {
                return Err(Error::NonFinite { row: r, col: c });
            }
        }
    }
    Ok(())
}

/// Largest `|H_ij - conj(H_ji)|` and the pair `(i, j)` attaining it.
pub fn hermiticity_defect(h: &ComplexMatrix) -> (f64, usize, usize) {
    let n = h.nrows();
    let mut worst = (0.0, 0, 0);
    for i in 0..n {
        for j in i..n {
            let d = (h[(i, j)] - h[(j, i)].conj()).norm();
            if d > worst.0 {
                worst = (d, i, j);
            }
        }
    }
    worst
}

/// Square, finite and Hermitian within [`HERMITIAN_TOL`].
pub fn ensure_hermitian(h: &ComplexMatrix) -> Result<()> {
    ensure_square(h)?;
    ensure_finite(h)?;
    let (mismatch, row, col) = hermiticity_defect(h);
    if mismatch > HERMITIAN_TOL {
        return Err(Error::NotHermitian { row, col, mismatch });
    }
    Ok(())
}

/// `(H + H^dagger) / 2`.
pub fn hermitian_part(h: &ComplexMatrix) -> ComplexMatrix {
    (h + h.adjoint()).unscale(2.0)
}

/// Hermitian eigendecomposition, eigenvalues ascending.
///
/// Inputs within [`HERMITIAN_TOL`] of Hermitian are symmetrized first.
pub fn eigh(h: &ComplexMatrix) -> Result<HermitianSpectrum> {
    ensure_hermitian(h)?;
    let n = h.nrows();
    let eig = SymmetricEigen::new(hermitian_part(h));
    let mut order: Vec<usize> = (0..n).collect();
    order.sort_by(|&a, &b| eig.eigenvalues[a].total_cmp(&eig.eigenvalues[b]));
    let eigenvalues = order.iter().map(|&k| eig.eigenvalues[k]).collect();
    let eigenvectors = ComplexMatrix::from_fn(n, n, |r, c| eig.eigenvectors[(r, order[c])]);
    Ok(HermitianSpectrum { eigenvalues, eigenvectors })
}

/// Eigenvalues only, ascending.
pub fn eigvalsh(h: &ComplexMatrix) -> Result<Vec<f64>> {
    ensure_hermitian(h)?;
    let mut values: Vec<f64> = hermitian_part(h).symmetric_eigenvalues().iter().copied().collect();
    values.sort_by(f64::total_cmp);
    Ok(values)
}

/// Largest eigenvalue and a unit eigenvector for it.
///
/// When the top eigenvalue is degenerate within [`DEGENERACY_TOL`], the
/// eigenvector whose absolute components are lexicographically largest is
/// chosen. The phase is fixed so that the first non-negligible component is
/// real and positive.
pub fn top_eigenpair(h: &ComplexMatrix) -> Result<(f64, ComplexVector)> {
    let spec = eigh(h)?;
    let n = spec.eigenvalues.len();
    let top = spec.max();
    let mut best = n - 1;
    for k in (0..n - 1).rev() {
        if top - spec.eigenvalues[k] > DEGENERACY_TOL {
            break;
        }
        let cmp = spec
            .eigenvectors
            .column(k)
            .iter()
            .zip(spec.eigenvectors.column(best).iter())
            .map(|(a, b)| a.norm().total_cmp(&b.norm()))
            .find(|o| o.is_ne());
        if cmp == Some(std::cmp::Ordering::Greater) {
            best = k;
        }
    }
    let mut v = spec.eigenvector(best);
    fix_phase(&mut v);
    Ok((top, v))
}

/// Rotates `v` so its first component with modulus above 1e-12 is real positive.
pub fn fix_phase(v: &mut ComplexVector) {
    if let Some(z) = v.iter().find(|z| z.norm() > 1e-12).copied() {
        let phase = z.conj() / z.norm();
        v.iter_mut().for_each(|x| *x *= phase);
    }
}

/// Thin singular value decomposition `M = U diag(s) V^dagger` with `s` descending.
#[derive(Debug, Clone)]
pub struct Svd {
    pub u: ComplexMatrix,
    pub singular_values: Vec<f64>,
    pub v_adjoint: ComplexMatrix,
}

fn nalgebra_svd(m: &ComplexMatrix, vectors: bool) -> Option<SVD<Complex64, nalgebra::Dyn, nalgebra::Dyn>> {
    SVD::try_new(m.clone(), vectors, vectors, f64::EPSILON, 10_000)
}

/// Singular values, descending.
pub fn svd_values(m: &ComplexMatrix) -> Result<Vec<f64>> {
    ensure_finite(m)?;
    if m.is_empty() {
        return Ok(Vec::new());
    }
    let mut values: Vec<f64> = match nalgebra_svd(m, false) {
        Some(svd) => svd.singular_values.iter().copied().collect(),
        // Fall back to the Gram matrix when the bidiagonal iteration stalls.
        None => {
            let gram = if m.nrows() <= m.ncols() { m * m.adjoint() } else { m.adjoint() * m };
            eigvalsh(&hermitian_part(&gram))?.into_iter().map(|x| x.max(0.0).sqrt()).collect()
        }
    };
    values.sort_by(|a, b| b.total_cmp(a));
    Ok(values)
}

/// Full thin SVD, singular triplets sorted by descending singular value.
pub fn svd(m: &ComplexMatrix) -> Result<Svd> {
    ensure_finite(m)?;
    let svd = nalgebra_svd(m, true)
        .ok_or_else(|| Error::InvalidParameter("singular value iteration did not converge".into()))?;
    let u = svd.u.expect("requested U");
    let v_t = svd.v_t.expect("requested V^dagger");
    let k = svd.singular_values.len();
    let mut order: Vec<usize> = (0..k).collect();
    order.sort_by(|&a, &b| svd.singular_values[b].total_cmp(&svd.singular_values[a]));
    Ok(Svd {
        u: ComplexMatrix::from_fn(m.nrows(), k, |r, c| u[(r, order[c])]),
        singular_values: order.iter().map(|&i| svd.singular_values[i]).collect(),
        v_adjoint: ComplexMatrix::from_fn(k, m.ncols(), |r, c| v_t[(order[r], c)]),
    })
}

fn check_operator(rho: &ComplexMatrix, map: &CompositeIndexMap) -> Result<()> {
    let n = ensure_square(rho)?;
    if n != map.total() {
        return Err(Error::DimensionMismatch { expected: map.total(), found: n });
    }
    Ok(())
}

fn check_modes(modes: &[usize], map: &CompositeIndexMap) -> Result<Vec<usize>> {
    let mut sorted = modes.to_vec();
    sorted.sort_unstable();
    sorted.dedup();
    if sorted.len() != modes.len() {
        return Err(Error::InvalidModes(format!("repeated mode in {modes:?}")));
    }
    if let Some(&s) = sorted.iter().find(|&&s| s >= map.num_modes()) {
        return Err(Error::InvalidModes(format!("mode {s} out of range for {} modes", map.num_modes())));
    }
    Ok(sorted)
}

/// Transposes the indices of the listed modes only.
///
/// The subset must be nonempty and proper; use an ordinary transpose otherwise.
pub fn partial_transpose(rho: &ComplexMatrix, map: &CompositeIndexMap, transposed: &[usize]) -> Result<ComplexMatrix> {
    check_operator(rho, map)?;
    let modes = check_modes(transposed, map)?;
    if modes.is_empty() || modes.len() == map.num_modes() {
        return Err(Error::InvalidModes(
            "partial transpose needs a nonempty proper subset of modes".into(),
        ));
    }
    let n = map.total();
    let mut out = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            let (mut r2, mut c2) = (r, c);
            for &s in &modes {
                let stride = map.strides()[s];
                let (dr, dc) = (map.digit(r, s), map.digit(c, s));
                r2 = r2 - dr * stride + dc * stride;
                c2 = c2 - dc * stride + dr * stride;
            }
            out[(r2, c2)] = rho[(r, c)];
        }
    }
    Ok(out)
}

/// Traces out every mode not in `keep`. Kept modes stay in ascending order.
pub fn partial_trace(rho: &ComplexMatrix, map: &CompositeIndexMap, keep: &[usize]) -> Result<ComplexMatrix> {
    check_operator(rho, map)?;
    let keep = check_modes(keep, map)?;
    if keep.is_empty() {
        return Err(Error::InvalidModes("partial trace must keep at least one mode".into()));
    }
    if keep.len() == map.num_modes() {
        return Ok(rho.clone());
    }
    let kept_map = map.select(&keep)?;
    let traced: Vec<usize> = (0..map.num_modes()).filter(|s| !keep.contains(s)).collect();
    let n = map.total();
    let project = |i: usize| -> usize {
        keep.iter()
            .enumerate()
            .map(|(j, &s)| map.digit(i, s) * kept_map.strides()[j])
            .sum()
    };
    let environment = |i: usize| -> usize { traced.iter().map(|&s| map.digit(i, s) * map.strides()[s]).sum() };
    let reduced: Vec<usize> = (0..n).map(project).collect();
    let env: Vec<usize> = (0..n).map(environment).collect();
    let mut out = ComplexMatrix::zeros(kept_map.total(), kept_map.total());
    for c in 0..n {
        for r in 0..n {
            if env[r] == env[c] {
                out[(reduced[r], reduced[c])] += rho[(r, c)];
            }
        }
    }
    Ok(out)
}

/// Index permutation taking composite indices of `map` to the map whose
/// mode `j` is old mode `order[j]`.
fn permutation_indices(map: &CompositeIndexMap, order: &[usize]) -> Result<(Vec<usize>, CompositeIndexMap)> {
    let mut check = order.to_vec();
    check.sort_unstable();
    if check != (0..map.num_modes()).collect::<Vec<_>>() {
        return Err(Error::InvalidModes(format!("{order:?} is not a permutation of the modes")));
    }
    let permuted = map.select(order)?;
    let targets = (0..map.total())
        .map(|i| {
            order
                .iter()
                .enumerate()
                .map(|(j, &s)| map.digit(i, s) * permuted.strides()[j])
                .sum()
        })
        .collect();
    Ok((targets, permuted))
}

/// Reorders tensor factors: mode `j` of the output is mode `order[j]` of the input.
pub fn permute_modes(
    rho: &ComplexMatrix,
    map: &CompositeIndexMap,
    order: &[usize],
) -> Result<(ComplexMatrix, CompositeIndexMap)> {
    check_operator(rho, map)?;
    let (targets, permuted) = permutation_indices(map, order)?;
    let n = map.total();
    let mut out = ComplexMatrix::zeros(n, n);
    for c in 0..n {
        for r in 0..n {
            out[(targets[r], targets[c])] = rho[(r, c)];
        }
    }
    Ok((out, permuted))
}

/// Vector counterpart of [`permute_modes`].
pub fn permute_vector_modes(
    v: &ComplexVector,
    map: &CompositeIndexMap,
    order: &[usize],
) -> Result<(ComplexVector, CompositeIndexMap)> {
    if v.len() != map.total() {
        return Err(Error::DimensionMismatch { expected: map.total(), found: v.len() });
    }
    let (targets, permuted) = permutation_indices(map, order)?;
    let mut out = ComplexVector::zeros(v.len());
    for (i, &t) in targets.iter().enumerate() {
        out[t] = v[i];
    }
    Ok((out, permuted))
}

/// Inverse of a mode order.
pub fn inverse_order(order: &[usize]) -> Vec<usize> {
    let mut inv = vec![0; order.len()];
    for (j, &s) in order.iter().enumerate() {
        inv[s] = j;
    }
    inv
}

/// Regroups an operator into a two-mode operator `(left group) x (right group)`.
pub fn group_bipartite(
    rho: &ComplexMatrix,
    map: &CompositeIndexMap,
    partition: &Bipartition,
) -> Result<(ComplexMatrix, CompositeIndexMap)> {
    if partition.num_modes() != map.num_modes() {
        return Err(Error::InvalidModes(format!(
            "partition {partition} does not match {} modes",
            map.num_modes()
        )));
    }
    let (grouped, permuted) = permute_modes(rho, map, &partition.grouping_order())?;
    let left: usize = permuted.dims()[..partition.left().len()].iter().product();
    let right: usize = permuted.dims()[partition.left().len()..].iter().product();
    Ok((grouped, CompositeIndexMap::new(vec![left, right])?))
}

/// Undoes [`group_bipartite`] for an operator written in the grouped ordering.
pub fn ungroup_bipartite(
    grouped: &ComplexMatrix,
    map: &CompositeIndexMap,
    partition: &Bipartition,
) -> Result<ComplexMatrix> {
    let order = partition.grouping_order();
    let permuted = map.select(&order)?;
    let (out, _) = permute_modes(grouped, &permuted, &inverse_order(&order))?;
    Ok(out)
}

/// Realignment `R(rho)` of a two-mode operator.
///
/// `R[(i*dA + j), (k*dB + l)] = rho[(i, k), (j, l)]`.
pub fn realign(rho: &ComplexMatrix, map: &CompositeIndexMap) -> Result<ComplexMatrix> {
    check_operator(rho, map)?;
    if map.num_modes() != 2 {
        return Err(Error::InvalidModes(format!(
            "realignment needs exactly 2 modes, got {}; group a bipartition first",
            map.num_modes()
        )));
    }
    let (da, db) = (map.dims()[0], map.dims()[1]);
    let mut out = ComplexMatrix::zeros(da * da, db * db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[(i * da + j, k * db + l)] = rho[(i * db + k, j * db + l)];
                }
            }
        }
    }
    Ok(out)
}

/// Inverse of [`realign`]: rebuilds the operator whose realignment is `r`.
pub fn unrealign(r: &ComplexMatrix, map: &CompositeIndexMap) -> Result<ComplexMatrix> {
    let (da, db) = (map.dims()[0], map.dims()[1]);
    if r.nrows() != da * da || r.ncols() != db * db {
        return Err(Error::DimensionMismatch { expected: da * da * db * db, found: r.len() });
    }
    let mut out = ComplexMatrix::zeros(da * db, da * db);
    for i in 0..da {
        for j in 0..da {
            for k in 0..db {
                for l in 0..db {
                    out[(i * db + k, j * db + l)] = r[(i * da + j, k * db + l)];
                }
            }
        }
    }
    Ok(out)
}

/// Kronecker product, first factor most significant.
pub fn kron(a: &ComplexMatrix, b: &ComplexMatrix) -> ComplexMatrix {
    a.kronecker(b)
}

pub fn kron_vec(a: &ComplexVector, b: &ComplexVector) -> ComplexVector {
    a.kronecker(b)
}

/// `|v><v|`.
pub fn outer(v: &ComplexVector) -> ComplexMatrix {
    v * v.adjoint()
}

/// Real part of `tr(A B)` without forming the product.
pub fn trace_product(a: &ComplexMatrix, b: &ComplexMatrix) -> f64 {
    debug_assert_eq!(a.ncols(), b.nrows());
    debug_assert_eq!(a.nrows(), b.ncols());
    let mut acc = Complex64::new(0.0, 0.0);
    for i in 0..a.nrows() {
        for j in 0..a.ncols() {
            acc += a[(i, j)] * b[(j, i)];
        }
    }
    acc.re
}

/// Real part of `<v|A|v>`.
pub fn expectation(a: &ComplexMatrix, v: &ComplexVector) -> f64 {
    v.dotc(&(a * v)).re
}

pub fn real_trace(m: &ComplexMatrix) -> f64 {
    m.trace().re
}
