//! Seeded random sampling of vectors, states and unitaries.
//!
//! All randomness goes through [`StateRng`] (ChaCha8) so results are
//! reproducible from a `u64` seed on every platform.

use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, StandardNormal};

use crate::linalg::{c64, ComplexMatrix, ComplexVector};

pub type StateRng = ChaCha8Rng;

pub fn seeded(seed: u64) -> StateRng {
    ChaCha8Rng::seed_from_u64(seed)
}

/// Independent stream `stream` derived from `seed`.
pub fn stream(seed: u64, stream: u64) -> StateRng {
    let mut rng = seeded(seed);
    rng.set_stream(stream);
    rng
}

/// Vector of i.i.d. standard complex Gaussians.
pub fn complex_gaussian(rng: &mut StateRng, n: usize) -> ComplexVector {
    ComplexVector::from_fn(n, |_, _| {
        let re: f64 = StandardNormal.sample(rng);
        let im: f64 = StandardNormal.sample(rng);
        c64(re, im)
    })
}

/// Uniformly (Haar) distributed unit vector in `C^n`.
pub fn random_unit_vector(rng: &mut StateRng, n: usize) -> ComplexVector {
    loop {
        let v = complex_gaussian(rng, n);
        let norm = v.norm();
        if norm > 1e-300 {
            return v.unscale(norm);
        }
    }
}

/// Haar unitary from the QR decomposition of a Ginibre matrix, with the
/// phases of `R`'s diagonal absorbed into `Q`.
pub fn random_unitary(rng: &mut StateRng, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_columns(&(0..n).map(|_| complex_gaussian(rng, n)).collect::<Vec<_>>());
    let qr = g.qr();
    let (mut q, r) = qr.unpack();
    for k in 0..n {
        let d = r[(k, k)];
        let phase = if d.norm() > 0.0 { d / d.norm() } else { c64(1.0, 0.0) };
        for row in 0..n {
            q[(row, k)] *= phase;
        }
    }
    q
}

/// Hermitian matrix with Gaussian entries.
pub fn random_hermitian(rng: &mut StateRng, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_columns(&(0..n).map(|_| complex_gaussian(rng, n)).collect::<Vec<_>>());
    (&g + g.adjoint()).unscale(2.0)
}

/// Full-rank random density matrix `G G^dagger / tr(G G^dagger)`.
pub fn random_density(rng: &mut StateRng, n: usize) -> ComplexMatrix {
    let g = ComplexMatrix::from_columns(&(0..n).map(|_| complex_gaussian(rng, n)).collect::<Vec<_>>());
    let m = &g * g.adjoint();
    let t = m.trace().re;
    let mut m = m.unscale(t);
    // exact Hermiticity
    for i in 0..n {
        m[(i, i)].im = 0.0;
        for j in 0..i {
            m[(i, j)] = m[(j, i)].conj();
        }
    }
    m
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn unitary_is_unitary() {
        let mut rng = seeded(3);
        let u = random_unitary(&mut rng, 4);
        let err = (&u * u.adjoint() - ComplexMatrix::identity(4, 4)).norm();
        assert!(err < 1e-12, "{err}");
    }

    #[test]
    fn same_seed_same_stream() {
        let a = complex_gaussian(&mut stream(11, 2), 5);
        let b = complex_gaussian(&mut stream(11, 2), 5);
        let c = complex_gaussian(&mut stream(11, 3), 5);
        assert_eq!(a, b);
        assert_ne!(a, c);
    }
}
