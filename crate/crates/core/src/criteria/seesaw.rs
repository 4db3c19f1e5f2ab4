use crate::error::Result;
use crate::linalg::{
    ensure_hermitian, group_bipartite, inverse_order, kron_vec, permute_vector_modes, top_eigenpair, Bipartition,
    Complex64, ComplexMatrix, ComplexVector, CompositeIndexMap,
};
use crate::rng::{random_unit_vector, stream};

/// Settings for the alternating product-state maximization.
#[derive(Debug, Clone, PartialEq)]
pub struct SeesawConfig {
    pub restarts: usize,
    pub max_iters: usize,
    /// Stop once a full iteration improves the objective by less than this.
    pub tol_conv: f64,
    pub seed: u64,
}

impl Default for SeesawConfig {
    fn default() -> Self {
        Self { restarts: 16, max_iters: 500, tol_conv: 1e-15, seed: 0 }
    }
}

#[derive(Debug, Clone)]
pub struct SeesawResult {
    /// Best `<a (x) b| A |a (x) b>` found: a lower bound on the separable supremum.
    pub bound: f64,
    pub left: ComplexVector,
    pub right: ComplexVector,
    /// The optimizing product vector in the original mode order.
    pub product: ComplexVector,
    /// Objective after every half-step of the winning restart.
    pub history: Vec<f64>,
    pub iterations: usize,
}

/// `<b|A|b>` as an operator on the left factor.
fn contract_right(a: &ComplexMatrix, dl: usize, dr: usize, b: &ComplexVector) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(dl, dl);
    for j in 0..dl {
        for i in 0..dl {
            let mut acc = Complex64::new(0.0, 0.0);
            for l in 0..dr {
                let mut row = Complex64::new(0.0, 0.0);
                for k in 0..dr {
                    row += b[k].conj() * a[(i * dr + k, j * dr + l)];
                }
                acc += row * b[l];
            }
            out[(i, j)] = acc;
        }
    }
    out
}

/// `<a|A|a>` as an operator on the right factor.
fn contract_left(a: &ComplexMatrix, dl: usize, dr: usize, v: &ComplexVector) -> ComplexMatrix {
    let mut out = ComplexMatrix::zeros(dr, dr);
    for l in 0..dr {
        for k in 0..dr {
            let mut acc = Complex64::new(0.0, 0.0);
            for j in 0..dl {
                let mut row = Complex64::new(0.0, 0.0);
                for i in 0..dl {
                    row += v[i].conj() * a[(i * dr + k, j * dr + l)];
                }
                acc += row * v[j];
            }
            out[(k, l)] = acc;
        }
    }
    out
}

/// Lower bound on `sup { tr(sigma A) : sigma separable }` by alternating
/// top-eigenvector updates of the two local vectors.
///
/// Each half-step maximizes the objective exactly over one factor, so the
/// objective never decreases. Restart `r` draws its initial right vector
/// from stream `r` of `config.seed`.
pub fn seesaw_fab(
    a: &ComplexMatrix,
    map: &CompositeIndexMap,
    partition: &Bipartition,
    config: &SeesawConfig,
) -> Result<SeesawResult> {
    ensure_hermitian(a)?;
    let (grouped, gmap) = group_bipartite(a, map, partition)?;
    let (dl, dr) = (gmap.dims()[0], gmap.dims()[1]);

    let mut best: Option<SeesawResult> = None;
    for restart in 0..config.restarts.max(1) {
        let mut rng = stream(config.seed, restart as u64);
        let mut right = random_unit_vector(&mut rng, dr);
        let mut left = ComplexVector::zeros(dl);
        let mut history = Vec::with_capacity(2 * config.max_iters);
        let mut previous = f64::NEG_INFINITY;
        let mut iterations = 0;
        for _ in 0..config.max_iters.max(1) {
            iterations += 1;
            let (value, v) = top_eigenpair(&contract_right(&grouped, dl, dr, &right))?;
            left = v;
            history.push(value);
            let (value, v) = top_eigenpair(&contract_left(&grouped, dl, dr, &left))?;
            right = v;
            history.push(value);
            if value - previous < config.tol_conv {
                break;
            }
            previous = value;
        }
        let bound = *history.last().expect("at least one iteration");
        if best.as_ref().map_or(true, |b| bound > b.bound) {
            best = Some(SeesawResult {
                bound,
                left: left.clone(),
                right: right.clone(),
                product: ComplexVector::zeros(0),
                history,
                iterations,
            });
        }
    }
    let mut best = best.expect("at least one restart");
    let order = partition.grouping_order();
    let permuted = map.select(&order)?;
    best.product = permute_vector_modes(&kron_vec(&best.left, &best.right), &permuted, &inverse_order(&order))?.0;
    Ok(best)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::linalg::{c64, eigvalsh, expectation, kron, outer};
    use crate::rng::{random_hermitian, seeded};
    use crate::states::gen_chik;

    #[test]
    fn identity_gives_one() {
        let map = CompositeIndexMap::uniform(2, 3).unwrap();
        let r = seesaw_fab(&ComplexMatrix::identity(9, 9), &map, &Bipartition::bipartite(), &SeesawConfig::default()).unwrap();
        assert!((r.bound - 1.0).abs() < 1e-12);
    }

    #[test]
    fn bell_projector_gives_half() {
        let chi = gen_chik(1, 2).unwrap();
        let r = seesaw_fab(&outer(chi.amplitudes()), chi.map(), &Bipartition::bipartite(), &SeesawConfig::default()).unwrap();
        assert!((r.bound - 0.5).abs() < 1e-8);
        assert!((expectation(&outer(chi.amplitudes()), &r.product) - r.bound).abs() < 1e-12);
    }

    /// Brute-force maximum of `<a|P|a><b|Q|b>` over a grid of real-amplitude
    /// and phase parameters for 2-dimensional factors.
    fn grid_max(p: &ComplexMatrix, q: &ComplexMatrix) -> f64 {
        let steps = 120;
        let local = |m: &ComplexMatrix| -> f64 {
            let mut best = f64::NEG_INFINITY;
            for t in 0..=steps {
                let theta = std::f64::consts::PI * t as f64 / steps as f64;
                for s in 0..(2 * steps) {
                    let phi = std::f64::consts::PI * s as f64 / steps as f64;
                    let v = ComplexVector::from_vec(vec![
                        c64((theta / 2.0).cos(), 0.0),
                        c64((theta / 2.0).sin() * phi.cos(), (theta / 2.0).sin() * phi.sin()),
                    ]);
                    best = best.max(expectation(m, &v));
                }
            }
            best
        };
        local(p) * local(q)
    }

    #[test]
    fn product_operator_matches_grid_oracle() {
        let mut rng = seeded(21);
        for _ in 0..5 {
            let shift = ComplexMatrix::identity(2, 2).scale(4.0);
            let p = random_hermitian(&mut rng, 2) + &shift;
            let q = random_hermitian(&mut rng, 2) + &shift;
            let lp = *eigvalsh(&p).unwrap().last().unwrap();
            let lq = *eigvalsh(&q).unwrap().last().unwrap();
            assert!(lp > 0.0 && lq > 0.0);
            let map = CompositeIndexMap::uniform(2, 2).unwrap();
            let r = seesaw_fab(&kron(&p, &q), &map, &Bipartition::bipartite(), &SeesawConfig::default()).unwrap();
            assert!((r.bound - lp * lq).abs() < 1e-10);
            assert!((r.bound - grid_max(&p, &q)).abs() < 1e-2 * r.bound, "grid oracle");
        }
    }

    #[test]
    fn objective_is_monotone_and_below_spectral_max() {
        let mut rng = seeded(8);
        let map = CompositeIndexMap::new(vec![3, 2]).unwrap();
        for seed in 0..10 {
            let h = random_hermitian(&mut rng, 6);
            let cfg = SeesawConfig { seed, restarts: 3, ..SeesawConfig::default() };
            let r = seesaw_fab(&h, &map, &Bipartition::bipartite(), &cfg).unwrap();
            assert!(r.history.windows(2).all(|w| w[1] >= w[0] - 1e-12), "{:?}", r.history);
            assert!(r.bound <= eigvalsh(&h).unwrap()[5] + 1e-10);
        }
    }

    #[test]
    fn rejects_non_hermitian() {
        let mut m = ComplexMatrix::identity(4, 4);
        m[(0, 1)] = c64(1.0, 0.0);
        let map = CompositeIndexMap::uniform(2, 2).unwrap();
        assert!(seesaw_fab(&m, &map, &Bipartition::bipartite(), &SeesawConfig::default()).is_err());
    }
}
