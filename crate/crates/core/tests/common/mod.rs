#![allow(dead_code)]

use locc_core::specvec::ProbVector;
use locc_core::states::{from_schmidt_coefficients, PureState};
use rand::seq::SliceRandom;
use rand::Rng;

pub fn pv(v: &[f64]) -> ProbVector {
    ProbVector::new(v.to_vec()).unwrap()
}

pub fn canonical(p: &[f64], d: usize) -> PureState {
    from_schmidt_coefficients(&pv(p), d, d).unwrap()
}

/// Random probability vector from positive weights.
pub fn random_vector<R: Rng>(rng: &mut R, d: usize) -> ProbVector {
    let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = w.iter().sum();
    ProbVector::new(w.into_iter().map(|x| x / total).collect()).unwrap()
}

/// `Σ_k w_k P_k y` for random permutations `P_k`: always majorized by `y`.
pub fn random_majorized<R: Rng>(rng: &mut R, y: &ProbVector) -> ProbVector {
    let d = y.len();
    let terms = rng.random_range(1..=3);
    let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
    let total: f64 = weights.iter().sum();
    let mut x = vec![0.0; d];
    for w in weights {
        let mut perm: Vec<usize> = (0..d).collect();
        perm.shuffle(rng);
        for (i, &p) in perm.iter().enumerate() {
            x[i] += w / total * y.entries()[p];
        }
    }
    ProbVector::new(x).unwrap()
}
