//! Unitarily invariant random pure states and Monte Carlo statistics of the
//! majorization order between random pairs.
//!
//! Pair `i` of a run with root seed `s` draws both of its states from the
//! ChaCha8 stream `(s, i)`, so estimates do not depend on how the pairs are
//! scheduled across threads.

use nalgebra::DMatrix;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::StandardNormal;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, CMatrix};
use crate::specvec::{compare, crossing_statistic, Comparison, ProbVector};
use crate::states::{schmidt_spectrum, PureState};

pub fn gaussian_matrix<R: Rng + ?Sized>(rng: &mut R, rows: usize, cols: usize) -> CMatrix {
    DMatrix::from_fn(rows, cols, |_, _| {
        let re: f64 = rng.sample(StandardNormal);
        let im: f64 = rng.sample(StandardNormal);
        c(re, im)
    })
}

/// Normalized complex Gaussian amplitudes.
pub fn sample_state<R: Rng + ?Sized>(rng: &mut R, dim_a: usize, dim_b: usize) -> PureState {
    loop {
        if let Ok(s) = PureState::normalized(gaussian_matrix(rng, dim_a, dim_b)) {
            return s;
        }
    }
}

/// Haar-distributed unitary: the polar factor of a complex Gaussian matrix.
pub fn random_unitary<R: Rng + ?Sized>(rng: &mut R, dim: usize) -> Result<CMatrix> {
    linalg::polar_unitary(&gaussian_matrix(rng, dim, dim))
}

pub fn random_pure_state(dim_a: usize, dim_b: usize, seed: u64) -> Result<PureState> {
    if dim_a == 0 || dim_b == 0 {
        return Err(Error::InvalidParameter(
            "dimensions must be positive".into(),
        ));
    }
    Ok(sample_state(
        &mut ChaCha8Rng::seed_from_u64(seed),
        dim_a,
        dim_b,
    ))
}

pub fn pair_rng(seed: u64, index: u64) -> ChaCha8Rng {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index);
    rng
}

/// Pair `index` of the `d × d` run seeded with `seed`.
pub fn sample_pair(d: usize, seed: u64, index: u64) -> (PureState, PureState) {
    let mut rng = pair_rng(seed, index);
    let first = sample_state(&mut rng, d, d);
    let second = sample_state(&mut rng, d, d);
    (first, second)
}

fn pair_spectra(d: usize, seed: u64, index: u64) -> Result<(ProbVector, ProbVector)> {
    let (x, y) = sample_pair(d, seed, index);
    Ok((schmidt_spectrum(&x)?, schmidt_spectrum(&y)?))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct FractionEstimate {
    pub dimension: usize,
    pub n_samples: usize,
    pub fraction: f64,
    pub std_error: f64,
    pub seed: u64,
}

impl FractionEstimate {
    fn from_count(dimension: usize, n_samples: usize, hits: usize, seed: u64) -> Self {
        let fraction = hits as f64 / n_samples as f64;
        Self {
            dimension,
            n_samples,
            fraction,
            std_error: (fraction * (1.0 - fraction) / n_samples as f64).sqrt(),
            seed,
        }
    }
}

fn check_args(d: usize, n_samples: usize) -> Result<()> {
    if d < 2 {
        return Err(Error::InvalidParameter(
            "dimension must be at least 2".into(),
        ));
    }
    if n_samples == 0 {
        return Err(Error::InvalidParameter("need at least one sample".into()));
    }
    Ok(())
}

/// Fraction of random `d × d` pairs whose Schmidt spectra are incomparable.
pub fn incomparable_fraction(d: usize, n_samples: usize, seed: u64) -> Result<FractionEstimate> {
    check_args(d, n_samples)?;
    let flags = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let (p, q) = pair_spectra(d, seed, i)?;
            Ok(compare(&p, &q) == Comparison::Incomparable)
        })
        .collect::<Result<Vec<bool>>>()?;
    let hits = flags.iter().filter(|&&f| f).count();
    Ok(FractionEstimate::from_count(d, n_samples, hits, seed))
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingHistogram {
    pub dimension: usize,
    pub n_samples: usize,
    pub seed: u64,
    /// `counts[c]` = number of pairs whose partial sums change sign `c` times.
    pub counts: Vec<usize>,
}

impl CrossingHistogram {
    /// Share of pairs with at least one sign change.
    pub fn crossing_mass(&self) -> f64 {
        self.counts.iter().skip(1).sum::<usize>() as f64 / self.n_samples as f64
    }
}

/// Histogram of sign changes of `T_k`, `k = 1 … d−1`, over random pairs.
pub fn crossing_profile(d: usize, n_samples: usize, seed: u64) -> Result<CrossingHistogram> {
    check_args(d, n_samples)?;
    let changes = (0..n_samples as u64)
        .into_par_iter()
        .map(|i| {
            let (p, q) = pair_spectra(d, seed, i)?;
            Ok(crossing_statistic(&p, &q).sign_changes())
        })
        .collect::<Result<Vec<usize>>>()?;
    let mut counts = vec![0; d.saturating_sub(1).max(1)];
    for c in changes {
        counts[c] += 1;
    }
    Ok(CrossingHistogram {
        dimension: d,
        n_samples,
        seed,
        counts,
    })
}
