//! Probability vectors and the majorization order on them.
//!
//! `x ≺ y` ("x is majorized by y") holds when every descending partial sum of
//! `x` is bounded by the corresponding partial sum of `y`, with equal totals.
//! Vectors of different lengths are compared after zero-padding the shorter
//! one, so Schmidt spectra of different ranks can be ordered directly.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// Entries below this are treated as zero.
pub const EPS_NUM: f64 = 1e-12;
/// Slack used in every partial-sum comparison.
pub const EPS_MAJ: f64 = 1e-10;
/// Allowed deviation of the total mass from one.
pub const EPS_SUM: f64 = 1e-10;

/// Nonnegative reals summing to one.
///
/// Construction clamps entries below [`EPS_NUM`] to zero and rescales the
/// result to unit sum, so every stored vector sums to one up to rounding.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "Vec<f64>", into = "Vec<f64>")]
pub struct ProbVector(Vec<f64>);

impl ProbVector {
    pub fn new(entries: Vec<f64>) -> Result<Self> {
        if entries.is_empty() {
            return Err(Error::InvalidVector("empty vector".into()));
        }
        if let Some(bad) = entries.iter().find(|x| !x.is_finite()) {
            return Err(Error::InvalidVector(format!("non-finite entry {bad}")));
        }
        if let Some(neg) = entries.iter().find(|&&x| x < -EPS_NUM) {
            return Err(Error::InvalidVector(format!("negative entry {neg}")));
        }
        let clamped: Vec<f64> = entries
            .into_iter()
            .map(|x| if x < EPS_NUM { 0.0 } else { x })
            .collect();
        let total: f64 = clamped.iter().sum();
        if (total - 1.0).abs() > EPS_SUM {
            return Err(Error::InvalidVector(format!(
                "entries sum to {total}, not 1"
            )));
        }
        Ok(Self(clamped.into_iter().map(|x| x / total).collect()))
    }

    /// `(1/d, …, 1/d)`.
    pub fn uniform(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidVector("empty vector".into()));
        }
        Ok(Self(vec![1.0 / d as f64; d]))
    }

    /// `(1, 0, …, 0)`.
    pub fn point_mass(d: usize) -> Result<Self> {
        if d == 0 {
            return Err(Error::InvalidVector("empty vector".into()));
        }
        let mut v = vec![0.0; d];
        v[0] = 1.0;
        Ok(Self(v))
    }

    pub(crate) fn from_raw(entries: Vec<f64>) -> Self {
        Self(entries)
    }

    pub fn entries(&self) -> &[f64] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        self.0.is_empty()
    }

    /// Number of entries above [`EPS_NUM`].
    pub fn support_size(&self) -> usize {
        self.0.iter().filter(|&&x| x > EPS_NUM).count()
    }

    /// Entries in descending order; equal values keep their input order.
    pub fn sorted_desc(&self) -> Vec<f64> {
        sorted_desc(&self.0)
    }

    /// Descending copy zero-padded to `len` (which must be at least `self.len()`).
    pub fn sorted_padded(&self, len: usize) -> Vec<f64> {
        let mut v = self.sorted_desc();
        v.resize(len.max(v.len()), 0.0);
        v
    }

    pub fn into_inner(self) -> Vec<f64> {
        self.0
    }
}

impl TryFrom<Vec<f64>> for ProbVector {
    type Error = Error;

    fn try_from(v: Vec<f64>) -> Result<Self> {
        Self::new(v)
    }
}

impl From<ProbVector> for Vec<f64> {
    fn from(v: ProbVector) -> Self {
        v.0
    }
}

fn sorted_desc(v: &[f64]) -> Vec<f64> {
    let mut out = v.to_vec();
    // slice::sort_by is stable
    out.sort_by(|a, b| b.partial_cmp(a).unwrap_or(Ordering::Equal));
    out
}

fn padded_pair(x: &ProbVector, y: &ProbVector) -> (Vec<f64>, Vec<f64>) {
    let len = x.len().max(y.len());
    (x.sorted_padded(len), y.sorted_padded(len))
}

/// Two-coordinate doubly stochastic mixer: identity except on `(i, j)`,
/// where it acts as `[[t, 1−t], [1−t, t]]`.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct TTransform {
    pub i: usize,
    pub j: usize,
    pub t: f64,
}

impl TTransform {
    pub fn new(i: usize, j: usize, t: f64) -> Result<Self> {
        if i == j {
            return Err(Error::InvalidParameter(
                "T-transform needs two distinct indices".into(),
            ));
        }
        if !(0.0..=1.0).contains(&t) {
            return Err(Error::InvalidParameter(format!(
                "T-transform weight {t} outside [0, 1]"
            )));
        }
        Ok(Self { i, j, t })
    }

    fn apply_in_place(&self, v: &mut [f64]) {
        let (a, b) = (v[self.i], v[self.j]);
        v[self.i] = self.t * a + (1.0 - self.t) * b;
        v[self.j] = (1.0 - self.t) * a + self.t * b;
    }
}

/// Outcome of comparing two vectors in the majorization order.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum Comparison {
    /// `x ≺ y` and not the reverse.
    LeftPrecedes,
    /// `y ≺ x` and not the reverse.
    RightPrecedes,
    Equivalent,
    Incomparable,
}

/// Partial sums `T_k = Σ_{i≤k} (p↓_i − q↓_i)` and whether they change sign.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct CrossingReport {
    pub deltas: Vec<f64>,
    pub partial_sums: Vec<f64>,
    pub crosses: bool,
    pub first_positive_k: Option<usize>,
    pub first_negative_k: Option<usize>,
}

impl CrossingReport {
    /// Sign changes of `T_1 … T_{d−1}`, skipping entries within [`EPS_MAJ`] of zero.
    pub fn sign_changes(&self) -> usize {
        let d = self.partial_sums.len();
        let mut last = 0i8;
        let mut changes = 0;
        for &s in &self.partial_sums[..d.saturating_sub(1)] {
            let sign = if s > EPS_MAJ {
                1
            } else if s < -EPS_MAJ {
                -1
            } else {
                0
            };
            if sign != 0 {
                if last != 0 && sign != last {
                    changes += 1;
                }
                last = sign;
            }
        }
        changes
    }
}

/// Tests `x ≺ y`.
pub fn majorizes(x: &ProbVector, y: &ProbVector) -> bool {
    let (xs, ys) = padded_pair(x, y);
    let mut sx = 0.0;
    let mut sy = 0.0;
    for (a, b) in xs.iter().zip(&ys) {
        sx += a;
        sy += b;
        if sx > sy + EPS_MAJ {
            return false;
        }
    }
    (sx - sy).abs() <= EPS_SUM
}

pub fn compare(x: &ProbVector, y: &ProbVector) -> Comparison {
    let (xs, ys) = padded_pair(x, y);
    if xs.iter().zip(&ys).all(|(a, b)| (a - b).abs() <= EPS_MAJ) {
        return Comparison::Equivalent;
    }
    match (majorizes(x, y), majorizes(y, x)) {
        (true, false) => Comparison::LeftPrecedes,
        (false, true) => Comparison::RightPrecedes,
        // partial sums all within tolerance of each other
        (true, true) => Comparison::Equivalent,
        (false, false) => Comparison::Incomparable,
    }
}

/// Applies one T-transform. The input is not re-sorted.
pub fn apply_t_transform(v: &ProbVector, t: &TTransform) -> Result<ProbVector> {
    let dim = v.len();
    for index in [t.i, t.j] {
        if index >= dim {
            return Err(Error::IndexOutOfRange { index, dim });
        }
    }
    let mut out = v.entries().to_vec();
    t.apply_in_place(&mut out);
    Ok(ProbVector::from_raw(out))
}

/// Applies a chain of T-transforms in order.
pub fn apply_chain(v: &ProbVector, chain: &[TTransform]) -> Result<ProbVector> {
    chain
        .iter()
        .try_fold(v.clone(), |acc, t| apply_t_transform(&acc, t))
}

/// Residual level below which two coordinates count as equal during the
/// T-transform construction.
const EPS_STEP: f64 = 1e-14;

/// Returns `T_1, …, T_r` (`r ≤ d − 1`) such that applying them in order to
/// `y↓` yields `x↓`, where `d` is the common padded length.
///
/// Works on positional copies `x' = x↓`, `y' = y↓`. Each step picks the first
/// index `j` where `y'` exceeds `x'` and the first later index `k` where it
/// falls short, moves `min(excess, deficit)` from `j` to `k`, and thereby
/// equalizes at least one coordinate. Prefix sums of `y' − x'` stay
/// nonnegative throughout, so `y'` is never re-sorted.
pub fn decompose_t_transforms(x: &ProbVector, y: &ProbVector) -> Result<Vec<TTransform>> {
    if !majorizes(x, y) {
        return Err(Error::NotMajorized);
    }
    let (xs, mut ys) = padded_pair(x, y);
    let d = xs.len();
    let mut chain = Vec::new();
    while chain.len() < d.saturating_sub(1) {
        let Some(j) = (0..d).find(|&i| ys[i] - xs[i] > EPS_STEP) else {
            break;
        };
        let k = match (j + 1..d).find(|&i| xs[i] - ys[i] > EPS_STEP) {
            Some(k) => k,
            None => {
                // rounding-level leftovers: use the largest remaining deficit
                let Some(k) = (j + 1..d)
                    .filter(|&i| xs[i] > ys[i])
                    .max_by(|&a, &b| (xs[a] - ys[a]).total_cmp(&(xs[b] - ys[b])))
                else {
                    break;
                };
                k
            }
        };
        let shift = (ys[j] - xs[j]).min(xs[k] - ys[k]);
        let gap = ys[j] - ys[k];
        let t = (1.0 - shift / gap).clamp(0.0, 1.0);
        let step = TTransform { i: j, j: k, t };
        step.apply_in_place(&mut ys);
        chain.push(step);
    }
    Ok(chain)
}

pub fn crossing_statistic(p: &ProbVector, q: &ProbVector) -> CrossingReport {
    let (ps, qs) = padded_pair(p, q);
    let deltas: Vec<f64> = ps.iter().zip(&qs).map(|(a, b)| a - b).collect();
    let partial_sums: Vec<f64> = deltas
        .iter()
        .scan(0.0, |acc, d| {
            *acc += d;
            Some(*acc)
        })
        .collect();
    let first_positive_k = partial_sums.iter().position(|&s| s > EPS_MAJ);
    let first_negative_k = partial_sums.iter().position(|&s| s < -EPS_MAJ);
    CrossingReport {
        crosses: first_positive_k.is_some() && first_negative_k.is_some(),
        deltas,
        partial_sums,
        first_positive_k,
        first_negative_k,
    }
}
