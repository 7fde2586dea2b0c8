//! Bipartite pure states, reduced density operators and the Schmidt
//! decomposition.
//!
//! A state `|ψ⟩ = Σ_{ij} A_ij |i⟩_A |j⟩_B` is stored as its amplitude matrix
//! `A` (rows index Alice's basis, columns Bob's). Local operators act as
//! `A ↦ U A Vᵀ`, Alice's reduced state is `A A†` and the Schmidt
//! decomposition is the SVD of `A`.

use std::cmp::Ordering;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, c, serde_matrix, CMatrix, CVector};
use crate::specvec::{ProbVector, EPS_NUM};

pub const NORM_TOL: f64 = 1e-10;
const HERMITIAN_TOL: f64 = 1e-10;
/// Per-entry slack when comparing Schmidt spectra for local equivalence.
pub const EQUIVALENCE_TOL: f64 = 1e-8;
/// Tolerance on coefficients when grouping degenerate Schmidt terms.
const DEGENERACY_TOL: f64 = 1e-12;

/// Which side of the bipartition an operator acts on.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Party {
    Alice,
    Bob,
}

impl Party {
    pub fn other(self) -> Self {
        match self {
            Party::Alice => Party::Bob,
            Party::Bob => Party::Alice,
        }
    }
}

impl std::fmt::Display for Party {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        f.write_str(match self {
            Party::Alice => "alice",
            Party::Bob => "bob",
        })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(try_from = "PureStateRepr", into = "PureStateRepr")]
pub struct PureState {
    dim_a: usize,
    dim_b: usize,
    amplitudes: CMatrix,
}

#[derive(Serialize, Deserialize)]
struct PureStateRepr {
    dim_a: usize,
    dim_b: usize,
    amplitudes: serde_matrix::Rows,
}

impl TryFrom<PureStateRepr> for PureState {
    type Error = Error;

    fn try_from(r: PureStateRepr) -> Result<Self> {
        let amplitudes = serde_matrix::from_rows(&r.amplitudes).map_err(Error::InvalidState)?;
        if amplitudes.nrows() != r.dim_a || amplitudes.ncols() != r.dim_b {
            return Err(Error::InvalidState(format!(
                "declared {}x{} but amplitudes are {}x{}",
                r.dim_a,
                r.dim_b,
                amplitudes.nrows(),
                amplitudes.ncols()
            )));
        }
        PureState::new(amplitudes)
    }
}

impl From<PureState> for PureStateRepr {
    fn from(s: PureState) -> Self {
        PureStateRepr {
            dim_a: s.dim_a,
            dim_b: s.dim_b,
            amplitudes: serde_matrix::to_rows(&s.amplitudes),
        }
    }
}

impl PureState {
    /// Wraps an amplitude matrix, checking that it has unit Frobenius norm.
    pub fn new(amplitudes: CMatrix) -> Result<Self> {
        let (dim_a, dim_b) = amplitudes.shape();
        if dim_a == 0 || dim_b == 0 {
            return Err(Error::InvalidState("empty amplitude matrix".into()));
        }
        let norm = linalg::frobenius(&amplitudes);
        if !norm.is_finite() || (norm - 1.0).abs() > NORM_TOL {
            return Err(Error::InvalidState(format!(
                "amplitude norm is {norm}, not 1"
            )));
        }
        Ok(Self {
            dim_a,
            dim_b,
            amplitudes,
        })
    }

    /// Rescales an arbitrary nonzero amplitude matrix to unit norm.
    pub fn normalized(amplitudes: CMatrix) -> Result<Self> {
        let norm = linalg::frobenius(&amplitudes);
        if !(norm.is_finite() && norm > 0.0) {
            return Err(Error::InvalidState(
                "cannot normalize a zero or non-finite vector".into(),
            ));
        }
        Self::new(amplitudes.unscale(norm))
    }

    /// Computational basis state `|i⟩|j⟩`.
    pub fn basis(dim_a: usize, dim_b: usize, i: usize, j: usize) -> Result<Self> {
        if i >= dim_a || j >= dim_b {
            return Err(Error::IndexOutOfRange {
                index: i.max(j),
                dim: dim_a.min(dim_b),
            });
        }
        let mut a = CMatrix::zeros(dim_a, dim_b);
        a[(i, j)] = c(1.0, 0.0);
        Self::new(a)
    }

    /// `(|00⟩ + |11⟩)/√2`.
    pub fn bell() -> Self {
        let h = std::f64::consts::FRAC_1_SQRT_2;
        Self::new(linalg::real_diag(&[h, h])).expect("normalized")
    }

    pub fn dim_a(&self) -> usize {
        self.dim_a
    }

    pub fn dim_b(&self) -> usize {
        self.dim_b
    }

    pub fn amplitudes(&self) -> &CMatrix {
        &self.amplitudes
    }

    pub fn party_dim(&self, party: Party) -> usize {
        match party {
            Party::Alice => self.dim_a,
            Party::Bob => self.dim_b,
        }
    }

    /// Applies `U_a ⊗ U_b`.
    pub fn apply_local(&self, ua: &CMatrix, ub: &CMatrix) -> Result<Self> {
        if ua.shape() != (self.dim_a, self.dim_a) || ub.shape() != (self.dim_b, self.dim_b) {
            return Err(Error::DimensionMismatch(
                "local operator does not match state".into(),
            ));
        }
        Self::new(ua * &self.amplitudes * ub.transpose())
    }
}

/// Amplitudes after applying `op` on one party, without renormalizing.
pub(crate) fn apply_party_raw(amplitudes: &CMatrix, party: Party, op: &CMatrix) -> CMatrix {
    match party {
        Party::Alice => op * amplitudes,
        Party::Bob => amplitudes * op.transpose(),
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct DensityMatrix {
    entries: CMatrix,
}

impl DensityMatrix {
    pub fn new(entries: CMatrix) -> Result<Self> {
        if !entries.is_square() || entries.nrows() == 0 {
            return Err(Error::InvalidState(
                "density matrix must be square and nonempty".into(),
            ));
        }
        let asym = linalg::frobenius(&(&entries - entries.adjoint()));
        if asym > HERMITIAN_TOL {
            return Err(Error::InvalidState(format!(
                "not Hermitian (residual {asym})"
            )));
        }
        let trace = entries.trace();
        if (trace.re - 1.0).abs() > NORM_TOL || trace.im.abs() > NORM_TOL {
            return Err(Error::InvalidState(format!("trace is {trace}, not 1")));
        }
        let rho = Self { entries };
        if let Some(min) = rho.eigenvalues()?.last() {
            if *min < -NORM_TOL {
                return Err(Error::InvalidState(format!("negative eigenvalue {min}")));
            }
        }
        Ok(rho)
    }

    pub fn dim(&self) -> usize {
        self.entries.nrows()
    }

    pub fn entries(&self) -> &CMatrix {
        &self.entries
    }

    /// Eigenvalues in descending order.
    pub fn eigenvalues(&self) -> Result<Vec<f64>> {
        let (mut values, _) = linalg::hermitian_eigen(&self.entries)?;
        values.reverse();
        Ok(values)
    }

    /// `tr(ρ²)`.
    pub fn purity(&self) -> f64 {
        (&self.entries * &self.entries).trace().re
    }
}

/// `Σ_i √λ_i |a_i⟩|b_i⟩` with `λ` descending.
#[derive(Debug, Clone)]
pub struct SchmidtForm {
    pub coefficients: ProbVector,
    pub basis_a: Vec<CVector>,
    pub basis_b: Vec<CVector>,
}

impl SchmidtForm {
    /// Number of coefficients above `1e-12`.
    pub fn rank(&self) -> usize {
        self.coefficients.support_size()
    }

    pub fn reconstruct(&self) -> Result<PureState> {
        let dim_a = self.basis_a.first().map_or(0, |v| v.len());
        let dim_b = self.basis_b.first().map_or(0, |v| v.len());
        let mut amps = CMatrix::zeros(dim_a, dim_b);
        for ((lambda, a), b) in self
            .coefficients
            .entries()
            .iter()
            .zip(&self.basis_a)
            .zip(&self.basis_b)
        {
            amps += (a * b.transpose()).scale(lambda.sqrt());
        }
        PureState::normalized(amps)
    }
}

fn lexicographic_desc(a: &CVector, b: &CVector) -> Ordering {
    for (x, y) in a.iter().zip(b.iter()) {
        for (p, q) in [(x.re, y.re), (x.im, y.im)] {
            if (p - q).abs() > 1e-9 {
                return q.total_cmp(&p);
            }
        }
    }
    Ordering::Equal
}

pub fn schmidt_decompose(s: &PureState) -> Result<SchmidtForm> {
    let dec = linalg::svd(&s.amplitudes)?;
    let r = dec.singular_values.len();
    let mut terms: Vec<(f64, CVector, CVector)> = (0..r)
        .map(|i| {
            let mut a = dec.u.column(i).into_owned();
            let mut b = dec.v.column(i).map(|z| z.conj());
            // first significant component of the Alice vector real and positive
            if let Some(lead) = a.iter().find(|z| z.norm() > 1e-10).copied() {
                let phase = lead.unscale(lead.norm());
                a *= phase.conj();
                b *= phase;
            }
            (dec.singular_values[i].powi(2), a, b)
        })
        .collect();

    // descending coefficients; degenerate runs ordered by the Alice vector
    terms.sort_by(|x, y| y.0.total_cmp(&x.0));
    let mut start = 0;
    while start < terms.len() {
        let mut end = start + 1;
        while end < terms.len() && (terms[start].0 - terms[end].0).abs() <= DEGENERACY_TOL {
            end += 1;
        }
        terms[start..end].sort_by(|x, y| lexicographic_desc(&x.1, &y.1));
        start = end;
    }

    let total: f64 = terms.iter().map(|t| t.0).sum();
    let coefficients = ProbVector::new(terms.iter().map(|t| t.0 / total).collect())?;
    let (basis_a, basis_b) = terms.into_iter().map(|(_, a, b)| (a, b)).unzip();
    Ok(SchmidtForm {
        coefficients,
        basis_a,
        basis_b,
    })
}

pub fn reduced_state_alice(s: &PureState) -> Result<DensityMatrix> {
    DensityMatrix::new(&s.amplitudes * s.amplitudes.adjoint())
}

pub fn reduced_state_bob(s: &PureState) -> Result<DensityMatrix> {
    let at = s.amplitudes.transpose();
    DensityMatrix::new(&at * at.adjoint())
}

/// Descending Schmidt coefficients, of length `min(dim_a, dim_b)`.
pub fn schmidt_spectrum(s: &PureState) -> Result<ProbVector> {
    Ok(schmidt_decompose(s)?.coefficients)
}

/// `Σ_i √p_i |i⟩|i⟩`, in the order the entries are given.
pub fn from_schmidt_coefficients(p: &ProbVector, dim_a: usize, dim_b: usize) -> Result<PureState> {
    if p.len() > dim_a.min(dim_b) {
        return Err(Error::DimensionMismatch(format!(
            "{} coefficients do not fit a {dim_a}x{dim_b} system",
            p.len()
        )));
    }
    let mut amps = CMatrix::zeros(dim_a, dim_b);
    for (i, &x) in p.entries().iter().enumerate() {
        amps[(i, i)] = c(x.sqrt(), 0.0);
    }
    PureState::normalized(amps)
}

pub fn locally_equivalent(x: &PureState, y: &PureState) -> bool {
    match (schmidt_spectrum(x), schmidt_spectrum(y)) {
        (Ok(px), Ok(py)) => {
            let len = px.len().max(py.len());
            px.sorted_padded(len)
                .iter()
                .zip(py.sorted_padded(len))
                .all(|(a, b)| (a - b).abs() <= EQUIVALENCE_TOL)
        }
        _ => false,
    }
}

/// `|⟨x|y⟩|²`.
pub fn fidelity(x: &PureState, y: &PureState) -> Result<f64> {
    if x.amplitudes.shape() != y.amplitudes.shape() {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            x.dim_a, x.dim_b, y.dim_a, y.dim_b
        )));
    }
    let overlap = x
        .amplitudes
        .iter()
        .zip(y.amplitudes.iter())
        .map(|(a, b)| a.conj() * b)
        .sum::<linalg::C64>();
    Ok(overlap.norm_sqr().min(1.0))
}

pub(crate) fn schmidt_rank_of(s: &PureState) -> Result<usize> {
    Ok(schmidt_spectrum(s)?
        .entries()
        .iter()
        .filter(|&&x| x > EPS_NUM)
        .count())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn state(rows: &[&[f64]]) -> PureState {
        let m = CMatrix::from_fn(rows.len(), rows[0].len(), |i, j| c(rows[i][j], 0.0));
        PureState::normalized(m).unwrap()
    }

    fn skewed_psi() -> PureState {
        let p = ProbVector::new(vec![0.5, 0.4, 0.1]).unwrap();
        from_schmidt_coefficients(&p, 3, 3).unwrap()
    }

    fn skewed_phi() -> PureState {
        let p = ProbVector::new(vec![0.6, 0.2, 0.2]).unwrap();
        from_schmidt_coefficients(&p, 3, 3).unwrap()
    }

    fn assert_close(a: &[f64], b: &[f64], tol: f64) {
        assert_eq!(a.len(), b.len());
        for (x, y) in a.iter().zip(b) {
            assert!((x - y).abs() < tol, "{a:?} vs {b:?}");
        }
    }

    #[test]
    fn rejects_unnormalized() {
        let m = linalg::real_diag(&[1.0, 1.0]);
        assert!(matches!(PureState::new(m), Err(Error::InvalidState(_))));
    }

    #[test]
    fn schmidt_examples() {
        let bell = schmidt_decompose(&PureState::bell()).unwrap();
        assert_close(bell.coefficients.entries(), &[0.5, 0.5], 1e-14);
        assert_eq!(bell.rank(), 2);

        let product = schmidt_decompose(&PureState::basis(2, 2, 0, 1).unwrap()).unwrap();
        assert_close(product.coefficients.entries(), &[1.0, 0.0], 1e-14);
        assert_eq!(product.rank(), 1);

        let psi = schmidt_decompose(&skewed_psi()).unwrap();
        assert_close(psi.coefficients.entries(), &[0.5, 0.4, 0.1], 1e-14);
    }

    #[test]
    fn schmidt_phase_convention_and_reconstruction() {
        let s = state(&[&[0.3, -0.2, 0.1], &[0.5, 0.4, -0.6]]);
        let form = schmidt_decompose(&s).unwrap();
        for a in &form.basis_a {
            let lead = a.iter().find(|z| z.norm() > 1e-10).unwrap();
            assert!(lead.im.abs() < 1e-14 && lead.re > 0.0);
        }
        let rebuilt = form.reconstruct().unwrap();
        assert!(fidelity(&rebuilt, &s).unwrap() > 1.0 - 1e-12);
    }

    #[test]
    fn degenerate_terms_follow_alice_order() {
        let form = schmidt_decompose(&PureState::bell()).unwrap();
        assert!((form.basis_a[0][0].re - 1.0).abs() < 1e-12);
        assert!((form.basis_a[1][1].re - 1.0).abs() < 1e-12);
    }

    #[test]
    fn reduced_state_examples() {
        let rho = reduced_state_alice(&PureState::bell()).unwrap();
        assert!(linalg::frobenius(&(rho.entries() - linalg::real_diag(&[0.5, 0.5]))) < 1e-15);
        let rho = reduced_state_alice(&PureState::basis(2, 2, 0, 0).unwrap()).unwrap();
        assert!(linalg::frobenius(&(rho.entries() - linalg::real_diag(&[1.0, 0.0]))) < 1e-15);
        let rho = reduced_state_alice(&skewed_phi()).unwrap();
        assert!(linalg::frobenius(&(rho.entries() - linalg::real_diag(&[0.6, 0.2, 0.2]))) < 1e-14);
        assert_close(&rho.eigenvalues().unwrap(), &[0.6, 0.2, 0.2], 1e-14);
    }

    #[test]
    fn spectrum_examples() {
        assert_close(
            schmidt_spectrum(&PureState::bell()).unwrap().entries(),
            &[0.5, 0.5],
            1e-14,
        );
        assert_close(
            schmidt_spectrum(&skewed_psi()).unwrap().entries(),
            &[0.5, 0.4, 0.1],
            1e-14,
        );
        let s = state(&[&[0.1, 0.7], &[-0.3, 0.2], &[0.4, 0.4]]);
        let total: f64 = schmidt_spectrum(&s).unwrap().entries().iter().sum();
        assert!((total - 1.0).abs() < 1e-10);
    }

    #[test]
    fn canonical_state_examples() {
        let one = from_schmidt_coefficients(&ProbVector::new(vec![1.0]).unwrap(), 2, 2).unwrap();
        assert_eq!(one, PureState::basis(2, 2, 0, 0).unwrap());
        let bell =
            from_schmidt_coefficients(&ProbVector::new(vec![0.5, 0.5]).unwrap(), 2, 2).unwrap();
        assert!(fidelity(&bell, &PureState::bell()).unwrap() > 1.0 - 1e-15);
        let phi = skewed_phi();
        let expected = linalg::real_diag(&[0.6f64.sqrt(), 0.2f64.sqrt(), 0.2f64.sqrt()]);
        assert!(linalg::frobenius(&(phi.amplitudes() - expected)) < 1e-15);
        assert!(matches!(
            from_schmidt_coefficients(&ProbVector::new(vec![0.5, 0.25, 0.25]).unwrap(), 2, 3),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn equivalence_examples() {
        let flipped = state(&[&[0.0, 1.0], &[1.0, 0.0]]);
        assert!(locally_equivalent(&PureState::bell(), &flipped));
        assert!(!locally_equivalent(
            &PureState::basis(2, 2, 0, 0).unwrap(),
            &PureState::bell()
        ));
        assert!(locally_equivalent(&skewed_psi(), &skewed_psi()));
        // different local dimensions, same spectrum
        let big =
            from_schmidt_coefficients(&ProbVector::new(vec![0.5, 0.5]).unwrap(), 3, 4).unwrap();
        assert!(locally_equivalent(&big, &PureState::bell()));
    }

    #[test]
    fn fidelity_examples() {
        let bell = PureState::bell();
        assert!((fidelity(&bell, &bell).unwrap() - 1.0).abs() < 1e-15);
        let b00 = PureState::basis(2, 2, 0, 0).unwrap();
        let b01 = PureState::basis(2, 2, 0, 1).unwrap();
        assert_eq!(fidelity(&b00, &b01).unwrap(), 0.0);
        assert!((fidelity(&bell, &b00).unwrap() - 0.5).abs() < 1e-15);
        assert!(matches!(
            fidelity(&bell, &skewed_psi()),
            Err(Error::DimensionMismatch(_))
        ));
    }

    #[test]
    fn json_round_trip_and_validation() {
        let s = state(&[&[0.3, -0.2], &[0.5, 0.4]]);
        let text = serde_json::to_string(&s).unwrap();
        let back: PureState = serde_json::from_str(&text).unwrap();
        assert_eq!(back, s);
        let bad = r#"{"dim_a":1,"dim_b":2,"amplitudes":[[[1.0,0.0],[1.0,0.0]]]}"#;
        assert!(serde_json::from_str::<PureState>(bad).is_err());
        let shape = r#"{"dim_a":2,"dim_b":2,"amplitudes":[[[1.0,0.0],[0.0,0.0]]]}"#;
        assert!(serde_json::from_str::<PureState>(shape).is_err());
    }
}
