//! Extraction of the mixed-unitary witness `ρψ = Σ_m p_m U_m† ρφ U_m` from a
//! protocol that maps `ψ` to `φ` on every branch.

use serde::{Deserialize, Serialize};

use super::{Protocol, Step};
use crate::error::{Error, Result};
use crate::linalg::{self, serde_matrix, CMatrix};
use crate::simulator::enumerate_tracked;
use crate::specvec::{majorizes, ProbVector};
use crate::states::{fidelity, reduced_state_alice, Party, PureState};

/// Minimum branch fidelity accepted before extracting a certificate.
pub const CERTIFICATE_FIDELITY: f64 = 1.0 - 1e-8;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct NecessityCertificate {
    pub probabilities: ProbVector,
    #[serde(with = "serde_matrix::list")]
    pub unitaries: Vec<CMatrix>,
    /// `‖ρψ − Σ_m p_m U_m† ρφ U_m‖_F`.
    pub reconstruction_residual: f64,
    /// Spectrum of `Σ_m p_m U_m† ρφ U_m`, descending.
    pub mixture_spectrum: ProbVector,
    /// Spectrum of `ρφ`, descending.
    pub target_spectrum: ProbVector,
}

impl NecessityCertificate {
    /// A mixture of unitary conjugates of `ρφ` has a spectrum majorized by
    /// that of `ρφ`; this re-checks it on the numbers.
    pub fn implies_majorization(&self) -> bool {
        majorizes(&self.mixture_spectrum, &self.target_spectrum)
    }
}

fn spectrum_of(m: &CMatrix) -> Result<ProbVector> {
    let (mut values, _) = linalg::hermitian_eigen(m)?;
    values.reverse();
    let total: f64 = values.iter().sum();
    ProbVector::new(values.into_iter().map(|v| v.max(0.0) / total).collect())
}

/// For each branch, with `M_m` the product of Alice's operators along it,
/// `p_m = tr(M_m ρψ M_m†)` and `U_m` is the unitary polar factor of
/// `M_m √ρψ = √(M_m ρψ M_m†) U_m`.
///
/// Bob may only act unitarily; protocols with Bob-side measurements are
/// rejected.
pub fn necessity_certificate(
    p: &Protocol,
    psi: &PureState,
    phi: &PureState,
) -> Result<NecessityCertificate> {
    if p.steps.iter().any(|s| {
        matches!(
            s,
            Step::Measurement {
                party: Party::Bob,
                ..
            }
        )
    }) {
        return Err(Error::InvalidProtocol(
            "certificate extraction needs Bob's operations to be unitary".into(),
        ));
    }
    if (phi.dim_a(), phi.dim_b()) != (p.dim_a, p.dim_b) {
        return Err(Error::DimensionMismatch(
            "target does not match the protocol".into(),
        ));
    }
    let branches = enumerate_tracked(p, psi)?;
    for (index, b) in branches.iter().enumerate() {
        let out = PureState::normalized(b.amplitudes.clone())?;
        let f = fidelity(&out, phi)?;
        if f < CERTIFICATE_FIDELITY {
            return Err(Error::BranchNotPure {
                branch: index,
                fidelity: f,
            });
        }
    }

    let rho_psi = reduced_state_alice(psi)?.entries().clone();
    let rho_phi = reduced_state_alice(phi)?.entries().clone();
    let sqrt_psi = linalg::sqrt_psd(&rho_psi)?;

    let mut probabilities = Vec::with_capacity(branches.len());
    let mut unitaries = Vec::with_capacity(branches.len());
    for b in &branches {
        let m = &b.alice_operator;
        probabilities.push((m * &rho_psi * m.adjoint()).trace().re);
        unitaries.push(linalg::polar_unitary(&(m * &sqrt_psi))?);
    }

    let mut mixture = CMatrix::zeros(p.dim_a, p.dim_a);
    for (pm, u) in probabilities.iter().zip(&unitaries) {
        mixture += (u.adjoint() * &rho_phi * u).scale(*pm);
    }
    let reconstruction_residual = linalg::frobenius(&(&rho_psi - &mixture));

    Ok(NecessityCertificate {
        probabilities: ProbVector::new(probabilities)?,
        unitaries,
        reconstruction_residual,
        mixture_spectrum: spectrum_of(&mixture)?,
        target_spectrum: spectrum_of(&rho_phi)?,
    })
}
