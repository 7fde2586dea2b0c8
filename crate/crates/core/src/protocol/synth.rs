//! Explicit protocol construction for `ψ → φ` whenever `λψ ≺ λφ`.
//!
//! The T-transform chain taking `λφ↓` to `λψ↓` is walked backwards. Each
//! link touches two Schmidt terms `(i, j)`; on that block the state is
//! `cos ζ (√α₊|00⟩ + √α₋|11⟩) + sin ζ |ψ⊥⟩` and one two-outcome measurement
//! by Alice moves the block to `(β₊, β₋)` while `|ψ⊥⟩` is left alone:
//!
//! 1. local unitaries take the block to `(|00⟩ + |1⟩(cos γ|0⟩ + sin γ|1⟩))/√2`,
//!    with `α₊ = (1 + cos γ)/2`;
//! 2. Alice measures `M̃₁ = diag(cos δ, sin δ) ⊕ I/√2`,
//!    `M̃₂ = diag(sin δ, cos δ) ⊕ I/√2`, where `sin 2δ = 2√(β₊β₋)/sin γ`;
//! 3. she sends the outcome; outcome 2 is first mapped onto the outcome-1
//!    state, then a shared correction returns to the diagonal form.

use std::collections::BTreeMap;
use std::f64::consts::FRAC_1_SQRT_2;

use serde::{Deserialize, Serialize};

use super::{correction_unitaries, Protocol, Step};
use crate::error::{Error, Result};
use crate::linalg::{self, c, real_diag, CMatrix};
use crate::specvec::{apply_t_transform, decompose_t_transforms, majorizes, ProbVector};
use crate::states::{self, from_schmidt_coefficients, Party, PureState};

/// Blocks whose smaller normalized weight falls below this are skipped.
const DEGENERATE_BLOCK: f64 = 1e-15;
/// Blocks carrying less total weight than this are skipped.
const NEGLIGIBLE_BLOCK: f64 = 1e-14;

/// Angles and weights of one block step.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SynthesisStepParams {
    /// Global Schmidt positions `(i, j)`; the target puts the larger weight on `i`.
    pub block: (usize, usize),
    pub alpha_plus: f64,
    pub alpha_minus: f64,
    pub beta_plus: f64,
    pub beta_minus: f64,
    pub zeta: f64,
    pub gamma: f64,
    pub delta: f64,
}

impl SynthesisStepParams {
    /// `λ₊(δ) = (1 + √(1 − sin²2δ sin²γ))/2`, the larger block weight after
    /// the measurement.
    pub fn lambda_plus(&self) -> f64 {
        let s = (2.0 * self.delta).sin() * self.gamma.sin();
        (1.0 + (1.0 - s * s).max(0.0).sqrt()) / 2.0
    }
}

fn block_state(entries: [f64; 4]) -> Result<PureState> {
    PureState::normalized(CMatrix::from_row_slice(2, 2, &entries.map(|x| c(x, 0.0))))
}

struct BlockStep {
    params: SynthesisStepParams,
    /// Position holding the larger source weight, and the other one.
    p: usize,
    q: usize,
    prepared: CMatrix,
}

fn plan_block(source: &[f64], target: &[f64], i: usize, j: usize) -> Option<BlockStep> {
    let s = source[i] + source[j];
    if s < NEGLIGIBLE_BLOCK {
        return None;
    }
    let (p, q) = if source[i] >= source[j] {
        (i, j)
    } else {
        (j, i)
    };
    let alpha_plus = source[p] / s;
    let alpha_minus = source[q] / s;
    if alpha_minus < DEGENERATE_BLOCK {
        // α₊ = 1 forces β₊ = 1: nothing to do
        return None;
    }
    let beta_plus = target[i].max(target[j]) / s;
    let beta_minus = target[i].min(target[j]) / s;
    let gamma = (2.0 * alpha_plus - 1.0).clamp(-1.0, 1.0).acos();
    let ratio = 2.0 * (beta_plus * beta_minus).max(0.0).sqrt() / gamma.sin();
    let delta = 0.5 * ratio.clamp(0.0, 1.0).asin();
    let zeta = s.min(1.0).sqrt().acos();
    let prepared = CMatrix::from_row_slice(
        2,
        2,
        &[
            c(FRAC_1_SQRT_2, 0.0),
            c(0.0, 0.0),
            c(FRAC_1_SQRT_2 * gamma.cos(), 0.0),
            c(FRAC_1_SQRT_2 * gamma.sin(), 0.0),
        ],
    );
    Some(BlockStep {
        params: SynthesisStepParams {
            block: (i, j),
            alpha_plus,
            alpha_minus,
            beta_plus,
            beta_minus,
            zeta,
            gamma,
            delta,
        },
        p,
        q,
        prepared,
    })
}

fn push_local(protocol: &mut Protocol, ua: CMatrix, ub: CMatrix) {
    protocol.steps.push(Step::LocalUnitary {
        party: Party::Alice,
        unitary: ua,
    });
    protocol.steps.push(Step::LocalUnitary {
        party: Party::Bob,
        unitary: ub,
    });
}

fn emit_block(
    protocol: &mut Protocol,
    step: &BlockStep,
    target: &[f64],
    label: String,
) -> Result<()> {
    let (da, db) = (protocol.dim_a, protocol.dim_b);
    let (p, q) = (step.p, step.q);
    let embed = |m: &CMatrix, dim: usize| linalg::embed_block(m, dim, p, q, 1.0);
    let params = &step.params;

    // block-normalized diagonal form → the |ψ''⟩ form
    let source_block = block_state([
        params.alpha_plus.sqrt(),
        0.0,
        0.0,
        params.alpha_minus.sqrt(),
    ])?;
    let prepared = PureState::normalized(step.prepared.clone())?;
    let (pa, pb) = correction_unitaries(&source_block, &prepared)?;
    push_local(protocol, embed(&pa, da), embed(&pb, db));

    let (cd, sd) = (params.delta.cos(), params.delta.sin());
    let m1 = real_diag(&[cd, sd]);
    let m2 = real_diag(&[sd, cd]);
    protocol.steps.push(Step::Measurement {
        party: Party::Alice,
        outcome_label: label.clone(),
        operators: vec![
            linalg::embed_block(&m1, da, p, q, FRAC_1_SQRT_2),
            linalg::embed_block(&m2, da, p, q, FRAC_1_SQRT_2),
        ],
    });
    protocol.steps.push(Step::ClassicalMessage {
        from_party: Party::Alice,
        to_party: Party::Bob,
        outcome_label: label.clone(),
    });

    let post1 = PureState::normalized(&m1 * &step.prepared)?;
    let post2 = PureState::normalized(&m2 * &step.prepared)?;
    let (ua21, ub21) = correction_unitaries(&post2, &post1)?;
    for (party, u, dim) in [(Party::Alice, ua21, da), (Party::Bob, ub21, db)] {
        let table = BTreeMap::from([(0, linalg::identity(dim)), (1, embed(&u, dim))]);
        protocol.steps.push(Step::ConditionalUnitary {
            party,
            outcome_label: label.clone(),
            table,
        });
    }

    let s = target[p] + target[q];
    let target_block = block_state([(target[p] / s).sqrt(), 0.0, 0.0, (target[q] / s).sqrt()])?;
    let (ca, cb) = correction_unitaries(&post1, &target_block)?;
    push_local(protocol, embed(&ca, da), embed(&cb, db));
    Ok(())
}

/// Builds an LOCC protocol taking `psi` to `phi`.
///
/// Both states must live on the same `dim_a × dim_b` system. Fails with
/// [`Error::NotMajorized`] when the Schmidt spectrum of `psi` is not
/// majorized by that of `phi`.
pub fn synthesize(psi: &PureState, phi: &PureState) -> Result<Protocol> {
    let (da, db) = (psi.dim_a(), psi.dim_b());
    if (phi.dim_a(), phi.dim_b()) != (da, db) {
        return Err(Error::DimensionMismatch(format!(
            "source is {da}x{db}, target is {}x{}",
            phi.dim_a(),
            phi.dim_b()
        )));
    }
    let lp = states::schmidt_spectrum(psi)?;
    let lf = states::schmidt_spectrum(phi)?;
    if !majorizes(&lp, &lf) {
        return Err(Error::NotMajorized);
    }
    let chain = decompose_t_transforms(&lp, &lf)?;

    // positional coefficient vectors along the chain, starting from λφ↓
    let mut vectors = vec![ProbVector::new(lf.sorted_desc())?];
    for t in &chain {
        let next = apply_t_transform(vectors.last().expect("nonempty"), t)?;
        vectors.push(next);
    }

    let mut protocol = Protocol::new(da, db);
    let start = from_schmidt_coefficients(&ProbVector::new(lp.sorted_desc())?, da, db)?;
    let (ua, ub) = correction_unitaries(psi, &start)?;
    push_local(&mut protocol, ua, ub);

    for (k, t) in chain.iter().enumerate().rev() {
        let source = vectors[k + 1].entries();
        let target = vectors[k].entries();
        let Some(step) = plan_block(source, target, t.i, t.j) else {
            continue;
        };
        let label = format!("t{}", protocol.synthesis.len());
        emit_block(&mut protocol, &step, target, label)?;
        protocol.synthesis.push(step.params);
    }

    let end = from_schmidt_coefficients(&vectors[0], da, db)?;
    let (ua, ub) = correction_unitaries(&end, phi)?;
    push_local(&mut protocol, ua, ub);
    Ok(protocol)
}
