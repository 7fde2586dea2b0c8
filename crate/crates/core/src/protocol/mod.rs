//! LOCC protocols: data model, validation, the transformability decision
//! and explicit protocol synthesis.
//!
//! A [`Protocol`] is a flat list of steps acting on a fixed `dim_a × dim_b`
//! system. Measurements write their outcome into a named classical register
//! (`outcome_label`); messages copy a register from one party to the other;
//! conditional unitaries read a register the acting party already holds.

mod certificate;
mod synth;

use std::collections::{BTreeMap, HashMap, HashSet};

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, serde_matrix, CMatrix};
use crate::specvec::majorizes;
use crate::states::{self, Party, PureState};

pub use certificate::{necessity_certificate, NecessityCertificate};
pub use synth::{synthesize, SynthesisStepParams};

/// Residual bound for completeness and unitarity checks.
pub const VALIDATION_TOL: f64 = 1e-10;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "type", rename_all = "snake_case")]
pub enum Step {
    LocalUnitary {
        party: Party,
        #[serde(with = "serde_matrix")]
        unitary: CMatrix,
    },
    Measurement {
        party: Party,
        outcome_label: String,
        #[serde(with = "serde_matrix::list")]
        operators: Vec<CMatrix>,
    },
    #[serde(rename = "message")]
    ClassicalMessage {
        from_party: Party,
        to_party: Party,
        outcome_label: String,
    },
    ConditionalUnitary {
        party: Party,
        outcome_label: String,
        #[serde(with = "serde_matrix::table")]
        table: BTreeMap<usize, CMatrix>,
    },
}

impl Step {
    pub fn kind(&self) -> &'static str {
        match self {
            Step::LocalUnitary { .. } => "local_unitary",
            Step::Measurement { .. } => "measurement",
            Step::ClassicalMessage { .. } => "message",
            Step::ConditionalUnitary { .. } => "conditional_unitary",
        }
    }

    /// The party whose system the step touches (the sender for messages).
    pub fn party(&self) -> Party {
        match self {
            Step::LocalUnitary { party, .. }
            | Step::Measurement { party, .. }
            | Step::ConditionalUnitary { party, .. } => *party,
            Step::ClassicalMessage { from_party, .. } => *from_party,
        }
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Protocol {
    pub dim_a: usize,
    pub dim_b: usize,
    pub steps: Vec<Step>,
    /// Parameters of each two-outcome block step, when the protocol came
    /// from [`synthesize`].
    #[serde(default, skip_serializing_if = "Vec::is_empty")]
    pub synthesis: Vec<SynthesisStepParams>,
}

impl Protocol {
    pub fn new(dim_a: usize, dim_b: usize) -> Self {
        Self {
            dim_a,
            dim_b,
            steps: Vec::new(),
            synthesis: Vec::new(),
        }
    }

    pub fn party_dim(&self, party: Party) -> usize {
        match party {
            Party::Alice => self.dim_a,
            Party::Bob => self.dim_b,
        }
    }

    pub fn measurement_count(&self) -> usize {
        self.steps
            .iter()
            .filter(|s| matches!(s, Step::Measurement { .. }))
            .count()
    }

    /// Local unitaries only, mapping nothing: `I ⊗ I`.
    pub fn identity(dim_a: usize, dim_b: usize) -> Self {
        let mut p = Self::new(dim_a, dim_b);
        p.steps.push(Step::LocalUnitary {
            party: Party::Alice,
            unitary: linalg::identity(dim_a),
        });
        p.steps.push(Step::LocalUnitary {
            party: Party::Bob,
            unitary: linalg::identity(dim_b),
        });
        p
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct StepCheck {
    pub index: usize,
    pub kind: String,
    pub completeness_residual: Option<f64>,
    pub unitarity_residuals: Vec<f64>,
    pub violations: Vec<String>,
}

impl StepCheck {
    fn passes(&self) -> bool {
        let ok = |r: f64| r.is_finite() && r <= VALIDATION_TOL;
        self.violations.is_empty()
            && self.completeness_residual.is_none_or(ok)
            && self.unitarity_residuals.iter().all(|&r| ok(r))
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ValidationReport {
    pub valid: bool,
    pub steps: Vec<StepCheck>,
    pub violations: Vec<String>,
}

impl ValidationReport {
    /// One-line description of the first problem found, if any.
    pub fn first_failure(&self) -> Option<String> {
        if let Some(v) = self.violations.first() {
            return Some(v.clone());
        }
        self.steps.iter().find(|s| !s.passes()).map(|s| {
            if let Some(v) = s.violations.first() {
                format!("step {} ({}): {v}", s.index, s.kind)
            } else if let Some(r) = s
                .completeness_residual
                .filter(|r| r.is_nan() || *r > VALIDATION_TOL)
            {
                format!(
                    "step {} ({}): completeness residual {r:.3e}",
                    s.index, s.kind
                )
            } else {
                let worst = s.unitarity_residuals.iter().cloned().fold(0.0, f64::max);
                format!(
                    "step {} ({}): unitarity residual {worst:.3e}",
                    s.index, s.kind
                )
            }
        })
    }

    pub(crate) fn into_result(self) -> Result<()> {
        match self.first_failure() {
            None => Ok(()),
            Some(msg) => Err(Error::InvalidProtocol(msg)),
        }
    }
}

fn shape_violation(m: &CMatrix, party: Party, dim: usize) -> Option<String> {
    (m.shape() != (dim, dim)).then(|| {
        format!(
            "operator is {}x{} but {party}'s space has dimension {dim}",
            m.nrows(),
            m.ncols()
        )
    })
}

/// Checks completeness, unitarity, locality and classical causality.
pub fn validate(p: &Protocol) -> ValidationReport {
    let mut violations = Vec::new();
    if p.dim_a == 0 || p.dim_b == 0 {
        violations.push("local dimensions must be positive".to_string());
    }
    // registers each party holds, and outcome counts per register
    let mut known: HashSet<(Party, String)> = HashSet::new();
    let mut outcomes: HashMap<String, usize> = HashMap::new();
    let mut checks = Vec::with_capacity(p.steps.len());

    for (index, step) in p.steps.iter().enumerate() {
        let mut check = StepCheck {
            index,
            kind: step.kind().to_string(),
            completeness_residual: None,
            unitarity_residuals: Vec::new(),
            violations: Vec::new(),
        };
        match step {
            Step::LocalUnitary { party, unitary } => {
                let dim = p.party_dim(*party);
                check
                    .violations
                    .extend(shape_violation(unitary, *party, dim));
                check
                    .unitarity_residuals
                    .push(linalg::unitarity_residual(unitary));
            }
            Step::Measurement {
                party,
                outcome_label,
                operators,
            } => {
                let dim = p.party_dim(*party);
                if operators.is_empty() {
                    check.violations.push("measurement has no operators".into());
                }
                for m in operators {
                    check.violations.extend(shape_violation(m, *party, dim));
                }
                check.completeness_residual = Some(linalg::completeness_residual(operators, dim));
                if outcomes
                    .insert(outcome_label.clone(), operators.len())
                    .is_some()
                {
                    check
                        .violations
                        .push(format!("outcome label '{outcome_label}' reused"));
                }
                known.insert((*party, outcome_label.clone()));
            }
            Step::ClassicalMessage {
                from_party,
                to_party,
                outcome_label,
            } => {
                if from_party == to_party {
                    check
                        .violations
                        .push("message sent to its own sender".into());
                }
                if !known.contains(&(*from_party, outcome_label.clone())) {
                    check.violations.push(format!(
                        "{from_party} does not hold outcome '{outcome_label}'"
                    ));
                }
                known.insert((*to_party, outcome_label.clone()));
            }
            Step::ConditionalUnitary {
                party,
                outcome_label,
                table,
            } => {
                let dim = p.party_dim(*party);
                if !known.contains(&(*party, outcome_label.clone())) {
                    check.violations.push(format!(
                        "{party} conditions on outcome '{outcome_label}' it does not hold"
                    ));
                }
                if let Some(&n) = outcomes.get(outcome_label) {
                    for value in 0..n {
                        if !table.contains_key(&value) {
                            check
                                .violations
                                .push(format!("no entry for outcome {value}"));
                        }
                    }
                    if let Some((&extra, _)) = table.range(n..).next() {
                        check
                            .violations
                            .push(format!("entry for nonexistent outcome {extra}"));
                    }
                }
                for u in table.values() {
                    check.violations.extend(shape_violation(u, *party, dim));
                    check
                        .unitarity_residuals
                        .push(linalg::unitarity_residual(u));
                }
            }
        }
        checks.push(check);
    }
    let valid = violations.is_empty() && checks.iter().all(StepCheck::passes);
    ValidationReport {
        valid,
        steps: checks,
        violations,
    }
}

/// Decides `ψ → φ` by comparing Schmidt spectra.
pub fn can_transform(psi: &PureState, phi: &PureState) -> Result<bool> {
    let lp = states::schmidt_spectrum(psi)?;
    let lf = states::schmidt_spectrum(phi)?;
    Ok(majorizes(&lp, &lf))
}

/// Local unitaries `(U_a, U_b)` with `(U_a ⊗ U_b)|post⟩ = |target⟩` up to phase.
///
/// Maps the Schmidt bases of `post` term by term onto those of `target`,
/// completing each to a full basis of its local space.
pub fn correction_unitaries(post: &PureState, target: &PureState) -> Result<(CMatrix, CMatrix)> {
    if (post.dim_a(), post.dim_b()) != (target.dim_a(), target.dim_b()) {
        return Err(Error::DimensionMismatch(format!(
            "{}x{} vs {}x{}",
            post.dim_a(),
            post.dim_b(),
            target.dim_a(),
            target.dim_b()
        )));
    }
    if !states::locally_equivalent(post, target) {
        return Err(Error::NotLocallyEquivalent);
    }
    let from = states::schmidt_decompose(post)?;
    let to = states::schmidt_decompose(target)?;
    let (da, db) = (post.dim_a(), post.dim_b());
    let ua = linalg::complete_basis(&to.basis_a, da)
        * linalg::complete_basis(&from.basis_a, da).adjoint();
    let ub = linalg::complete_basis(&to.basis_b, db)
        * linalg::complete_basis(&from.basis_b, db).adjoint();
    Ok((ua, ub))
}

/// Bits sent: `Σ ⌈log₂(#operators)⌉` over measurement steps.
pub fn communication_cost(p: &Protocol) -> u32 {
    p.steps
        .iter()
        .map(|s| match s {
            Step::Measurement { operators, .. } if operators.len() > 1 => {
                usize::BITS - (operators.len() - 1).leading_zeros()
            }
            _ => 0,
        })
        .sum()
}
