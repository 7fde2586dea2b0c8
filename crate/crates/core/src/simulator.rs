//! Executes protocols on pure states, either enumerating every outcome
//! branch or following one seeded sample path.

use std::collections::BTreeMap;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::linalg::{self, CMatrix};
use crate::protocol::{communication_cost, validate, Protocol, Step};
use crate::states::{apply_party_raw, fidelity, Party, PureState};

/// Branches whose total probability falls below this are dropped.
pub const PRUNE_PROBABILITY: f64 = 1e-14;
/// Minimum branch fidelity for [`verify_transformation`] to pass.
pub const VERIFY_FIDELITY: f64 = 1.0 - 1e-9;

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Outcome {
    pub label: String,
    pub value: usize,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Branch {
    pub outcomes: Vec<Outcome>,
    pub probability: f64,
    pub final_state: PureState,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TranscriptEvent {
    pub step: usize,
    pub kind: String,
    pub party: Party,
    pub outcome: Option<usize>,
    pub probability: f64,
}

#[derive(Debug, Clone, PartialEq, Default, Serialize, Deserialize)]
pub struct Transcript {
    pub events: Vec<TranscriptEvent>,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct VerifyReport {
    pub branches: usize,
    pub min_fidelity: f64,
    pub total_probability: f64,
    pub communication_cost: u32,
    pub pass: bool,
}

/// A branch in flight, with the product of every Alice-side operator applied
/// so far.
#[derive(Clone)]
pub(crate) struct TrackedBranch {
    pub outcomes: Vec<Outcome>,
    pub registers: BTreeMap<String, usize>,
    pub probability: f64,
    pub amplitudes: CMatrix,
    pub alice_operator: CMatrix,
}

fn check_ready(p: &Protocol, psi: &PureState) -> Result<()> {
    if (p.dim_a, p.dim_b) != (psi.dim_a(), psi.dim_b()) {
        return Err(Error::DimensionMismatch(format!(
            "protocol is {}x{}, state is {}x{}",
            p.dim_a,
            p.dim_b,
            psi.dim_a(),
            psi.dim_b()
        )));
    }
    validate(p).into_result()
}

fn apply_tracked(branch: &mut TrackedBranch, party: Party, op: &CMatrix) {
    branch.amplitudes = apply_party_raw(&branch.amplitudes, party, op);
    if party == Party::Alice {
        branch.alice_operator = op * &branch.alice_operator;
    }
}

fn conditional_op<'a>(
    registers: &BTreeMap<String, usize>,
    label: &str,
    table: &'a BTreeMap<usize, CMatrix>,
) -> Result<&'a CMatrix> {
    let value = registers.get(label).ok_or_else(|| {
        Error::InvalidProtocol(format!("outcome '{label}' read before it is produced"))
    })?;
    table.get(value).ok_or_else(|| {
        Error::InvalidProtocol(format!("no table entry for outcome {value} of '{label}'"))
    })
}

/// Normalized amplitudes and conditional probability of one Kraus outcome.
fn measure(amplitudes: &CMatrix, party: Party, op: &CMatrix) -> (CMatrix, f64) {
    let raw = apply_party_raw(amplitudes, party, op);
    let weight = raw.iter().map(|z| z.norm_sqr()).sum::<f64>();
    (raw, weight)
}

pub(crate) fn enumerate_tracked(p: &Protocol, psi: &PureState) -> Result<Vec<TrackedBranch>> {
    check_ready(p, psi)?;
    let mut branches = vec![TrackedBranch {
        outcomes: Vec::new(),
        registers: BTreeMap::new(),
        probability: 1.0,
        amplitudes: psi.amplitudes().clone(),
        alice_operator: linalg::identity(p.dim_a),
    }];
    for step in &p.steps {
        match step {
            Step::LocalUnitary { party, unitary } => {
                for b in &mut branches {
                    apply_tracked(b, *party, unitary);
                }
            }
            Step::Measurement {
                party,
                outcome_label,
                operators,
            } => {
                let mut next = Vec::with_capacity(branches.len() * operators.len());
                for b in &branches {
                    for (value, op) in operators.iter().enumerate() {
                        let (raw, weight) = measure(&b.amplitudes, *party, op);
                        let probability = b.probability * weight;
                        if probability < PRUNE_PROBABILITY {
                            continue;
                        }
                        let mut child = b.clone();
                        child.amplitudes = raw.unscale(weight.sqrt());
                        child.probability = probability;
                        if *party == Party::Alice {
                            child.alice_operator = op * &b.alice_operator;
                        }
                        child.outcomes.push(Outcome {
                            label: outcome_label.clone(),
                            value,
                        });
                        child.registers.insert(outcome_label.clone(), value);
                        next.push(child);
                    }
                }
                branches = next;
            }
            Step::ClassicalMessage { .. } => {}
            Step::ConditionalUnitary {
                party,
                outcome_label,
                table,
            } => {
                for b in &mut branches {
                    let op = conditional_op(&b.registers, outcome_label, table)?.clone();
                    apply_tracked(b, *party, &op);
                }
            }
        }
    }
    Ok(branches)
}

fn finish(amplitudes: CMatrix) -> Result<PureState> {
    PureState::normalized(amplitudes)
}

/// One branch per outcome sequence with nonzero probability.
pub fn enumerate_branches(p: &Protocol, psi: &PureState) -> Result<Vec<Branch>> {
    enumerate_tracked(p, psi)?
        .into_iter()
        .map(|b| {
            Ok(Branch {
                outcomes: b.outcomes,
                probability: b.probability,
                final_state: finish(b.amplitudes)?,
            })
        })
        .collect()
}

/// Follows a single sampled path. Outcomes are drawn by inverse CDF over the
/// outcome probabilities in operator order, from a ChaCha8 stream seeded
/// with `seed`.
pub fn run(p: &Protocol, psi: &PureState, seed: u64) -> Result<(PureState, Transcript)> {
    check_ready(p, psi)?;
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    let mut amplitudes = psi.amplitudes().clone();
    let mut registers = BTreeMap::new();
    let mut probability = 1.0;
    let mut transcript = Transcript::default();

    for (index, step) in p.steps.iter().enumerate() {
        let mut outcome = None;
        match step {
            Step::LocalUnitary { party, unitary } => {
                amplitudes = apply_party_raw(&amplitudes, *party, unitary);
            }
            Step::Measurement {
                party,
                outcome_label,
                operators,
            } => {
                let results: Vec<(CMatrix, f64)> = operators
                    .iter()
                    .map(|op| measure(&amplitudes, *party, op))
                    .collect();
                let total: f64 = results.iter().map(|r| r.1).sum();
                let u = rng.random::<f64>() * total;
                let mut acc = 0.0;
                let mut chosen = None;
                for (value, (_, weight)) in results.iter().enumerate() {
                    if *weight * probability < PRUNE_PROBABILITY {
                        continue;
                    }
                    chosen = Some(value);
                    acc += weight;
                    if u < acc {
                        break;
                    }
                }
                let value = chosen.ok_or_else(|| {
                    Error::NumericalFailure("every measurement outcome has zero probability".into())
                })?;
                let (raw, weight) = &results[value];
                amplitudes = raw.unscale(weight.sqrt());
                probability *= weight;
                registers.insert(outcome_label.clone(), value);
                outcome = Some(value);
            }
            Step::ClassicalMessage { .. } => {}
            Step::ConditionalUnitary {
                party,
                outcome_label,
                table,
            } => {
                let op = conditional_op(&registers, outcome_label, table)?;
                amplitudes = apply_party_raw(&amplitudes, *party, op);
            }
        }
        transcript.events.push(TranscriptEvent {
            step: index,
            kind: step.kind().to_string(),
            party: step.party(),
            outcome,
            probability,
        });
    }
    Ok((finish(amplitudes)?, transcript))
}

/// Runs every branch and compares each final state with `phi`.
pub fn verify_transformation(
    p: &Protocol,
    psi: &PureState,
    phi: &PureState,
) -> Result<VerifyReport> {
    let branches = enumerate_branches(p, psi)?;
    let mut min_fidelity = f64::INFINITY;
    for b in &branches {
        min_fidelity = min_fidelity.min(fidelity(&b.final_state, phi)?);
    }
    if branches.is_empty() {
        min_fidelity = 0.0;
    }
    let total_probability = branches.iter().map(|b| b.probability).sum();
    Ok(VerifyReport {
        branches: branches.len(),
        min_fidelity,
        total_probability,
        communication_cost: communication_cost(p),
        pass: min_fidelity >= VERIFY_FIDELITY,
    })
}
