//! Entropy and power sums of Schmidt spectra, and the entropy criterion for
//! states of Schmidt rank at most two.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::protocol::can_transform;
use crate::specvec::{ProbVector, EPS_MAJ};
use crate::states::{schmidt_rank_of, schmidt_spectrum, PureState};

/// Shannon entropy in bits, with `0 log 0 = 0`.
pub fn shannon_entropy(p: &ProbVector) -> f64 {
    -p.entries()
        .iter()
        .filter(|&&x| x > 0.0)
        .map(|&x| x * x.log2())
        .sum::<f64>()
}

/// `Σ p_i^k` for `k ≥ 1`.
pub fn power_sum(p: &ProbVector, k: f64) -> Result<f64> {
    if !k.is_finite() || k < 1.0 {
        return Err(Error::InvalidParameter(format!(
            "power sum exponent {k} must be >= 1"
        )));
    }
    Ok(p.entries().iter().map(|x| x.powf(k)).sum())
}

/// Entropy test `S(φ) ≤ S(ψ)`, valid when both Schmidt ranks are at most two.
pub fn qubit_criterion(psi: &PureState, phi: &PureState) -> Result<bool> {
    for s in [psi, phi] {
        let rank = schmidt_rank_of(s)?;
        if rank > 2 {
            return Err(Error::RankTooHigh(rank));
        }
    }
    let source = shannon_entropy(&schmidt_spectrum(psi)?);
    let target = shannon_entropy(&schmidt_spectrum(phi)?);
    Ok(target <= source + EPS_MAJ)
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PowerSumEntry {
    pub k: f64,
    pub source: f64,
    pub target: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MonotoneReport {
    pub entropy_source: f64,
    pub entropy_target: f64,
    pub power_sums: Vec<PowerSumEntry>,
    /// Every monotone moves in the direction `ψ → φ` allows.
    pub consistent: bool,
    pub transformable: bool,
}

pub fn monotone_report(psi: &PureState, phi: &PureState, ks: &[f64]) -> Result<MonotoneReport> {
    let lp = schmidt_spectrum(psi)?;
    let lf = schmidt_spectrum(phi)?;
    let entropy_source = shannon_entropy(&lp);
    let entropy_target = shannon_entropy(&lf);
    let power_sums = ks
        .iter()
        .map(|&k| {
            Ok(PowerSumEntry {
                k,
                source: power_sum(&lp, k)?,
                target: power_sum(&lf, k)?,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    let consistent = entropy_target <= entropy_source + EPS_MAJ
        && power_sums.iter().all(|e| e.source <= e.target + EPS_MAJ);
    Ok(MonotoneReport {
        entropy_source,
        entropy_target,
        power_sums,
        consistent,
        transformable: can_transform(psi, phi)?,
    })
}
