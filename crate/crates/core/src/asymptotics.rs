//! Finite-n versions of the typical-set constructions converting between
//! `n` copies of a state and EPR pairs.
//!
//! The spectrum of `|φ⟩^{⊗n}` is stored compressed: one atom per distinct
//! value `Π p_i^{k_i}`, with the multinomial count of exponent patterns that
//! produce it. Values and multiplicities are kept as base-2 logarithms so
//! that `n` in the thousands stays in range.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::monotones::shannon_entropy;
use crate::specvec::{majorizes, ProbVector, EPS_MAJ, EPS_NUM, EPS_SUM};

pub const DEFAULT_ATOM_CAP: usize = 1_000_000;
/// Largest expanded spectrum length for which certificates are checked
/// entry by entry; larger spectra are checked on their atoms.
pub const EXPLICIT_CHECK_LIMIT: f64 = 1e5;
const WINDOW_SLACK: f64 = 1e-12;
const ROUNDING_SLACK: f64 = 1e-9;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct Atom {
    pub log2_value: f64,
    pub log2_multiplicity: f64,
}

impl Atom {
    fn log2_mass(&self) -> f64 {
        self.log2_value + self.log2_multiplicity
    }
}

/// `log₂(Σ 2^{x_i})`, with a compensated inner sum. Empty input gives `-∞`.
pub fn log2_sum_exp2(xs: impl IntoIterator<Item = f64>) -> f64 {
    let xs: Vec<f64> = xs.into_iter().collect();
    let max = xs.iter().cloned().fold(f64::NEG_INFINITY, f64::max);
    if max == f64::NEG_INFINITY {
        return max;
    }
    let (mut sum, mut comp) = (0.0f64, 0.0f64);
    for x in xs {
        let term = (x - max).exp2();
        // Neumaier summation
        let t = sum + term;
        if sum.abs() >= term.abs() {
            comp += (sum - t) + term;
        } else {
            comp += (term - t) + sum;
        }
        sum = t;
    }
    max + (sum + comp).log2()
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ProductSpectrum {
    /// Sorted by descending value.
    pub atoms: Vec<Atom>,
    pub n_copies: usize,
}

impl ProductSpectrum {
    /// `log₂ Σ multiplicity·value`; zero for a normalized spectrum.
    pub fn total_mass_log2(&self) -> f64 {
        log2_sum_exp2(self.atoms.iter().map(Atom::log2_mass))
    }

    pub fn total_mass(&self) -> f64 {
        self.total_mass_log2().exp2()
    }

    /// `log₂` of the number of eigenvalues, counted with multiplicity.
    pub fn count_log2(&self) -> f64 {
        log2_sum_exp2(self.atoms.iter().map(|a| a.log2_multiplicity))
    }

    pub fn max_value_log2(&self) -> f64 {
        self.atoms
            .iter()
            .map(|a| a.log2_value)
            .fold(f64::NEG_INFINITY, f64::max)
    }

    /// Every eigenvalue written out, or `None` if there are more than `limit`.
    pub fn expand(&self, limit: f64) -> Option<Vec<f64>> {
        if self.count_log2().exp2() > limit {
            return None;
        }
        let mut out = Vec::new();
        for a in &self.atoms {
            let copies = a.log2_multiplicity.exp2().round() as usize;
            out.extend(std::iter::repeat_n(a.log2_value.exp2(), copies));
        }
        Some(out)
    }
}

/// `ln C(n + r − 1, r − 1)`: the number of exponent patterns.
fn ln_patterns(n: usize, r: usize) -> f64 {
    (1..r).map(|i| ((n + i) as f64 / i as f64).ln()).sum()
}

fn log2_factorials(n: usize) -> Vec<f64> {
    let mut table = vec![0.0; n + 1];
    for i in 1..=n {
        table[i] = table[i - 1] + (i as f64).log2();
    }
    table
}

fn compositions(n: usize, parts: usize, visit: &mut impl FnMut(&[usize])) {
    fn go(rest: usize, slot: usize, k: &mut Vec<usize>, visit: &mut impl FnMut(&[usize])) {
        if slot + 1 == k.len() {
            k[slot] = rest;
            visit(k);
            return;
        }
        for take in (0..=rest).rev() {
            k[slot] = take;
            go(rest - take, slot + 1, k, visit);
        }
    }
    let mut k = vec![0; parts];
    go(n, 0, &mut k, visit);
}

pub fn n_copy_spectrum(p: &ProbVector, n: usize) -> Result<ProductSpectrum> {
    n_copy_spectrum_with_cap(p, n, DEFAULT_ATOM_CAP)
}

pub fn n_copy_spectrum_with_cap(p: &ProbVector, n: usize, cap: usize) -> Result<ProductSpectrum> {
    if n == 0 {
        return Err(Error::InvalidParameter(
            "number of copies must be at least 1".into(),
        ));
    }
    let support: Vec<f64> = p
        .entries()
        .iter()
        .cloned()
        .filter(|&x| x > EPS_NUM)
        .collect();
    let r = support.len();
    let patterns = ln_patterns(n, r).exp();
    if patterns > cap as f64 {
        return Err(Error::TooLarge {
            atoms: patterns,
            cap,
        });
    }
    let logs: Vec<f64> = support.iter().map(|x| x.log2()).collect();
    let fact = log2_factorials(n);
    let mut atoms = Vec::with_capacity(patterns.round() as usize);
    compositions(n, r, &mut |k| {
        let log2_value = k.iter().zip(&logs).map(|(&ki, l)| ki as f64 * l).sum();
        let log2_multiplicity = fact[n] - k.iter().map(|&ki| fact[ki]).sum::<f64>();
        atoms.push(Atom {
            log2_value,
            log2_multiplicity,
        });
    });

    // merge patterns that give the same value
    atoms.sort_by(|a, b| b.log2_value.total_cmp(&a.log2_value));
    let mut merged: Vec<Atom> = Vec::with_capacity(atoms.len());
    for a in atoms {
        match merged.last_mut() {
            Some(last)
                if (last.log2_value - a.log2_value).abs()
                    <= ROUNDING_SLACK * last.log2_value.abs().max(1.0) =>
            {
                last.log2_multiplicity =
                    log2_sum_exp2([last.log2_multiplicity, a.log2_multiplicity]);
            }
            _ => merged.push(a),
        }
    }
    Ok(ProductSpectrum {
        atoms: merged,
        n_copies: n,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct TypicalTruncation {
    /// Kept atoms, renormalized to unit mass.
    pub kept: ProductSpectrum,
    /// Discarded mass.
    pub epsilon: f64,
    pub delta: f64,
    pub entropy: f64,
}

/// Keeps atoms with `|−log₂(value)/n − entropy| ≤ delta`.
pub fn truncate_typical(
    s: &ProductSpectrum,
    entropy: f64,
    delta: f64,
) -> Result<TypicalTruncation> {
    if !delta.is_finite() || delta < 0.0 {
        return Err(Error::InvalidParameter(format!(
            "window half-width {delta} must be nonnegative"
        )));
    }
    let n = s.n_copies as f64;
    let (kept, dropped): (Vec<Atom>, Vec<Atom>) = s
        .atoms
        .iter()
        .partition(|a| (-a.log2_value / n - entropy).abs() <= delta + WINDOW_SLACK);
    if kept.is_empty() {
        return Err(Error::EmptyTypicalSet);
    }
    let kept_mass = log2_sum_exp2(kept.iter().map(Atom::log2_mass));
    let epsilon = if dropped.is_empty() {
        0.0
    } else {
        log2_sum_exp2(dropped.iter().map(Atom::log2_mass)).exp2()
    };
    let atoms = kept
        .into_iter()
        .map(|a| Atom {
            log2_value: a.log2_value - kept_mass,
            ..a
        })
        .collect();
    Ok(TypicalTruncation {
        kept: ProductSpectrum {
            atoms,
            n_copies: s.n_copies,
        },
        epsilon,
        delta,
        entropy,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EprCount {
    pub n_copies: usize,
    pub delta: f64,
    /// EPR pairs consumed (formation) or produced (distillation).
    pub epr_pairs: u64,
    pub epsilon: f64,
    /// The majorization condition behind `epr_pairs` re-checked.
    pub certified: bool,
}

impl EprCount {
    pub fn rate(&self) -> f64 {
        self.epr_pairs as f64 / self.n_copies as f64
    }
}

fn typical(phi_spectrum: &ProbVector, n: usize, delta: f64) -> Result<TypicalTruncation> {
    let s = n_copy_spectrum(phi_spectrum, n)?;
    truncate_typical(&s, shannon_entropy(phi_spectrum), delta)
}

fn uniform_of(m: u64) -> Option<ProbVector> {
    let len = 2f64.powi(m as i32);
    (len <= EXPLICIT_CHECK_LIMIT).then(|| ProbVector::uniform(len as usize).expect("nonempty"))
}

/// `log₂(2^a − 2^b)` for `a ≥ b`.
fn log2_diff_exp2(a: f64, b: f64) -> f64 {
    if b == f64::NEG_INFINITY {
        return a;
    }
    a + (-(b - a).exp2()).ln_1p() / std::f64::consts::LN_2
}

/// Partial sums of the descending spectrum `s` and of the uniform vector of
/// length `2^m`, evaluated at every breakpoint of either curve. Both curves
/// are piecewise linear in the number of terms, so these points decide
/// majorization in both directions.
fn partial_sums_at_breakpoints(s: &ProductSpectrum, m: u64) -> Vec<(f64, f64)> {
    let m = m as f64;
    let uniform = |log2_k: f64| (log2_k - m).min(0.0).exp2();
    let mut out = Vec::with_capacity(s.atoms.len() + 1);
    let (mut count, mut mass) = (f64::NEG_INFINITY, f64::NEG_INFINITY);
    let mut uniform_kink_seen = false;
    for a in &s.atoms {
        let next_count = log2_sum_exp2([count, a.log2_multiplicity]);
        if !uniform_kink_seen && next_count >= m {
            // the uniform curve bends inside (or at the end of) this atom
            let inside = log2_diff_exp2(m, count) + a.log2_value;
            out.push((log2_sum_exp2([mass, inside]).exp2(), 1.0));
            uniform_kink_seen = true;
        }
        count = next_count;
        mass = log2_sum_exp2([mass, a.log2_mass()]);
        out.push((mass.exp2(), uniform(count)));
    }
    if !uniform_kink_seen {
        // fewer terms than 2^m: beyond the last atom the spectrum stays flat
        out.push((mass.exp2(), 1.0));
    }
    out
}

/// Decides `uniform(2^m) ≺ s` (`lower = true`) or `s ≺ uniform(2^m)` on the
/// compressed spectrum, without writing out its entries.
fn compressed_majorization(s: &ProductSpectrum, m: u64, lower: bool) -> bool {
    let points = partial_sums_at_breakpoints(s, m);
    let total = points.last().map_or(0.0, |p| p.0);
    (total - 1.0).abs() <= EPS_SUM
        && points.iter().all(|&(spectrum, uniform)| {
            if lower {
                uniform <= spectrum + EPS_MAJ
            } else {
                spectrum <= uniform + EPS_MAJ
            }
        })
}

/// `(2^{−m}, …) ≺ truncated spectrum`, so `m` EPR pairs can form it.
pub fn formation_certificate(t: &TypicalTruncation, m: u64) -> Result<bool> {
    match (t.kept.expand(EXPLICIT_CHECK_LIMIT), uniform_of(m)) {
        (Some(entries), Some(uniform)) => Ok(majorizes(&uniform, &ProbVector::new(entries)?)),
        _ => Ok(compressed_majorization(&t.kept, m, true)),
    }
}

/// Truncated spectrum `≺ (2^{−m}, …)`, so it can be distilled to `m` EPR pairs.
pub fn distillation_certificate(t: &TypicalTruncation, m: u64) -> Result<bool> {
    match (t.kept.expand(EXPLICIT_CHECK_LIMIT), uniform_of(m)) {
        (Some(entries), Some(uniform)) => Ok(majorizes(&ProbVector::new(entries)?, &uniform)),
        _ => Ok(compressed_majorization(&t.kept, m, false)),
    }
}

/// EPR pairs needed to prepare the typical part of `|φ⟩^{⊗n}`:
/// `⌈log₂ #typical eigenvalues⌉`.
pub fn formation_epr_count(phi_spectrum: &ProbVector, n: usize, delta: f64) -> Result<EprCount> {
    let t = typical(phi_spectrum, n, delta)?;
    let m = (t.kept.count_log2() - ROUNDING_SLACK).ceil().max(0.0) as u64;
    Ok(EprCount {
        n_copies: n,
        delta,
        epr_pairs: m,
        epsilon: t.epsilon,
        certified: formation_certificate(&t, m)?,
    })
}

/// EPR pairs obtainable from the typical part of `|φ⟩^{⊗n}`:
/// `⌊−log₂ max renormalized eigenvalue⌋`.
pub fn distillation_epr_count(phi_spectrum: &ProbVector, n: usize, delta: f64) -> Result<EprCount> {
    let t = typical(phi_spectrum, n, delta)?;
    let m = (-t.kept.max_value_log2() + ROUNDING_SLACK).floor().max(0.0) as u64;
    Ok(EprCount {
        n_copies: n,
        delta,
        epr_pairs: m,
        epsilon: t.epsilon,
        certified: distillation_certificate(&t, m)?,
    })
}

/// One row of the rates table.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct RateRow {
    pub n: usize,
    pub delta: f64,
    pub entropy: f64,
    pub m_formation: u64,
    pub m_distillation: u64,
    pub epsilon: f64,
    pub formation_rate: f64,
    pub distillation_rate: f64,
    pub certified: bool,
}

pub fn rate_row(phi_spectrum: &ProbVector, n: usize, delta: f64) -> Result<RateRow> {
    let f = formation_epr_count(phi_spectrum, n, delta)?;
    let d = distillation_epr_count(phi_spectrum, n, delta)?;
    Ok(RateRow {
        n,
        delta,
        entropy: shannon_entropy(phi_spectrum),
        m_formation: f.epr_pairs,
        m_distillation: d.epr_pairs,
        epsilon: f.epsilon,
        formation_rate: f.rate(),
        distillation_rate: d.rate(),
        certified: f.certified && d.certified,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn pv(v: &[f64]) -> ProbVector {
        ProbVector::new(v.to_vec()).unwrap()
    }

    #[test]
    fn single_atom_for_product_state() {
        let s = n_copy_spectrum(&pv(&[1.0]), 5).unwrap();
        assert_eq!(s.atoms.len(), 1);
        assert_eq!(s.atoms[0].log2_value, 0.0);
        assert_eq!(s.atoms[0].log2_multiplicity, 0.0);
    }

    #[test]
    fn uniform_copies_merge_into_one_value() {
        let s = n_copy_spectrum(&pv(&[0.5, 0.5]), 3).unwrap();
        assert_eq!(s.atoms.len(), 1);
        assert!((s.atoms[0].log2_value.exp2() - 0.125).abs() < 1e-15);
        assert!((s.atoms[0].log2_multiplicity.exp2() - 8.0).abs() < 1e-12);
    }

    #[test]
    fn binomial_expansion() {
        let s = n_copy_spectrum(&pv(&[0.8, 0.2]), 2).unwrap();
        let got: Vec<(f64, f64)> = s
            .atoms
            .iter()
            .map(|a| (a.log2_value.exp2(), a.log2_multiplicity.exp2()))
            .collect();
        let expected = [(0.64, 1.0), (0.16, 2.0), (0.04, 1.0)];
        for ((v, m), (ev, em)) in got.iter().zip(expected) {
            assert!((v - ev).abs() < 1e-14 && (m - em).abs() < 1e-12);
        }
        assert!((s.total_mass() - 1.0).abs() < 1e-12);
    }

    #[test]
    fn cap_is_enforced() {
        let p = pv(&[0.25; 4]);
        assert!(matches!(
            n_copy_spectrum_with_cap(&p, 100, 1000),
            Err(Error::TooLarge { .. })
        ));
        assert!(n_copy_spectrum(&p, 0).is_err());
    }

    #[test]
    fn truncation_examples() {
        let p = pv(&[0.8, 0.2]);
        let s = n_copy_spectrum(&p, 2).unwrap();
        let entropy = shannon_entropy(&p);
        let all = truncate_typical(&s, entropy, 10.0).unwrap();
        assert_eq!(all.epsilon, 0.0);
        // window keeps 0.64 (distance 0.4) and 0.16 (0.6), drops 0.04 (1.6)
        let t = truncate_typical(&s, entropy, 1.0).unwrap();
        assert!((t.epsilon - 0.04).abs() < 1e-12);
        assert_eq!(t.kept.atoms.len(), 2);
        assert!((t.kept.total_mass() - 1.0).abs() < 1e-12);
        assert!((1.0 - t.epsilon - 0.96).abs() < 1e-12);
        assert_eq!(
            truncate_typical(&s, entropy, 0.1),
            Err(Error::EmptyTypicalSet)
        );
    }

    #[test]
    fn epr_examples() {
        let epr = pv(&[0.5, 0.5]);
        let f = formation_epr_count(&epr, 10, 0.0).unwrap();
        let d = distillation_epr_count(&epr, 10, 0.0).unwrap();
        assert_eq!((f.epr_pairs, f.epsilon), (10, 0.0));
        assert_eq!((d.epr_pairs, d.epsilon), (10, 0.0));
        assert!(f.certified && d.certified);

        let product = pv(&[1.0]);
        assert_eq!(formation_epr_count(&product, 7, 0.1).unwrap().epr_pairs, 0);
        assert_eq!(
            distillation_epr_count(&product, 7, 0.1).unwrap().epr_pairs,
            0
        );
    }

    #[test]
    fn small_n_certificates_are_checked_explicitly() {
        let p = pv(&[0.8, 0.2]);
        for n in [4, 8, 12] {
            let t = typical(&p, n, 0.3).unwrap();
            assert!(t.kept.expand(EXPLICIT_CHECK_LIMIT).is_some());
            let f = formation_epr_count(&p, n, 0.3).unwrap();
            let d = distillation_epr_count(&p, n, 0.3).unwrap();
            assert!(f.certified && d.certified, "n = {n}");
            // one fewer pair cannot form the truncated spectrum
            if f.epr_pairs > 0 {
                assert!(!formation_certificate(&t, f.epr_pairs - 1).unwrap());
            }
            assert!(!distillation_certificate(&t, d.epr_pairs + 1).unwrap());
        }
    }

    #[test]
    fn log_sum_exp_matches_direct_sum() {
        let xs = [-3.0, -1.5, -0.25, -10.0];
        let direct: f64 = xs.iter().map(|x: &f64| x.exp2()).sum();
        assert!((log2_sum_exp2(xs).exp2() - direct).abs() < 1e-15);
        assert_eq!(log2_sum_exp2(std::iter::empty()), f64::NEG_INFINITY);
    }

    #[test]
    fn compressed_check_agrees_with_expanded_check() {
        for (p, n, delta) in [
            (vec![0.8, 0.2], 12, 0.3),
            (vec![0.6, 0.3, 0.1], 6, 0.4),
            (vec![0.5, 0.5], 8, 0.0),
        ] {
            let t = typical(&pv(&p), n, delta).unwrap();
            let entries = ProbVector::new(t.kept.expand(EXPLICIT_CHECK_LIMIT).unwrap()).unwrap();
            for m in 0..=(n as u64 + 1) {
                let uniform = ProbVector::uniform(1 << m).unwrap();
                assert_eq!(
                    compressed_majorization(&t.kept, m, true),
                    majorizes(&uniform, &entries),
                    "m = {m}"
                );
                assert_eq!(
                    compressed_majorization(&t.kept, m, false),
                    majorizes(&entries, &uniform),
                    "m = {m}"
                );
            }
        }
    }

    #[test]
    fn large_n_certificates_are_tight() {
        let p = pv(&[0.8, 0.2]);
        let t = typical(&p, 1000, 0.1).unwrap();
        assert!(t.kept.expand(EXPLICIT_CHECK_LIMIT).is_none());
        let f = formation_epr_count(&p, 1000, 0.1).unwrap();
        let d = distillation_epr_count(&p, 1000, 0.1).unwrap();
        assert!(f.certified && d.certified);
        assert!(!formation_certificate(&t, f.epr_pairs - 1).unwrap());
        assert!(!distillation_certificate(&t, d.epr_pairs + 1).unwrap());
    }
}
