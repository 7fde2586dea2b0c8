//! Acceptance suite: one PASS/FAIL line per criterion, non-zero exit if any
//! criterion fails.

use std::path::Path;
use std::process::Command;
use std::time::{Duration, Instant};

use locc_core::asymptotics::{distillation_epr_count, formation_epr_count};
use locc_core::monotones::{power_sum, qubit_criterion, shannon_entropy};
use locc_core::protocol::{can_transform, necessity_certificate, synthesize, validate, Protocol};
use locc_core::sampling::{crossing_profile, incomparable_fraction, sample_pair};
use locc_core::simulator::verify_transformation;
use locc_core::specvec::{
    apply_chain, compare, decompose_t_transforms, majorizes, Comparison, ProbVector,
};
use locc_core::states::{from_schmidt_coefficients, schmidt_spectrum, PureState};
use rand::seq::SliceRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;

struct Outcome {
    pass: bool,
    detail: String,
}

fn outcome(pass: bool, detail: impl Into<String>) -> Outcome {
    Outcome {
        pass,
        detail: detail.into(),
    }
}

fn pv(v: &[f64]) -> ProbVector {
    ProbVector::new(v.to_vec()).unwrap()
}

fn canonical(p: &[f64], d: usize) -> PureState {
    from_schmidt_coefficients(&pv(p), d, d).unwrap()
}

fn incomparable_pair() -> Outcome {
    let psi = canonical(&[0.5, 0.4, 0.1], 3);
    let phi = canonical(&[0.6, 0.2, 0.2], 3);
    let forward = can_transform(&psi, &phi).unwrap();
    let backward = can_transform(&phi, &psi).unwrap();
    let relation = compare(
        &schmidt_spectrum(&psi).unwrap(),
        &schmidt_spectrum(&phi).unwrap(),
    );
    outcome(
        !forward && !backward && relation == Comparison::Incomparable,
        format!("psi->phi {forward}, phi->psi {backward}, relation {relation:?}"),
    )
}

/// 500 pairs per dimension with `λψ ≺ λφ`, drawn by rejecting incomparable
/// Haar pairs and ordering the rest.
fn ordered_haar_pairs(d: usize, count: usize, seed: u64) -> Vec<(PureState, PureState)> {
    let mut out = Vec::with_capacity(count);
    let mut index = 0;
    while out.len() < count {
        let (x, y) = sample_pair(d, seed, index);
        index += 1;
        let (px, py) = (schmidt_spectrum(&x).unwrap(), schmidt_spectrum(&y).unwrap());
        match compare(&px, &py) {
            Comparison::Incomparable => continue,
            Comparison::RightPrecedes => out.push((y, x)),
            _ => out.push((x, y)),
        }
    }
    out
}

struct SweepCase {
    d: usize,
    psi: PureState,
    phi: PureState,
    protocol: Protocol,
}

fn synthesis_sweep(cases: &[SweepCase]) -> Outcome {
    let failures: Vec<String> = cases
        .par_iter()
        .filter_map(|c| {
            let report = validate(&c.protocol);
            if !report.valid {
                return Some(format!("d={} invalid: {:?}", c.d, report.first_failure()));
            }
            let v = verify_transformation(&c.protocol, &c.psi, &c.phi).unwrap();
            if v.min_fidelity < 1.0 - 1e-9 {
                return Some(format!("d={} fidelity {}", c.d, v.min_fidelity));
            }
            if (v.total_probability - 1.0).abs() > 1e-10 {
                return Some(format!("d={} probability {}", c.d, v.total_probability));
            }
            if c.protocol.measurement_count() > c.d - 1 {
                return Some(format!(
                    "d={} uses {} measurements",
                    c.d,
                    c.protocol.measurement_count()
                ));
            }
            None
        })
        .collect();
    outcome(
        failures.is_empty(),
        format!(
            "{} protocols, {} failures {:?}",
            cases.len(),
            failures.len(),
            failures.first()
        ),
    )
}

fn certificates(cases: &[SweepCase]) -> Outcome {
    let worst = cases
        .par_iter()
        .map(
            |c| match necessity_certificate(&c.protocol, &c.psi, &c.phi) {
                Ok(cert) if majorizes(&cert.mixture_spectrum, &cert.target_spectrum) => {
                    cert.reconstruction_residual
                }
                _ => f64::INFINITY,
            },
        )
        .reduce(|| 0.0, f64::max);
    outcome(
        worst <= 1e-9,
        format!("max residual {worst:.3e} over {} protocols", cases.len()),
    )
}

fn monotone_consistency(cases: &[SweepCase]) -> Outcome {
    let bad = cases
        .iter()
        .filter(|c| {
            let lp = schmidt_spectrum(&c.psi).unwrap();
            let lf = schmidt_spectrum(&c.phi).unwrap();
            let entropy_ok = shannon_entropy(&lf) <= shannon_entropy(&lp) + 1e-10;
            let sums_ok = [2.0, 3.0, 4.0]
                .iter()
                .all(|&k| power_sum(&lp, k).unwrap() <= power_sum(&lf, k).unwrap() + 1e-10);
            !(entropy_ok && sums_ok)
        })
        .count();
    outcome(
        bad == 0,
        format!("{bad} violations over {} pairs", cases.len()),
    )
}

fn qubit_equivalence() -> Outcome {
    let disagreements = (0..10_000u64)
        .into_par_iter()
        .filter(|&i| {
            let (x, y) = sample_pair(2, 5, i);
            qubit_criterion(&x, &y).unwrap() != can_transform(&x, &y).unwrap()
        })
        .count();
    outcome(
        disagreements == 0,
        format!("{disagreements} disagreements over 10000 pairs"),
    )
}

fn t_transform_oracle() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let (mut worst, mut too_long) = (0.0f64, 0);
    for _ in 0..10_000 {
        let d = rng.random_range(1..=10);
        let w: Vec<f64> = (0..d).map(|_| rng.random::<f64>() + 1e-3).collect();
        let total: f64 = w.iter().sum();
        let y = pv(&w.iter().map(|x| x / total).collect::<Vec<_>>());
        // x = convex mixture of permutations of y, hence x ≺ y
        let mut x = vec![0.0; d];
        let terms = rng.random_range(1..=3);
        let weights: Vec<f64> = (0..terms).map(|_| rng.random::<f64>() + 1e-3).collect();
        let wt: f64 = weights.iter().sum();
        for wk in weights {
            let mut perm: Vec<usize> = (0..d).collect();
            perm.shuffle(&mut rng);
            for (i, &p) in perm.iter().enumerate() {
                x[i] += wk / wt * y.entries()[p];
            }
        }
        let x = pv(&x);
        let chain = decompose_t_transforms(&x, &y).unwrap();
        if chain.len() > d - 1 {
            too_long += 1;
        }
        let image = apply_chain(&pv(&y.sorted_desc()), &chain).unwrap();
        let err = image
            .entries()
            .iter()
            .zip(x.sorted_desc())
            .map(|(a, b)| (a - b).abs())
            .fold(0.0, f64::max);
        worst = worst.max(err);
    }
    outcome(
        worst <= 1e-10 && too_long == 0,
        format!("max error {worst:.3e}, {too_long} chains longer than d-1"),
    )
}

fn aep_rates() -> Outcome {
    const S: f64 = 0.721928;
    let p = pv(&[0.8, 0.2]);
    let exact = shannon_entropy(&p);
    let mut notes = Vec::new();

    let f = formation_epr_count(&p, 1000, 0.1).unwrap();
    let d = distillation_epr_count(&p, 1000, 0.1).unwrap();
    let point = (f.rate() - S).abs() <= 0.12
        && (d.rate() - S).abs() <= 0.12
        && f.epsilon <= 0.01
        && d.epsilon <= 0.01
        && f.certified
        && d.certified;
    notes.push(format!(
        "n=1000: formation {} ({:.3}), distillation {} ({:.3}), eps {:.2e}, certified {}",
        f.epr_pairs,
        f.rate(),
        d.epr_pairs,
        d.rate(),
        f.epsilon,
        f.certified && d.certified
    ));

    // trend over n with delta fixed: both rates should approach S
    let ns = [100, 300, 1000];
    let rows: Vec<(f64, f64, f64)> = ns
        .iter()
        .map(|&n| {
            let f = formation_epr_count(&p, n, 0.1).unwrap();
            let d = distillation_epr_count(&p, n, 0.1).unwrap();
            (f.rate(), d.rate(), f.epsilon)
        })
        .collect();
    let non_increasing = |v: Vec<f64>| v.windows(2).all(|w| w[1] <= w[0] + 1e-12);
    let formation_trend = non_increasing(rows.iter().map(|r| (r.0 - exact).abs()).collect());
    let distillation_trend = non_increasing(rows.iter().map(|r| (r.1 - exact).abs()).collect());
    let epsilon_trend = non_increasing(rows.iter().map(|r| r.2).collect());
    let sandwich = rows.iter().zip(ns).all(|(r, n)| {
        let slack = 0.1 + 1.0 / n as f64;
        r.1 <= exact + slack && r.0 >= exact - slack
    });
    notes.push(format!(
        "formation rates {:?} (trend toward S: {formation_trend}), distillation rates {:?} (trend toward S: \
         {distillation_trend}), eps decreasing {epsilon_trend}, sandwich {sandwich}",
        rows.iter().map(|r| r.0).collect::<Vec<_>>(),
        rows.iter().map(|r| r.1).collect::<Vec<_>>(),
    ));
    outcome(
        point && formation_trend && distillation_trend && epsilon_trend && sandwich,
        notes.join("; "),
    )
}

fn incomparability_monte_carlo() -> Outcome {
    let estimates: Vec<_> = (2..=7)
        .map(|d| incomparable_fraction(d, 5000, 0).unwrap())
        .collect();
    let zero_at_two = estimates[0].fraction == 0.0;
    let trend = estimates[1..].windows(2).all(|w| {
        let tol = 2.0 * (w[0].std_error.powi(2) + w[1].std_error.powi(2)).sqrt();
        w[1].fraction >= w[0].fraction - tol
    });
    let growth = estimates[5].fraction > estimates[1].fraction;
    let crossings_match = (2..=7)
        .zip(&estimates)
        .all(|(d, e)| crossing_profile(d, 5000, 0).unwrap().crossing_mass() == e.fraction);
    let fractions: Vec<String> = estimates
        .iter()
        .map(|e| format!("{}:{:.4}", e.dimension, e.fraction))
        .collect();
    outcome(
        zero_at_two && trend && growth && crossings_match,
        format!(
            "fractions [{}], crossing mass matches {crossings_match}",
            fractions.join(" ")
        ),
    )
}

fn locc(args: &[&str]) -> (i32, String) {
    let o = Command::new(env!("CARGO_BIN_EXE_locc"))
        .args(args)
        .output()
        .expect("binary runs");
    (
        o.status.code().unwrap_or(-1),
        String::from_utf8_lossy(&o.stdout).into_owned(),
    )
}

fn write_state(path: &Path, s: &PureState) {
    std::fs::write(path, serde_json::to_string_pretty(s).unwrap()).unwrap();
}

fn cli_pipeline() -> Outcome {
    let dir = tempfile::TempDir::new().unwrap();
    let (bell, skew, proto) = (
        dir.path().join("bell.json"),
        dir.path().join("skew.json"),
        dir.path().join("p.json"),
    );
    write_state(&bell, &PureState::bell());
    write_state(&skew, &canonical(&[0.7, 0.3], 2));
    let path = |p: &Path| p.to_str().unwrap().to_string();
    let (b, s, p) = (path(&bell), path(&skew), path(&proto));

    let (check, _) = locc(&["check", "--source", &b, "--target", &s]);
    let (synth, _) = locc(&["synthesize", "--source", &b, "--target", &s, "--out", &p]);
    let (sim, _) = locc(&["simulate", "--protocol", &p, "--state", &b, "--enumerate"]);
    let (ver, report) = locc(&[
        "verify",
        "--json",
        "--protocol",
        &p,
        "--source",
        &b,
        "--target",
        &s,
    ]);
    let codes = [check, synth, sim, ver];
    if codes != [0; 4] {
        return outcome(false, format!("exit codes {codes:?}"));
    }
    let report: serde_json::Value = serde_json::from_str(&report).unwrap();
    let min_fidelity = report["min_fidelity"].as_f64().unwrap_or(0.0);
    let protocol: Protocol =
        serde_json::from_str(&std::fs::read_to_string(&proto).unwrap()).unwrap();
    let expected = 0.5 * (2.0 * (0.7f64 - 0.49).sqrt()).asin();
    let delta = protocol.synthesis.first().map_or(f64::NAN, |s| s.delta);
    outcome(
        min_fidelity >= 1.0 - 1e-9 && (delta - expected).abs() <= 1e-9,
        format!(
            "exit codes {codes:?}, min fidelity {min_fidelity}, delta {delta:.9} vs {expected:.9}"
        ),
    )
}

fn report(
    number: usize,
    name: &str,
    limit: Option<Duration>,
    run: impl FnOnce() -> Outcome,
) -> bool {
    let start = Instant::now();
    let mut o = run();
    let elapsed = start.elapsed();
    if let Some(limit) = limit {
        if elapsed > limit {
            o.pass = false;
            o.detail.push_str(&format!("; over the {limit:?} limit"));
        }
    }
    let verdict = if o.pass { "PASS" } else { "FAIL" };
    println!(
        "criterion {number} {verdict} [{name}] ({:.2}s) {}",
        elapsed.as_secs_f64(),
        o.detail
    );
    o.pass
}

fn main() {
    let secs = Duration::from_secs;
    let mut results = vec![report(
        1,
        "incomparable example",
        Some(secs(1)),
        incomparable_pair,
    )];

    let start = Instant::now();
    let cases: Vec<SweepCase> = (2..=6)
        .flat_map(|d| {
            ordered_haar_pairs(d, 500, 2 + d as u64)
                .into_iter()
                .map(move |(psi, phi)| (d, psi, phi))
        })
        .collect::<Vec<_>>()
        .into_par_iter()
        .map(|(d, psi, phi)| {
            let protocol = synthesize(&psi, &phi).expect("ordered pairs are transformable");
            SweepCase {
                d,
                psi,
                phi,
                protocol,
            }
        })
        .collect();
    let synth_time = start.elapsed();
    results.push(report(
        2,
        "synthesis soundness",
        Some(secs(120).saturating_sub(synth_time)),
        || synthesis_sweep(&cases),
    ));
    results.push(report(3, "necessity certificate", None, || {
        certificates(&cases)
    }));
    results.push(report(4, "monotone consistency", None, || {
        monotone_consistency(&cases)
    }));
    results.push(report(5, "qubit criterion", None, qubit_equivalence));
    results.push(report(6, "T-transform chains", None, t_transform_oracle));
    results.push(report(7, "typical-set rates", Some(secs(30)), aep_rates));
    results.push(report(
        8,
        "incomparability sampling",
        Some(secs(60)),
        incomparability_monte_carlo,
    ));
    results.push(report(9, "command-line pipeline", None, cli_pipeline));

    let failed = results.iter().filter(|&&p| !p).count();
    println!(
        "acceptance: {} passed, {failed} failed",
        results.len() - failed
    );
    if failed > 0 {
        std::process::exit(1);
    }
}
