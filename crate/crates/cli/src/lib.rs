//! Command-line front end: argument parsing, file loading and report
//! formatting around `locc-core`.
//!
//! [`dispatch`] never prints or exits; it returns the exit code and the text
//! destined for stdout (and stderr, on failure) so the binary and the tests
//! share one code path.

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};

use clap::{Args, Parser, Subcommand};
use locc_core::asymptotics::{rate_row, RateRow};
use locc_core::monotones::{monotone_report, MonotoneReport};
use locc_core::protocol::{can_transform, communication_cost, synthesize, validate, Protocol};
use locc_core::sampling::{
    crossing_profile, incomparable_fraction, CrossingHistogram, FractionEstimate,
};
use locc_core::simulator::{
    enumerate_branches, run, verify_transformation, Branch, Transcript, VerifyReport,
};
use locc_core::specvec::{decompose_t_transforms, ProbVector, TTransform};
use locc_core::states::{schmidt_spectrum, PureState};
use locc_core::Error;
use serde::Serialize;

pub const EXIT_OK: i32 = 0;
pub const EXIT_NEGATIVE: i32 = 1;
pub const EXIT_USAGE: i32 = 2;
pub const EXIT_NUMERICAL: i32 = 3;

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CommandResult {
    pub exit_code: i32,
    pub stdout_payload: String,
    /// One-line diagnostic for the error stream.
    pub diagnostic: Option<String>,
}

impl CommandResult {
    fn ok(code: i32, payload: String) -> Self {
        Self {
            exit_code: code,
            stdout_payload: payload,
            diagnostic: None,
        }
    }

    fn failure(code: i32, message: impl Into<String>) -> Self {
        let message: String = message.into();
        let line = message.lines().next().unwrap_or_default().to_string();
        Self {
            exit_code: code,
            stdout_payload: String::new(),
            diagnostic: Some(line),
        }
    }
}

/// Failures at the command boundary, each tied to an exit code.
#[derive(Debug, Clone, PartialEq)]
pub enum CliError {
    Usage(String),
    Parse(String),
    InvariantViolation(String),
    Numerical(String),
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Numerical(_) => EXIT_NUMERICAL,
            _ => EXIT_USAGE,
        }
    }
}

impl std::fmt::Display for CliError {
    fn fmt(&self, f: &mut std::fmt::Formatter<'_>) -> std::fmt::Result {
        match self {
            CliError::Usage(m) => write!(f, "usage error: {m}"),
            CliError::Parse(m) => write!(f, "parse error: {m}"),
            CliError::InvariantViolation(m) => write!(f, "invariant violation: {m}"),
            CliError::Numerical(m) => write!(f, "numerical failure: {m}"),
        }
    }
}

impl std::error::Error for CliError {}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::NumericalFailure(_) => CliError::Numerical(e.to_string()),
            Error::InvalidParameter(_) | Error::TooLarge { .. } => CliError::Usage(e.to_string()),
            _ => CliError::InvariantViolation(e.to_string()),
        }
    }
}

type CliResult<T> = std::result::Result<T, CliError>;

#[derive(Parser, Debug)]
#[command(
    name = "locc",
    version,
    about = "Decide, build and check LOCC transformations of bipartite pure states"
)]
struct Cli {
    /// Print JSON reports instead of text.
    #[arg(long, global = true)]
    json: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Args, Debug)]
struct Pair {
    /// Source state file.
    #[arg(long)]
    source: PathBuf,
    /// Target state file.
    #[arg(long)]
    target: PathBuf,
}

#[derive(Subcommand, Debug)]
enum Command {
    /// Decide whether the source can be turned into the target.
    Check(Pair),
    /// Build a protocol taking the source to the target.
    Synthesize {
        #[command(flatten)]
        pair: Pair,
        /// Where to write the protocol JSON.
        #[arg(long)]
        out: PathBuf,
    },
    /// Run a protocol on a state.
    Simulate {
        #[arg(long)]
        protocol: PathBuf,
        #[arg(long)]
        state: PathBuf,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// List every outcome branch instead of sampling one.
        #[arg(long)]
        enumerate: bool,
    },
    /// Check that every branch of a protocol reaches the target.
    Verify {
        #[arg(long)]
        protocol: PathBuf,
        #[command(flatten)]
        pair: Pair,
    },
    /// Entropy and power sums of both Schmidt spectra.
    Monotones {
        #[command(flatten)]
        pair: Pair,
        /// Power-sum exponents.
        #[arg(long, value_delimiter = ',', default_value = "2,3,4")]
        k: Vec<f64>,
    },
    /// EPR-pair counts for n copies of a state with the given spectrum.
    Rates {
        #[arg(long, value_delimiter = ',', required = true)]
        spectrum: Vec<f64>,
        /// Copy counts, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        n: Vec<usize>,
        #[arg(long)]
        delta: f64,
        #[arg(long)]
        csv: bool,
    },
    /// Fraction of incomparable random pairs, as CSV.
    Sample {
        /// Local dimensions, comma separated.
        #[arg(long, value_delimiter = ',', required = true)]
        dim: Vec<usize>,
        #[arg(long)]
        n: usize,
        #[arg(long, default_value_t = 0)]
        seed: u64,
        /// Append the histogram of partial-sum sign changes.
        #[arg(long)]
        crossings: bool,
    },
    /// T-transform chain taking y to x.
    Decompose {
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        x: Vec<f64>,
        #[arg(
            long,
            value_delimiter = ',',
            required = true,
            allow_hyphen_values = true
        )]
        y: Vec<f64>,
    },
}

/// Parses `argv` (program name first) and runs the subcommand.
pub fn dispatch<I, T>(argv: I) -> CommandResult
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(argv) {
        Ok(cli) => cli,
        Err(e) => {
            use clap::error::ErrorKind;
            return match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => {
                    CommandResult::ok(EXIT_OK, e.to_string())
                }
                _ => CommandResult::failure(
                    EXIT_USAGE,
                    format!("usage error: {}", first_line(&e.to_string())),
                ),
            };
        }
    };
    match execute(cli) {
        Ok(r) => r,
        Err(e) => CommandResult::failure(e.exit_code(), e.to_string()),
    }
}

fn first_line(s: &str) -> &str {
    s.lines()
        .find(|l| !l.trim().is_empty())
        .unwrap_or(s)
        .trim_start_matches("error: ")
}

fn read(path: &Path) -> CliResult<String> {
    fs::read_to_string(path)
        .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))
}

fn parse_json<T: serde::de::DeserializeOwned>(path: &Path) -> CliResult<T> {
    serde_json::from_str(&read(path)?).map_err(|e| {
        let msg = format!("{}: {e}", path.display());
        if e.is_data() {
            CliError::InvariantViolation(msg)
        } else {
            CliError::Parse(msg)
        }
    })
}

/// Reads a state file; normalization and shape are checked while parsing.
pub fn load_state(path: &Path) -> CliResult<PureState> {
    parse_json(path)
}

/// Reads a protocol file and runs the full validation on it.
pub fn load_protocol(path: &Path) -> CliResult<Protocol> {
    let p: Protocol = parse_json(path)?;
    let report = validate(&p);
    match report.first_failure() {
        None => Ok(p),
        Some(reason) => Err(CliError::InvariantViolation(format!(
            "{}: {reason}",
            path.display()
        ))),
    }
}

pub fn save_json<T: Serialize>(path: &Path, value: &T) -> CliResult<()> {
    let text =
        serde_json::to_string_pretty(value).map_err(|e| CliError::Numerical(e.to_string()))?;
    fs::write(path, text + "\n")
        .map_err(|e| CliError::Usage(format!("cannot write {}: {e}", path.display())))
}

fn vector(entries: &[f64]) -> CliResult<ProbVector> {
    ProbVector::new(entries.to_vec()).map_err(|e| CliError::Usage(e.to_string()))
}

fn to_json<T: Serialize>(value: &T) -> String {
    serde_json::to_string_pretty(value).expect("report types serialize") + "\n"
}

fn fmt_vec(v: &[f64]) -> String {
    let parts: Vec<String> = v.iter().map(|x| format!("{x}")).collect();
    format!("({})", parts.join(", "))
}

fn execute(cli: Cli) -> CliResult<CommandResult> {
    let json = cli.json;
    match cli.command {
        Command::Check(pair) => check(&pair, json),
        Command::Synthesize { pair, out } => synthesize_cmd(&pair, &out, json),
        Command::Simulate {
            protocol,
            state,
            seed,
            enumerate,
        } => simulate(&protocol, &state, seed, enumerate, json),
        Command::Verify { protocol, pair } => verify(&protocol, &pair, json),
        Command::Monotones { pair, k } => monotones(&pair, &k, json),
        Command::Rates {
            spectrum,
            n,
            delta,
            csv,
        } => rates(&spectrum, &n, delta, csv, json),
        Command::Sample {
            dim,
            n,
            seed,
            crossings,
        } => sample(&dim, n, seed, crossings, json),
        Command::Decompose { x, y } => decompose(&x, &y, json),
    }
}

#[derive(Serialize)]
struct CheckReport {
    source_spectrum: Vec<f64>,
    target_spectrum: Vec<f64>,
    source_to_target: bool,
    target_to_source: bool,
    relation: &'static str,
}

fn check(pair: &Pair, json: bool) -> CliResult<CommandResult> {
    let psi = load_state(&pair.source)?;
    let phi = load_state(&pair.target)?;
    let forward = can_transform(&psi, &phi)?;
    let backward = can_transform(&phi, &psi)?;
    let relation = match (forward, backward) {
        (true, true) => "equivalent",
        (true, false) => "source_to_target",
        (false, true) => "target_to_source",
        (false, false) => "incomparable",
    };
    let report = CheckReport {
        source_spectrum: schmidt_spectrum(&psi)?.sorted_desc(),
        target_spectrum: schmidt_spectrum(&phi)?.sorted_desc(),
        source_to_target: forward,
        target_to_source: backward,
        relation,
    };
    let code = if forward { EXIT_OK } else { EXIT_NEGATIVE };
    if json {
        return Ok(CommandResult::ok(code, to_json(&report)));
    }
    let yes_no = |b: bool| if b { "yes" } else { "no" };
    let mut out = String::new();
    writeln!(out, "{relation}").unwrap();
    writeln!(out, "source spectrum: {}", fmt_vec(&report.source_spectrum)).unwrap();
    writeln!(out, "target spectrum: {}", fmt_vec(&report.target_spectrum)).unwrap();
    writeln!(out, "source -> target: {}", yes_no(forward)).unwrap();
    writeln!(out, "target -> source: {}", yes_no(backward)).unwrap();
    Ok(CommandResult::ok(code, out))
}

#[derive(Serialize)]
struct SynthesisSummary<'a> {
    out: String,
    steps: usize,
    measurements: usize,
    communication_bits: u32,
    synthesis: &'a [locc_core::protocol::SynthesisStepParams],
}

fn synthesize_cmd(pair: &Pair, out_path: &Path, json: bool) -> CliResult<CommandResult> {
    let psi = load_state(&pair.source)?;
    let phi = load_state(&pair.target)?;
    let protocol = match synthesize(&psi, &phi) {
        Ok(p) => p,
        Err(Error::NotMajorized) => {
            let mut r = CommandResult::ok(
                EXIT_NEGATIVE,
                "not transformable: no protocol written\n".into(),
            );
            r.diagnostic = Some("source spectrum is not majorized by the target spectrum".into());
            return Ok(r);
        }
        Err(e) => return Err(e.into()),
    };
    save_json(out_path, &protocol)?;
    let summary = SynthesisSummary {
        out: out_path.display().to_string(),
        steps: protocol.steps.len(),
        measurements: protocol.measurement_count(),
        communication_bits: communication_cost(&protocol),
        synthesis: &protocol.synthesis,
    };
    if json {
        return Ok(CommandResult::ok(EXIT_OK, to_json(&summary)));
    }
    let mut out = String::new();
    writeln!(out, "wrote {}", summary.out).unwrap();
    writeln!(out, "steps: {}", summary.steps).unwrap();
    writeln!(out, "measurements: {}", summary.measurements).unwrap();
    writeln!(out, "communication bits: {}", summary.communication_bits).unwrap();
    for (i, s) in protocol.synthesis.iter().enumerate() {
        writeln!(
            out,
            "block {i} on ({}, {}): alpha = ({}, {}), beta = ({}, {}), gamma = {}, delta = {}",
            s.block.0,
            s.block.1,
            s.alpha_plus,
            s.alpha_minus,
            s.beta_plus,
            s.beta_minus,
            s.gamma,
            s.delta
        )
        .unwrap();
    }
    Ok(CommandResult::ok(EXIT_OK, out))
}

#[derive(Serialize)]
struct SampledRun {
    seed: u64,
    final_state: PureState,
    transcript: Transcript,
}

fn simulate(
    protocol: &Path,
    state: &Path,
    seed: u64,
    enumerate: bool,
    json: bool,
) -> CliResult<CommandResult> {
    let p = load_protocol(protocol)?;
    let psi = load_state(state)?;
    if enumerate {
        let branches: Vec<Branch> = enumerate_branches(&p, &psi)?;
        if json {
            return Ok(CommandResult::ok(EXIT_OK, to_json(&branches)));
        }
        let mut out = String::new();
        writeln!(out, "branches: {}", branches.len()).unwrap();
        for (i, b) in branches.iter().enumerate() {
            let outcomes: Vec<String> = b
                .outcomes
                .iter()
                .map(|o| format!("{}={}", o.label, o.value))
                .collect();
            let spectrum = schmidt_spectrum(&b.final_state)?.sorted_desc();
            writeln!(
                out,
                "branch {i}: probability {} outcomes [{}] final spectrum {}",
                b.probability,
                outcomes.join(", "),
                fmt_vec(&spectrum)
            )
            .unwrap();
        }
        return Ok(CommandResult::ok(EXIT_OK, out));
    }
    let (final_state, transcript) = run(&p, &psi, seed)?;
    if json {
        return Ok(CommandResult::ok(
            EXIT_OK,
            to_json(&SampledRun {
                seed,
                final_state,
                transcript,
            }),
        ));
    }
    let mut out = String::new();
    writeln!(out, "seed: {seed}").unwrap();
    for e in &transcript.events {
        let outcome = e.outcome.map_or("-".to_string(), |o| o.to_string());
        writeln!(
            out,
            "step {}: {} by {} outcome {outcome} probability {}",
            e.step, e.kind, e.party, e.probability
        )
        .unwrap();
    }
    writeln!(
        out,
        "final spectrum: {}",
        fmt_vec(&schmidt_spectrum(&final_state)?.sorted_desc())
    )
    .unwrap();
    Ok(CommandResult::ok(EXIT_OK, out))
}

fn verify(protocol: &Path, pair: &Pair, json: bool) -> CliResult<CommandResult> {
    let p = load_protocol(protocol)?;
    let psi = load_state(&pair.source)?;
    let phi = load_state(&pair.target)?;
    let report: VerifyReport = verify_transformation(&p, &psi, &phi)?;
    let code = if report.pass { EXIT_OK } else { EXIT_NEGATIVE };
    if json {
        return Ok(CommandResult::ok(code, to_json(&report)));
    }
    let mut out = String::new();
    writeln!(out, "{}", if report.pass { "pass" } else { "fail" }).unwrap();
    writeln!(out, "branches: {}", report.branches).unwrap();
    writeln!(out, "min fidelity: {}", report.min_fidelity).unwrap();
    writeln!(out, "total probability: {}", report.total_probability).unwrap();
    writeln!(out, "communication bits: {}", report.communication_cost).unwrap();
    Ok(CommandResult::ok(code, out))
}

fn monotones(pair: &Pair, ks: &[f64], json: bool) -> CliResult<CommandResult> {
    let psi = load_state(&pair.source)?;
    let phi = load_state(&pair.target)?;
    let report: MonotoneReport = monotone_report(&psi, &phi, ks)?;
    if json {
        return Ok(CommandResult::ok(EXIT_OK, to_json(&report)));
    }
    let mut out = String::new();
    writeln!(
        out,
        "entropy: source {} target {}",
        report.entropy_source, report.entropy_target
    )
    .unwrap();
    for e in &report.power_sums {
        writeln!(
            out,
            "power sum k={}: source {} target {}",
            e.k, e.source, e.target
        )
        .unwrap();
    }
    writeln!(out, "consistent: {}", report.consistent).unwrap();
    writeln!(out, "transformable: {}", report.transformable).unwrap();
    Ok(CommandResult::ok(EXIT_OK, out))
}

const RATES_HEADER: &str =
    "n,delta,entropy,m_formation,m_distillation,epsilon,formation_rate,distillation_rate,certified";

fn rates(
    spectrum: &[f64],
    ns: &[usize],
    delta: f64,
    csv: bool,
    json: bool,
) -> CliResult<CommandResult> {
    let p = vector(spectrum)?;
    let rows = ns
        .iter()
        .map(|&n| rate_row(&p, n, delta))
        .collect::<locc_core::Result<Vec<RateRow>>>()?;
    if json {
        return Ok(CommandResult::ok(EXIT_OK, to_json(&rows)));
    }
    let mut out = String::new();
    if csv {
        writeln!(out, "{RATES_HEADER}").unwrap();
        for r in &rows {
            writeln!(
                out,
                "{},{},{},{},{},{},{},{},{}",
                r.n,
                r.delta,
                r.entropy,
                r.m_formation,
                r.m_distillation,
                r.epsilon,
                r.formation_rate,
                r.distillation_rate,
                r.certified
            )
            .unwrap();
        }
    } else {
        for r in &rows {
            writeln!(
                out,
                "n={} delta={}: entropy {:.6}, formation {} pairs (rate {:.4}), distillation {} pairs (rate {:.4}), \
                 discarded {:.3e}, certified {}",
                r.n,
                r.delta,
                r.entropy,
                r.m_formation,
                r.formation_rate,
                r.m_distillation,
                r.distillation_rate,
                r.epsilon,
                r.certified
            )
            .unwrap();
        }
    }
    Ok(CommandResult::ok(EXIT_OK, out))
}

#[derive(Serialize)]
struct SampleReport {
    estimates: Vec<FractionEstimate>,
    #[serde(skip_serializing_if = "Vec::is_empty")]
    crossings: Vec<CrossingHistogram>,
}

fn sample(
    dims: &[usize],
    n: usize,
    seed: u64,
    crossings: bool,
    json: bool,
) -> CliResult<CommandResult> {
    let estimates = dims
        .iter()
        .map(|&d| incomparable_fraction(d, n, seed))
        .collect::<locc_core::Result<Vec<_>>>()?;
    let histograms = if crossings {
        dims.iter()
            .map(|&d| crossing_profile(d, n, seed))
            .collect::<locc_core::Result<Vec<_>>>()?
    } else {
        Vec::new()
    };
    if json {
        return Ok(CommandResult::ok(
            EXIT_OK,
            to_json(&SampleReport {
                estimates,
                crossings: histograms,
            }),
        ));
    }
    let mut out = String::from("d,n_samples,fraction,std_error,seed\n");
    for e in &estimates {
        writeln!(
            out,
            "{},{},{},{},{}",
            e.dimension, e.n_samples, e.fraction, e.std_error, e.seed
        )
        .unwrap();
    }
    if crossings {
        writeln!(out, "\nd,sign_changes,count").unwrap();
        for h in &histograms {
            for (changes, count) in h.counts.iter().enumerate() {
                writeln!(out, "{},{changes},{count}", h.dimension).unwrap();
            }
        }
    }
    Ok(CommandResult::ok(EXIT_OK, out))
}

#[derive(Serialize)]
struct DecomposeReport {
    majorized: bool,
    chain: Vec<TTransform>,
}

fn decompose(x: &[f64], y: &[f64], json: bool) -> CliResult<CommandResult> {
    let (x, y) = (vector(x)?, vector(y)?);
    let (code, report) = match decompose_t_transforms(&x, &y) {
        Ok(chain) => (
            EXIT_OK,
            DecomposeReport {
                majorized: true,
                chain,
            },
        ),
        Err(Error::NotMajorized) => (
            EXIT_NEGATIVE,
            DecomposeReport {
                majorized: false,
                chain: Vec::new(),
            },
        ),
        Err(e) => return Err(e.into()),
    };
    if json {
        return Ok(CommandResult::ok(code, to_json(&report)));
    }
    if !report.majorized {
        return Ok(CommandResult::ok(code, "x is not majorized by y\n".into()));
    }
    let mut out = format!(
        "{} T-transforms, applied in order to y sorted descending\n",
        report.chain.len()
    );
    for t in &report.chain {
        writeln!(out, "T(i={}, j={}, t={})", t.i, t.j, t.t).unwrap();
    }
    Ok(CommandResult::ok(code, out))
}
