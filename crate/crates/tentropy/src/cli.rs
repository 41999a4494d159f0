//! Command-line surface: system-file ingestion, the four subcommands, and
//! report emission.
//!
//! Systems are described by a small JSON object:
//!
//! ```json
//! {"n": 4, "alpha": [1,0,3,3], "weights": [1.0,1.0,1.0,2.0],
//!  "potential": [0,0,0,0], "measure": [0,0,0,1]}
//! ```
//!
//! `potential` and `measure` are optional (`potential` defaults to 0).
//! Weights are stored raw, never as logs, so exact zeros survive the trip;
//! `−∞` values serialize as the literal string `"-inf"` everywhere.
//!
//! Exit codes: 0 all checks passed, 1 input or validation error, 2 a
//! mathematical check failed beyond tolerance. Reports are deterministic:
//! a fixed seed reproduces byte-identical output (timing is opt-in via
//! `--timing` precisely so the default stays reproducible).

use std::fmt::Write as _;
use std::fs;
use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Parser, Subcommand, ValueEnum};
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};
use serde_json::{json, Value};

use crate::dynamics::{mix, FiniteSystem, Measure};
use crate::entropy::{tau, TauOptions};
use crate::transfer::{Potential, SpectralResult, TransferOperator, DEFAULT_SQUARINGS};
use crate::varprinciple::{
    check_definition_equivalence, check_variational_principle, legendre_dual_tau, EquivOptions,
    LegendreOptions, VpOptions, DEFAULT_EQUIV_TOL, DEFAULT_LEGENDRE_TOL, DEFAULT_VP_TOL,
};
use crate::xreal::{ExtendedReal, Finite, NegInf};
use crate::{Error, Result};

/// Default master seed for randomized commands; `TENTROPY_SEED` overrides
/// it, an explicit `--seed` overrides both.
pub const DEFAULT_SEED: u64 = 7;

/// Mass tolerance when ingesting externally produced measures.
pub const INGEST_MASS_TOL: f64 = 1e-9;

/// Default tolerance for cross-engine spectral disagreement.
pub const DEFAULT_SPECTRAL_TOL: f64 = 1e-3;

const CSV_HEADER: &str = "trial,n,lambda,best,gap,pass";

/// t-entropy and spectral-radius checks for transfer operators on finite
/// dynamical systems.
#[derive(Debug, Parser)]
#[command(name = "tentropy", version, about)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Parse a system file and check the transfer-operator axioms
    /// (positivity, homological identity).
    Validate {
        /// Path to the system JSON file.
        system: PathBuf,
    },
    /// Compute the log spectral radius λ(φ) of the tilted operator.
    Spectral {
        system: PathBuf,
        /// Engine: exact cycle means, matrix squaring, or both.
        #[arg(long, value_enum, default_value_t = MethodArg::Both)]
        method: MethodArg,
        /// Allowed disagreement between the two engines (with --method both).
        #[arg(long, default_value_t = DEFAULT_SPECTRAL_TOL)]
        tol: f64,
    },
    /// Compute the t-entropy τ(μ) of a measure.
    Tau {
        system: PathBuf,
        /// Read μ from a JSON file holding a bare array of weights.
        #[arg(long, conflicts_with_all = ["cycle", "mixture"])]
        measure: Option<PathBuf>,
        /// Use the uniform measure on the k-th cycle (0-based, cycles
        /// ordered by smallest member).
        #[arg(long, conflicts_with = "mixture")]
        cycle: Option<usize>,
        /// Use a mixture of cycle measures, coefficients comma-separated in
        /// cycle order, e.g. "0.25,0.75".
        #[arg(long)]
        mixture: Option<String>,
        /// Bound for the outer infimum over n.
        #[arg(long, default_value_t = 6)]
        n_max: usize,
        /// Number of random partitions in the search family.
        #[arg(long, default_value_t = 32)]
        partitions: usize,
        #[arg(long, env = "TENTROPY_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
    },
    /// Run randomized verification sweeps for the core identities.
    Verify {
        #[arg(long, value_enum, default_value_t = SuiteArg::All)]
        suite: SuiteArg,
        /// Trials per suite (defaults: vp 100, equiv 50, legendre 20).
        #[arg(long)]
        count: Option<usize>,
        /// Largest phase-space size (defaults: vp 20, equiv 8, legendre 12).
        #[arg(long)]
        n_points: Option<usize>,
        #[arg(long, env = "TENTROPY_SEED", default_value_t = DEFAULT_SEED)]
        seed: u64,
        /// Per-suite tolerance override (defaults: vp 1e-8, equiv 1e-6,
        /// legendre 1e-3).
        #[arg(long)]
        tol: Option<f64>,
        #[arg(long, value_enum, default_value_t = FormatArg::Json)]
        format: FormatArg,
        /// Include wall time in the report (breaks byte-for-byte
        /// reproducibility, hence opt-in).
        #[arg(long)]
        timing: bool,
    },
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum MethodArg {
    Cycles,
    Power,
    Both,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum SuiteArg {
    Vp,
    Equiv,
    Legendre,
    All,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
pub enum FormatArg {
    Json,
    Csv,
    Md,
}

/// A rendered report plus the process exit code (0 pass, 1 input error,
/// 2 mathematical check failed).
#[derive(Debug)]
pub struct CmdOutput {
    pub report: String,
    pub exit_code: i32,
}

/// On-disk system description. Field names and semantics are part of the
/// file-format contract.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SystemSpec {
    pub n: usize,
    pub alpha: Vec<i64>,
    pub weights: Vec<f64>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub potential: Option<Vec<f64>>,
    #[serde(default, skip_serializing_if = "Option::is_none")]
    pub measure: Option<Vec<f64>>,
}

impl SystemSpec {
    pub fn parse(text: &str) -> Result<Self> {
        Ok(serde_json::from_str(text)?)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&fs::read_to_string(path)?)
    }

    /// Builds the validated model: operator, potential (zero when absent),
    /// and the optional measure (mass checked at ingestion tolerance).
    pub fn build(&self) -> Result<(TransferOperator, Potential, Option<Measure>)> {
        if self.n == 0 {
            return Err(Error::Invalid("n must be positive".into()));
        }
        let check_len = |what: &'static str, got: usize| -> Result<()> {
            if got != self.n {
                Err(Error::LengthMismatch {
                    what,
                    got,
                    expected: self.n,
                })
            } else {
                Ok(())
            }
        };
        check_len("alpha", self.alpha.len())?;
        check_len("weights", self.weights.len())?;

        let mut alpha = Vec::with_capacity(self.n);
        for (position, &value) in self.alpha.iter().enumerate() {
            if value < 0 || value as usize >= self.n {
                return Err(Error::OutOfRange {
                    position,
                    value,
                    size: self.n,
                });
            }
            alpha.push(value as usize);
        }
        let system = FiniteSystem::new(alpha)?;
        let operator = TransferOperator::from_weights(system, self.weights.clone())?;

        let potential = match &self.potential {
            Some(phi) => {
                check_len("potential", phi.len())?;
                Potential::new(phi.clone())?
            }
            None => Potential::zero(self.n),
        };
        let measure = match &self.measure {
            Some(m) => {
                check_len("measure", m.len())?;
                Some(Measure::with_mass_tol(m.clone(), INGEST_MASS_TOL)?)
            }
            None => None,
        };
        Ok((operator, potential, measure))
    }

    /// Rebuilds a spec from model values, for round-tripping.
    pub fn from_model(
        t: &TransferOperator,
        potential: Option<&Potential>,
        measure: Option<&Measure>,
    ) -> Self {
        SystemSpec {
            n: t.size(),
            alpha: t.system().alpha().iter().map(|&a| a as i64).collect(),
            weights: t.weights().to_vec(),
            potential: potential.map(|p| p.values().to_vec()),
            measure: measure.map(|m| m.weights().to_vec()),
        }
    }
}

/// Per-trial seed derivation (splitmix64 of master and index), stable
/// regardless of evaluation order.
pub fn derive_seed(master: u64, index: u64) -> u64 {
    let mut z = master
        .wrapping_add(index.wrapping_add(1).wrapping_mul(0x9E37_79B9_7F4A_7C15));
    z = (z ^ (z >> 30)).wrapping_mul(0xBF58_476D_1CE4_E5B9);
    z = (z ^ (z >> 27)).wrapping_mul(0x94D0_49BB_1331_11EB);
    z ^ (z >> 31)
}

/// FNV-1a-64 fingerprint of a system instance (map, weight bits, potential
/// bits), used to identify sweep trials in reports.
pub fn system_hash(t: &TransferOperator, phi: &Potential) -> String {
    let mut h: u64 = 0xcbf2_9ce4_8422_2325;
    let mut eat = |byte: u8| {
        h ^= byte as u64;
        h = h.wrapping_mul(0x0000_0100_0000_01b3);
    };
    for b in (t.size() as u64).to_le_bytes() {
        eat(b);
    }
    for &a in t.system().alpha() {
        for b in (a as u64).to_le_bytes() {
            eat(b);
        }
    }
    for &w in t.weights() {
        for b in w.to_bits().to_le_bytes() {
            eat(b);
        }
    }
    for &p in phi.values() {
        for b in p.to_bits().to_le_bytes() {
            eat(b);
        }
    }
    format!("{h:016x}")
}

/// Sweep generator settings: α uniform over self-maps, ln w uniform in
/// [−2,2] with each weight zeroed with probability `zero_weight_prob`, φ
/// uniform in [−1,1].
#[derive(Debug, Clone)]
pub struct RandomSystemConfig {
    pub n_min: usize,
    pub n_max: usize,
    pub zero_weight_prob: f64,
}

impl RandomSystemConfig {
    pub fn up_to(n_max: usize) -> Self {
        RandomSystemConfig {
            n_min: 2,
            n_max,
            zero_weight_prob: 0.1,
        }
    }
}

/// Draws a random system and potential for sweeps.
pub fn random_system(
    cfg: &RandomSystemConfig,
    rng: &mut ChaCha8Rng,
) -> (TransferOperator, Potential) {
    let n = rng.gen_range(cfg.n_min..=cfg.n_max);
    let alpha: Vec<usize> = (0..n).map(|_| rng.gen_range(0..n)).collect();
    let weights: Vec<f64> = (0..n)
        .map(|_| {
            if rng.gen_bool(cfg.zero_weight_prob) {
                0.0
            } else {
                rng.gen_range(-2.0..2.0f64).exp()
            }
        })
        .collect();
    let phi: Vec<f64> = (0..n).map(|_| rng.gen_range(-1.0..1.0)).collect();
    (
        TransferOperator::from_weights(FiniteSystem::new(alpha).unwrap(), weights).unwrap(),
        Potential::new(phi).unwrap(),
    )
}

/// Dispatches a parsed command.
pub fn run(cmd: Command) -> Result<CmdOutput> {
    match cmd {
        Command::Validate { system } => cmd_validate(&system),
        Command::Spectral {
            system,
            method,
            tol,
        } => cmd_spectral(&system, method, tol),
        Command::Tau {
            system,
            measure,
            cycle,
            mixture,
            n_max,
            partitions,
            seed,
        } => {
            let source = match (measure, cycle, mixture) {
                (Some(path), None, None) => MeasureSource::File(path),
                (None, Some(k), None) => MeasureSource::Cycle(k),
                (None, None, Some(spec)) => MeasureSource::Mixture(spec),
                (None, None, None) => MeasureSource::FromSpec,
                _ => {
                    return Err(Error::Invalid(
                        "--measure, --cycle and --mixture are mutually exclusive".into(),
                    ));
                }
            };
            cmd_tau(&system, source, n_max, partitions, seed)
        }
        Command::Verify {
            suite,
            count,
            n_points,
            seed,
            tol,
            format,
            timing,
        } => cmd_verify(&VerifyArgs {
            suite,
            count,
            n_points,
            seed,
            tol,
            format,
            timing,
        }),
    }
}

/// Where `cmd_tau` gets its measure from.
#[derive(Debug, Clone)]
pub enum MeasureSource {
    /// The `measure` field of the system file.
    FromSpec,
    /// A JSON file holding a bare weight array.
    File(PathBuf),
    /// Uniform measure on the k-th cycle.
    Cycle(usize),
    /// Mixture of cycle measures with the given comma-separated
    /// coefficients.
    Mixture(String),
}

/// Parses a system file and checks the transfer-operator axioms on random
/// inputs: positivity of `Ag` for nonnegative `g` and the homological
/// identity residual.
pub fn cmd_validate(path: &Path) -> Result<CmdOutput> {
    let spec = SystemSpec::load(path)?;
    let (t, phi, measure) = spec.build()?;

    // Fixed probe seed: validation has no randomness knobs and must be
    // reproducible.
    let mut rng = ChaCha8Rng::seed_from_u64(0x7e57);
    let n = t.size();
    let mut residual = 0.0f64;
    let mut positivity_ok = true;
    for _ in 0..100 {
        let f: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let g: Vec<f64> = (0..n).map(|_| rng.gen_range(0.0..1.0)).collect();
        let ag = t.apply(&g);
        positivity_ok &= ag.iter().all(|&v| v >= 0.0);
        let fg: Vec<f64> = (0..n).map(|y| f[t.system().step(y)] * g[y]).collect();
        let lhs = t.apply(&fg);
        for x in 0..n {
            residual = residual.max((lhs[x] - f[x] * ag[x]).abs());
        }
    }
    let passed = positivity_ok && residual <= 1e-12;

    let report = json!({
        "command": "validate",
        "config": { "probe_pairs": 100, "residual_tol": 1e-12 },
        "inputs": {
            "file": path.display().to_string(),
            "system_hash": system_hash(&t, &phi),
            "n": n,
        },
        "results": {
            "cycles": t.system().cycles().iter().map(|c| c.points().to_vec()).collect::<Vec<_>>(),
            "homological_residual": residual,
            "positivity_ok": positivity_ok,
            "has_measure": measure.is_some(),
            "passed": passed,
        },
    });
    Ok(CmdOutput {
        report: render_json(&report),
        exit_code: if passed { 0 } else { 1 },
    })
}

fn spectral_json(r: &SpectralResult) -> Value {
    json!({
        "lambda": r.log_radius,
        "witness_cycle": r.witness_cycle.as_ref().map(|c| c.points().to_vec()),
        "iterations": r.iterations,
    })
}

/// Computes λ(φ) by the requested engine(s); exits 2 when both engines are
/// requested and disagree beyond `tol`.
pub fn cmd_spectral(path: &Path, method: MethodArg, tol: f64) -> Result<CmdOutput> {
    let spec = SystemSpec::load(path)?;
    let (t, phi, _) = spec.build()?;

    let cycles = matches!(method, MethodArg::Cycles | MethodArg::Both)
        .then(|| t.log_spectral_radius_cycles(&phi));
    let power = matches!(method, MethodArg::Power | MethodArg::Both)
        .then(|| t.log_spectral_radius_power(&phi, DEFAULT_SQUARINGS));

    let (disagreement, passed) = match (&cycles, &power) {
        (Some(c), Some(p)) => {
            let d = c.log_radius.abs_diff(p.log_radius);
            (Some(d), d <= tol)
        }
        _ => (None, true),
    };

    let report = json!({
        "command": "spectral",
        "config": { "method": format!("{method:?}").to_lowercase(), "tol": tol, "squarings": DEFAULT_SQUARINGS },
        "inputs": {
            "file": path.display().to_string(),
            "system_hash": system_hash(&t, &phi),
            "n": t.size(),
        },
        "results": {
            "cycles": cycles.as_ref().map(spectral_json),
            "power": power.as_ref().map(spectral_json),
            "disagreement": disagreement.map(json_num),
            "passed": passed,
        },
    });
    Ok(CmdOutput {
        report: render_json(&report),
        exit_code: if passed { 0 } else { 2 },
    })
}

/// Computes τ(μ) with the measure taken from the requested source.
pub fn cmd_tau(
    path: &Path,
    source: MeasureSource,
    n_max: usize,
    partitions: usize,
    seed: u64,
) -> Result<CmdOutput> {
    let spec = SystemSpec::load(path)?;
    let (t, phi, spec_measure) = spec.build()?;
    let sys = t.system();

    let (mu, source_desc) = match source {
        MeasureSource::FromSpec => {
            let mu = spec_measure.ok_or_else(|| {
                Error::Invalid(
                    "no measure: give --measure/--cycle/--mixture or add a \"measure\" field"
                        .into(),
                )
            })?;
            (mu, "spec".to_string())
        }
        MeasureSource::File(p) => {
            let weights: Vec<f64> = serde_json::from_str(&fs::read_to_string(&p)?)?;
            if weights.len() != sys.size() {
                return Err(Error::LengthMismatch {
                    what: "measure",
                    got: weights.len(),
                    expected: sys.size(),
                });
            }
            (
                Measure::with_mass_tol(weights, INGEST_MASS_TOL)?,
                format!("file:{}", p.display()),
            )
        }
        MeasureSource::Cycle(k) => {
            let cycles = sys.cycles();
            let c = cycles.get(k).ok_or_else(|| {
                Error::Invalid(format!(
                    "cycle index {k} out of range: system has {} cycles",
                    cycles.len()
                ))
            })?;
            (sys.cycle_measure(c)?, format!("cycle:{k}"))
        }
        MeasureSource::Mixture(text) => {
            let coeffs: Vec<f64> = text
                .split(',')
                .map(|s| {
                    s.trim()
                        .parse::<f64>()
                        .map_err(|e| Error::Invalid(format!("bad mixture coefficient {s:?}: {e}")))
                })
                .collect::<Result<_>>()?;
            let cycles = sys.cycles();
            if coeffs.len() != cycles.len() {
                return Err(Error::LengthMismatch {
                    what: "mixture coefficients",
                    got: coeffs.len(),
                    expected: cycles.len(),
                });
            }
            let sum: f64 = coeffs.iter().sum();
            if (sum - 1.0).abs() > INGEST_MASS_TOL {
                return Err(Error::BadCoefficients {
                    reason: format!("coefficients sum to {sum}, not 1"),
                });
            }
            let normalized: Vec<f64> = coeffs.iter().map(|&c| c / sum).collect();
            let measures: Vec<Measure> = cycles
                .iter()
                .map(|c| sys.cycle_measure(c))
                .collect::<Result<_>>()?;
            (mix(&measures, &normalized)?, format!("mixture:{text}"))
        }
    };

    let opts = TauOptions {
        n_max,
        random_partitions: partitions,
        seed,
        ..TauOptions::default()
    };
    let result = tau(&t, &mu, &opts);

    let report = json!({
        "command": "tau",
        "config": {
            "n_max": n_max,
            "partitions": partitions,
            "seed": seed,
            "invariant_tol": opts.invariant_tol,
        },
        "inputs": {
            "file": path.display().to_string(),
            "system_hash": system_hash(&t, &phi),
            "n": t.size(),
            "measure": mu.weights(),
            "measure_source": source_desc,
        },
        "results": {
            "tau": result.tau,
            "definition": if result.invariant {
                "new (m = mu substituted; measure is invariant)"
            } else {
                "original (sup over m; measure is not invariant)"
            },
            "witness": {
                "n": result.best_n,
                "partition": result.best_partition_id.to_string(),
                "partition_size": result.best_partition.len(),
            },
            "best_m": result.best_m.as_ref().map(|m| m.weights().to_vec()),
            "evaluations": result.evaluations,
        },
    });
    Ok(CmdOutput {
        report: render_json(&report),
        exit_code: 0,
    })
}

/// Settings for [`cmd_verify`].
#[derive(Debug, Clone)]
pub struct VerifyArgs {
    pub suite: SuiteArg,
    pub count: Option<usize>,
    pub n_points: Option<usize>,
    pub seed: u64,
    pub tol: Option<f64>,
    pub format: FormatArg,
    pub timing: bool,
}

#[derive(Debug, Clone, Serialize)]
struct TrialRow {
    trial: usize,
    n: usize,
    hash: String,
    lambda: ExtendedReal,
    best: ExtendedReal,
    gap: f64,
    pass: bool,
}

#[derive(Debug)]
struct SuiteOutcome {
    name: &'static str,
    tol: f64,
    rows: Vec<TrialRow>,
    passed: bool,
}

/// Runs the randomized verification sweeps and renders the per-trial rows
/// in the requested format.
pub fn cmd_verify(args: &VerifyArgs) -> Result<CmdOutput> {
    let started = Instant::now();
    let suites: Vec<SuiteArg> = match args.suite {
        SuiteArg::All => vec![SuiteArg::Vp, SuiteArg::Equiv, SuiteArg::Legendre],
        s => vec![s],
    };

    let mut outcomes = Vec::new();
    for suite in &suites {
        let outcome = match suite {
            SuiteArg::Vp => run_vp_suite(args),
            SuiteArg::Equiv => run_equiv_suite(args),
            SuiteArg::Legendre => run_legendre_suite(args),
            SuiteArg::All => unreachable!(),
        };
        outcomes.push(outcome);
    }
    let passed = outcomes.iter().all(|o| o.passed);
    let timing_ms = args.timing.then(|| started.elapsed().as_millis());

    let report = match args.format {
        FormatArg::Json => render_verify_json(args, &outcomes, passed, timing_ms),
        FormatArg::Csv => render_verify_csv(&outcomes),
        FormatArg::Md => render_verify_md(args, &outcomes, passed, timing_ms),
    };
    Ok(CmdOutput {
        report,
        exit_code: if passed { 0 } else { 2 },
    })
}

/// Variational-principle sweep: λ(φ) must equal the best `μ(φ) + τ(μ)`
/// over cycle measures, with no invariant mixture exceeding it.
fn run_vp_suite(args: &VerifyArgs) -> SuiteOutcome {
    let count = args.count.unwrap_or(100);
    let tol = args.tol.unwrap_or(DEFAULT_VP_TOL);
    let cfg = RandomSystemConfig::up_to(args.n_points.unwrap_or(20));

    let mut rows = Vec::with_capacity(count);
    for trial in 0..count {
        let trial_seed = derive_seed(args.seed, trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let (t, phi) = random_system(&cfg, &mut rng);
        let report = check_variational_principle(
            &t,
            &phi,
            &VpOptions {
                tol,
                mixtures: 100,
                seed: rng.gen(),
            },
        );
        rows.push(TrialRow {
            trial,
            n: t.size(),
            hash: system_hash(&t, &phi),
            lambda: report.lambda,
            best: report.best_value,
            gap: report.gap,
            pass: report.passed,
        });
    }
    let passed = rows.iter().all(|r| r.pass);
    SuiteOutcome {
        name: "vp",
        tol,
        rows,
        passed,
    }
}

/// Definition-equivalence sweep: both t-entropy definitions agree on every
/// cycle measure and on random invariant mixtures; τ'ₙ never exceeds τₙ.
/// Row columns carry (old τ, new τ, old − new) for the worst measure.
fn run_equiv_suite(args: &VerifyArgs) -> SuiteOutcome {
    let count = args.count.unwrap_or(50);
    let tol = args.tol.unwrap_or(DEFAULT_EQUIV_TOL);
    let cfg = RandomSystemConfig::up_to(args.n_points.unwrap_or(8));

    let mut rows = Vec::with_capacity(count);
    for trial in 0..count {
        let trial_seed = derive_seed(args.seed, trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let (t, phi) = random_system(&cfg, &mut rng);
        let sys = t.system();

        let mut measures: Vec<Measure> = sys
            .cycles()
            .iter()
            .map(|c| sys.cycle_measure(c).unwrap())
            .collect();
        for _ in 0..3 {
            measures.push(sys.random_invariant_measure(&mut rng));
        }

        let mut worst: Option<(f64, ExtendedReal, ExtendedReal)> = None;
        let mut pass = true;
        for mu in &measures {
            let opts = EquivOptions {
                tol,
                tau: TauOptions {
                    n_max: 4,
                    random_partitions: 32,
                    seed: rng.gen(),
                    ..TauOptions::default()
                },
            };
            let report = check_definition_equivalence(&t, mu, &opts)
                .expect("sampled measures are invariant");
            pass &= report.passed && report.worst_dominance <= 1e-9;
            let gap = signed_gap(report.old_value, report.new_value);
            if worst.is_none() || gap.abs() > worst.as_ref().unwrap().0.abs() {
                worst = Some((gap, report.old_value, report.new_value));
            }
        }
        let (gap, old_value, new_value) = worst.expect("at least one cycle measure");
        rows.push(TrialRow {
            trial,
            n: t.size(),
            hash: system_hash(&t, &phi),
            lambda: old_value,
            best: new_value,
            gap,
            pass,
        });
    }
    let passed = rows.iter().all(|r| r.pass);
    SuiteOutcome {
        name: "equiv",
        tol,
        rows,
        passed,
    }
}

/// Legendre sweep: the exact mixture value of τ(μ), the subgradient
/// minimization of λ(φ) − μ(φ), and the full search τ(μ) must all agree.
/// Row columns carry (exact, numeric, numeric − exact) for the worst
/// measure.
fn run_legendre_suite(args: &VerifyArgs) -> SuiteOutcome {
    let count = args.count.unwrap_or(20);
    let tol = args.tol.unwrap_or(DEFAULT_LEGENDRE_TOL);
    let cfg = RandomSystemConfig::up_to(args.n_points.unwrap_or(12));

    let mut rows = Vec::with_capacity(count);
    for trial in 0..count {
        let trial_seed = derive_seed(args.seed, trial as u64);
        let mut rng = ChaCha8Rng::seed_from_u64(trial_seed);
        let (t, phi) = random_system(&cfg, &mut rng);
        let sys = t.system();

        let mut measures: Vec<Measure> = sys
            .cycles()
            .iter()
            .map(|c| sys.cycle_measure(c).unwrap())
            .collect();
        for _ in 0..20 {
            measures.push(sys.random_invariant_measure(&mut rng));
        }

        let opts = LegendreOptions {
            tol,
            ..LegendreOptions::default()
        };
        let mut worst: Option<(f64, ExtendedReal, ExtendedReal)> = None;
        let mut pass = true;
        for mu in &measures {
            let report = legendre_dual_tau(&t, mu, &opts)
                .expect("sampled measures are invariant");
            let search = tau(
                &t,
                mu,
                &TauOptions {
                    seed: rng.gen(),
                    ..TauOptions::default()
                },
            );
            pass &= report.converged && report.value.abs_diff(search.tau) <= tol;
            let numeric = match report.numeric {
                Some(v) => Finite(v),
                None => NegInf,
            };
            let gap = signed_gap(numeric, report.value);
            if worst.is_none() || gap.abs() > worst.as_ref().unwrap().0.abs() {
                worst = Some((gap, report.value, numeric));
            }
        }
        let (gap, exact, numeric) = worst.expect("at least one cycle measure");
        rows.push(TrialRow {
            trial,
            n: t.size(),
            hash: system_hash(&t, &phi),
            lambda: exact,
            best: numeric,
            gap,
            pass,
        });
    }
    let passed = rows.iter().all(|r| r.pass);
    SuiteOutcome {
        name: "legendre",
        tol,
        rows,
        passed,
    }
}

fn signed_gap(a: ExtendedReal, b: ExtendedReal) -> f64 {
    match (a, b) {
        (NegInf, NegInf) => 0.0,
        (Finite(x), Finite(y)) => x - y,
        (Finite(_), NegInf) => f64::INFINITY,
        (NegInf, Finite(_)) => f64::NEG_INFINITY,
    }
}

/// JSON-safe float: non-finite values become strings.
fn json_num(x: f64) -> Value {
    match serde_json::Number::from_f64(x) {
        Some(n) => Value::Number(n),
        None => Value::String(if x > 0.0 { "inf" } else { "-inf" }.to_string()),
    }
}

fn render_json(v: &Value) -> String {
    let mut s = serde_json::to_string_pretty(v).expect("report is serializable");
    s.push('\n');
    s
}

fn row_json(r: &TrialRow) -> Value {
    json!({
        "trial": r.trial,
        "n": r.n,
        "hash": r.hash,
        "lambda": r.lambda,
        "best": r.best,
        "gap": json_num(r.gap),
        "pass": r.pass,
    })
}

fn render_verify_json(
    args: &VerifyArgs,
    outcomes: &[SuiteOutcome],
    passed: bool,
    timing_ms: Option<u128>,
) -> String {
    let suites: Vec<Value> = outcomes
        .iter()
        .map(|o| {
            json!({
                "name": o.name,
                "tol": o.tol,
                "trials": o.rows.len(),
                "worst_abs_gap": json_num(
                    o.rows.iter().map(|r| r.gap.abs()).fold(0.0, f64::max)
                ),
                "passed": o.passed,
                "rows": o.rows.iter().map(row_json).collect::<Vec<_>>(),
            })
        })
        .collect();
    let mut report = json!({
        "command": "verify",
        "config": {
            "seed": args.seed,
            "count": args.count,
            "n_points": args.n_points,
            "tol": args.tol,
        },
        "inputs": {
            "generator": {
                "alpha": "uniform self-map",
                "ln_w": [-2.0, 2.0],
                "phi": [-1.0, 1.0],
                "zero_weight_prob": 0.1,
            },
        },
        "results": {
            "suites": suites,
            "passed": passed,
        },
    });
    if let Some(ms) = timing_ms {
        report["timing_ms"] = json!(ms as u64);
    }
    render_json(&report)
}

fn render_verify_csv(outcomes: &[SuiteOutcome]) -> String {
    let mut out = String::from(CSV_HEADER);
    out.push('\n');
    for o in outcomes {
        for r in &o.rows {
            let _ = writeln!(
                out,
                "{},{},{},{},{},{}",
                r.trial, r.n, r.lambda, r.best, r.gap, r.pass
            );
        }
    }
    out
}

fn render_verify_md(
    args: &VerifyArgs,
    outcomes: &[SuiteOutcome],
    passed: bool,
    timing_ms: Option<u128>,
) -> String {
    let mut out = String::new();
    let _ = writeln!(out, "# verify (seed {})", args.seed);
    for o in outcomes {
        let _ = writeln!(out, "\n## {} (tol {:e})", o.name, o.tol);
        let _ = writeln!(out, "\n| trial | n | hash | lambda | best | gap | pass |");
        let _ = writeln!(out, "|---|---|---|---|---|---|---|");
        for r in &o.rows {
            let _ = writeln!(
                out,
                "| {} | {} | {} | {} | {} | {} | {} |",
                r.trial, r.n, r.hash, r.lambda, r.best, r.gap, r.pass
            );
        }
        let _ = writeln!(
            out,
            "\n{} of {} trials passed",
            o.rows.iter().filter(|r| r.pass).count(),
            o.rows.len()
        );
    }
    let _ = writeln!(out, "\noverall: {}", if passed { "pass" } else { "FAIL" });
    if let Some(ms) = timing_ms {
        let _ = writeln!(out, "wall time: {ms} ms");
    }
    out
}
