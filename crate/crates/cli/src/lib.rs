//! `gapstab`: experiments, verification suites and reports.
//!
//! Exit codes: 0 pass, 1 internal failure, 2 bound violation, 3 input
//! error, 4 resource cap.

pub mod sample;
pub mod suites;

use std::fmt;
use std::path::{Path, PathBuf};
use std::sync::Arc;

use clap::{Args, Parser, Subcommand};
use gapstab_core::abelian::AbelianGroup;
use gapstab_core::algebra::{AlmostHom, TracialAlgebra};
use gapstab_core::codes::{DualPairing, LinearCode};
use gapstab_core::games::{
    commutation_game, game_from_code, honest_magic_square_strategy, honest_strategy,
    magic_square_game, pauli_fourier, pauli_rigidity_report, value_with, Game, SynchronousStrategy,
    ValueMode,
};
use gapstab_core::group::FiniteGroup;
use gapstab_core::io::{format_rational, parse_code, parse_rational};
use gapstab_core::spectral::{
    kappa_abelian, kappa_general, GapReport, ProbMeasure, DEFAULT_GROUP_CAP,
};
use gapstab_core::stability::{round, GhOptions, DEFAULT_DIM_CAP};
use gapstab_core::{io, CMat, Error, Q};
use serde::{Deserialize, Serialize};

use crate::suites::{log_log_slope, rows_to_csv, run_suite, sweep_point, Suite, SuiteConfig};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_INTERNAL: i32 = 1;
pub const EXIT_VIOLATION: i32 = 2;
pub const EXIT_INPUT: i32 = 3;
pub const EXIT_CAP: i32 = 4;

#[derive(Debug, Parser)]
#[command(
    name = "gapstab",
    version,
    about = "Spectral-gap constants, Gowers-Hatami rounding and Pauli rigidity games"
)]
pub struct Cli {
    #[command(flatten)]
    pub global: Global,
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Clone, Args)]
pub struct Global {
    #[arg(long, global = true, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, global = true, default_value_t = 100)]
    pub trials: usize,
    /// Absolute slack added to every checked bound.
    #[arg(long, global = true, default_value_t = 1e-12)]
    pub tol: f64,
    #[arg(long = "dim-cap", global = true, default_value_t = DEFAULT_DIM_CAP)]
    pub dim_cap: usize,
    /// Output file (JSON for reports, CSV for suites and sweeps).
    #[arg(long, global = true)]
    pub out: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Spectral-gap constant of a measure.
    Kappa {
        /// `cyclic:5`, `abelian:2,2,2`, `symmetric:3` or `dihedral:4`.
        #[arg(long)]
        group: Option<String>,
        /// Comma-separated weights `p/q`, one per group element.
        #[arg(long)]
        weights: Option<String>,
        /// Comma-separated elements, uniform on the multiset.
        #[arg(long)]
        support: Option<String>,
        /// Measure induced by a code file.
        #[arg(long)]
        code: Option<PathBuf>,
    },
    /// Parameters of a code file and the gap cross-check.
    Code { file: PathBuf },
    /// Writes a game file.
    BuildGame {
        #[arg(long)]
        code: Option<PathBuf>,
        /// Second code; defaults to the first.
        #[arg(long)]
        code2: Option<PathBuf>,
        #[arg(long)]
        magic_square: bool,
        /// `K1,K2` answer-set sizes.
        #[arg(long)]
        commutation: Option<String>,
    },
    /// Writes the honest strategy of a game and prints its value.
    Honest { game: PathBuf },
    /// Value of a strategy on a game.
    Eval {
        game: PathBuf,
        strategy: PathBuf,
        /// Use the literal double sum for every rule.
        #[arg(long)]
        direct: bool,
    },
    /// Rounds an almost homomorphism file to a representation.
    Round { file: PathBuf },
    /// Rigidity report of a strategy on a combined game.
    Rigidity { game: PathBuf, strategy: PathBuf },
    /// Randomized inequality suite.
    Verify { suite: Suite },
    /// Perturbation sweep of a combined game: eps against closeness.
    Sweep {
        game: PathBuf,
        /// Strategy to perturb; the honest one by default.
        #[arg(long)]
        strategy: Option<PathBuf>,
        #[arg(long, default_value_t = 20)]
        points: usize,
        #[arg(long, default_value_t = 1e-3)]
        sigma_min: f64,
        #[arg(long, default_value_t = 0.2)]
        sigma_max: f64,
    },
    /// Replays an experiment manifest.
    Run { manifest: PathBuf },
}

#[derive(Debug)]
pub enum CliError {
    Core(Error),
    Io(String),
    Usage(String),
}

impl fmt::Display for CliError {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            CliError::Core(e) => write!(f, "{e}"),
            CliError::Io(m) => write!(f, "i/o error: {m}"),
            CliError::Usage(m) => write!(f, "usage error: {m}"),
        }
    }
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        CliError::Core(e)
    }
}

impl CliError {
    pub fn exit_code(&self) -> i32 {
        match self {
            CliError::Io(_) | CliError::Usage(_) => EXIT_INPUT,
            CliError::Core(e) => match e {
                Error::ResourceCap(_) => EXIT_CAP,
                Error::Internal(_) | Error::Degenerate(_) | Error::SamplingFailure { .. } => {
                    EXIT_INTERNAL
                }
                _ => EXIT_INPUT,
            },
        }
    }

    fn kind(&self) -> String {
        match self {
            CliError::Core(e) => format!("{e:?}")
                .split(['(', ' ', '{'])
                .next()
                .unwrap_or("Error")
                .to_string(),
            CliError::Io(_) => "Io".into(),
            CliError::Usage(_) => "Usage".into(),
        }
    }

    /// Single-line JSON record for stderr.
    pub fn record(&self) -> String {
        serde_json::json!({ "error": self.kind(), "message": self.to_string(), "exit_code": self.exit_code() }).to_string()
    }
}

pub type CliResult<T> = std::result::Result<T, CliError>;

/// Human-readable text plus the process status.
#[derive(Debug)]
pub struct Outcome {
    pub text: String,
    pub status: i32,
}

impl Outcome {
    fn pass(text: String) -> Self {
        Outcome {
            text,
            status: EXIT_PASS,
        }
    }

    fn checked(text: String, ok: bool) -> Self {
        Outcome {
            text,
            status: if ok { EXIT_PASS } else { EXIT_VIOLATION },
        }
    }
}

fn read(path: &Path) -> CliResult<String> {
    std::fs::read_to_string(path).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn write(path: &Path, contents: &str) -> CliResult<()> {
    std::fs::write(path, contents).map_err(|e| CliError::Io(format!("{}: {e}", path.display())))
}

fn to_json<T: Serialize>(x: &T) -> CliResult<String> {
    serde_json::to_string_pretty(x).map_err(|e| CliError::Core(Error::Internal(e.to_string())))
}

fn load_game(path: &Path) -> CliResult<Game> {
    Ok(Game::from_json(&read(path)?)?)
}

fn load_strategy(path: &Path) -> CliResult<SynchronousStrategy> {
    Ok(SynchronousStrategy::from_json(&read(path)?)?)
}

fn load_code(path: &Path) -> CliResult<LinearCode> {
    Ok(parse_code(&read(path)?)?)
}

/// `cyclic:m`, `abelian:o1,o2,..`, `symmetric:k` or `dihedral:m`.
pub fn parse_group(text: &str) -> CliResult<(FiniteGroup, Option<AbelianGroup>)> {
    let (kind, arg) = text
        .split_once(':')
        .ok_or_else(|| CliError::Usage(format!("bad group {text:?}")))?;
    let nums: Vec<i64> = arg
        .split(',')
        .map(|t| {
            t.trim()
                .parse()
                .map_err(|_| CliError::Usage(format!("bad group parameter {t:?}")))
        })
        .collect::<CliResult<_>>()?;
    let one = || -> CliResult<usize> {
        match nums[..] {
            [k] if k > 0 => Ok(k as usize),
            _ => Err(CliError::Usage(format!(
                "{kind} takes one positive parameter"
            ))),
        }
    };
    Ok(match kind {
        "cyclic" => {
            let a = AbelianGroup::new(&[one()? as i64])?;
            (a.to_finite_group(), Some(a))
        }
        "abelian" => {
            let a = AbelianGroup::new(&nums)?;
            (a.to_finite_group(), Some(a))
        }
        "symmetric" => (FiniteGroup::symmetric(one()?), None),
        "dihedral" => (FiniteGroup::dihedral(one()?), None),
        _ => return Err(CliError::Usage(format!("unknown group kind {kind:?}"))),
    })
}

fn parse_list<T>(s: &str, f: impl Fn(&str) -> CliResult<T>) -> CliResult<Vec<T>> {
    s.split(',').map(|t| f(t.trim())).collect()
}

pub fn kappa_command(
    group: Option<&str>,
    weights: Option<&str>,
    support: Option<&str>,
    code: Option<&Path>,
) -> CliResult<GapReport> {
    if let Some(path) = code {
        let mut c = load_code(path)?;
        let m = c.measure(DualPairing::Coordinate)?;
        return Ok(kappa_abelian(&m.group, &m.measure)?);
    }
    let text = group.ok_or_else(|| CliError::Usage("--group or --code is required".into()))?;
    let (g, a) = parse_group(text)?;
    let mu = match (weights, support) {
        (Some(w), None) => ProbMeasure::new(parse_list(w, |t| Ok(parse_rational(t)?))?)?,
        (None, Some(s)) => {
            let elems = parse_list(s, |t| {
                t.parse::<usize>()
                    .map_err(|_| CliError::Usage(format!("bad element {t:?}")))
            })?;
            ProbMeasure::from_multiset(g.order(), &elems)?
        }
        _ => {
            return Err(CliError::Usage(
                "give exactly one of --weights and --support".into(),
            ))
        }
    };
    Ok(match a {
        Some(a) => kappa_abelian(&a, &mu)?,
        None => kappa_general(&g, &mu, DEFAULT_GROUP_CAP)?,
    })
}

#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct CodeSummary {
    pub q: u32,
    pub length: usize,
    pub dimension: usize,
    pub distance: usize,
    #[serde(with = "io::rational")]
    pub predicted_kappa: Q,
    pub kappa: f64,
    #[serde(with = "io::rational_opt")]
    pub kappa_exact: Option<Q>,
    pub cross_check: bool,
}

pub fn code_summary(code: &mut LinearCode) -> CliResult<CodeSummary> {
    let distance = code.distance()?;
    let m = code.measure(DualPairing::Coordinate)?;
    let r = kappa_abelian(&m.group, &m.measure)?;
    let cross_check = match r.kappa_exact {
        Some(k) => k == m.predicted_kappa,
        None => (r.kappa - io::q_to_f64(&m.predicted_kappa)).abs() <= 1e-9 * r.kappa.max(1.0),
    };
    Ok(CodeSummary {
        q: code.q(),
        length: code.length(),
        dimension: code.dimension(),
        distance,
        predicted_kappa: m.predicted_kappa,
        kappa: r.kappa,
        kappa_exact: r.kappa_exact,
        cross_check,
    })
}

/// An almost homomorphism on disk: a group name, the algebra and one
/// matrix per group element.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct AlmostHomFile {
    pub group: String,
    pub algebra: TracialAlgebra,
    #[serde(with = "io::matrix_vec")]
    pub values: Vec<CMat>,
}

/// Sigma grid: `points` values spaced geometrically from `lo` to `hi`.
pub fn sigma_grid(lo: f64, hi: f64, points: usize) -> CliResult<Vec<f64>> {
    if !(lo > 0.0 && hi >= lo) || points == 0 {
        return Err(CliError::Usage(
            "need 0 < sigma-min <= sigma-max and points > 0".into(),
        ));
    }
    if points == 1 {
        return Ok(vec![lo]);
    }
    Ok((0..points)
        .map(|i| lo * (hi / lo).powf(i as f64 / (points - 1) as f64))
        .collect())
}

pub struct SweepResult {
    pub rows: Vec<suites::SweepRow>,
    pub slope: Option<f64>,
}

pub fn sweep(
    game: &Game,
    strategy: Option<SynchronousStrategy>,
    sigmas: &[f64],
    g: &Global,
) -> CliResult<SweepResult> {
    let layout = game
        .pauli
        .as_ref()
        .ok_or_else(|| CliError::Usage("sweeps need a combined Pauli game".into()))?;
    let strategy = match strategy {
        Some(s) => s,
        None => honest_strategy(game)?,
    };
    let fourier = pauli_fourier(layout.n)?;
    let opts = GhOptions {
        dim_cap: g.dim_cap,
        ..GhOptions::default()
    };
    let rows = suites::run_trials(sigmas.len(), |i| {
        let mut rng = sample::trial_rng(g.seed, i);
        sweep_point(
            game,
            &strategy,
            Some(&fourier),
            sigmas[i as usize],
            i,
            &opts,
            g.tol,
            &mut rng,
        )
    })?;
    let slope = log_log_slope(rows.iter().map(|r| (r.eps, r.closeness)));
    Ok(SweepResult { rows, slope })
}

pub fn run(cli: &Cli) -> CliResult<Outcome> {
    let g = &cli.global;
    match &cli.command {
        Command::Kappa {
            group,
            weights,
            support,
            code,
        } => {
            let r = kappa_command(
                group.as_deref(),
                weights.as_deref(),
                support.as_deref(),
                code.as_deref(),
            )?;
            if let Some(out) = &g.out {
                write(out, &to_json(&r)?)?;
            }
            let exact = r
                .kappa_exact
                .map(|k| format!(" = {}", format_rational(&k)))
                .unwrap_or_default();
            Ok(Outcome::pass(format!(
                "kappa = {:.12}{exact} (second eigenvalue {:.12})",
                r.kappa, r.second_eigenvalue
            )))
        }
        Command::Code { file } => {
            let s = code_summary(&mut load_code(file)?)?;
            if let Some(out) = &g.out {
                write(out, &to_json(&s)?)?;
            }
            let text = format!(
                "[{},{},{}]_{}, kappa = {} (predicted ((q-1)/q)(K/d) = {}), cross-check {}",
                s.length,
                s.dimension,
                s.distance,
                s.q,
                s.kappa_exact
                    .map_or(format!("{:.12}", s.kappa), |k| format_rational(&k)),
                format_rational(&s.predicted_kappa),
                if s.cross_check { "PASS" } else { "FAIL" }
            );
            Ok(Outcome::checked(text, s.cross_check))
        }
        Command::BuildGame {
            code,
            code2,
            magic_square,
            commutation,
        } => {
            let game = match (code, magic_square, commutation) {
                (Some(c), false, None) => {
                    let mut a = load_code(c)?;
                    let mut b = match code2 {
                        Some(p) => load_code(p)?,
                        None => a.clone(),
                    };
                    game_from_code(&mut a, &mut b)?
                }
                (None, true, None) => magic_square_game(),
                (None, false, Some(k)) => {
                    let k = parse_list(k, |t| {
                        t.parse::<usize>()
                            .map_err(|_| CliError::Usage(format!("bad size {t:?}")))
                    })?;
                    match k[..] {
                        [k1, k2] => commutation_game(k1, k2)?,
                        _ => return Err(CliError::Usage("--commutation takes K1,K2".into())),
                    }
                }
                _ => {
                    return Err(CliError::Usage(
                        "give exactly one of --code, --magic-square, --commutation".into(),
                    ))
                }
            };
            let out = g
                .out
                .as_ref()
                .ok_or_else(|| CliError::Usage("--out is required".into()))?;
            write(out, &game.to_json()?)?;
            Ok(Outcome::pass(format!(
                "{}: {} questions, {} question pairs",
                game.name,
                game.num_questions(),
                game.pairs.len()
            )))
        }
        Command::Honest { game } => {
            let game = load_game(game)?;
            let s = if game.pauli.is_some() {
                honest_strategy(&game)?
            } else if game.questions.len() == 15 {
                honest_magic_square_strategy()?
            } else {
                return Err(CliError::Usage(
                    "honest strategies exist for combined games and the magic square".into(),
                ));
            };
            let v = value_with(&game, &s, ValueMode::Shortcut)?;
            if let Some(out) = &g.out {
                write(out, &s.to_json()?)?;
            }
            Ok(Outcome::pass(format!(
                "value {v:.9} (dimension {})",
                s.dim()
            )))
        }
        Command::Eval {
            game,
            strategy,
            direct,
        } => {
            let game = load_game(game)?;
            let s = load_strategy(strategy)?;
            let mode = if *direct {
                ValueMode::Direct
            } else {
                ValueMode::Shortcut
            };
            Ok(Outcome::pass(format!(
                "value {:.9}",
                value_with(&game, &s, mode)?
            )))
        }
        Command::Round { file } => {
            let f: AlmostHomFile = serde_json::from_str(&read(file)?)
                .map_err(|e| CliError::Core(Error::Parse(e.to_string())))?;
            let (group, _) = parse_group(&f.group)?;
            let phi = AlmostHom::new(Arc::new(group), f.values, 1e-8)?;
            let cert = round(
                &f.algebra,
                &phi,
                &GhOptions {
                    dim_cap: g.dim_cap,
                    ..GhOptions::default()
                },
            )?;
            if let Some(out) = &g.out {
                write(out, &to_json(&cert)?)?;
            }
            let ok = cert.holds(g.tol);
            Ok(Outcome::checked(
                format!(
                    "eps {:.6e}, distance {:.6e} (169 eps = {:.6e}), trace excess {:.6e} (16 eps = {:.6e}), corner dimension {} [{}]",
                    cert.input_defect,
                    cert.distance,
                    cert.distance_bound,
                    cert.trace_excess,
                    cert.trace_bound,
                    cert.corner.dim(),
                    if ok { "PASS" } else { "FAIL" }
                ),
                ok,
            ))
        }
        Command::Rigidity { game, strategy } => {
            let game = load_game(game)?;
            let s = load_strategy(strategy)?;
            let n = game
                .pauli
                .as_ref()
                .ok_or_else(|| CliError::Usage("rigidity needs a combined Pauli game".into()))?
                .n;
            let f = pauli_fourier(n)?;
            let r = pauli_rigidity_report(
                &game,
                &s,
                Some(&f),
                &GhOptions {
                    dim_cap: g.dim_cap,
                    ..GhOptions::default()
                },
            )?;
            if let Some(out) = &g.out {
                write(out, &to_json(&r)?)?;
            }
            let ok = r.holds(g.tol);
            Ok(Outcome::checked(
                format!(
                    "eps {:.6e}, twisted commutator {:.6e} <= 1320 c c' eps = {:.6e} (c = {}, c' = {}), closeness {:.6e} ({:.4} eps), Pauli-form residual {:.2e} [{}]",
                    r.eps,
                    r.lhs,
                    r.bound,
                    format_rational(&r.c),
                    format_rational(&r.c_prime),
                    r.closeness.epsilon(),
                    r.closeness_ratio,
                    r.pauli_form_residual,
                    if ok { "PASS" } else { "FAIL" }
                ),
                ok,
            ))
        }
        Command::Verify { suite } => verify(*suite, g, g.out.as_deref()),
        Command::Sweep {
            game,
            strategy,
            points,
            sigma_min,
            sigma_max,
        } => {
            let game = load_game(game)?;
            let s = strategy.as_deref().map(load_strategy).transpose()?;
            let sigmas = sigma_grid(*sigma_min, *sigma_max, *points)?;
            sweep_outcome(&game, s, &sigmas, g, g.out.as_deref())
        }
        Command::Run { manifest } => run_manifest(manifest, g),
    }
}

fn verify(suite: Suite, g: &Global, out: Option<&Path>) -> CliResult<Outcome> {
    let cfg = SuiteConfig {
        seed: g.seed,
        trials: g.trials,
        tol: g.tol,
        dim_cap: g.dim_cap,
    };
    let r = run_suite(suite, &cfg)?;
    if let Some(out) = out {
        write(out, &r.to_csv()?)?;
    }
    Ok(Outcome::checked(r.summary(), r.passed()))
}

fn sweep_outcome(
    game: &Game,
    s: Option<SynchronousStrategy>,
    sigmas: &[f64],
    g: &Global,
    out: Option<&Path>,
) -> CliResult<Outcome> {
    let r = sweep(game, s, sigmas, g)?;
    if let Some(out) = out {
        write(out, &rows_to_csv(&r.rows)?)?;
    }
    let failures = r.rows.iter().filter(|p| !p.pass).count();
    let worst = r.rows.iter().map(|p| p.ratio).fold(0.0, f64::max);
    let ratio = r.rows.iter().map(|p| p.closeness_ratio).fold(0.0, f64::max);
    Ok(Outcome::checked(
        format!(
            "{} points, {failures} violations of 1320 c c' eps, worst lhs/bound {worst:.6e}, closeness/eps <= {ratio:.4}, log-log slope {}",
            r.rows.len(),
            r.slope.map_or("n/a".into(), |s| format!("{s:.4}"))
        ),
        failures == 0,
    ))
}

/// A replayable experiment: the operation, its parameters and outputs.
#[derive(Clone, Debug, Serialize, Deserialize)]
pub struct ExperimentManifest {
    pub seed: u64,
    /// `verify`, `sweep`, `code` or `build-game`.
    pub operation: String,
    #[serde(default)]
    pub params: ManifestParams,
    #[serde(default)]
    pub outputs: ManifestOutputs,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ManifestParams {
    pub suite: Option<Suite>,
    pub trials: Option<usize>,
    pub tol: Option<f64>,
    pub dim_cap: Option<usize>,
    pub game: Option<PathBuf>,
    pub strategy: Option<PathBuf>,
    pub code: Option<PathBuf>,
    pub code2: Option<PathBuf>,
    pub sigmas: Option<Vec<f64>>,
}

#[derive(Clone, Debug, Default, Serialize, Deserialize)]
pub struct ManifestOutputs {
    pub csv: Option<PathBuf>,
    pub json: Option<PathBuf>,
}

/// Runs a manifest; relative paths are taken from the manifest's directory.
pub fn run_manifest(path: &Path, defaults: &Global) -> CliResult<Outcome> {
    let m: ExperimentManifest = serde_json::from_str(&read(path)?)
        .map_err(|e| CliError::Core(Error::Parse(format!("manifest: {e}"))))?;
    let base = path.parent().unwrap_or(Path::new("."));
    let at = |p: &Option<PathBuf>| p.as_ref().map(|p| base.join(p));
    let p = &m.params;
    let g = Global {
        seed: m.seed,
        trials: p.trials.unwrap_or(defaults.trials),
        tol: p.tol.unwrap_or(defaults.tol),
        dim_cap: p.dim_cap.unwrap_or(defaults.dim_cap),
        out: None,
    };
    match m.operation.as_str() {
        "verify" => {
            let suite = p
                .suite
                .ok_or_else(|| CliError::Usage("verify needs params.suite".into()))?;
            verify(suite, &g, at(&m.outputs.csv).as_deref())
        }
        "sweep" => {
            let game = load_game(
                &at(&p.game).ok_or_else(|| CliError::Usage("sweep needs params.game".into()))?,
            )?;
            let s = at(&p.strategy).as_deref().map(load_strategy).transpose()?;
            let sigmas = p
                .sigmas
                .clone()
                .ok_or_else(|| CliError::Usage("sweep needs params.sigmas".into()))?;
            sweep_outcome(&game, s, &sigmas, &g, at(&m.outputs.csv).as_deref())
        }
        "code" => {
            let s = code_summary(&mut load_code(
                &at(&p.code).ok_or_else(|| CliError::Usage("code needs params.code".into()))?,
            )?)?;
            if let Some(out) = at(&m.outputs.json) {
                write(&out, &to_json(&s)?)?;
            }
            Ok(Outcome::checked(
                format!(
                    "cross-check {}",
                    if s.cross_check { "PASS" } else { "FAIL" }
                ),
                s.cross_check,
            ))
        }
        "build-game" => {
            let mut a = load_code(
                &at(&p.code)
                    .ok_or_else(|| CliError::Usage("build-game needs params.code".into()))?,
            )?;
            let mut b = match at(&p.code2) {
                Some(c) => load_code(&c)?,
                None => a.clone(),
            };
            let game = game_from_code(&mut a, &mut b)?;
            let out = at(&m.outputs.json)
                .ok_or_else(|| CliError::Usage("build-game needs outputs.json".into()))?;
            write(&out, &game.to_json()?)?;
            Ok(Outcome::pass(format!(
                "{}: {} questions",
                game.name,
                game.num_questions()
            )))
        }
        other => Err(CliError::Usage(format!("unknown operation {other:?}"))),
    }
}
