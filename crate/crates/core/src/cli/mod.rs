//! Command-line front end.
//!
//! [`run_command`] parses argv, runs one command and returns the exit code:
//! 0 on success, 1 when a check fails, 2 on usage or runtime errors. A
//! command's outputs are collected first and written afterwards, files
//! atomically, so a failed run leaves no partial artifacts behind.

mod manifest;
mod report;
mod scan;

use std::collections::BTreeMap;
use std::fmt;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::str::FromStr;
use std::time::Instant;

use clap::{Args, Parser, Subcommand, ValueEnum};
use serde::Serialize;

pub use manifest::{digest_text, RunManifest};
pub use report::render_report;
pub use scan::{parse_l_range, run_scan, scan_csv, EtaMode, ScanConfig, ScanRow, SCAN_HEADER};

use crate::bounds::{self, CheckOutcome};
use crate::error::{Error, Result};
use crate::kvfactory::{
    build_asym_kv, build_kv_game, eta_default, fourier_bob_transform, kv_explicit_strategy,
    AsymKvGame, KvGame, LogBase,
};
use crate::scenario::json::{
    from_json_text, to_canonical_json, FunctionalFile, GameFile, GameMetadata, StrategyFile,
};
use crate::scenario::{AsymmetricBellFunctional, BobSide, NonlocalGame, QuantumStrategy};
use crate::solve::{
    classical_bias_exact, classical_local_search, classical_local_search_from,
    classical_value_exact, monte_carlo_estimate, see_saw_lower_bound, with_workers,
    AsymKvObjective, ClassicalOutcome, FunctionalObjective, GameObjective, MonteCarloGame, Players,
    SearchConfig, SeeSawTarget,
};

pub const EXIT_OK: i32 = 0;
pub const EXIT_CHECK_FAILED: i32 = 1;
pub const EXIT_ERROR: i32 = 2;
/// Caps the worker count of every parallel engine.
pub const THREADS_ENV: &str = "ASYMBELL_THREADS";

#[derive(Debug, Parser)]
#[command(
    name = "asymbell",
    version,
    about = "Khot-Vishnoi games, asymmetric Bell functionals and their bounds"
)]
struct Cli {
    /// Write a run manifest (argv, seed, input digests, outputs) here.
    #[arg(long, global = true, value_name = "PATH")]
    manifest: Option<PathBuf>,
    /// Record wall-clock times in reports; off by default so outputs are
    /// reproducible byte for byte.
    #[arg(long, global = true)]
    timings: bool,
    #[command(subcommand)]
    command: Command,
}

#[derive(Debug, Subcommand)]
enum Command {
    /// Write the KV game or the asymmetric KV functional as JSON.
    Gen(GenArgs),
    /// Exact classical value (games) or bias (functionals) by enumeration.
    ClassicalExact(ExactArgs),
    /// Classical lower bound by alternating best responses.
    ClassicalSearch(SearchCmdArgs),
    /// Quantum lower bound by see-saw at fixed local dimensions.
    SeeSaw(SeeSawArgs),
    /// Referee simulation of a strategy in the KV or asymmetric KV game.
    Mc(McArgs),
    /// Run a verification suite and emit its check records.
    Check(CheckArgs),
    /// Tabulate explicit quantum bias against classical bias over l.
    Scan(ScanArgs),
    /// Render JSON or CSV artifacts as tables.
    Report(ReportArgs),
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum GameKind {
    Kv,
    AsymKv,
}

impl GameKind {
    fn name(self) -> &'static str {
        match self {
            GameKind::Kv => "kv",
            GameKind::AsymKv => "asym-kv",
        }
    }
}

/// `auto` or a number in `[0, 1/2]`.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum EtaArg {
    Auto,
    Value(f64),
}

impl FromStr for EtaArg {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        if s == "auto" {
            return Ok(EtaArg::Auto);
        }
        s.parse::<f64>()
            .map(EtaArg::Value)
            .map_err(|_| format!("expected 'auto' or a number, got '{s}'"))
    }
}

impl fmt::Display for EtaArg {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            EtaArg::Auto => f.write_str("auto"),
            EtaArg::Value(v) => write!(f, "{v}"),
        }
    }
}

#[derive(Debug, Args)]
struct GameArgs {
    #[arg(long)]
    l: u32,
    #[arg(long, default_value = "auto")]
    eta: EtaArg,
    /// Base of the logarithm in the automatic noise rate.
    #[arg(long, default_value = "2")]
    log_base: LogBase,
}

#[derive(Debug, Args)]
struct OutArg {
    /// Output path; standard output when absent.
    #[arg(long, value_name = "PATH")]
    out: Option<PathBuf>,
}

#[derive(Debug, Args)]
struct GenArgs {
    #[arg(value_enum)]
    game: GameKind,
    #[command(flatten)]
    params: GameArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
#[group(required = true, multiple = false)]
struct Source {
    /// Functional or game JSON.
    #[arg(long, value_name = "PATH")]
    input: Option<PathBuf>,
    /// Build the asymmetric KV game at this l instead of reading a file.
    #[arg(long, value_name = "L")]
    asym_kv: Option<u32>,
}

#[derive(Debug, Args)]
struct SourceArgs {
    #[command(flatten)]
    source: Source,
    /// Noise rate for --asym-kv.
    #[arg(long, default_value = "auto")]
    eta: EtaArg,
    #[arg(long, default_value = "2")]
    log_base: LogBase,
}

#[derive(Debug, Args)]
struct SearchArgs {
    #[arg(long, default_value_t = 20)]
    restarts: usize,
    #[arg(long, default_value_t = 200)]
    iterations: usize,
    #[arg(long, default_value_t = 0)]
    seed: u64,
}

impl SearchArgs {
    fn config(&self) -> SearchConfig {
        SearchConfig::new(self.restarts, self.iterations, self.seed)
    }
}

#[derive(Debug, Args)]
struct ExactArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct SearchCmdArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[command(flatten)]
    search: SearchArgs,
    #[command(flatten)]
    out: OutArg,
}

/// Local dimensions written `DAxDB` or `DA,DB`.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
struct Dims(usize, usize);

impl FromStr for Dims {
    type Err = String;

    fn from_str(s: &str) -> std::result::Result<Self, String> {
        let (a, b) = s
            .split_once(['x', ','])
            .ok_or_else(|| format!("expected DAxDB, got '{s}'"))?;
        let parse = |v: &str| {
            v.trim()
                .parse::<usize>()
                .map_err(|_| format!("bad dimension '{v}'"))
        };
        Ok(Dims(parse(a)?, parse(b)?))
    }
}

#[derive(Debug, Args)]
struct SeeSawArgs {
    #[command(flatten)]
    source: SourceArgs,
    #[arg(long, default_value = "2x2")]
    dims: Dims,
    #[command(flatten)]
    search: SearchArgs,
    /// Strategy JSON to include as a starting point.
    #[arg(long, value_name = "PATH")]
    initial: Option<PathBuf>,
    /// Also write the best strategy found as strategy JSON.
    #[arg(long, value_name = "PATH")]
    strategy_out: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct McArgs {
    #[arg(value_enum)]
    game: GameKind,
    #[command(flatten)]
    params: GameArgs,
    #[arg(long, default_value_t = 1_000_000)]
    samples: u64,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Strategy JSON; defaults to the explicit strategy (Fourier-transformed
    /// for the asymmetric game).
    #[arg(long, value_name = "PATH")]
    strategy: Option<PathBuf>,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, ValueEnum)]
enum Suite {
    Lemma1,
    Corollary1,
    AppendixB,
    Parseval,
    DimBound,
}

#[derive(Debug, Args)]
struct CheckArgs {
    #[arg(value_enum)]
    suite: Suite,
    /// Number of random cases; each suite has its own default.
    #[arg(long)]
    trials: Option<u64>,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    /// Samples for the appendix-b classical estimate.
    #[arg(long, default_value_t = 10_000)]
    samples: u64,
    /// Levels for parseval, `L` or `A:B`.
    #[arg(long, default_value = "2:4")]
    l: String,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct ScanArgs {
    /// Inclusive range `A:B` (or a single `L`).
    #[arg(long)]
    l: String,
    /// `auto` for 1/2 - 1/log n, or a fixed rate for every row.
    #[arg(long, default_value = "0.25")]
    eta: EtaArg,
    /// Per-level rate, `L=ETA`; repeatable.
    #[arg(long, value_name = "L=ETA")]
    eta_override: Vec<String>,
    #[arg(long, default_value = "2")]
    log_base: LogBase,
    #[arg(long, default_value_t = 0)]
    seed: u64,
    #[arg(long, default_value_t = 8)]
    restarts: usize,
    #[arg(long, default_value_t = 100)]
    iterations: usize,
    #[command(flatten)]
    out: OutArg,
}

#[derive(Debug, Args)]
struct ReportArgs {
    #[arg(required = true, num_args = 1..)]
    paths: Vec<PathBuf>,
}

/// Everything a command produces, written out only after it succeeds.
#[derive(Debug, Default)]
struct Emitted {
    stdout: String,
    stderr: String,
    files: Vec<(PathBuf, String)>,
    inputs: BTreeMap<String, String>,
    seed: Option<u64>,
    code: i32,
}

impl Emitted {
    fn emit(&mut self, out: &OutArg, text: String) {
        match &out.out {
            Some(p) => self.files.push((p.clone(), text)),
            None => self.stdout.push_str(&text),
        }
    }

    fn read_input(&mut self, path: &Path) -> Result<String> {
        let text = std::fs::read_to_string(path).map_err(|e| {
            Error::Io(std::io::Error::new(
                e.kind(),
                format!("{}: {e}", path.display()),
            ))
        })?;
        self.inputs
            .insert(path.display().to_string(), digest_text(&text));
        Ok(text)
    }
}

#[derive(Debug, Serialize)]
struct SolverReport {
    value: f64,
    certificate: serde_json::Value,
    method: &'static str,
    seed: Option<u64>,
    elapsed_ms: Option<u64>,
}

fn json_line<T: Serialize>(value: &T) -> Result<String> {
    Ok(to_canonical_json(value, true)? + "\n")
}

fn resolve_eta(eta: EtaArg, l: u32, base: LogBase) -> Result<f64> {
    match eta {
        EtaArg::Value(v) => Ok(v),
        EtaArg::Auto => {
            let d = eta_default(1u64 << l, base)?;
            if d.degenerate {
                return Err(Error::Precondition(format!(
                    "automatic noise rate is 0 at l={l} (log base {base}); pass --eta explicitly"
                )));
            }
            Ok(d.value)
        }
    }
}

fn metadata(kind: GameKind, l: u32, eta: f64, coset_count: u64) -> GameMetadata {
    GameMetadata {
        game: kind.name().into(),
        l,
        n: 1usize << l,
        eta,
        coset_count,
    }
}

enum Problem {
    Functional(AsymmetricBellFunctional),
    Game(NonlocalGame),
    AsymKv(AsymKvGame),
}

fn load_problem(src: &SourceArgs, em: &mut Emitted) -> Result<Problem> {
    if let Some(l) = src.source.asym_kv {
        let eta = resolve_eta(src.eta, l, src.log_base)?;
        return Ok(Problem::AsymKv(build_asym_kv(l, eta)?));
    }
    let path = src.source.input.as_ref().expect("clap enforces one source");
    let text = em.read_input(path)?;
    let value: serde_json::Value = from_json_text(&text)?;
    if value.get("weights").is_some() {
        Ok(Problem::Game(from_json_text::<GameFile>(&text)?.to_game()?))
    } else if value.get("coeffs").is_some() {
        Ok(Problem::Functional(
            from_json_text::<FunctionalFile>(&text)?.to_functional()?,
        ))
    } else {
        Err(Error::invalid(
            "input",
            format!("{} is neither a functional nor a game", path.display()),
        ))
    }
}

fn load_strategy(path: &Path, em: &mut Emitted) -> Result<QuantumStrategy> {
    let text = em.read_input(path)?;
    from_json_text::<StrategyFile>(&text)?.to_strategy()
}

fn transformed_explicit(game: &AsymKvGame) -> Result<QuantumStrategy> {
    let s = kv_explicit_strategy(game.l())?;
    let obs = fourier_bob_transform(
        s.bob_povms().expect("explicit strategy has POVM Bob"),
        game.table(),
    )?;
    s.with_bob(BobSide::Observables(obs))
}

fn classical_certificate(o: &ClassicalOutcome) -> Result<serde_json::Value> {
    Ok(serde_json::json!({
        "strategy": serde_json::to_value(&o.strategy)?,
        "signed_value": o.signed_value,
        "exact": o.exact,
        "evaluated": o.evaluated,
    }))
}

fn elapsed(timings: bool, start: Instant) -> Option<u64> {
    timings.then(|| start.elapsed().as_millis() as u64)
}

fn cmd_gen(a: &GenArgs, em: &mut Emitted) -> Result<()> {
    let l = a.params.l;
    let eta = resolve_eta(a.params.eta, l, a.params.log_base)?;
    let text = match a.game {
        GameKind::Kv => {
            let g = build_kv_game(l, eta)?;
            let meta = metadata(a.game, l, eta, g.table().coset_count());
            json_line(&GameFile::from_game(&g.to_game()?, Some(meta))?)?
        }
        GameKind::AsymKv => {
            let g = build_asym_kv(l, eta)?;
            let meta = metadata(a.game, l, eta, g.table().coset_count());
            json_line(&FunctionalFile::from_functional(
                &g.dense_functional()?,
                Some(meta),
            )?)?
        }
    };
    em.emit(&a.out, text);
    Ok(())
}

fn cmd_exact(a: &ExactArgs, timings: bool, em: &mut Emitted) -> Result<()> {
    let start = Instant::now();
    let outcome = match load_problem(&a.source, em)? {
        Problem::Functional(m) => classical_bias_exact(&m)?,
        Problem::Game(g) => classical_value_exact(&g)?,
        Problem::AsymKv(g) => classical_bias_exact(&g.dense_functional()?)?,
    };
    let report = SolverReport {
        value: outcome.value,
        certificate: classical_certificate(&outcome)?,
        method: "exact",
        seed: None,
        elapsed_ms: elapsed(timings, start),
    };
    em.emit(&a.out, json_line(&report)?);
    Ok(())
}

fn cmd_search(a: &SearchCmdArgs, timings: bool, em: &mut Emitted) -> Result<()> {
    let start = Instant::now();
    let cfg = a.search.config();
    em.seed = Some(cfg.seed);
    let outcome = match load_problem(&a.source, em)? {
        Problem::Functional(m) => classical_local_search(&FunctionalObjective(&m), &cfg)?,
        Problem::Game(g) => classical_local_search(&GameObjective(&g), &cfg)?,
        Problem::AsymKv(g) => {
            let obj = AsymKvObjective::new(&g)?;
            classical_local_search_from(&obj, &cfg, &[vec![0; g.table().coset_count() as usize]])?
        }
    };
    let report = SolverReport {
        value: outcome.value,
        certificate: classical_certificate(&outcome)?,
        method: "local-search",
        seed: Some(cfg.seed),
        elapsed_ms: elapsed(timings, start),
    };
    em.emit(&a.out, json_line(&report)?);
    Ok(())
}

fn cmd_see_saw(a: &SeeSawArgs, timings: bool, em: &mut Emitted) -> Result<()> {
    let start = Instant::now();
    let cfg = a.search.config();
    em.seed = Some(cfg.seed);
    let problem = load_problem(&a.source, em)?;
    let initial = a
        .initial
        .as_ref()
        .map(|p| load_strategy(p, em))
        .transpose()?;
    let dense;
    let target = match &problem {
        Problem::Functional(m) => SeeSawTarget::Functional(m),
        Problem::Game(g) => SeeSawTarget::Game(g),
        Problem::AsymKv(g) => {
            dense = g.dense_functional()?;
            SeeSawTarget::Functional(&dense)
        }
    };
    let out = see_saw_lower_bound(target, (a.dims.0, a.dims.1), &cfg, initial.as_ref())?;
    let strategy = StrategyFile::from_strategy(&out.strategy);
    if let Some(p) = &a.strategy_out {
        em.files.push((p.clone(), json_line(&strategy)?));
    }
    let report = SolverReport {
        value: out.value,
        certificate: serde_json::json!({
            "dims": [a.dims.0, a.dims.1],
            "signed_value": out.signed_value,
            "initial_value": out.initial_value,
            "strategy": serde_json::to_value(&strategy)?,
        }),
        method: "see-saw",
        seed: Some(cfg.seed),
        elapsed_ms: elapsed(timings, start),
    };
    em.emit(&a.out, json_line(&report)?);
    Ok(())
}

fn cmd_mc(a: &McArgs, timings: bool, em: &mut Emitted) -> Result<()> {
    let start = Instant::now();
    em.seed = Some(a.seed);
    let l = a.params.l;
    let eta = resolve_eta(a.params.eta, l, a.params.log_base)?;
    let given = a
        .strategy
        .as_ref()
        .map(|p| load_strategy(p, em))
        .transpose()?;
    let (kv, asym): (Option<KvGame>, Option<AsymKvGame>) = match a.game {
        GameKind::Kv => (Some(build_kv_game(l, eta)?), None),
        GameKind::AsymKv => (None, Some(build_asym_kv(l, eta)?)),
    };
    let strategy = match (given, &asym) {
        (Some(s), _) => s,
        (None, Some(g)) => transformed_explicit(g)?,
        (None, None) => kv_explicit_strategy(l)?,
    };
    let game = match (&kv, &asym) {
        (Some(g), _) => MonteCarloGame::Kv(g),
        (_, Some(g)) => MonteCarloGame::AsymKv(g),
        _ => unreachable!(),
    };
    let r = monte_carlo_estimate(game, Players::Quantum(&strategy), a.samples, a.seed)?;
    let report = SolverReport {
        value: r.estimate,
        certificate: serde_json::json!({
            "game": a.game.name(),
            "l": l,
            "eta": eta,
            "std_error": r.std_error,
            "samples": r.samples,
        }),
        method: "monte-carlo",
        seed: Some(a.seed),
        elapsed_ms: elapsed(timings, start),
    };
    em.emit(&a.out, json_line(&report)?);
    Ok(())
}

fn trials(a: &CheckArgs, default: u64) -> Result<usize> {
    let t = a.trials.unwrap_or(default);
    usize::try_from(t).map_err(|_| Error::Usage(format!("--trials {t} is too large")))
}

fn cmd_check(a: &CheckArgs, em: &mut Emitted) -> Result<()> {
    em.seed = Some(a.seed);
    let outcomes: Vec<CheckOutcome> = match a.suite {
        Suite::Lemma1 => bounds::lemma1_suite(trials(a, 100)?, a.seed)?,
        Suite::Corollary1 => bounds::corollary1_suite(trials(a, 50)?, a.seed)?,
        Suite::AppendixB => bounds::appendix_b_suite(trials(a, 100)?, a.samples, a.seed)?,
        Suite::Parseval => {
            let levels: Vec<u32> = parse_l_range(&a.l)?.collect();
            if levels.is_empty() {
                return Err(Error::Usage(format!("--l {} selects no levels", a.l)));
            }
            bounds::parseval_suite(&levels, trials(a, 10_000)?, a.seed)?
        }
        Suite::DimBound => bounds::dimension_suite(trials(a, 100)?, a.seed)?,
    };
    let failed = outcomes.iter().filter(|o| !o.passed).count();
    em.emit(&a.out, json_line(&outcomes)?);
    if failed > 0 {
        em.stderr
            .push_str(&format!("{failed} of {} checks FAILED\n", outcomes.len()));
        em.code = EXIT_CHECK_FAILED;
    } else {
        em.stderr
            .push_str(&format!("all {} checks passed\n", outcomes.len()));
    }
    Ok(())
}

fn parse_override(s: &str) -> Result<(u32, f64)> {
    let bad = || Error::Usage(format!("--eta-override expects L=ETA, got '{s}'"));
    let (l, eta) = s.split_once('=').ok_or_else(bad)?;
    Ok((
        l.trim().parse().map_err(|_| bad())?,
        eta.trim().parse().map_err(|_| bad())?,
    ))
}

fn cmd_scan(a: &ScanArgs, timings: bool, em: &mut Emitted) -> Result<()> {
    em.seed = Some(a.seed);
    let levels = parse_l_range(&a.l)?;
    let eta = match a.eta {
        EtaArg::Auto => EtaMode::Auto(a.log_base),
        EtaArg::Value(v) => EtaMode::Fixed(v),
    };
    let overrides = a
        .eta_override
        .iter()
        .map(|s| parse_override(s))
        .collect::<Result<BTreeMap<_, _>>>()?;
    let cfg = ScanConfig {
        eta,
        overrides,
        search: SearchConfig::new(a.restarts, a.iterations, a.seed),
        timings,
    };
    let rows = run_scan(levels, &cfg)?;
    for r in rows.iter().filter(|r| r.eta.is_none()) {
        em.stderr.push_str(&format!(
            "warning: l={} needs an explicit rate (--eta VALUE or --eta-override {}=VALUE)\n",
            r.l, r.l
        ));
    }
    em.emit(&a.out, scan_csv(&rows)?);
    Ok(())
}

fn cmd_report(a: &ReportArgs, em: &mut Emitted) -> Result<()> {
    let mut texts = Vec::with_capacity(a.paths.len());
    for p in &a.paths {
        texts.push((p.display().to_string(), em.read_input(p)?));
    }
    let (table, failed) = render_report(&texts)?;
    em.stdout.push_str(&table);
    if failed > 0 {
        em.code = EXIT_CHECK_FAILED;
    }
    Ok(())
}

fn execute(cli: &Cli, em: &mut Emitted) -> Result<()> {
    match &cli.command {
        Command::Gen(a) => cmd_gen(a, em),
        Command::ClassicalExact(a) => cmd_exact(a, cli.timings, em),
        Command::ClassicalSearch(a) => cmd_search(a, cli.timings, em),
        Command::SeeSaw(a) => cmd_see_saw(a, cli.timings, em),
        Command::Mc(a) => cmd_mc(a, cli.timings, em),
        Command::Check(a) => cmd_check(a, em),
        Command::Scan(a) => cmd_scan(a, cli.timings, em),
        Command::Report(a) => cmd_report(a, em),
    }
}

fn threads_from_env() -> Result<Option<usize>> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(Error::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got '{v}'"
            ))),
        },
    }
}

/// Write `text` to `path` through a temporary file in the same directory.
pub fn write_atomic(path: &Path, text: &str) -> Result<()> {
    let dir = match path.parent() {
        Some(p) if !p.as_os_str().is_empty() => p,
        _ => Path::new("."),
    };
    let mut tmp = tempfile::NamedTempFile::new_in(dir)?;
    tmp.write_all(text.as_bytes())?;
    tmp.as_file().sync_all()?;
    tmp.persist(path).map_err(|e| Error::Io(e.error))?;
    Ok(())
}

/// Run one command, writing to the given streams.
pub fn run_command_with<I, T>(argv: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let argv: Vec<std::ffi::OsString> = argv.into_iter().map(Into::into).collect();
    let cli = match Cli::try_parse_from(&argv) {
        Ok(c) => c,
        Err(e) => {
            let text = e.render().to_string();
            return if e.use_stderr() {
                let _ = write!(stderr, "{text}");
                EXIT_ERROR
            } else {
                let _ = write!(stdout, "{text}");
                EXIT_OK
            };
        }
    };
    let started = RunManifest::now_ms();
    let mut em = Emitted::default();
    let result = threads_from_env().and_then(|threads| {
        with_workers(threads, || {
            let mut local = Emitted::default();
            execute(&cli, &mut local).map(|()| local)
        })?
    });
    let result = result.and_then(|done| {
        em = done;
        for (path, text) in &em.files {
            write_atomic(path, text)?;
        }
        if let Some(path) = &cli.manifest {
            let m = RunManifest::new(
                &argv,
                em.seed,
                started,
                em.inputs.clone(),
                em.files.iter().map(|f| &f.0),
            );
            write_atomic(path, &json_line(&m)?)?;
        }
        Ok(())
    });
    let _ = stdout.write_all(em.stdout.as_bytes());
    let _ = stderr.write_all(em.stderr.as_bytes());
    match result {
        Ok(()) => em.code,
        Err(e) => {
            let _ = writeln!(stderr, "error: {e}");
            EXIT_ERROR
        }
    }
}

/// Run one command against the process's standard streams.
pub fn run_command<I, T>(argv: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let mut out = std::io::stdout().lock();
    let mut err = std::io::stderr().lock();
    run_command_with(argv, &mut out, &mut err)
}

#[cfg(test)]
mod tests {
    use super::*;

    fn run(args: &[&str]) -> (i32, String, String) {
        let mut out = Vec::new();
        let mut err = Vec::new();
        let argv = std::iter::once("asymbell").chain(args.iter().copied());
        let code = run_command_with(argv, &mut out, &mut err);
        (
            code,
            String::from_utf8(out).unwrap(),
            String::from_utf8(err).unwrap(),
        )
    }

    #[test]
    fn eta_and_dims_parse() {
        assert_eq!("auto".parse::<EtaArg>().unwrap(), EtaArg::Auto);
        assert_eq!("0.25".parse::<EtaArg>().unwrap(), EtaArg::Value(0.25));
        assert!("x".parse::<EtaArg>().is_err());
        assert_eq!("2x3".parse::<Dims>().unwrap(), Dims(2, 3));
        assert_eq!("4,4".parse::<Dims>().unwrap(), Dims(4, 4));
        assert!("4".parse::<Dims>().is_err());
        assert_eq!(parse_override("2=0.25").unwrap(), (2, 0.25));
        assert!(parse_override("2:0.25").is_err());
    }

    #[test]
    fn unknown_flag_is_usage_error_with_help() {
        let (code, _, err) = run(&["scan", "--bogus"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("--bogus") && err.contains("Usage"), "{err}");
        let (code, out, _) = run(&["--help"]);
        assert_eq!(code, EXIT_OK);
        assert!(out.contains("classical-exact"));
    }

    #[test]
    fn gen_asym_kv_has_256_coefficients() {
        let (code, out, err) = run(&["gen", "asym-kv", "--l", "2", "--eta", "0.25"]);
        assert_eq!(code, EXIT_OK, "{err}");
        let f: FunctionalFile = from_json_text(&out).unwrap();
        assert_eq!(f.coeffs.len(), 256);
        let meta = f.metadata.unwrap();
        assert_eq!(
            (meta.l, meta.n, meta.eta, meta.coset_count),
            (2, 4, 0.25, 4)
        );
    }

    #[test]
    fn gen_refuses_degenerate_auto_rate() {
        let (code, _, err) = run(&["gen", "kv", "--l", "2"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("pass --eta explicitly"), "{err}");
    }

    #[test]
    fn exact_on_generated_asym_kv() {
        let (code, out, err) = run(&["classical-exact", "--asym-kv", "2", "--eta", "0.25"]);
        assert_eq!(code, EXIT_OK, "{err}");
        let v: serde_json::Value = serde_json::from_str(&out).unwrap();
        assert_eq!(v["value"].as_f64().unwrap(), 9.0 / 16.0);
        assert_eq!(v["method"], "exact");
        assert!(v["elapsed_ms"].is_null());
    }

    #[test]
    fn exact_budget_error_mentions_k_to_the_n() {
        let (code, _, err) = run(&["classical-exact", "--asym-kv", "3", "--eta", "auto"]);
        assert_eq!(code, EXIT_ERROR);
        assert!(err.contains("K^N"), "{err}");
    }

    #[test]
    fn check_parseval_small() {
        let (code, out, err) = run(&[
            "check", "parseval", "--l", "2:3", "--trials", "50", "--seed", "7",
        ]);
        assert_eq!(code, EXIT_OK, "{err}");
        let v: Vec<CheckOutcome> = serde_json::from_str(&out).unwrap();
        assert_eq!(v.len(), 4);
    }
}
