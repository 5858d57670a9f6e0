//! Command-line runner for the verification suites.
//!
//! Settings come from flags, then an optional `key = value` config file, then
//! suite defaults. Reports are written as JSON or CSV and are byte-identical
//! for identical settings, whatever the thread count.

use std::collections::BTreeMap;
use std::fmt::Write as _;
use std::io::Write;
use std::path::{Path, PathBuf};
use std::time::Instant;

use burke_core::coding::{decode_phi, encode_suite, roundtrip_report, CodeWindow, CodingConfig};
use burke_core::continuum::{brownian_checks, burke_checks_mm1, BrownianConfig, Mm1Params};
use burke_core::irf::{irf_suite, IrfCheckConfig};
use burke_core::oracle::{oracle_suite, OracleConfig};
use burke_core::stats::{CertificationStat, LawSeries, SuiteOutcome, TestReport};
use burke_core::transform::{discrete_monte_carlo, DiscreteConfig};
use burke_core::walk::{ModelParams, DEFAULT_SEED_CAP};
use burke_core::Error;
use clap::{Parser, Subcommand, ValueEnum};
use serde::Serialize;
use serde_json::{json, Value};

pub const EXIT_PASS: i32 = 0;
pub const EXIT_FAIL: i32 = 1;
pub const EXIT_USAGE: i32 = 2;

pub const CSV_HEADER: &str = "test,statistic,p_value,pass,n";

#[derive(Parser, Debug)]
#[command(name = "burke", version, about = "Verification suites for the Burke transform")]
struct Cli {
    #[command(subcommand)]
    command: Suite,
    #[command(flatten)]
    opts: Opts,
}

#[derive(Subcommand, Debug, Clone, Copy, PartialEq, Eq)]
enum Suite {
    /// Monte Carlo checks of T: queue law, output law, involution.
    Discrete,
    /// Exact enumeration over short windows.
    Oracle,
    /// Law of the coding by queue lengths at the origin.
    Encode,
    /// Decode a given code into spins.
    Decode,
    /// Encode then decode random windows and compare.
    Roundtrip,
    /// Continuous-time M/M/1 queue.
    Mm1,
    /// Brownian motion with drift and its running maximum.
    Brownian,
    /// Iterated random functions run backward.
    Irf,
    /// Every suite at its default size.
    All,
}

impl Suite {
    fn name(self) -> &'static str {
        match self {
            Suite::Discrete => "discrete",
            Suite::Oracle => "oracle",
            Suite::Encode => "encode",
            Suite::Decode => "decode",
            Suite::Roundtrip => "roundtrip",
            Suite::Mm1 => "mm1",
            Suite::Brownian => "brownian",
            Suite::Irf => "irf",
            Suite::All => "all",
        }
    }
}

#[derive(ValueEnum, Debug, Clone, Copy, PartialEq, Eq)]
enum Format {
    Json,
    Csv,
}

#[derive(clap::Args, Debug, Default)]
struct Opts {
    /// Probability of a +1 spin, as a fraction ("2/3") or decimal.
    #[arg(long, global = true)]
    p: Option<String>,
    /// Arrival rate of the M/M/1 queue.
    #[arg(long, global = true)]
    lambda: Option<String>,
    /// Service rate of the M/M/1 queue.
    #[arg(long, global = true)]
    xi: Option<String>,
    /// Drift of the Brownian motion.
    #[arg(long, global = true)]
    nu: Option<String>,
    /// Brownian grid step.
    #[arg(long, global = true)]
    step: Option<String>,
    /// Window length, horizon, or past span, depending on the suite.
    #[arg(long, global = true)]
    window: Option<String>,
    /// Number of iterates of T on each side of 0.
    #[arg(long, global = true)]
    iterates: Option<String>,
    /// Coordinate half-width (coding) or past length (oracle, irf).
    #[arg(long, global = true)]
    coords: Option<String>,
    /// Trials or replicas.
    #[arg(long, global = true)]
    samples: Option<String>,
    /// Root seed.
    #[arg(long, global = true)]
    seed: Option<String>,
    /// Cap for coupled seeds.
    #[arg(long = "seed-cap", global = true)]
    seed_cap: Option<String>,
    #[arg(long, value_enum, global = true)]
    format: Option<Format>,
    /// Report path; stdout when absent.
    #[arg(long, global = true)]
    out: Option<PathBuf>,
    /// Worker threads; 0 uses every core. Does not affect the report.
    #[arg(long, global = true)]
    threads: Option<usize>,
    /// Config file of `key = value` lines.
    #[arg(long, global = true)]
    config: Option<PathBuf>,
    /// CSV path for plot series.
    #[arg(long, global = true)]
    series: Option<PathBuf>,
    /// Code values for `decode`, comma separated, `?` for unknown.
    #[arg(long, global = true)]
    code: Option<String>,
    /// Iterate index of the first code value for `decode`.
    #[arg(long = "k-origin", global = true, allow_hyphen_values = true)]
    k_origin: Option<String>,
}

/// Keys accepted in config files; they mirror the long flags.
const CONFIG_KEYS: &[&str] = &[
    "p", "lambda", "xi", "nu", "step", "window", "iterates", "coords", "samples", "seed",
    "seed-cap", "format", "out", "threads", "series", "code", "k-origin",
];

/// Keys that set a suite's size; `all` rejects them.
const SIZE_KEYS: &[&str] = &["step", "window", "iterates", "coords", "samples", "code", "k-origin", "series"];

#[derive(Debug)]
enum CliError {
    Usage(String),
    Fail(String),
}

impl From<Error> for CliError {
    fn from(e: Error) -> Self {
        match e {
            Error::CertificationLost { .. } | Error::NoCoalescence { .. } | Error::UnrealizablePair { .. } => {
                CliError::Fail(e.to_string())
            }
            _ => CliError::Usage(e.to_string()),
        }
    }
}

/// Parses a config file: `key = value` per line, `#` starts a comment.
pub fn parse_config(text: &str) -> Result<BTreeMap<String, String>, String> {
    let mut out = BTreeMap::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.split('#').next().unwrap_or("").trim();
        if line.is_empty() {
            continue;
        }
        let (k, v) = line
            .split_once('=')
            .ok_or_else(|| format!("line {}: expected `key = value`", i + 1))?;
        let (k, v) = (k.trim().replace('_', "-"), v.trim());
        if !CONFIG_KEYS.contains(&k.as_str()) {
            return Err(format!("line {}: unknown key `{k}`", i + 1));
        }
        if v.is_empty() {
            return Err(format!("line {}: empty value for `{k}`", i + 1));
        }
        out.insert(k, v.to_string());
    }
    Ok(out)
}

/// Merged settings: flags over config file.
struct Settings {
    values: BTreeMap<String, String>,
}

impl Settings {
    fn new(opts: &Opts) -> Result<Self, CliError> {
        let mut values = match &opts.config {
            Some(path) => {
                let text = std::fs::read_to_string(path)
                    .map_err(|e| CliError::Usage(format!("cannot read {}: {e}", path.display())))?;
                parse_config(&text).map_err(|e| CliError::Usage(format!("{}: {e}", path.display())))?
            }
            None => BTreeMap::new(),
        };
        let flags: [(&str, Option<String>); 17] = [
            ("p", opts.p.clone()),
            ("lambda", opts.lambda.clone()),
            ("xi", opts.xi.clone()),
            ("nu", opts.nu.clone()),
            ("step", opts.step.clone()),
            ("window", opts.window.clone()),
            ("iterates", opts.iterates.clone()),
            ("coords", opts.coords.clone()),
            ("samples", opts.samples.clone()),
            ("seed", opts.seed.clone()),
            ("seed-cap", opts.seed_cap.clone()),
            ("format", opts.format.map(|f| format!("{f:?}").to_lowercase())),
            ("out", opts.out.as_ref().map(|p| p.display().to_string())),
            ("threads", opts.threads.map(|t| t.to_string())),
            ("series", opts.series.as_ref().map(|p| p.display().to_string())),
            ("code", opts.code.clone()),
            ("k-origin", opts.k_origin.clone()),
        ];
        for (k, v) in flags {
            if let Some(v) = v {
                values.insert(k.to_string(), v);
            }
        }
        Ok(Settings { values })
    }

    fn raw(&self, key: &str) -> Option<&str> {
        self.values.get(key).map(String::as_str)
    }

    fn parsed<T: std::str::FromStr>(&self, key: &str, default: T) -> Result<T, CliError>
    where
        T::Err: std::fmt::Display,
    {
        match self.raw(key) {
            Some(v) => v
                .parse()
                .map_err(|e| CliError::Usage(format!("invalid --{key} `{v}`: {e}"))),
            None => Ok(default),
        }
    }

    fn params(&self) -> Result<ModelParams, CliError> {
        match self.raw("p") {
            Some(v) => v.parse().map_err(|e: Error| CliError::Usage(format!("invalid --p `{v}`: {e}"))),
            None => Ok(ModelParams::default()),
        }
    }

    fn format(&self) -> Result<Format, CliError> {
        match self.raw("format") {
            None | Some("json") => Ok(Format::Json),
            Some("csv") => Ok(Format::Csv),
            Some(v) => Err(CliError::Usage(format!("invalid format `{v}`; expected json or csv"))),
        }
    }
}

/// A suite result with the configuration that produced it.
struct Run {
    config: BTreeMap<String, Value>,
    outcome: SuiteOutcome,
    /// Extra CSV written to `--series` in place of law series.
    table: Option<String>,
}

#[derive(Serialize)]
struct RunReport<'a> {
    config: &'a BTreeMap<String, Value>,
    tests: &'a [TestReport],
    #[serde(skip_serializing_if = "<[CertificationStat]>::is_empty")]
    certification: &'a [CertificationStat],
    pass: bool,
}

/// Renders a report; identical inputs give identical bytes.
pub fn render_json(config: &BTreeMap<String, Value>, outcome: &SuiteOutcome) -> String {
    let r = RunReport {
        config,
        tests: &outcome.tests,
        certification: &outcome.certification,
        pass: outcome.pass(),
    };
    let mut s = serde_json::to_string(&r).expect("report serializes");
    s.push('\n');
    s
}

fn csv_field(s: &str) -> String {
    if s.contains([',', '"', '\n']) {
        format!("\"{}\"", s.replace('"', "\"\""))
    } else {
        s.to_string()
    }
}

pub fn render_csv(outcome: &SuiteOutcome) -> String {
    let mut s = String::from(CSV_HEADER);
    s.push('\n');
    for t in &outcome.tests {
        let p = t.p_value.map(|p| p.to_string()).unwrap_or_default();
        let _ = writeln!(s, "{},{},{},{},{}", csv_field(&t.name), t.statistic, p, t.pass, t.n);
    }
    s
}

fn render_series(series: &[LawSeries]) -> String {
    let mut s = String::from("series,x,empirical,theoretical\n");
    for l in series {
        for (x, e, t) in &l.rows {
            let _ = writeln!(s, "{},{x},{e},{t}", csv_field(&l.name));
        }
    }
    s
}

fn model_echo(cfg: &mut BTreeMap<String, Value>, params: &ModelParams, seed: u64, cap: u64) {
    cfg.insert("p".into(), json!(params.to_string()));
    cfg.insert("seed".into(), json!(seed));
    cfg.insert("seed_cap".into(), json!(cap));
}

fn discrete(s: &Settings, cfg: &mut BTreeMap<String, Value>) -> Result<SuiteOutcome, CliError> {
    let params = s.params()?;
    let seed = s.parsed("seed", 0u64)?;
    let d = DiscreteConfig::default();
    let trials: usize = s.parsed("samples", d.trials)?;
    let c = DiscreteConfig {
        window: s.parsed("window", d.window)?,
        trials,
        q0_samples: trials.saturating_mul(100),
        cap: s.parsed("seed-cap", d.cap)?,
    };
    if c.window < 8 {
        return Err(CliError::Usage("discrete needs --window >= 8".into()));
    }
    model_echo(cfg, &params, seed, c.cap);
    cfg.insert("window".into(), json!(c.window));
    cfg.insert("samples".into(), json!(c.trials));
    cfg.insert("q0_samples".into(), json!(c.q0_samples));
    Ok(discrete_monte_carlo(&params, &c, seed)?)
}

fn oracle(s: &Settings, cfg: &mut BTreeMap<String, Value>) -> Result<SuiteOutcome, CliError> {
    let params = s.params()?;
    let d = OracleConfig::default();
    let c = OracleConfig {
        window: s.parsed("window", d.window)?,
        cap: s.parsed("seed-cap", d.cap)?,
        past: s.parsed("coords", d.past)?,
        ..d
    };
    model_echo(cfg, &params, s.parsed("seed", 0u64)?, c.cap);
    cfg.insert("window".into(), json!(c.window));
    cfg.insert("coords".into(), json!(c.past));
    cfg.insert("dual_window".into(), json!(c.dual_window));
    cfg.insert("dual_seed_cap".into(), json!(c.dual_cap));
    cfg.insert("stationary_window".into(), json!(c.stationary_window));
    cfg.insert("exact".into(), json!(params.exact().is_some()));
    Ok(oracle_suite(&params, &c)?)
}

fn coding_config(s: &Settings, cfg: &mut BTreeMap<String, Value>) -> Result<(ModelParams, CodingConfig, u64), CliError> {
    let params = s.params()?;
    let seed = s.parsed("seed", 0u64)?;
    let d = CodingConfig::default();
    let margin: Option<usize> = match s.raw("window") {
        Some(_) => Some(s.parsed("window", 0usize)?),
        None => None,
    };
    let c = CodingConfig {
        iterates: s.parsed("iterates", d.iterates)?,
        coords: s.parsed("coords", d.coords)?,
        trials: s.parsed("samples", d.trials)?,
        cap: s.parsed("seed-cap", d.cap)?,
        margin,
    };
    if c.iterates > 4096 || c.coords > 4096 {
        return Err(CliError::Usage("--iterates and --coords are limited to 4096".into()));
    }
    model_echo(cfg, &params, seed, c.cap);
    cfg.insert("iterates".into(), json!(c.iterates));
    cfg.insert("coords".into(), json!(c.coords));
    cfg.insert("samples".into(), json!(c.trials));
    cfg.insert("margin".into(), json!(c.margin(&params)));
    Ok((params, c, seed))
}

fn parse_code(text: &str, k_origin: i64) -> Result<CodeWindow, CliError> {
    let values = text
        .split(',')
        .map(|v| match v.trim() {
            "?" => Ok(None),
            t => t
                .parse::<u64>()
                .map(Some)
                .map_err(|e| CliError::Usage(format!("invalid code value `{t}`: {e}"))),
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(CodeWindow::new(k_origin, values))
}

fn decode(s: &Settings, cfg: &mut BTreeMap<String, Value>) -> Result<(SuiteOutcome, String), CliError> {
    let text = s
        .raw("code")
        .ok_or_else(|| CliError::Usage("decode needs --code".into()))?;
    let k_origin: i64 = s.parsed("k-origin", 0)?;
    let coords: i64 = s.parsed("coords", 8)?;
    if !(0..=4096).contains(&coords) {
        return Err(CliError::Usage("--coords must be in 0..=4096".into()));
    }
    let code = parse_code(text, k_origin)?;
    cfg.insert("code".into(), json!(text));
    cfg.insert("k_origin".into(), json!(k_origin));
    cfg.insert("coords".into(), json!(coords));
    let field = decode_phi(&code, -coords, coords)?;
    let mut out = SuiteOutcome::default();
    out.tests.push(TestReport::within(
        "decode.consistency_violations",
        field.consistency_violations() as f64,
        0.0,
        (field.spins.len() * field.k_len()) as u64,
    ));
    let mut table = String::from("n,k,spin,queue\n");
    for n in -coords..=coords {
        out.certification.push(CertificationStat::new(
            format!("decode.coordinate[{n}]"),
            u64::from(field.spin(n, 0).is_some()),
            1,
        ));
        for k in code.k_origin..code.k_end() {
            let spin = field.spin(n, k).map(|v| v.value().to_string()).unwrap_or_default();
            let q = field.queue(n, k).map(|v| v.to_string()).unwrap_or_default();
            let _ = writeln!(table, "{n},{k},{spin},{q}");
        }
    }
    Ok((out, table))
}

fn mm1(s: &Settings, cfg: &mut BTreeMap<String, Value>) -> Result<SuiteOutcome, CliError> {
    let d = Mm1Params::default();
    let params = Mm1Params::new(s.parsed("lambda", d.lambda())?, s.parsed("xi", d.xi())?)?;
    let horizon: f64 = s.parsed("window", 50.0)?;
    if !(horizon.is_finite() && (0.0..=1e6).contains(&horizon)) {
        return Err(CliError::Usage(format!("--window must be in [0, 1e6], got {horizon}")));
    }
    let replicas: usize = s.parsed("samples", 10_000)?;
    let seed = s.parsed("seed", 0u64)?;
    cfg.insert("lambda".into(), json!(params.lambda()));
    cfg.insert("xi".into(), json!(params.xi()));
    cfg.insert("window".into(), json!(horizon));
    cfg.insert("samples".into(), json!(replicas));
    cfg.insert("seed".into(), json!(seed));
    Ok(burke_checks_mm1(&params, horizon, replicas, seed)?)
}

fn brownian(s: &Settings, cfg: &mut BTreeMap<String, Value>) -> Result<SuiteOutcome, CliError> {
    let d = BrownianConfig::default();
    let c = BrownianConfig {
        nu: s.parsed("nu", d.nu)?,
        h: s.parsed("step", d.h)?,
        t_past: s.parsed("window", d.t_past)?,
        ..d
    };
    let replicas: usize = s.parsed("samples", 10_000)?;
    let seed = s.parsed("seed", 0u64)?;
    cfg.insert("nu".into(), json!(c.nu));
    cfg.insert("step".into(), json!(c.h));
    cfg.insert("window".into(), json!(c.t_past));
    cfg.insert("samples".into(), json!(replicas));
    cfg.insert("seed".into(), json!(seed));
    Ok(brownian_checks(&c, replicas, seed)?)
}

fn irf(s: &Settings, cfg: &mut BTreeMap<String, Value>) -> Result<SuiteOutcome, CliError> {
    let params = s.params()?;
    let d = IrfCheckConfig::default();
    let c = IrfCheckConfig {
        samples: s.parsed("samples", d.samples)?,
        block: s.parsed("coords", d.block)?,
        ..d
    };
    if c.block == 0 || c.block > 12 {
        return Err(CliError::Usage("irf needs 1 <= --coords <= 12".into()));
    }
    let cap = s.parsed("seed-cap", DEFAULT_SEED_CAP)?;
    let seed = s.parsed("seed", 0u64)?;
    model_echo(cfg, &params, seed, cap);
    cfg.insert("q".into(), json!(1.0 - params.p()));
    cfg.insert("coords".into(), json!(c.block));
    cfg.insert("samples".into(), json!(c.samples));
    // kappa{+1} = q = 1 - p under theta = -omega
    Ok(irf_suite(1.0 - params.p(), cap, &c, seed)?)
}

fn all(s: &Settings, cfg: &mut BTreeMap<String, Value>) -> Result<SuiteOutcome, CliError> {
    if let Some(k) = SIZE_KEYS.iter().find(|k| s.raw(k).is_some()) {
        return Err(CliError::Usage(format!("`all` runs default sizes and does not accept --{k}")));
    }
    let mut out = SuiteOutcome::default();
    type Runner = fn(&Settings, &mut BTreeMap<String, Value>) -> Result<SuiteOutcome, CliError>;
    let suites: [(&str, Runner); 6] = [
        ("oracle", oracle),
        ("discrete", discrete),
        ("roundtrip", |s, c| {
            let (p, cc, seed) = coding_config(s, c)?;
            Ok(roundtrip_report(&p, &cc, seed)?)
        }),
        ("mm1", mm1),
        ("brownian", brownian),
        ("irf", irf),
    ];
    for (name, run) in suites {
        let mut sub = BTreeMap::new();
        out.extend(run(s, &mut sub)?);
        cfg.insert(name.into(), Value::Object(sub.into_iter().collect()));
    }
    Ok(out)
}

fn execute(suite: Suite, s: &Settings) -> Result<Run, CliError> {
    let mut config = BTreeMap::new();
    config.insert("suite".to_string(), json!(suite.name()));
    let mut table = None;
    let outcome = match suite {
        Suite::Discrete => discrete(s, &mut config)?,
        Suite::Oracle => oracle(s, &mut config)?,
        Suite::Encode => {
            let (p, c, seed) = coding_config(s, &mut config)?;
            encode_suite(&p, &c, seed)?
        }
        Suite::Roundtrip => {
            let (p, c, seed) = coding_config(s, &mut config)?;
            roundtrip_report(&p, &c, seed)?
        }
        Suite::Decode => {
            let (o, t) = decode(s, &mut config)?;
            table = Some(t);
            o
        }
        Suite::Mm1 => mm1(s, &mut config)?,
        Suite::Brownian => brownian(s, &mut config)?,
        Suite::Irf => irf(s, &mut config)?,
        Suite::All => all(s, &mut config)?,
    };
    Ok(Run { config, outcome, table })
}

fn write_to(path: Option<&Path>, text: &str, stdout: &mut dyn Write) -> Result<(), CliError> {
    match path {
        Some(p) => std::fs::write(p, text).map_err(|e| CliError::Fail(format!("cannot write {}: {e}", p.display()))),
        None => stdout
            .write_all(text.as_bytes())
            .map_err(|e| CliError::Fail(format!("cannot write report: {e}"))),
    }
}

fn run_parsed(cli: Cli, stdout: &mut dyn Write, stderr: &mut dyn Write) -> Result<bool, CliError> {
    let settings = Settings::new(&cli.opts)?;
    let format = settings.format()?;
    let threads: usize = settings.parsed("threads", 0)?;
    let pool = rayon::ThreadPoolBuilder::new()
        .num_threads(threads)
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start {threads} threads: {e}")))?;
    let start = Instant::now();
    let run = pool.install(|| execute(cli.command, &settings))?;
    let _ = writeln!(stderr, "{}: {:.2}s", cli.command.name(), start.elapsed().as_secs_f64());

    let text = match format {
        Format::Json => render_json(&run.config, &run.outcome),
        Format::Csv => render_csv(&run.outcome),
    };
    write_to(settings.raw("out").map(Path::new), &text, stdout)?;
    if let Some(path) = settings.raw("series") {
        let body = run.table.unwrap_or_else(|| render_series(&run.outcome.series));
        std::fs::write(path, body).map_err(|e| CliError::Fail(format!("cannot write {path}: {e}")))?;
    }
    for t in run.outcome.tests.iter().filter(|t| !t.pass) {
        let _ = writeln!(stderr, "FAIL {} statistic={} p={:?} bound={:?}", t.name, t.statistic, t.p_value, t.bound);
    }
    Ok(run.outcome.pass())
}

/// Runs the CLI with explicit output streams; returns the exit code.
pub fn run_with<I, T>(args: I, stdout: &mut dyn Write, stderr: &mut dyn Write) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            use clap::error::ErrorKind;
            let code = match e.kind() {
                ErrorKind::DisplayHelp | ErrorKind::DisplayVersion => EXIT_PASS,
                _ => EXIT_USAGE,
            };
            let _ = write!(stderr, "{e}");
            return code;
        }
    };
    match run_parsed(cli, stdout, stderr) {
        Ok(true) => EXIT_PASS,
        Ok(false) => EXIT_FAIL,
        Err(CliError::Usage(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_USAGE
        }
        Err(CliError::Fail(m)) => {
            let _ = writeln!(stderr, "error: {m}");
            EXIT_FAIL
        }
    }
}

/// Runs the CLI against the process streams.
pub fn run<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    run_with(args, &mut std::io::stdout().lock(), &mut std::io::stderr().lock())
}
