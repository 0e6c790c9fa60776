//! `semidyn` command line: config loading, dispatch, artifacts, exit codes.
//!
//! Exit codes: 0 when every check passes, 1 when a check fails, 2 on
//! configuration, IO or usage errors.

pub mod config;
pub mod ppm;
pub mod report;
pub mod verify;

use std::path::{Path, PathBuf};
use std::time::Instant;

use clap::{Args, Parser, Subcommand};
use num_complex::Complex64;

use crate::escape::{classify_grid, julia_pixels, EscapeError, JuliaMode};
use crate::expr::{parse, Bindings, ExprError};
use crate::semigroup::SemigroupError;
use crate::singular::{hyperbolicity_check, singular_values, SingularError};
use config::{ConfigError, RunConfig};
use report::{to_value, Report};

pub const THREADS_ENV: &str = "SEMIDYN_THREADS";

#[derive(Debug, thiserror::Error)]
pub enum CliError {
    #[error(transparent)]
    Config(#[from] ConfigError),
    #[error("{0}")]
    Usage(String),
    #[error("io error on {path}: {message}")]
    Io { path: String, message: String },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Escape(#[from] EscapeError),
    #[error(transparent)]
    Singular(#[from] SingularError),
}

#[derive(Debug, Parser)]
#[command(
    name = "semidyn",
    version,
    about = "Escaping sets and hyperbolicity evidence for transcendental semigroups"
)]
pub struct Cli {
    #[command(subcommand)]
    pub command: Command,
}

#[derive(Debug, Args)]
pub struct Common {
    /// Run configuration file.
    #[arg(long)]
    pub config: PathBuf,
    /// Write the JSON report here instead of the configured path or stdout.
    #[arg(long)]
    pub report: Option<PathBuf>,
}

#[derive(Debug, Subcommand)]
pub enum Command {
    /// Classify the grid and write a PPM image plus a report.
    Render {
        #[command(flatten)]
        common: Common,
        /// Image path; overrides `[output] image`.
        #[arg(long)]
        out: Option<PathBuf>,
    },
    /// Classify the grid and report pixel counts.
    Classify {
        #[command(flatten)]
        common: Common,
    },
    /// Hyperbolicity evidence for every configured semigroup.
    Hyperbolic {
        #[command(flatten)]
        common: Common,
    },
    /// Connected components of the escaping mask.
    Components {
        #[command(flatten)]
        common: Common,
    },
    /// Run a named experiment; exits 1 if any check fails.
    Verify {
        experiment: String,
        #[command(flatten)]
        common: Common,
    },
    /// Parse an expression and print its normal form.
    ParseCheck {
        expr: String,
        /// Take bindings from this configuration.
        #[arg(long)]
        config: Option<PathBuf>,
        /// Extra binding `name=value`, value in the expression syntax.
        #[arg(long = "bind", value_name = "NAME=VALUE")]
        binds: Vec<String>,
    },
}

/// Parses `std::env::args`, runs, and returns the process exit code.
pub fn main_with_args<I, T>(args: I) -> i32
where
    I: IntoIterator<Item = T>,
    T: Into<std::ffi::OsString> + Clone,
{
    let cli = match Cli::try_parse_from(args) {
        Ok(c) => c,
        Err(e) => {
            let _ = e.print();
            return if e.use_stderr() { 2 } else { 0 };
        }
    };
    match run(cli) {
        Ok(code) => code,
        Err(e) => {
            eprintln!("error: {e}");
            2
        }
    }
}

fn thread_count() -> Result<Option<usize>, CliError> {
    match std::env::var(THREADS_ENV) {
        Err(_) => Ok(None),
        Ok(v) => match v.trim().parse::<usize>() {
            Ok(n) if n > 0 => Ok(Some(n)),
            _ => Err(CliError::Usage(format!(
                "{THREADS_ENV} must be a positive integer, got `{v}`"
            ))),
        },
    }
}

pub fn run(cli: Cli) -> Result<i32, CliError> {
    let mut builder = rayon::ThreadPoolBuilder::new();
    if let Some(n) = thread_count()? {
        builder = builder.num_threads(n);
    }
    let pool = builder
        .build()
        .map_err(|e| CliError::Usage(format!("cannot start worker pool: {e}")))?;
    pool.install(|| dispatch(cli.command))
}

fn load(common: &Common) -> Result<RunConfig, CliError> {
    let mut cfg = RunConfig::load(&common.config)?;
    if let Some(r) = &common.report {
        cfg.output.report = Some(r.display().to_string());
    }
    Ok(cfg)
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    ppm::write_atomic(path, bytes).map_err(|e| CliError::Io {
        path: path.display().to_string(),
        message: e.to_string(),
    })
}

/// Writes the report, echoes check lines to stderr and maps the outcome to an exit code.
fn finish(report: &Report, started: Instant) -> Result<i32, CliError> {
    let json = report.to_json();
    match &report.config.run.output.report {
        Some(p) => write_file(Path::new(p), json.as_bytes())?,
        None => print!("{json}"),
    }
    for c in &report.checks {
        eprintln!(
            "[{}] {}: {} (expected {})",
            if c.passed { "PASS" } else { "FAIL" },
            c.name,
            c.measured,
            c.expected
        );
    }
    eprintln!("elapsed: {:.2}s", started.elapsed().as_secs_f64());
    Ok(if report.passed() { 0 } else { 1 })
}

fn dispatch(command: Command) -> Result<i32, CliError> {
    let started = Instant::now();
    match command {
        Command::Render { common, out } => {
            let mut cfg = load(&common)?;
            if let Some(o) = out {
                cfg.output.image = Some(o.display().to_string());
            }
            let image = cfg
                .output
                .image
                .clone()
                .ok_or_else(|| CliError::Usage("render needs --out or `[output] image`".into()))?;
            let s = cfg.first_semigroup()?;
            let c = classify_grid(&s, &cfg.grid, &cfg.classify_params())?;
            let overlay = cfg.output.julia_overlay.then(|| julia_pixels(&c, JuliaMode::Closure));
            write_file(Path::new(&image), &ppm::render(&c, overlay.as_ref()))?;
            let mut report = Report::new("render", &cfg);
            report.classification_summary = to_value(vec![c.summary()]);
            report.components = serde_json::Value::Array(vec![verify::component_section(&c, &cfg, false)]);
            finish(&report, started)
        }
        Command::Classify { common } => {
            let cfg = load(&common)?;
            let mut report = Report::new("classify", &cfg);
            let mut summaries = Vec::new();
            for s in cfg.semigroups()? {
                summaries.push(classify_grid(&s, &cfg.grid, &cfg.classify_params())?.summary());
            }
            report.classification_summary = to_value(summaries);
            finish(&report, started)
        }
        Command::Components { common } => {
            let cfg = load(&common)?;
            let mut report = Report::new("components", &cfg);
            let mut summaries = Vec::new();
            let mut sections = Vec::new();
            for s in cfg.semigroups()? {
                let c = classify_grid(&s, &cfg.grid, &cfg.classify_params())?;
                summaries.push(c.summary());
                sections.push(verify::component_section(&c, &cfg, true));
            }
            report.classification_summary = to_value(summaries);
            report.components = serde_json::Value::Array(sections);
            finish(&report, started)
        }
        Command::Hyperbolic { common } => {
            let cfg = load(&common)?;
            let mut report = Report::new("hyperbolic", &cfg);
            let mut out = Vec::new();
            for s in cfg.semigroups()? {
                out.push(hyperbolicity_check(&s, &cfg.grid, &cfg.hyperbolicity_params())?);
            }
            report.hyperbolicity = to_value(out);
            finish(&report, started)
        }
        Command::Verify { experiment, common } => {
            let cfg = load(&common)?;
            let mut report = Report::new(&format!("verify {experiment}"), &cfg);
            verify::run_experiment(&experiment, &cfg, &mut report)?;
            finish(&report, started)
        }
        Command::ParseCheck { expr, config, binds } => parse_check(&expr, config.as_deref(), &binds),
    }
}

fn parse_check(text: &str, config: Option<&Path>, binds: &[String]) -> Result<i32, CliError> {
    let mut bindings = match config {
        Some(p) => RunConfig::load(p)?.bindings(),
        None => Bindings::new(),
    };
    for b in binds {
        let (name, value) = b
            .split_once('=')
            .ok_or_else(|| CliError::Usage(format!("--bind expects NAME=VALUE, got `{b}`")))?;
        let v = parse(value.trim(), &bindings)?;
        if v.depends_on_var() {
            return Err(CliError::Usage(format!("binding `{name}` must not depend on z")));
        }
        let v = v
            .eval(Complex64::new(0.0, 0.0))
            .map_err(|_| CliError::Usage(format!("binding `{name}` overflows")))?;
        bindings.insert(name.trim(), v)?;
    }
    let e = parse(text, &bindings)?;
    let n = e.normalize()?;
    println!("normalized: {n}");
    println!("nodes: {}", n.node_count());
    println!("transcendental: {}", n.is_transcendental());
    match singular_values(&n) {
        Ok(sv) => {
            let vals: Vec<String> = sv.values().iter().map(|v| format!("{v}")).collect();
            println!("singular values: [{}]", vals.join(", "));
            if sv.is_over_approximation {
                println!("singular values are an over-approximation");
            }
        }
        Err(err) => println!("singular values: unavailable ({err})"),
    }
    Ok(0)
}
