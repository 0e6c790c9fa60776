//! Plain-text run configuration: `[section]` headers and `key = value`
//! lines. `#` starts a comment line. Values may be bare or double-quoted;
//! a comma-separated list of quoted strings is allowed where a key takes
//! several expressions. `generator` and `pair` may repeat, and each
//! `[semigroup]` header starts a new semigroup.

use std::path::Path;

use num_complex::Complex64;
use serde::Serialize;

use crate::escape::{ClassifyParams, GridSpec};
use crate::expr::{parse, Bindings};
use crate::numerics::OrbitParams;
use crate::semigroup::{Semigroup, DEFAULT_WORD_CAP, DEFAULT_WORD_LENGTH};
use crate::singular::{HyperbolicityParams, DEFAULT_DEPTH, DEFAULT_SEPARATION_DIAGONALS};
use crate::topology::Connectivity;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum ConfigError {
    #[error("line {line}: {message}")]
    Syntax { line: usize, message: String },
    #[error("invalid configuration: {0}")]
    Invalid(String),
    #[error("cannot read {path}: {message}")]
    Io { path: String, message: String },
}

fn at(line: usize, message: impl Into<String>) -> ConfigError {
    ConfigError::Syntax {
        line,
        message: message.into(),
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct BindingEntry {
    pub name: String,
    pub expr: String,
    pub value: Complex64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SemigroupConfig {
    pub label: String,
    pub generators: Vec<String>,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct WordsConfig {
    pub max_length: usize,
    pub cap: usize,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolicConfig {
    pub max_length: usize,
    pub depth: usize,
    pub separation_diagonals: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct TopologyConfig {
    pub connectivity: Connectivity,
    pub enlarge: f64,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct VerifyConfig {
    pub depth: usize,
    pub tolerance: f64,
    /// Bound on the fraction of escaping pixels that stay fully surrounded after refinement.
    pub interior_fraction: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct FamilyConfig {
    pub expr: String,
    pub parameter: String,
    pub hyperbolic: Vec<f64>,
    pub not_hyperbolic: Vec<f64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct OutputConfig {
    pub image: Option<String>,
    pub report: Option<String>,
    pub julia_overlay: bool,
}

/// Fully resolved run configuration; every default is explicit.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RunConfig {
    pub experiment: String,
    pub bindings: Vec<BindingEntry>,
    pub semigroups: Vec<SemigroupConfig>,
    pub grid: GridSpec,
    pub orbit: OrbitParams,
    pub words: WordsConfig,
    pub hyperbolic: HyperbolicConfig,
    pub topology: TopologyConfig,
    pub verify: VerifyConfig,
    pub family: Option<FamilyConfig>,
    pub lemma_sv: Vec<(String, String)>,
    pub output: OutputConfig,
}

impl Default for RunConfig {
    fn default() -> Self {
        RunConfig {
            experiment: String::new(),
            bindings: Vec::new(),
            semigroups: Vec::new(),
            grid: GridSpec::square(4.0, 128),
            orbit: OrbitParams::default(),
            words: WordsConfig {
                max_length: DEFAULT_WORD_LENGTH,
                cap: DEFAULT_WORD_CAP,
            },
            hyperbolic: HyperbolicConfig {
                max_length: 1,
                depth: DEFAULT_DEPTH,
                separation_diagonals: DEFAULT_SEPARATION_DIAGONALS,
            },
            topology: TopologyConfig {
                connectivity: Connectivity::Four,
                enlarge: 2.0,
            },
            verify: VerifyConfig {
                depth: 50,
                tolerance: 1e-6,
                interior_fraction: 0.005,
            },
            family: None,
            lemma_sv: Vec::new(),
            output: OutputConfig {
                image: None,
                report: None,
                julia_overlay: true,
            },
        }
    }
}

fn unquote_list(raw: &str, line: usize) -> Result<Vec<String>, ConfigError> {
    let mut out = Vec::new();
    let mut chars = raw.trim().chars().peekable();
    loop {
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            Some('"') => {}
            Some(c) => return Err(at(line, format!("expected `\"`, found `{c}`"))),
            None => return Err(at(line, "expected a quoted string")),
        }
        let mut s = String::new();
        loop {
            match chars.next() {
                Some('\\') => match chars.next() {
                    Some(c) => s.push(c),
                    None => return Err(at(line, "dangling escape")),
                },
                Some('"') => break,
                Some(c) => s.push(c),
                None => return Err(at(line, "unterminated string")),
            }
        }
        out.push(s);
        while chars.peek().is_some_and(|c| c.is_whitespace()) {
            chars.next();
        }
        match chars.next() {
            None => return Ok(out),
            Some(',') => continue,
            Some(c) => return Err(at(line, format!("unexpected `{c}` after string"))),
        }
    }
}

fn scalar(raw: &str, line: usize) -> Result<String, ConfigError> {
    let raw = raw.trim();
    if raw.starts_with('"') {
        let mut v = unquote_list(raw, line)?;
        if v.len() != 1 {
            return Err(at(line, "expected a single value"));
        }
        Ok(v.remove(0))
    } else {
        Ok(raw.to_string())
    }
}

fn number<T: std::str::FromStr>(raw: &str, line: usize, key: &str) -> Result<T, ConfigError> {
    scalar(raw, line)?
        .parse()
        .map_err(|_| at(line, format!("`{key}` expects a number, got `{}`", raw.trim())))
}

fn number_list(raw: &str, line: usize, key: &str) -> Result<Vec<f64>, ConfigError> {
    scalar(raw, line)?
        .split(',')
        .map(|s| {
            s.trim()
                .parse()
                .map_err(|_| at(line, format!("`{key}` expects numbers, got `{}`", s.trim())))
        })
        .collect()
}

fn boolean(raw: &str, line: usize, key: &str) -> Result<bool, ConfigError> {
    match scalar(raw, line)?.as_str() {
        "true" | "yes" | "1" => Ok(true),
        "false" | "no" | "0" => Ok(false),
        other => Err(at(line, format!("`{key}` expects true/false, got `{other}`"))),
    }
}

impl RunConfig {
    pub fn load(path: &Path) -> Result<Self, ConfigError> {
        let text = std::fs::read_to_string(path).map_err(|e| ConfigError::Io {
            path: path.display().to_string(),
            message: e.to_string(),
        })?;
        RunConfig::parse(&text)
    }

    pub fn parse(text: &str) -> Result<Self, ConfigError> {
        let mut cfg = RunConfig::default();
        let mut bindings = Bindings::new();
        let mut section = String::new();
        let mut family: Option<(usize, FamilyConfig)> = None;
        for (idx, raw_line) in text.lines().enumerate() {
            let line = idx + 1;
            let trimmed = raw_line.trim();
            if trimmed.is_empty() || trimmed.starts_with('#') {
                continue;
            }
            if let Some(rest) = trimmed.strip_prefix('[') {
                let name = rest
                    .strip_suffix(']')
                    .ok_or_else(|| at(line, "unterminated section header"))?
                    .trim();
                section = name.to_string();
                match name {
                    "semigroup" => cfg.semigroups.push(SemigroupConfig {
                        label: String::new(),
                        generators: Vec::new(),
                    }),
                    "family" => {
                        family.get_or_insert((
                            line,
                            FamilyConfig {
                                expr: String::new(),
                                parameter: String::new(),
                                hyperbolic: Vec::new(),
                                not_hyperbolic: Vec::new(),
                            },
                        ));
                    }
                    "experiment" | "bindings" | "grid" | "orbit" | "words" | "hyperbolic" | "topology" | "verify"
                    | "lemma_sv" | "output" => {}
                    other => return Err(at(line, format!("unknown section `[{other}]`"))),
                }
                continue;
            }
            let (key, value) = trimmed
                .split_once('=')
                .ok_or_else(|| at(line, "expected `key = value`"))?;
            let key = key.trim();
            let unknown = || at(line, format!("unknown key `{key}` in section `[{section}]`"));
            match section.as_str() {
                "experiment" => match key {
                    "name" => cfg.experiment = scalar(value, line)?,
                    _ => return Err(unknown()),
                },
                "bindings" => {
                    let expr = scalar(value, line)?;
                    let parsed = parse(&expr, &bindings).map_err(|e| at(line, e.to_string()))?;
                    if parsed.depends_on_var() {
                        return Err(at(line, format!("binding `{key}` must not depend on z")));
                    }
                    let v = parsed
                        .eval(Complex64::new(0.0, 0.0))
                        .map_err(|e| at(line, e.to_string()))?;
                    bindings.insert(key, v).map_err(|e| at(line, e.to_string()))?;
                    cfg.bindings.push(BindingEntry {
                        name: key.to_string(),
                        expr,
                        value: v,
                    });
                }
                "semigroup" => {
                    let sg = cfg.semigroups.last_mut().expect("section header pushed one");
                    match key {
                        "label" => sg.label = scalar(value, line)?,
                        "generator" => sg.generators.extend(unquote_or_bare(value, line)?),
                        _ => return Err(unknown()),
                    }
                }
                "grid" => match key {
                    "re_min" => cfg.grid.re_min = number(value, line, key)?,
                    "re_max" => cfg.grid.re_max = number(value, line, key)?,
                    "im_min" => cfg.grid.im_min = number(value, line, key)?,
                    "im_max" => cfg.grid.im_max = number(value, line, key)?,
                    "nx" => cfg.grid.nx = number(value, line, key)?,
                    "ny" => cfg.grid.ny = number(value, line, key)?,
                    _ => return Err(unknown()),
                },
                "orbit" => match key {
                    "max_iter" => cfg.orbit.max_iter = number(value, line, key)?,
                    "escape_radius" => cfg.orbit.escape_radius = number(value, line, key)?,
                    "confirm" => cfg.orbit.confirm = number(value, line, key)?,
                    _ => return Err(unknown()),
                },
                "words" => match key {
                    "max_length" => cfg.words.max_length = number(value, line, key)?,
                    "cap" => cfg.words.cap = number(value, line, key)?,
                    _ => return Err(unknown()),
                },
                "hyperbolic" => match key {
                    "max_length" => cfg.hyperbolic.max_length = number(value, line, key)?,
                    "depth" => cfg.hyperbolic.depth = number(value, line, key)?,
                    "separation_diagonals" => cfg.hyperbolic.separation_diagonals = number(value, line, key)?,
                    _ => return Err(unknown()),
                },
                "topology" => match key {
                    "connectivity" => {
                        cfg.topology.connectivity = match scalar(value, line)?.as_str() {
                            "4" => Connectivity::Four,
                            "8" => Connectivity::Eight,
                            other => return Err(at(line, format!("connectivity must be 4 or 8, got `{other}`"))),
                        }
                    }
                    "enlarge" => cfg.topology.enlarge = number(value, line, key)?,
                    _ => return Err(unknown()),
                },
                "verify" => match key {
                    "depth" => cfg.verify.depth = number(value, line, key)?,
                    "tolerance" => cfg.verify.tolerance = number(value, line, key)?,
                    "interior_fraction" => cfg.verify.interior_fraction = number(value, line, key)?,
                    _ => return Err(unknown()),
                },
                "family" => {
                    let fam = &mut family.as_mut().expect("section header inserted one").1;
                    match key {
                        "expr" => fam.expr = scalar(value, line)?,
                        "parameter" => fam.parameter = scalar(value, line)?,
                        "hyperbolic" => fam.hyperbolic = number_list(value, line, key)?,
                        "not_hyperbolic" => fam.not_hyperbolic = number_list(value, line, key)?,
                        _ => return Err(unknown()),
                    }
                }
                "lemma_sv" => match key {
                    "pair" => {
                        let v = unquote_list(value, line)?;
                        if v.len() != 2 {
                            return Err(at(line, "`pair` expects two quoted expressions: outer, inner"));
                        }
                        cfg.lemma_sv.push((v[0].clone(), v[1].clone()));
                    }
                    _ => return Err(unknown()),
                },
                "output" => match key {
                    "image" => cfg.output.image = Some(scalar(value, line)?),
                    "report" => cfg.output.report = Some(scalar(value, line)?),
                    "julia_overlay" => cfg.output.julia_overlay = boolean(value, line, key)?,
                    _ => return Err(unknown()),
                },
                "" => return Err(at(line, "key outside of any section")),
                _ => unreachable!("sections are validated at the header"),
            }
        }
        if let Some((line, fam)) = family {
            if fam.expr.is_empty() || fam.parameter.is_empty() {
                return Err(at(line, "[family] needs `expr` and `parameter`"));
            }
            cfg.family = Some(fam);
        }
        cfg.validate()?;
        Ok(cfg)
    }

    pub fn bindings(&self) -> Bindings {
        let mut b = Bindings::new();
        for e in &self.bindings {
            b.insert(&e.name, e.value).expect("validated at load");
        }
        b
    }

    /// Every semigroup in the file, parsed.
    pub fn semigroups(&self) -> Result<Vec<Semigroup>, ConfigError> {
        self.semigroups
            .iter()
            .map(|sg| {
                Semigroup::parse(&sg.generators, self.bindings(), &sg.label)
                    .map_err(|e| ConfigError::Invalid(format!("semigroup `{}`: {e}", sg.label)))
            })
            .collect()
    }

    pub fn first_semigroup(&self) -> Result<Semigroup, ConfigError> {
        self.semigroups()?
            .into_iter()
            .next()
            .ok_or_else(|| ConfigError::Invalid("no [semigroup] section".into()))
    }

    pub fn classify_params(&self) -> ClassifyParams {
        ClassifyParams {
            max_word_length: self.words.max_length,
            orbit: self.orbit,
            word_cap: self.words.cap,
        }
    }

    pub fn hyperbolicity_params(&self) -> HyperbolicityParams {
        HyperbolicityParams {
            max_word_length: self.hyperbolic.max_length,
            depth: self.hyperbolic.depth,
            orbit: self.orbit,
            separation_diagonals: self.hyperbolic.separation_diagonals,
        }
    }

    pub fn validate(&self) -> Result<(), ConfigError> {
        let invalid = |m: String| ConfigError::Invalid(m);
        self.grid.validate().map_err(|e| invalid(e.to_string()))?;
        self.orbit.validate().map_err(|e| invalid(e.to_string()))?;
        if self.words.max_length == 0 || self.hyperbolic.max_length == 0 {
            return Err(invalid("word lengths must be at least 1".into()));
        }
        if self.hyperbolic.depth == 0 || self.verify.depth == 0 {
            return Err(invalid("depths must be at least 1".into()));
        }
        if !(self.topology.enlarge.is_finite() && self.topology.enlarge > 0.0) {
            return Err(invalid("topology.enlarge must be positive".into()));
        }
        if !(self.verify.tolerance.is_finite() && self.verify.tolerance > 0.0) {
            return Err(invalid("verify.tolerance must be positive".into()));
        }
        for sg in &self.semigroups {
            if sg.generators.is_empty() {
                return Err(invalid(format!("semigroup `{}` has no generators", sg.label)));
            }
        }
        self.semigroups()?;
        for (outer, inner) in &self.lemma_sv {
            for text in [outer, inner] {
                parse(text, &self.bindings()).map_err(|e| invalid(format!("lemma_sv `{text}`: {e}")))?;
            }
        }
        if let Some(fam) = &self.family {
            let probe = self
                .bindings()
                .with(&fam.parameter, Complex64::new(1.0, 0.0))
                .map_err(|e| invalid(format!("family parameter: {e}")))?;
            parse(&fam.expr, &probe).map_err(|e| invalid(format!("family expr: {e}")))?;
        }
        Ok(())
    }
}

fn unquote_or_bare(raw: &str, line: usize) -> Result<Vec<String>, ConfigError> {
    if raw.trim().starts_with('"') {
        unquote_list(raw, line)
    } else {
        Ok(vec![raw.trim().to_string()])
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    const SAMPLE: &str = r#"
# two generators
[experiment]
name = sample

[bindings]
lam = 0.25
p = 2*pi*i/lam

[semigroup]
label = "quarter pair"
generator = "exp(lam*z)"
generator = "iterate(exp(lam*z), 2) + p"

[grid]
re_min = -2
re_max = 2
im_min = -1
im_max = 1
nx = 16
ny = 8

[orbit]
max_iter = 100

[lemma_sv]
pair = "exp(z)", "exp(-z - 1) + 1"
"#;

    #[test]
    fn parses_sections_and_defaults() {
        let cfg = RunConfig::parse(SAMPLE).unwrap();
        assert_eq!(cfg.experiment, "sample");
        assert_eq!(cfg.semigroups[0].generators.len(), 2);
        assert_eq!(cfg.grid.nx, 16);
        assert_eq!(cfg.orbit.max_iter, 100);
        assert_eq!(cfg.orbit.confirm, 3);
        assert_eq!(cfg.words.max_length, 3);
        let p = cfg.bindings[1].value;
        assert!((p - Complex64::new(0.0, 8.0 * std::f64::consts::PI)).norm() < 1e-12);
        assert_eq!(cfg.lemma_sv[0].1, "exp(-z - 1) + 1");
        assert_eq!(cfg.first_semigroup().unwrap().generator_count(), 2);
    }

    #[test]
    fn errors_carry_line_numbers() {
        let err = RunConfig::parse("[grid]\nnx = many\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
        let err = RunConfig::parse("[nope]\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
        let err = RunConfig::parse("[semigroup]\ngenerator = \"exp(z +\"\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        let err = RunConfig::parse("[bindings]\nw = z\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 2, .. }));
        let err = RunConfig::parse("[grid]\nre_min = 3\nre_max = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Invalid(_)));
        let err = RunConfig::parse("x = 1\n").unwrap_err();
        assert!(matches!(err, ConfigError::Syntax { line: 1, .. }));
    }

    #[test]
    fn quoted_lists() {
        assert_eq!(unquote_list(r#""a, b", "c\"d""#, 1).unwrap(), vec!["a, b", "c\"d"]);
        assert!(unquote_list(r#""open"#, 1).is_err());
        assert!(unquote_list(r#""a" "b""#, 1).is_err());
    }
}
