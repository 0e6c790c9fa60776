//! Finitely generated semigroups, words over their generators, and
//! sampling-based permutability tests.

use std::fmt;

use num_complex::Complex64;
use serde::{Serialize, Serializer};

use crate::expr::{parse, Bindings, ExprError, MapExpr};

pub const DEFAULT_WORD_CAP: usize = 10_000;
pub const DEFAULT_WORD_LENGTH: usize = 3;
pub const DEFAULT_PERMUTABILITY_TOL: f64 = 1e-9;
pub const MIN_SAMPLES: usize = 32;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SemigroupError {
    #[error("a semigroup needs at least one generator")]
    NoGenerators,
    #[error("generator {index} (`{text}`) is not transcendental")]
    NotTranscendental { index: usize, text: String },
    #[error("generator {index}: {source}")]
    Generator { index: usize, source: ExprError },
    #[error("word length must be at least 1")]
    EmptyWord,
    #[error("word index {index} out of range for {generators} generators")]
    IndexOutOfRange { index: usize, generators: usize },
    #[error("{count} words exceed the cap of {cap}")]
    WordCapExceeded { count: u128, cap: usize },
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error("sample set has {0} points; at least {MIN_SAMPLES} are required")]
    TooFewSamples(usize),
    #[error("every sample overflowed; permutability is indeterminate")]
    Indeterminate,
}

/// Semigroup generated by finitely many transcendental entire maps.
///
/// Generators are stored normalized.
#[derive(Debug, Clone, PartialEq)]
pub struct Semigroup {
    generators: Vec<MapExpr>,
    bindings: Bindings,
    label: String,
}

impl Semigroup {
    pub fn new(generators: Vec<MapExpr>, bindings: Bindings, label: &str) -> Result<Self, SemigroupError> {
        if generators.is_empty() {
            return Err(SemigroupError::NoGenerators);
        }
        let mut normalized = Vec::with_capacity(generators.len());
        for (k, g) in generators.iter().enumerate() {
            let g = g
                .normalize()
                .map_err(|source| SemigroupError::Generator { index: k + 1, source })?;
            if !g.is_transcendental() {
                return Err(SemigroupError::NotTranscendental {
                    index: k + 1,
                    text: g.format(),
                });
            }
            normalized.push(g);
        }
        Ok(Semigroup {
            generators: normalized,
            bindings,
            label: label.to_string(),
        })
    }

    /// Parses each generator with the shared bindings.
    pub fn parse<S: AsRef<str>>(texts: &[S], bindings: Bindings, label: &str) -> Result<Self, SemigroupError> {
        let generators = texts
            .iter()
            .enumerate()
            .map(|(k, t)| {
                parse(t.as_ref(), &bindings).map_err(|source| SemigroupError::Generator { index: k + 1, source })
            })
            .collect::<Result<Vec<_>, _>>()?;
        Semigroup::new(generators, bindings, label)
    }

    /// The cyclic semigroup `⟨f⟩`.
    pub fn cyclic(f: MapExpr, label: &str) -> Result<Self, SemigroupError> {
        Semigroup::new(vec![f], Bindings::new(), label)
    }

    pub fn generators(&self) -> &[MapExpr] {
        &self.generators
    }

    pub fn generator_count(&self) -> usize {
        self.generators.len()
    }

    pub fn bindings(&self) -> &Bindings {
        &self.bindings
    }

    pub fn label(&self) -> &str {
        &self.label
    }
}

/// A composition pattern `f_{i₁} ∘ … ∘ f_{i_m}`; indices are 1-based and
/// `i₁` is applied last.
#[derive(Debug, Clone, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub struct Word(Vec<usize>);

impl Word {
    pub fn new(indices: Vec<usize>) -> Result<Self, SemigroupError> {
        if indices.is_empty() {
            return Err(SemigroupError::EmptyWord);
        }
        if let Some(&bad) = indices.iter().find(|&&i| i == 0) {
            return Err(SemigroupError::IndexOutOfRange {
                index: bad,
                generators: 0,
            });
        }
        Ok(Word(indices))
    }

    pub fn single(index: usize) -> Self {
        assert!(index >= 1);
        Word(vec![index])
    }

    pub fn indices(&self) -> &[usize] {
        &self.0
    }

    pub fn len(&self) -> usize {
        self.0.len()
    }

    pub fn is_empty(&self) -> bool {
        false
    }

    /// Concatenation; the result applies `other` first.
    pub fn concat(&self, other: &Word) -> Word {
        let mut v = self.0.clone();
        v.extend_from_slice(&other.0);
        Word(v)
    }
}

impl fmt::Display for Word {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str("(")?;
        for (k, i) in self.0.iter().enumerate() {
            if k > 0 {
                f.write_str(",")?;
            }
            write!(f, "{i}")?;
        }
        f.write_str(")")
    }
}

impl Serialize for Word {
    fn serialize<S: Serializer>(&self, s: S) -> Result<S::Ok, S::Error> {
        self.0.serialize(s)
    }
}

/// Number of words of length `1..=max_len` over `n` letters, saturating.
pub fn word_count(n: usize, max_len: usize) -> u128 {
    let mut total: u128 = 0;
    let mut layer: u128 = 1;
    for _ in 0..max_len {
        layer = layer.saturating_mul(n as u128);
        total = total.saturating_add(layer);
    }
    total
}

/// All words of length `1..=max_len`, ordered by length then lexicographically.
pub fn enumerate_words(n: usize, max_len: usize, cap: usize) -> Result<Vec<Word>, SemigroupError> {
    if n == 0 {
        return Err(SemigroupError::NoGenerators);
    }
    if max_len == 0 {
        return Err(SemigroupError::EmptyWord);
    }
    let count = word_count(n, max_len);
    if count > cap as u128 {
        return Err(SemigroupError::WordCapExceeded { count, cap });
    }
    let mut out = Vec::with_capacity(count as usize);
    let mut layer: Vec<Vec<usize>> = vec![vec![]];
    for _ in 0..max_len {
        let next: Vec<Vec<usize>> = layer
            .iter()
            .flat_map(|prefix| {
                (1..=n).map(move |i| {
                    let mut w = prefix.clone();
                    w.push(i);
                    w
                })
            })
            .collect();
        out.extend(next.iter().cloned().map(Word));
        layer = next;
    }
    Ok(out)
}

/// The normalized map of `w` in `s`, with `f_{i₁}` outermost.
pub fn word_expr(s: &Semigroup, w: &Word) -> Result<MapExpr, SemigroupError> {
    let n = s.generator_count();
    for &i in w.indices() {
        if i == 0 || i > n {
            return Err(SemigroupError::IndexOutOfRange {
                index: i,
                generators: n,
            });
        }
    }
    let mut acc = s.generators[*w.indices().last().unwrap() - 1].clone();
    for &i in w.indices().iter().rev().skip(1) {
        acc = MapExpr::compose(s.generators[i - 1].clone(), acc);
    }
    Ok(acc.normalize()?)
}

/// Where permutability is sampled.
#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SampleSpec {
    /// `nx × ny` points on the closed rectangle, corners included.
    Grid {
        re_min: f64,
        re_max: f64,
        im_min: f64,
        im_max: f64,
        nx: usize,
        ny: usize,
    },
    Points {
        points: Vec<Complex64>,
    },
}

impl Default for SampleSpec {
    fn default() -> Self {
        SampleSpec::Grid {
            re_min: -2.0,
            re_max: 2.0,
            im_min: -2.0,
            im_max: 2.0,
            nx: 8,
            ny: 8,
        }
    }
}

impl SampleSpec {
    pub fn points(&self) -> Vec<Complex64> {
        match self {
            SampleSpec::Points { points } => points.clone(),
            SampleSpec::Grid {
                re_min,
                re_max,
                im_min,
                im_max,
                nx,
                ny,
            } => {
                let lin = |lo: f64, hi: f64, n: usize, k: usize| {
                    if n == 1 {
                        0.5 * (lo + hi)
                    } else {
                        lo + (hi - lo) * k as f64 / (n - 1) as f64
                    }
                };
                let mut out = Vec::with_capacity(nx * ny);
                for j in 0..*ny {
                    for i in 0..*nx {
                        out.push(Complex64::new(
                            lin(*re_min, *re_max, *nx, i),
                            lin(*im_min, *im_max, *ny, j),
                        ));
                    }
                }
                out
            }
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct Permutability {
    pub permutable: bool,
    pub max_deviation: f64,
    pub samples_used: usize,
    pub samples_skipped: usize,
}

/// Compares `f∘g` with `g∘f` on the sample set.
pub fn permutability_check(
    f: &MapExpr,
    g: &MapExpr,
    samples: &SampleSpec,
    tol: f64,
) -> Result<Permutability, SemigroupError> {
    let points = samples.points();
    if points.len() < MIN_SAMPLES {
        return Err(SemigroupError::TooFewSamples(points.len()));
    }
    let mut used = 0;
    let mut skipped = 0;
    let mut worst = 0.0f64;
    for z in points {
        let fg = g.eval(z).and_then(|w| f.eval(w));
        let gf = f.eval(z).and_then(|w| g.eval(w));
        match (fg, gf) {
            (Ok(a), Ok(b)) => {
                let d = (a - b).norm();
                if !d.is_finite() {
                    skipped += 1;
                    continue;
                }
                used += 1;
                worst = worst.max(d);
            }
            _ => skipped += 1,
        }
    }
    if used == 0 {
        return Err(SemigroupError::Indeterminate);
    }
    Ok(Permutability {
        permutable: worst <= tol,
        max_deviation: worst,
        samples_used: used,
        samples_skipped: skipped,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
#[serde(tag = "verdict", rename_all = "snake_case")]
pub enum PairVerdict {
    Permutable { max_deviation: f64 },
    NotPermutable { max_deviation: f64 },
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PairReport {
    pub first: usize,
    pub second: usize,
    #[serde(flatten)]
    pub verdict: PairVerdict,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct AbelianReport {
    /// True iff every generator pair sampled as permutable.
    pub abelian: bool,
    pub pairs: Vec<PairReport>,
}

pub fn abelian_check(s: &Semigroup, samples: &SampleSpec, tol: f64) -> Result<AbelianReport, SemigroupError> {
    let n = s.generator_count();
    let mut pairs = Vec::new();
    for i in 0..n {
        for j in (i + 1)..n {
            let verdict = match permutability_check(&s.generators[i], &s.generators[j], samples, tol) {
                Ok(p) if p.permutable => PairVerdict::Permutable {
                    max_deviation: p.max_deviation,
                },
                Ok(p) => PairVerdict::NotPermutable {
                    max_deviation: p.max_deviation,
                },
                Err(SemigroupError::Indeterminate) => PairVerdict::Indeterminate,
                Err(e) => return Err(e),
            };
            pairs.push(PairReport {
                first: i + 1,
                second: j + 1,
                verdict,
            });
        }
    }
    let abelian = pairs
        .iter()
        .all(|p| matches!(p.verdict, PairVerdict::Permutable { .. }));
    Ok(AbelianReport { abelian, pairs })
}
