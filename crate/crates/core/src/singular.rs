//! Singular values of exp-affine towers, truncated post-singular sets and
//! hyperbolicity evidence.
//!
//! Every supported map decomposes as
//!
//! ```text
//! f = A ∘ E_m ∘ … ∘ E_1,   E_k(w) = exp(β_k·w + γ_k),   A(w) = a·w + b
//! ```
//!
//! (affine maps between exponentials are absorbed into `β_k, γ_k`). An
//! affine map has no singular values and each `E_k` has the single omitted
//! (asymptotic) value 0, so `SV(f∘g) ⊂ SV(f) ∪ f(SV(g))` unrolls to
//! `SV(E_k∘…∘E_1) ⊂ {0} ∪ E_k(SV(E_{k-1}∘…∘E_1))`.

use std::collections::BTreeMap;

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::escape::{classify_grid, julia_pixels, ClassifyParams, EscapeError, GridSpec, JuliaMode};
use crate::expr::{ExprError, MapExpr};
use crate::numerics::{orbit, OrbitParamError, OrbitParams, OrbitStatus};
use crate::semigroup::{enumerate_words, word_expr, Semigroup, SemigroupError, DEFAULT_WORD_CAP};

pub const DEDUP_TOL: f64 = 1e-12;
pub const CONVERGENCE_STEP: f64 = 1e-9;
pub const DEFAULT_DEPTH: usize = 200;
/// Fatou-separation threshold, in pixel diagonals.
pub const DEFAULT_SEPARATION_DIAGONALS: f64 = 2.0;

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum SingularError {
    #[error("unsupported expression for singular-value calculus: {0}")]
    Unsupported(String),
    #[error("singular value propagation overflowed")]
    Overflow,
    #[error(transparent)]
    Expr(#[from] ExprError),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Escape(#[from] EscapeError),
    #[error(transparent)]
    Orbit(#[from] OrbitParamError),
}

/// `w ↦ exp(beta·w + gamma)`
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ExpPrimitive {
    pub beta: Complex64,
    pub gamma: Complex64,
}

impl ExpPrimitive {
    fn apply(&self, w: Complex64) -> Option<Complex64> {
        let v = (self.beta * w + self.gamma).exp();
        (v.re.is_finite() && v.im.is_finite()).then_some(v)
    }
}

/// `a·(E_m ∘ … ∘ E_1)(z) + b`, with `chain[0] = E_1` applied first.
#[derive(Debug, Clone, PartialEq)]
pub struct ExpAffineTower {
    pub a: Complex64,
    pub b: Complex64,
    pub chain: Vec<ExpPrimitive>,
}

enum Form {
    Const(Complex64),
    Tower(ExpAffineTower),
}

fn zero() -> Complex64 {
    Complex64::new(0.0, 0.0)
}

fn one() -> Complex64 {
    Complex64::new(1.0, 0.0)
}

impl Form {
    fn affine(a: Complex64, b: Complex64, chain: Vec<ExpPrimitive>) -> Form {
        if a == zero() {
            Form::Const(b)
        } else {
            Form::Tower(ExpAffineTower { a, b, chain })
        }
    }

    fn scale(self, c: Complex64) -> Form {
        match self {
            Form::Const(v) => Form::Const(v * c),
            Form::Tower(t) => Form::affine(t.a * c, t.b * c, t.chain),
        }
    }
}

fn analyze(e: &MapExpr) -> Result<Form, SingularError> {
    Ok(match e {
        MapExpr::Var => Form::affine(one(), zero(), Vec::new()),
        MapExpr::Const(c) => Form::Const(*c),
        MapExpr::Param { value, .. } => Form::Const(*value),
        MapExpr::Negate(x) => analyze(x)?.scale(-one()),
        MapExpr::Sum(x, y) => match (analyze(x)?, analyze(y)?) {
            (Form::Const(u), Form::Const(v)) => Form::Const(u + v),
            (Form::Const(c), Form::Tower(t)) | (Form::Tower(t), Form::Const(c)) => Form::affine(t.a, t.b + c, t.chain),
            (Form::Tower(s), Form::Tower(t)) if s.chain == t.chain => Form::affine(s.a + t.a, s.b + t.b, s.chain),
            _ => {
                return Err(SingularError::Unsupported(format!(
                    "sum of two different non-constant terms in `{}`",
                    e.format()
                )))
            }
        },
        MapExpr::Product(x, y) => match (analyze(x)?, analyze(y)?) {
            (Form::Const(u), Form::Const(v)) => Form::Const(u * v),
            (Form::Const(c), t @ Form::Tower(_)) | (t @ Form::Tower(_), Form::Const(c)) => t.scale(c),
            _ => {
                return Err(SingularError::Unsupported(format!(
                    "product of two non-constant factors in `{}`",
                    e.format()
                )))
            }
        },
        MapExpr::Exp(x) => match analyze(x)? {
            Form::Const(c) => Form::Const(c.exp()),
            Form::Tower(t) => {
                let mut chain = t.chain;
                chain.push(ExpPrimitive { beta: t.a, gamma: t.b });
                Form::affine(one(), zero(), chain)
            }
        },
        MapExpr::Compose(..) | MapExpr::Iterate(..) => analyze(&e.normalize()?)?,
    })
}

/// Decomposes `expr` into the exp-affine tower form.
pub fn decompose(expr: &MapExpr) -> Result<ExpAffineTower, SingularError> {
    match analyze(expr)? {
        Form::Const(_) => Err(SingularError::Unsupported("constant map".into())),
        Form::Tower(t) => Ok(t),
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Provenance {
    Asymptotic,
    Critical,
    Propagated,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct SingularPoint {
    pub value: Complex64,
    pub provenance: Provenance,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SingularSet {
    pub points: Vec<SingularPoint>,
    pub is_over_approximation: bool,
}

impl SingularSet {
    pub fn values(&self) -> Vec<Complex64> {
        self.points.iter().map(|p| p.value).collect()
    }

    /// Distance from `w` to the nearest point, `+∞` for the empty set.
    pub fn distance_to(&self, w: Complex64) -> f64 {
        self.points
            .iter()
            .map(|p| (p.value - w).norm())
            .fold(f64::INFINITY, f64::min)
    }
}

// Insertion-ordered point set with tolerance-based deduplication.
struct PointSet<T> {
    items: Vec<(Complex64, T)>,
    buckets: BTreeMap<i128, Vec<usize>>,
    tol: f64,
}

impl<T> PointSet<T> {
    fn new(tol: f64) -> Self {
        PointSet {
            items: Vec::new(),
            buckets: BTreeMap::new(),
            tol,
        }
    }

    fn key(&self, z: Complex64) -> i128 {
        (z.re / self.tol).floor() as i128
    }

    fn insert(&mut self, z: Complex64, tag: T) -> bool {
        let k = self.key(z);
        for kk in [k.saturating_sub(1), k, k.saturating_add(1)] {
            if let Some(ids) = self.buckets.get(&kk) {
                if ids.iter().any(|&id| (self.items[id].0 - z).norm() <= self.tol) {
                    return false;
                }
            }
        }
        self.buckets.entry(k).or_default().push(self.items.len());
        self.items.push((z, tag));
        true
    }
}

/// Over-approximation of `SV(expr)` for exp-affine towers.
pub fn singular_values(expr: &MapExpr) -> Result<SingularSet, SingularError> {
    let tower = decompose(expr)?;
    let mut current: Vec<SingularPoint> = Vec::new();
    for (k, prim) in tower.chain.iter().enumerate() {
        let mut next = PointSet::new(DEDUP_TOL);
        next.insert(zero(), Provenance::Asymptotic);
        if k > 0 {
            for p in &current {
                let v = prim.apply(p.value).ok_or(SingularError::Overflow)?;
                next.insert(v, Provenance::Propagated);
            }
        }
        current = next
            .items
            .into_iter()
            .map(|(value, provenance)| SingularPoint { value, provenance })
            .collect();
    }
    let mut out = PointSet::new(DEDUP_TOL);
    for p in current {
        let v = tower.a * p.value + tower.b;
        if !(v.re.is_finite() && v.im.is_finite()) {
            return Err(SingularError::Overflow);
        }
        out.insert(v, p.provenance);
    }
    Ok(SingularSet {
        points: out
            .items
            .into_iter()
            .map(|(value, provenance)| SingularPoint { value, provenance })
            .collect(),
        is_over_approximation: tower.chain.len() >= 2,
    })
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum Boundedness {
    Bounded { radius: f64 },
    DivergenceDetected,
    Indeterminate,
}

/// The orbit of one singular value under one word map.
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct SeedOrbit {
    pub word: Vec<usize>,
    pub seed: Complex64,
    pub status: OrbitStatus,
    pub converged: bool,
    pub last_step: Option<f64>,
    /// Final iterate of a converged orbit.
    pub limit: Option<Complex64>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PostSingularCloud {
    pub points: Vec<Complex64>,
    pub depth: usize,
    pub max_word_length: usize,
    pub boundedness: Boundedness,
    pub orbits: Vec<SeedOrbit>,
}

impl PostSingularCloud {
    pub fn distance_to(&self, w: Complex64) -> f64 {
        self.points.iter().map(|p| (p - w).norm()).fold(f64::INFINITY, f64::min)
    }
}

/// Union over words of length `<= max_len` of the first `depth` iterates of
/// every singular value of the word map under that map (seeds included).
pub fn post_singular_cloud(
    s: &Semigroup,
    max_len: usize,
    depth: usize,
    orbit_params: &OrbitParams,
) -> Result<PostSingularCloud, SingularError> {
    let params = OrbitParams {
        max_iter: depth,
        ..*orbit_params
    };
    params.validate()?;
    let words = enumerate_words(s.generator_count(), max_len, DEFAULT_WORD_CAP)?;
    let mut jobs = Vec::new();
    for w in &words {
        let f = word_expr(s, w)?;
        for seed in singular_values(&f)?.values() {
            jobs.push((w.indices().to_vec(), f.clone(), seed));
        }
    }
    let results: Vec<(SeedOrbit, Vec<Complex64>)> = jobs
        .par_iter()
        .map(|(word, f, seed)| {
            let rec = orbit(f, *seed, params).expect("validated");
            let last_step = match rec.iterates.len() {
                0 => None,
                1 => Some((rec.iterates[0] - seed).norm()),
                n => Some((rec.iterates[n - 1] - rec.iterates[n - 2]).norm()),
            };
            let converged =
                rec.status == OrbitStatus::BoundedWithinBudget && last_step.is_some_and(|d| d < CONVERGENCE_STEP);
            let limit = if converged { rec.iterates.last().copied() } else { None };
            let mut pts = vec![*seed];
            pts.extend(rec.iterates.iter().copied());
            (
                SeedOrbit {
                    word: word.clone(),
                    seed: *seed,
                    status: rec.status,
                    converged,
                    last_step,
                    limit,
                },
                pts,
            )
        })
        .collect();

    let mut set = PointSet::new(DEDUP_TOL);
    let mut orbits = Vec::with_capacity(results.len());
    for (o, pts) in results {
        for p in pts {
            set.insert(p, ());
        }
        orbits.push(o);
    }
    let points: Vec<Complex64> = set.items.into_iter().map(|(z, _)| z).collect();
    let boundedness = if orbits.iter().any(|o| o.status.is_escaped()) {
        Boundedness::DivergenceDetected
    } else if orbits.iter().all(|o| o.converged) {
        Boundedness::Bounded {
            radius: points.iter().map(|p| p.norm()).fold(0.0, f64::max),
        }
    } else {
        Boundedness::Indeterminate
    };
    Ok(PostSingularCloud {
        points,
        depth,
        max_word_length: max_len,
        boundedness,
        orbits,
    })
}

pub const RAY_DIRECTIONS: usize = 16;
/// Sample radii along each ray: 10, 20, 40, ..., 5120.
pub const RAY_RADII: [f64; 10] = [10.0, 20.0, 40.0, 80.0, 160.0, 320.0, 640.0, 1280.0, 2560.0, 5120.0];
const RAY_CONVERGENCE: f64 = 1e-9;

/// Values of a map along the ray `t·e^{iθ}` at [`RAY_RADII`].
#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct RaySample {
    pub angle: f64,
    pub values: Vec<Option<Complex64>>,
    /// Value at the first radius that agrees with the previous one to `1e-9`
    /// (relative to `max(1, |value|)`), provided no earlier sample overflowed.
    pub limit: Option<Complex64>,
}

/// Samples candidate asymptotic values of `f` along equally spaced radial rays.
pub fn sample_asymptotic_values(f: &MapExpr, directions: usize) -> Vec<RaySample> {
    (0..directions)
        .map(|k| {
            let angle = std::f64::consts::TAU * k as f64 / directions as f64;
            let dir = Complex64::from_polar(1.0, angle);
            let values: Vec<Option<Complex64>> = RAY_RADII.iter().map(|&t| f.eval(dir * t).ok()).collect();
            let limit = values
                .windows(2)
                .map_while(|w| w[0].zip(w[1]))
                .find(|(a, b)| (b - a).norm() <= RAY_CONVERGENCE * b.norm().max(1.0))
                .map(|(_, b)| b);
            RaySample { angle, values, limit }
        })
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct InvarianceViolation {
    pub point_index: usize,
    pub step: usize,
    pub overflow: bool,
    pub distance: f64,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InvarianceReport {
    pub invariant: bool,
    pub worst_distance: f64,
    /// First offending `(point, step)` in scan order, if any.
    pub violation: Option<InvarianceViolation>,
}

/// Checks that `f^j(A)` stays within `tol` of `A` for `1 <= j <= depth`.
pub fn forward_invariance_check(f: &MapExpr, set: &[Complex64], depth: usize, tol: f64) -> InvarianceReport {
    let dist = |w: Complex64| set.iter().map(|a| (a - w).norm()).fold(f64::INFINITY, f64::min);
    let mut worst = 0.0f64;
    let mut violation = None;
    for (idx, &a) in set.iter().enumerate() {
        let mut w = a;
        for step in 1..=depth {
            match f.eval(w) {
                Ok(v) => {
                    w = v;
                    let d = dist(w);
                    worst = worst.max(d);
                    if d > tol && violation.is_none() {
                        violation = Some(InvarianceViolation {
                            point_index: idx,
                            step,
                            overflow: false,
                            distance: d,
                        });
                    }
                }
                Err(_) => {
                    worst = f64::INFINITY;
                    if violation.is_none() {
                        violation = Some(InvarianceViolation {
                            point_index: idx,
                            step,
                            overflow: true,
                            distance: f64::INFINITY,
                        });
                    }
                    break;
                }
            }
        }
    }
    InvarianceReport {
        invariant: violation.is_none(),
        worst_distance: worst,
        violation,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct HyperbolicityParams {
    pub max_word_length: usize,
    pub depth: usize,
    pub orbit: OrbitParams,
    /// Required cloud-to-Julia separation, in pixel diagonals.
    pub separation_diagonals: f64,
}

impl Default for HyperbolicityParams {
    fn default() -> Self {
        HyperbolicityParams {
            max_word_length: 1,
            depth: DEFAULT_DEPTH,
            orbit: OrbitParams::default(),
            separation_diagonals: DEFAULT_SEPARATION_DIAGONALS,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum Verdict {
    HyperbolicEvidence,
    NotHyperbolicEvidence,
    Inconclusive,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolicityVerdict {
    pub label: String,
    pub verdict: Verdict,
    /// Cloud-to-Julia distance in pixel diagonals; `None` if no Julia pixels
    /// were found in the window (or the grid was not needed).
    pub separation: Option<f64>,
    pub cloud_radius: Option<f64>,
    pub cloud: Boundedness,
    pub cloud_points: usize,
    pub julia_pixels: Option<usize>,
    pub reason: String,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct HyperbolicityReport {
    /// Post-singular cloud over all words of the semigroup.
    pub aggregate: HyperbolicityVerdict,
    /// Each generator checked as its own cyclic semigroup.
    pub per_generator: Vec<HyperbolicityVerdict>,
    pub grid: GridSpec,
    pub params: HyperbolicityParams,
}

fn verdict_for(
    s: &Semigroup,
    grid: &GridSpec,
    max_len: usize,
    params: &HyperbolicityParams,
) -> Result<HyperbolicityVerdict, SingularError> {
    let cloud = post_singular_cloud(s, max_len, params.depth, &params.orbit)?;
    let base = HyperbolicityVerdict {
        label: s.label().to_string(),
        verdict: Verdict::Inconclusive,
        separation: None,
        cloud_radius: None,
        cloud: cloud.boundedness,
        cloud_points: cloud.points.len(),
        julia_pixels: None,
        reason: String::new(),
    };
    let radius = match cloud.boundedness {
        Boundedness::DivergenceDetected => {
            return Ok(HyperbolicityVerdict {
                verdict: Verdict::NotHyperbolicEvidence,
                reason: "a singular orbit escapes, so the post-singular set is unbounded".into(),
                ..base
            })
        }
        Boundedness::Indeterminate => {
            return Ok(HyperbolicityVerdict {
                reason: "singular orbits neither escaped nor converged within the depth".into(),
                ..base
            })
        }
        Boundedness::Bounded { radius } => radius,
    };
    let classify = ClassifyParams {
        max_word_length: max_len,
        orbit: params.orbit,
        word_cap: DEFAULT_WORD_CAP,
    };
    let c = classify_grid(s, grid, &classify)?;
    let julia = julia_pixels(&c, JuliaMode::Closure);
    let centers: Vec<Complex64> = julia.pixels().map(|(i, j)| grid.center(i as i64, j as i64)).collect();
    let diag = grid.pixel_diagonal();
    let separation = if centers.is_empty() {
        None
    } else {
        let d = cloud
            .points
            .par_iter()
            .map(|p| centers.iter().map(|c| (c - p).norm()).fold(f64::INFINITY, f64::min))
            .reduce(|| f64::INFINITY, f64::min);
        Some(d / diag)
    };
    let separated = separation.is_none_or(|d| d > params.separation_diagonals);
    Ok(HyperbolicityVerdict {
        verdict: if separated {
            Verdict::HyperbolicEvidence
        } else {
            Verdict::NotHyperbolicEvidence
        },
        separation,
        cloud_radius: Some(radius),
        julia_pixels: Some(centers.len()),
        reason: if separated {
            "bounded post-singular cloud separated from the Julia approximation".into()
        } else {
            "post-singular cloud within the separation threshold of the Julia approximation".into()
        },
        ..base
    })
}

/// Hyperbolicity evidence for the semigroup and for each generator.
pub fn hyperbolicity_check(
    s: &Semigroup,
    grid: &GridSpec,
    params: &HyperbolicityParams,
) -> Result<HyperbolicityReport, SingularError> {
    for g in s.generators() {
        singular_values(g)?;
    }
    let aggregate = verdict_for(s, grid, params.max_word_length, params)?;
    let per_generator = s
        .generators()
        .iter()
        .enumerate()
        .map(|(k, g)| {
            let cyclic = Semigroup::cyclic(g.clone(), &format!("generator {}", k + 1))?;
            verdict_for(&cyclic, grid, 1, params)
        })
        .collect::<Result<Vec<_>, _>>()?;
    Ok(HyperbolicityReport {
        aggregate,
        per_generator,
        grid: *grid,
        params: *params,
    })
}
