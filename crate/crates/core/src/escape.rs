//! Pixel-grid classification of the escaping set `I(S)` and its discrete
//! Julia-set approximation.
//!
//! A pixel is escaping when its center escapes under every word of length
//! at most `L`, each word iterated as a cyclic map. Raising `L` can only
//! remove escaping pixels, so the truncated set over-approximates `I(S)`.

use num_complex::Complex64;
use rayon::prelude::*;
use serde::Serialize;

use crate::expr::MapExpr;
use crate::numerics::{escape_status, OrbitParamError, OrbitParams, OrbitStatus};
use crate::semigroup::{
    enumerate_words, word_expr, Semigroup, SemigroupError, Word, DEFAULT_WORD_CAP, DEFAULT_WORD_LENGTH,
};

#[derive(Debug, Clone, PartialEq, thiserror::Error)]
pub enum EscapeError {
    #[error("invalid grid: {0}")]
    Grid(String),
    #[error(transparent)]
    Semigroup(#[from] SemigroupError),
    #[error(transparent)]
    Orbit(#[from] OrbitParamError),
    #[error("classifications are not comparable: {0}")]
    Mismatch(String),
}

/// Axis-aligned window sampled at `nx × ny` pixel centers. Row 0 is the top
/// (largest imaginary part).
#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct GridSpec {
    pub re_min: f64,
    pub re_max: f64,
    pub im_min: f64,
    pub im_max: f64,
    pub nx: usize,
    pub ny: usize,
}

impl GridSpec {
    pub fn new(re_min: f64, re_max: f64, im_min: f64, im_max: f64, nx: usize, ny: usize) -> Result<Self, EscapeError> {
        let g = GridSpec {
            re_min,
            re_max,
            im_min,
            im_max,
            nx,
            ny,
        };
        g.validate()?;
        Ok(g)
    }

    /// Square window `[-half, half]²` with `n × n` pixels.
    pub fn square(half: f64, n: usize) -> Self {
        GridSpec {
            re_min: -half,
            re_max: half,
            im_min: -half,
            im_max: half,
            nx: n,
            ny: n,
        }
    }

    pub fn validate(&self) -> Result<(), EscapeError> {
        let finite = [self.re_min, self.re_max, self.im_min, self.im_max]
            .iter()
            .all(|v| v.is_finite());
        if !finite {
            return Err(EscapeError::Grid("bounds must be finite".into()));
        }
        if self.re_min >= self.re_max || self.im_min >= self.im_max {
            return Err(EscapeError::Grid("need re_min < re_max and im_min < im_max".into()));
        }
        Ok(())
    }

    pub fn pixel_width(&self) -> f64 {
        (self.re_max - self.re_min) / self.nx as f64
    }

    pub fn pixel_height(&self) -> f64 {
        (self.im_max - self.im_min) / self.ny as f64
    }

    pub fn pixel_diagonal(&self) -> f64 {
        self.pixel_width().hypot(self.pixel_height())
    }

    pub fn len(&self) -> usize {
        self.nx * self.ny
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    /// Center of pixel `(i, j)`; indices may lie outside the grid.
    pub fn center(&self, i: i64, j: i64) -> Complex64 {
        Complex64::new(
            self.re_min + (i as f64 + 0.5) * self.pixel_width(),
            self.im_max - (j as f64 + 0.5) * self.pixel_height(),
        )
    }

    /// Same window at `factor` times the resolution.
    pub fn refined(&self, factor: usize) -> GridSpec {
        GridSpec {
            nx: self.nx * factor,
            ny: self.ny * factor,
            ..*self
        }
    }

    /// Same resolution, window scaled by `factor` about its center.
    pub fn enlarged(&self, factor: f64) -> GridSpec {
        let (cr, ci) = (0.5 * (self.re_min + self.re_max), 0.5 * (self.im_min + self.im_max));
        let (hr, hi) = (
            0.5 * (self.re_max - self.re_min) * factor,
            0.5 * (self.im_max - self.im_min) * factor,
        );
        GridSpec {
            re_min: cr - hr,
            re_max: cr + hr,
            im_min: ci - hi,
            im_max: ci + hi,
            ..*self
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize)]
pub struct ClassifyParams {
    pub max_word_length: usize,
    pub orbit: OrbitParams,
    pub word_cap: usize,
}

impl Default for ClassifyParams {
    fn default() -> Self {
        ClassifyParams {
            max_word_length: DEFAULT_WORD_LENGTH,
            orbit: OrbitParams::default(),
            word_cap: DEFAULT_WORD_CAP,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PixelStatus {
    EscapingAllWords,
    /// Index into [`Classification::words`] of the first word with a bounded orbit.
    NonEscapingWitness(u32),
    Indeterminate,
}

#[derive(Debug, Clone, PartialEq)]
pub struct Classification {
    pub grid: GridSpec,
    pub params: ClassifyParams,
    pub label: String,
    pub words: Vec<Word>,
    /// Row-major, row 0 at the top.
    pub statuses: Vec<PixelStatus>,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ClassificationSummary {
    pub label: String,
    pub pixels: usize,
    pub escaping: usize,
    pub non_escaping: usize,
    pub indeterminate: usize,
    pub escaping_fraction: f64,
    pub words_tested: usize,
    pub truncation: String,
}

/// Boolean pixel mask, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Mask {
    pub width: usize,
    pub height: usize,
    pub bits: Vec<bool>,
}

impl Mask {
    pub fn new(width: usize, height: usize) -> Self {
        Mask {
            width,
            height,
            bits: vec![false; width * height],
        }
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Self {
        let mut bits = Vec::with_capacity(width * height);
        for j in 0..height {
            for i in 0..width {
                bits.push(f(i, j));
            }
        }
        Mask { width, height, bits }
    }

    pub fn get(&self, i: usize, j: usize) -> bool {
        self.bits[j * self.width + i]
    }

    pub fn set(&mut self, i: usize, j: usize, v: bool) {
        self.bits[j * self.width + i] = v;
    }

    pub fn count(&self) -> usize {
        self.bits.iter().filter(|&&b| b).count()
    }

    pub fn is_empty(&self) -> bool {
        self.count() == 0
    }

    pub fn transposed(&self) -> Mask {
        Mask::from_fn(self.height, self.width, |i, j| self.get(j, i))
    }

    /// `(i, j)` of every set pixel in scan order.
    pub fn pixels(&self) -> impl Iterator<Item = (usize, usize)> + '_ {
        self.bits
            .iter()
            .enumerate()
            .filter(|(_, &b)| b)
            .map(move |(k, _)| (k % self.width, k / self.width))
    }
}

const TRUNCATION_NOTE: &str = "I(S) truncated to the conjunction over all words of length <= L, \
each iterated as a cyclic map; escaping pixels over-approximate I(S)";

fn classify_point(maps: &[MapExpr], seed: Complex64, orbit: &OrbitParams) -> PixelStatus {
    let mut undecided = false;
    for (k, f) in maps.iter().enumerate() {
        match escape_status(f, seed, orbit) {
            OrbitStatus::BoundedWithinBudget => return PixelStatus::NonEscapingWitness(k as u32),
            OrbitStatus::Indeterminate => undecided = true,
            OrbitStatus::Escaped { .. } => {}
        }
    }
    if undecided {
        PixelStatus::Indeterminate
    } else {
        PixelStatus::EscapingAllWords
    }
}

// Word list plus normalized word maps for a semigroup.
struct WordMaps {
    words: Vec<Word>,
    maps: Vec<MapExpr>,
}

impl WordMaps {
    fn build(s: &Semigroup, params: &ClassifyParams) -> Result<Self, EscapeError> {
        params.orbit.validate()?;
        let words = enumerate_words(s.generator_count(), params.max_word_length, params.word_cap)?;
        let maps = words.iter().map(|w| word_expr(s, w)).collect::<Result<Vec<_>, _>>()?;
        Ok(WordMaps { words, maps })
    }

    fn status_at(&self, seed: Complex64, params: &ClassifyParams) -> PixelStatus {
        classify_point(&self.maps, seed, &params.orbit)
    }
}

/// Classifies every pixel center of `grid` for the semigroup `s`.
pub fn classify_grid(s: &Semigroup, grid: &GridSpec, params: &ClassifyParams) -> Result<Classification, EscapeError> {
    grid.validate()?;
    let wm = WordMaps::build(s, params)?;
    let statuses: Vec<PixelStatus> = (0..grid.ny)
        .into_par_iter()
        .flat_map_iter(|j| {
            let wm = &wm;
            (0..grid.nx).map(move |i| wm.status_at(grid.center(i as i64, j as i64), params))
        })
        .collect();
    Ok(Classification {
        grid: *grid,
        params: *params,
        label: s.label().to_string(),
        words: wm.words,
        statuses,
    })
}

/// Classification for the cyclic semigroup `⟨f⟩` (a single word of length one).
pub fn classify_single(f: &MapExpr, grid: &GridSpec, params: &ClassifyParams) -> Result<Classification, EscapeError> {
    let s = Semigroup::cyclic(f.clone(), &f.format())?;
    let single = ClassifyParams {
        max_word_length: 1,
        ..*params
    };
    classify_grid(&s, grid, &single)
}

impl Classification {
    pub fn status(&self, i: usize, j: usize) -> PixelStatus {
        self.statuses[j * self.grid.nx + i]
    }

    pub fn is_escaping(&self, i: usize, j: usize) -> bool {
        self.status(i, j) == PixelStatus::EscapingAllWords
    }

    pub fn escaping_mask(&self) -> Mask {
        Mask {
            width: self.grid.nx,
            height: self.grid.ny,
            bits: self
                .statuses
                .iter()
                .map(|s| *s == PixelStatus::EscapingAllWords)
                .collect(),
        }
    }

    pub fn witness(&self, i: usize, j: usize) -> Option<&Word> {
        match self.status(i, j) {
            PixelStatus::NonEscapingWitness(k) => Some(&self.words[k as usize]),
            _ => None,
        }
    }

    pub fn summary(&self) -> ClassificationSummary {
        let mut escaping = 0;
        let mut non_escaping = 0;
        let mut indeterminate = 0;
        for s in &self.statuses {
            match s {
                PixelStatus::EscapingAllWords => escaping += 1,
                PixelStatus::NonEscapingWitness(_) => non_escaping += 1,
                PixelStatus::Indeterminate => indeterminate += 1,
            }
        }
        let pixels = self.statuses.len();
        ClassificationSummary {
            label: self.label.clone(),
            pixels,
            escaping,
            non_escaping,
            indeterminate,
            escaping_fraction: if pixels == 0 {
                0.0
            } else {
                escaping as f64 / pixels as f64
            },
            words_tested: self.words.len(),
            truncation: TRUNCATION_NOTE.to_string(),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
#[serde(rename_all = "snake_case")]
pub enum JuliaMode {
    /// Escaping pixels plus their non-escaping 4-neighbors (discrete closure of `I(S)`).
    Closure,
    /// Pixels whose 4-neighborhood meets both sides (discrete `∂I(S)`).
    Boundary,
}

const FOUR: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];

pub fn julia_pixels(c: &Classification, mode: JuliaMode) -> Mask {
    let esc = c.escaping_mask();
    julia_from_mask(&esc, mode)
}

pub fn julia_from_mask(esc: &Mask, mode: JuliaMode) -> Mask {
    let (w, h) = (esc.width as i64, esc.height as i64);
    let neighbor = |i: usize, j: usize, want: bool| {
        FOUR.iter().any(|(di, dj)| {
            let (x, y) = (i as i64 + di, j as i64 + dj);
            x >= 0 && y >= 0 && x < w && y < h && esc.get(x as usize, y as usize) == want
        })
    };
    Mask::from_fn(esc.width, esc.height, |i, j| {
        let own = esc.get(i, j);
        match mode {
            JuliaMode::Closure => own || neighbor(i, j, true),
            JuliaMode::Boundary => neighbor(i, j, !own),
        }
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct ContainmentReport {
    pub inner_label: String,
    pub outer_label: String,
    pub inner_escaping: usize,
    pub outer_escaping: usize,
    /// Pixels escaping in `inner` but not in `outer`.
    pub violations: Vec<(usize, usize)>,
}

/// Checks `escaping(inner) ⊆ escaping(outer)` pixel by pixel.
pub fn containment_check(inner: &Classification, outer: &Classification) -> Result<ContainmentReport, EscapeError> {
    if inner.grid != outer.grid {
        return Err(EscapeError::Mismatch("grids differ".into()));
    }
    if inner.params.orbit != outer.params.orbit {
        return Err(EscapeError::Mismatch("orbit parameters differ".into()));
    }
    let mut violations = Vec::new();
    for j in 0..inner.grid.ny {
        for i in 0..inner.grid.nx {
            if inner.is_escaping(i, j) && !outer.is_escaping(i, j) {
                violations.push((i, j));
            }
        }
    }
    Ok(ContainmentReport {
        inner_label: inner.label.clone(),
        outer_label: outer.label.clone(),
        inner_escaping: inner.escaping_mask().count(),
        outer_escaping: outer.escaping_mask().count(),
        violations,
    })
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorProxyReport {
    pub escaping: usize,
    /// Escaping pixels whose 8 neighbors all escape at the base resolution.
    pub candidates: usize,
    /// Candidates still fully surrounded after one 2× refinement.
    pub interior: Vec<(usize, usize)>,
    pub interior_fraction: f64,
}

/// Discrete test of `I(S) ⊂ J(S)`: escaping pixels that look like interior
/// points of the escaping set even after one refinement step.
///
/// A candidate survives if all 16 half-size pixels of the 4×4 block
/// centered on it escape, i.e. each of its four sub-pixels has all eight
/// refined neighbors escaping. Neighbors outside the window are classified
/// on demand.
pub fn interior_escaping_pixels(s: &Semigroup, c: &Classification) -> Result<InteriorProxyReport, EscapeError> {
    let wm = WordMaps::build(s, &c.params)?;
    let grid = c.grid;
    let status = |i: i64, j: i64| -> bool {
        if i >= 0 && j >= 0 && (i as usize) < grid.nx && (j as usize) < grid.ny {
            c.is_escaping(i as usize, j as usize)
        } else {
            wm.status_at(grid.center(i, j), &c.params) == PixelStatus::EscapingAllWords
        }
    };
    let escaping: Vec<(usize, usize)> = c.escaping_mask().pixels().collect();
    let candidates: Vec<(usize, usize)> = escaping
        .par_iter()
        .copied()
        .filter(|&(i, j)| (-1..=1).all(|dj| (-1..=1).all(|di| status(i as i64 + di, j as i64 + dj))))
        .collect();
    let fine = grid.refined(2);
    let interior: Vec<(usize, usize)> = candidates
        .par_iter()
        .copied()
        .filter(|&(i, j)| {
            let (fi, fj) = (2 * i as i64, 2 * j as i64);
            (-1..=2).all(|b| {
                (-1..=2).all(|a| wm.status_at(fine.center(fi + a, fj + b), &c.params) == PixelStatus::EscapingAllWords)
            })
        })
        .collect();
    Ok(InteriorProxyReport {
        escaping: escaping.len(),
        candidates: candidates.len(),
        interior_fraction: if escaping.is_empty() {
            0.0
        } else {
            interior.len() as f64 / escaping.len() as f64
        },
        interior,
    })
}
