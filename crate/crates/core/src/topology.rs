//! Connected components of escaping masks and frame-touching evidence for
//! unboundedness.

use std::collections::VecDeque;

use serde::Serialize;

use crate::escape::{classify_grid, Classification, EscapeError, GridSpec, Mask};
use crate::semigroup::Semigroup;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Default)]
pub enum Connectivity {
    #[default]
    #[serde(rename = "4")]
    Four,
    #[serde(rename = "8")]
    Eight,
}

impl Connectivity {
    fn offsets(self) -> &'static [(i64, i64)] {
        const FOUR: [(i64, i64); 4] = [(1, 0), (-1, 0), (0, 1), (0, -1)];
        const EIGHT: [(i64, i64); 8] = [(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)];
        match self {
            Connectivity::Four => &FOUR,
            Connectivity::Eight => &EIGHT,
        }
    }
}

/// Inclusive pixel rectangle.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize)]
pub struct PixelRect {
    pub min_i: usize,
    pub min_j: usize,
    pub max_i: usize,
    pub max_j: usize,
}

impl PixelRect {
    fn overlaps(&self, other: &PixelRect) -> bool {
        self.min_i <= other.max_i && other.min_i <= self.max_i && self.min_j <= other.max_j && other.min_j <= self.max_j
    }
}

#[derive(Debug, Clone, PartialEq, Eq, Serialize)]
pub struct ComponentReport {
    pub component_id: usize,
    pub pixel_count: usize,
    pub touches_frame: bool,
    pub bbox: PixelRect,
}

/// Component id per pixel (`None` for background) plus per-component reports.
#[derive(Debug, Clone, PartialEq)]
pub struct Labeling {
    pub labels: Vec<Option<usize>>,
    pub components: Vec<ComponentReport>,
}

/// Flood-fill labeling; ids are dense and ordered by each component's first
/// pixel in row-major scan order.
pub fn label_components(mask: &Mask, connectivity: Connectivity) -> Labeling {
    let (w, h) = (mask.width, mask.height);
    let mut labels: Vec<Option<usize>> = vec![None; w * h];
    let mut components = Vec::new();
    let mut queue = VecDeque::new();
    for start in 0..w * h {
        if !mask.bits[start] || labels[start].is_some() {
            continue;
        }
        let id = components.len();
        labels[start] = Some(id);
        queue.push_back(start);
        let mut count = 0;
        let mut touches = false;
        let mut bbox = PixelRect {
            min_i: usize::MAX,
            min_j: usize::MAX,
            max_i: 0,
            max_j: 0,
        };
        while let Some(k) = queue.pop_front() {
            let (i, j) = (k % w, k / w);
            count += 1;
            touches |= i == 0 || j == 0 || i + 1 == w || j + 1 == h;
            bbox.min_i = bbox.min_i.min(i);
            bbox.min_j = bbox.min_j.min(j);
            bbox.max_i = bbox.max_i.max(i);
            bbox.max_j = bbox.max_j.max(j);
            for &(di, dj) in connectivity.offsets() {
                let (x, y) = (i as i64 + di, j as i64 + dj);
                if x < 0 || y < 0 || x >= w as i64 || y >= h as i64 {
                    continue;
                }
                let n = y as usize * w + x as usize;
                if mask.bits[n] && labels[n].is_none() {
                    labels[n] = Some(id);
                    queue.push_back(n);
                }
            }
        }
        components.push(ComponentReport {
            component_id: id,
            pixel_count: count,
            touches_frame: touches,
            bbox,
        });
    }
    Labeling { labels, components }
}

pub fn connected_components(mask: &Mask, connectivity: Connectivity) -> Vec<ComponentReport> {
    label_components(mask, connectivity).components
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct UnboundednessSummary {
    pub components: usize,
    pub frame_touching: usize,
    /// Components that avoid the frame: candidate bounded components.
    pub interior: usize,
    pub interior_ids: Vec<usize>,
    pub window: GridSpec,
    pub message: String,
}

pub fn unboundedness_report(components: &[ComponentReport], grid: &GridSpec) -> UnboundednessSummary {
    let interior_ids: Vec<usize> = components
        .iter()
        .filter(|c| !c.touches_frame)
        .map(|c| c.component_id)
        .collect();
    let interior = interior_ids.len();
    let message = if interior == 1 {
        "1 interior component".to_string()
    } else {
        format!("{interior} interior components")
    };
    UnboundednessSummary {
        components: components.len(),
        frame_touching: components.len() - interior,
        interior,
        interior_ids,
        window: *grid,
        message,
    }
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct InteriorFlag {
    pub component_id: usize,
    pub bbox: PixelRect,
    /// Whether an interior component covers the same region at 2× resolution.
    pub persists_at_double_resolution: bool,
    pub label: &'static str,
}

#[derive(Debug, Clone, PartialEq, Serialize)]
pub struct PersistenceReport {
    pub base: UnboundednessSummary,
    /// Present only when the base run flagged interior components.
    pub refined: Option<UnboundednessSummary>,
    pub enlarged: UnboundednessSummary,
    pub flags: Vec<InteriorFlag>,
    /// Interior components that persist under refinement.
    pub evidence_count: usize,
    pub escaping_pixels: usize,
}

/// Runs the component analysis on the classified window and on the window enlarged by
/// `enlarge` about its center. Interior components at the base resolution
/// are re-examined at twice the resolution; those without an interior
/// counterpart there are labeled resolution artifacts.
pub fn persistence_check(
    s: &Semigroup,
    base_c: &Classification,
    connectivity: Connectivity,
    enlarge: f64,
) -> Result<PersistenceReport, EscapeError> {
    let (grid, params) = (&base_c.grid, &base_c.params);
    let base_mask = base_c.escaping_mask();
    let base = connected_components(&base_mask, connectivity);

    // the refined run is only needed to vet interior flags
    let fine_grid = grid.refined(2);
    let fine = if base.iter().any(|c| !c.touches_frame) {
        Some(connected_components(
            &classify_grid(s, &fine_grid, params)?.escaping_mask(),
            connectivity,
        ))
    } else {
        None
    };

    let big_grid = grid.enlarged(enlarge);
    let big = connected_components(&classify_grid(s, &big_grid, params)?.escaping_mask(), connectivity);

    let flags: Vec<InteriorFlag> = base
        .iter()
        .filter(|c| !c.touches_frame)
        .map(|c| {
            let scaled = PixelRect {
                min_i: 2 * c.bbox.min_i,
                min_j: 2 * c.bbox.min_j,
                max_i: 2 * c.bbox.max_i + 1,
                max_j: 2 * c.bbox.max_j + 1,
            };
            let persists = fine
                .iter()
                .flatten()
                .any(|f| !f.touches_frame && f.bbox.overlaps(&scaled));
            InteriorFlag {
                component_id: c.component_id,
                bbox: c.bbox,
                persists_at_double_resolution: persists,
                label: if persists { "evidence" } else { "resolution artifact" },
            }
        })
        .collect();
    let evidence_count = flags.iter().filter(|f| f.persists_at_double_resolution).count();
    Ok(PersistenceReport {
        base: unboundedness_report(&base, grid),
        refined: fine.map(|f| unboundedness_report(&f, &fine_grid)),
        enlarged: unboundedness_report(&big, &big_grid),
        flags,
        evidence_count,
        escaping_pixels: base_mask.count(),
    })
}
