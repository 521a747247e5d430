//! Gradient-ranked, dispersion-constrained keypoint selection.
//!
//! Detected keypoints are scored by the gradient energy of a small window
//! around each point and visited in descending score order. A candidate is
//! accepted when at most `min_over` already-selected points lie within
//! `dist_th` pixels of it, so the kept subset covers the image instead of
//! piling up on the strongest edge. When the first pass ends short of
//! `top_n`, the shortfall is refilled by revisiting the first selections
//! with an enlarged patch neighborhood.

use serde::{Deserialize, Serialize};
use thiserror::Error;

use crate::raster::{window_gradient_sum, GradientField};
use crate::scalespace::Keypoint;

#[derive(Debug, Error)]
pub enum SelectionError {
    #[error("keypoint ({x}, {y}) outside gradient field {width}x{height}")]
    PointOutOfBounds { x: f32, y: f32, width: u32, height: u32 },
}

/// Tunables of the selection stage.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(default)]
pub struct SelectionParams {
    /// Dispersion distance threshold in pixels.
    pub dist_th: f64,
    /// How many already-selected points may sit within `dist_th` of a
    /// candidate before it is rejected.
    pub min_over: usize,
    /// Target number of selected points.
    pub top_n: usize,
    /// Half-width of the scoring window (3 gives the 7x7 window).
    pub score_half_width: u32,
    /// Patch side for first-pass selections.
    pub base_patch: u32,
    /// Patch side for augmented re-selections.
    pub enlarged_patch: u32,
}

impl Default for SelectionParams {
    fn default() -> Self {
        Self {
            dist_th: 15.0,
            min_over: 2,
            top_n: 100,
            score_half_width: 3,
            base_patch: 64,
            enlarged_patch: 128,
        }
    }
}

/// A keypoint together with its windowed gradient score.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ScoredKeypoint {
    pub keypoint: Keypoint,
    pub score: f64,
}

/// One selected entry; `enlarged` marks augmented re-selections.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct SelectedPoint {
    pub point: ScoredKeypoint,
    pub enlarged: bool,
}

/// Outcome of the greedy pass plus any augmentation.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct SelectionResult {
    pub selected: Vec<SelectedPoint>,
    /// First-pass selections.
    pub found_n: usize,
    /// Augmented re-selections appended after the first pass.
    pub remain_n: usize,
}

/// Score every keypoint by the gradient sum of the window around it and
/// sort by score descending, ties broken by `(y, x)` ascending.
pub fn score_and_sort(
    field: &GradientField,
    points: &[Keypoint],
    half_width: u32,
) -> Result<Vec<ScoredKeypoint>, SelectionError> {
    let mut scored = Vec::with_capacity(points.len());
    for kp in points {
        if kp.x < 0.0 || kp.y < 0.0 || kp.x >= field.width() as f32 || kp.y >= field.height() as f32
        {
            return Err(SelectionError::PointOutOfBounds {
                x: kp.x,
                y: kp.y,
                width: field.width(),
                height: field.height(),
            });
        }
        let center = (kp.x.round() as i64, kp.y.round() as i64);
        scored.push(ScoredKeypoint {
            keypoint: *kp,
            score: window_gradient_sum(field, center, half_width),
        });
    }
    scored.sort_by(|a, b| {
        b.score
            .partial_cmp(&a.score)
            .unwrap()
            .then_with(|| {
                (a.keypoint.y, a.keypoint.x)
                    .partial_cmp(&(b.keypoint.y, b.keypoint.x))
                    .unwrap()
            })
    });
    Ok(scored)
}

#[inline]
fn euclidean(a: &Keypoint, b: &Keypoint) -> f64 {
    let dx = a.x as f64 - b.x as f64;
    let dy = a.y as f64 - b.y as f64;
    (dx * dx + dy * dy).sqrt()
}

/// First greedy pass over the score-ordered candidates.
///
/// The first point always seeds the selection. A later candidate `p` is
/// accepted when the number of selected points strictly farther than
/// `dist_th` from `p` is at least `|S| - min_over`; the pass stops once
/// `top_n` points are selected or the input is exhausted.
pub fn greedy_select(ordered: &[ScoredKeypoint], params: &SelectionParams) -> SelectionResult {
    let mut selected: Vec<SelectedPoint> = Vec::new();
    for cand in ordered {
        if selected.len() >= params.top_n {
            break;
        }
        let far = selected
            .iter()
            .filter(|s| euclidean(&s.point.keypoint, &cand.keypoint) > params.dist_th)
            .count();
        // Seeds trivially: with S empty both sides are zero.
        if far + params.min_over >= selected.len() {
            selected.push(SelectedPoint {
                point: *cand,
                enlarged: false,
            });
        }
    }
    let found_n = selected.len();
    SelectionResult {
        selected,
        found_n,
        remain_n: 0,
    }
}

/// Refill a short first pass up to `top_n` by duplicating the earliest
/// selections with the enlarged neighborhood flag set.
pub fn augment_remainder(first_pass: SelectionResult, params: &SelectionParams) -> SelectionResult {
    let mut result = first_pass;
    if result.found_n == 0 || result.found_n >= params.top_n {
        result.remain_n = 0;
        return result;
    }
    let remain = params.top_n - result.found_n;
    for i in 0..remain {
        let src = result.selected[i % result.found_n];
        result.selected.push(SelectedPoint {
            point: src.point,
            enlarged: true,
        });
    }
    result.remain_n = remain;
    result
}

/// Convenience wrapper: score, sort, select and augment in one call.
pub fn select_keypoints(
    field: &GradientField,
    points: &[Keypoint],
    params: &SelectionParams,
) -> Result<SelectionResult, SelectionError> {
    let ordered = score_and_sort(field, points, params.score_half_width)?;
    Ok(augment_remainder(greedy_select(&ordered, params), params))
}
