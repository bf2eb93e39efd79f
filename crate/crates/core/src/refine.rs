//! Score-threshold filtering and near-duplicate suppression for axes and circles.

use crate::geometry::{angular_difference, orientation};
use crate::interchange::{PipelineConfig, RotationCandidate, SymmetryAxis};

/// Relative radius difference below which two concentric circles are the same symmetry.
pub const CIRCLE_RADIUS_TOLERANCE: f64 = 0.2;

fn sorted_by_score(axes: &[SymmetryAxis]) -> Vec<SymmetryAxis> {
    let mut v = axes.to_vec();
    v.sort_by(|a, b| b.score.total_cmp(&a.score));
    v
}

/// Keeps nothing when the best axis scores below `sym_threshold`; otherwise
/// keeps every axis scoring at least `norm_threshold` times the best score.
/// Output is in non-increasing score order.
pub fn filter_axes(axes: &[SymmetryAxis], cfg: &PipelineConfig) -> Vec<SymmetryAxis> {
    let sorted = sorted_by_score(axes);
    let Some(top) = sorted.first().map(|a| a.score) else {
        return Vec::new();
    };
    if top < cfg.sym_threshold {
        return Vec::new();
    }
    let cut = cfg.norm_threshold * top;
    sorted.into_iter().take_while(|a| a.score >= cut).collect()
}

pub fn axes_similar(
    a: &SymmetryAxis,
    b: &SymmetryAxis,
    angle_eps: f64,
    center_eps_px: f64,
) -> bool {
    angular_difference(orientation(&a.segment), orientation(&b.segment)) < angle_eps
        && a.segment.midpoint().distance(b.segment.midpoint()) < center_eps_px
}

/// Greedy highest-score-first suppression: an axis is dropped when a kept,
/// higher-scored axis has a similar orientation and a nearby midpoint.
pub fn dedup_axes(axes: &[SymmetryAxis], cfg: &PipelineConfig, diagonal: f64) -> Vec<SymmetryAxis> {
    let center_eps = cfg.dedup_center_eps * diagonal;
    let mut kept: Vec<SymmetryAxis> = Vec::new();
    for a in sorted_by_score(axes) {
        if !kept
            .iter()
            .any(|k| axes_similar(k, &a, cfg.dedup_angle_eps, center_eps))
        {
            kept.push(a);
        }
    }
    kept
}

pub fn circles_similar(a: &RotationCandidate, b: &RotationCandidate, center_eps_px: f64) -> bool {
    let rel = (a.radius - b.radius).abs() / a.radius.max(b.radius);
    a.center.distance(b.center) < center_eps_px && rel < CIRCLE_RADIUS_TOLERANCE
}

/// Circle counterpart of [`dedup_axes`], ordered by confidence.
pub fn dedup_circles(
    circles: &[RotationCandidate],
    cfg: &PipelineConfig,
    diagonal: f64,
) -> Vec<RotationCandidate> {
    let center_eps = cfg.dedup_center_eps * diagonal;
    let mut sorted = circles.to_vec();
    sorted.sort_by(|a, b| b.confidence.total_cmp(&a.confidence));
    let mut kept: Vec<RotationCandidate> = Vec::new();
    for c in sorted {
        if !kept.iter().any(|k| circles_similar(k, &c, center_eps)) {
            kept.push(c);
        }
    }
    kept
}
