//! Rotational symmetry from pairs of reflection axes.
//!
//! Two mirror axes of the same pattern meet at its rotation center. The rule
//! path accepts perpendicular, similarly-scored crossings; the model path
//! classifies every intersecting pair with a trained forest.

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::forest::DecisionForest;
use crate::geometry::{
    angular_difference, line_intersection, orientation, perpendicular, segment_length, Point,
};
use crate::interchange::{ImageSize, PipelineConfig, Provenance, RotationCandidate, SymmetryAxis};
use crate::refine::dedup_circles;

pub const FEATURE_COUNT: usize = 12;

/// Distance value used for all four endpoint features when the lines do not
/// cross inside the image.
pub const NO_INTERSECTION_SENTINEL: f64 = 2.0;

/// Maximum deviation from perpendicular accepted by the rule path.
pub const PERP_TOLERANCE: f64 = 10.0 * std::f64::consts::PI / 180.0;

/// Pairs closer than this to parallel are never classified.
pub const NEAR_PARALLEL_FLOOR: f64 = 10.0 * std::f64::consts::PI / 180.0;

pub const FEATURE_NAMES: [&str; FEATURE_COUNT] = [
    "score_diff",
    "angle_a",
    "angle_b",
    "angle_diff",
    "perp_a",
    "perp_diff",
    "length_diff",
    "intersects",
    "dist_a1",
    "dist_a2",
    "dist_b1",
    "dist_b2",
];

/// Feature vector of an (unordered) axis pair, in the fixed order of [`FEATURE_NAMES`].
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LinePairFeatures(pub [f64; FEATURE_COUNT]);

impl LinePairFeatures {
    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    pub fn score_diff(&self) -> f64 {
        self.0[0]
    }

    pub fn angle_diff(&self) -> f64 {
        self.0[3]
    }

    pub fn perp_diff(&self) -> f64 {
        self.0[5]
    }

    pub fn length_diff(&self) -> f64 {
        self.0[6]
    }

    pub fn intersects(&self) -> bool {
        self.0[7] == 1.0
    }

    pub fn endpoint_distances(&self) -> [f64; 4] {
        [self.0[8], self.0[9], self.0[10], self.0[11]]
    }
}

/// Orders a pair so the higher-scored axis comes first; ties fall back to
/// lexicographic comparison of coordinates.
pub fn canonical_pair<'a>(
    a: &'a SymmetryAxis,
    b: &'a SymmetryAxis,
) -> (&'a SymmetryAxis, &'a SymmetryAxis) {
    let ord = b.score.total_cmp(&a.score).then_with(|| {
        let (ca, cb) = (a.segment.coords(), b.segment.coords());
        ca.iter()
            .zip(cb.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    if ord.is_le() {
        (a, b)
    } else {
        (b, a)
    }
}

/// Intersection of the two supporting lines, if it lies inside the image.
pub fn crossing_in_image(a: &SymmetryAxis, b: &SymmetryAxis, image: ImageSize) -> Option<Point> {
    line_intersection(&a.segment, &b.segment).filter(|p| image.contains(*p))
}

pub fn featurize(a: &SymmetryAxis, b: &SymmetryAxis, image: ImageSize) -> LinePairFeatures {
    let diag = image.diagonal();
    let (a, b) = canonical_pair(a, b);
    let angle_a = orientation(&a.segment);
    let angle_b = orientation(&b.segment);
    let perp_a = perpendicular(angle_a);
    let mut f = [0.0; FEATURE_COUNT];
    f[0] = (a.score - b.score).abs();
    f[1] = angle_a;
    f[2] = angle_b;
    f[3] = angular_difference(angle_a, angle_b);
    f[4] = perp_a;
    f[5] = angular_difference(perp_a, angle_b);
    f[6] = (segment_length(&a.segment) - segment_length(&b.segment)).abs() / diag;
    match crossing_in_image(a, b, image) {
        Some(x) => {
            f[7] = 1.0;
            let ends = [
                a.segment.p1(),
                a.segment.p2(),
                b.segment.p1(),
                b.segment.p2(),
            ];
            for (slot, p) in f[8..].iter_mut().zip(ends) {
                *slot = p.distance(x) / diag;
            }
        }
        None => {
            f[7] = 0.0;
            f[8..].fill(NO_INTERSECTION_SENTINEL);
        }
    }
    LinePairFeatures(f)
}

/// Circle radius for a crossing: the nearest of the four endpoints, at least one pixel.
fn circle_radius(a: &SymmetryAxis, b: &SymmetryAxis, center: Point) -> f64 {
    [
        a.segment.p1(),
        a.segment.p2(),
        b.segment.p1(),
        b.segment.p2(),
    ]
    .iter()
    .map(|p| p.distance(center))
    .fold(f64::INFINITY, f64::min)
    .max(1.0)
}

/// Perpendicular crossing with similar scores implies a rotation center.
pub fn rule_rotation(
    a: &SymmetryAxis,
    b: &SymmetryAxis,
    image: ImageSize,
    cfg: &PipelineConfig,
) -> Option<RotationCandidate> {
    let center = crossing_in_image(a, b, image)?;
    let perp_diff = angular_difference(
        perpendicular(orientation(&a.segment)),
        orientation(&b.segment),
    );
    if perp_diff >= PERP_TOLERANCE {
        return None;
    }
    let (lo, hi) = (a.score.min(b.score), a.score.max(b.score));
    if hi <= 0.0 || lo / hi < cfg.circle_threshold {
        return None;
    }
    RotationCandidate::new(center, circle_radius(a, b, center), lo, Provenance::Rule).ok()
}

/// Rule path over every unordered pair, followed by circle de-duplication.
pub fn rule_rotations(
    axes: &[SymmetryAxis],
    image: ImageSize,
    cfg: &PipelineConfig,
) -> Vec<RotationCandidate> {
    let mut out = Vec::new();
    for (i, a) in axes.iter().enumerate() {
        for b in &axes[i + 1..] {
            out.extend(rule_rotation(a, b, image, cfg));
        }
    }
    dedup_circles(&out, cfg, image.diagonal())
}

/// Undeduplicated model hits: every crossing pair the forest accepts.
pub fn model_candidates(
    axes: &[SymmetryAxis],
    model: &DecisionForest,
    image: ImageSize,
    cfg: &PipelineConfig,
) -> Result<Vec<RotationCandidate>> {
    if model.feature_count() != FEATURE_COUNT {
        return Err(Error::Contract(format!(
            "model expects {} features, line pairs provide {FEATURE_COUNT}",
            model.feature_count()
        )));
    }
    let mut out = Vec::new();
    for (i, a) in axes.iter().enumerate() {
        for b in &axes[i + 1..] {
            let f = featurize(a, b, image);
            if !f.intersects() || f.angle_diff() < NEAR_PARALLEL_FLOOR {
                continue;
            }
            let p = model.predict_proba(f.values())?;
            if p < cfg.model_decision_threshold {
                continue;
            }
            let center = line_intersection(&a.segment, &b.segment).expect("intersecting pair");
            out.extend(
                RotationCandidate::new(center, circle_radius(a, b, center), p, Provenance::Model)
                    .ok(),
            );
        }
    }
    Ok(out)
}

pub fn model_rotation(
    axes: &[SymmetryAxis],
    model: &DecisionForest,
    image: ImageSize,
    cfg: &PipelineConfig,
) -> Result<Vec<RotationCandidate>> {
    let raw = model_candidates(axes, model, image, cfg)?;
    Ok(dedup_circles(&raw, cfg, image.diagonal()))
}
