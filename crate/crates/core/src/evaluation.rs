//! Max-F1 scoring of detected axes and rotation centers against ground truth:
//! rank-ordered suppression, matching with grouping, and a score-threshold sweep.

use std::fmt::Write as _;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{angular_difference, orientation, Segment};
use crate::interchange::{GtRotation, ImageSize, RotationCandidate, SymmetryAxis};

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct MatchConfig {
    /// Radians.
    pub angle_tol: f64,
    /// Fraction of the image diagonal.
    pub center_tol: f64,
    /// Fraction of the image diagonal.
    pub rotation_center_tol: f64,
    /// Relative radius difference, only checked when the ground truth has a radius.
    pub rotation_radius_tol: f64,
}

impl Default for MatchConfig {
    fn default() -> Self {
        MatchConfig {
            angle_tol: 10f64.to_radians(),
            center_tol: 0.10,
            rotation_center_tol: 0.05,
            rotation_radius_tol: 0.5,
        }
    }
}

impl MatchConfig {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("angle_tol", self.angle_tol),
            ("center_tol", self.center_tol),
            ("rotation_center_tol", self.rotation_center_tol),
            ("rotation_radius_tol", self.rotation_radius_tol),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::Validation(format!(
                    "{name} must be positive, got {v}"
                )));
            }
        }
        Ok(())
    }

    fn segments_similar(&self, a: &Segment, b: &Segment, diagonal: f64) -> bool {
        angular_difference(orientation(a), orientation(b)) < self.angle_tol
            && a.midpoint().distance(b.midpoint()) < self.center_tol * diagonal
    }

    fn rotation_matches(&self, c: &RotationCandidate, gt: &GtRotation, diagonal: f64) -> bool {
        if c.center.distance(gt.center) >= self.rotation_center_tol * diagonal {
            return false;
        }
        match gt.radius {
            Some(r) => (c.radius - r).abs() / r.max(c.radius) < self.rotation_radius_tol,
            None => true,
        }
    }
}

/// Harmonic mean of precision and recall, 0 when both are 0.
pub fn f1(p: f64, r: f64) -> f64 {
    if p + r <= 0.0 {
        0.0
    } else {
        2.0 * p * r / (p + r)
    }
}

/// Integer tallies behind one precision/recall point. Summing tallies across
/// images pools the evaluation.
#[derive(Debug, Clone, Copy, Default, PartialEq, Eq, Serialize, Deserialize)]
pub struct MatchCounts {
    /// Kept detections that matched some ground truth.
    pub matched: usize,
    /// Detections surviving suppression.
    pub kept: usize,
    /// Ground truths with at least one match.
    pub gt_hit: usize,
    pub gt_total: usize,
}

impl MatchCounts {
    pub fn precision(&self) -> f64 {
        if self.kept == 0 {
            0.0
        } else {
            self.matched as f64 / self.kept as f64
        }
    }

    pub fn recall(&self) -> f64 {
        if self.gt_total == 0 {
            0.0
        } else {
            self.gt_hit as f64 / self.gt_total as f64
        }
    }

    /// Same value as `f1(precision, recall)`, evaluated on the integer counts
    /// so that rational cases come out exact.
    pub fn f1(&self) -> f64 {
        let num = 2 * self.matched * self.gt_hit;
        let den = self.matched * self.gt_total + self.kept * self.gt_hit;
        if num == 0 {
            0.0
        } else {
            num as f64 / den as f64
        }
    }

    pub fn merge(&self, other: &MatchCounts) -> MatchCounts {
        MatchCounts {
            matched: self.matched + other.matched,
            kept: self.kept + other.kept,
            gt_hit: self.gt_hit + other.gt_hit,
            gt_total: self.gt_total + other.gt_total,
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(tag = "kind", content = "index", rename_all = "snake_case")]
pub enum Assignment {
    /// Index of the first ground truth it matched.
    Matched(usize),
    /// Index of the higher-ranked detection that suppressed it.
    Suppressed(usize),
    FalsePositive,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct MatchResult {
    /// One entry per input detection, in input order.
    pub assignments: Vec<Assignment>,
    pub counts: MatchCounts,
}

impl MatchResult {
    pub fn precision(&self) -> f64 {
        self.counts.precision()
    }

    pub fn recall(&self) -> f64 {
        self.counts.recall()
    }

    pub fn f1(&self) -> f64 {
        self.counts.f1()
    }
}

fn rank_order(scores: &[f64]) -> Vec<usize> {
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    order
}

/// Greedy matching in descending score order: a detection similar to an
/// already-kept one is suppressed; otherwise it matches any similar ground
/// truth (several detections may share one) or is a false positive.
pub fn match_axes(
    detections: &[SymmetryAxis],
    gt: &[Segment],
    image: ImageSize,
    mc: &MatchConfig,
) -> MatchResult {
    let diag = image.diagonal();
    let scores: Vec<f64> = detections.iter().map(|d| d.score).collect();
    let mut assignments = vec![Assignment::FalsePositive; detections.len()];
    let mut kept: Vec<usize> = Vec::new();
    let mut hit = vec![false; gt.len()];
    let mut counts = MatchCounts {
        gt_total: gt.len(),
        ..Default::default()
    };
    for i in rank_order(&scores) {
        let seg = &detections[i].segment;
        if let Some(&k) = kept
            .iter()
            .find(|&&k| mc.segments_similar(&detections[k].segment, seg, diag))
        {
            assignments[i] = Assignment::Suppressed(k);
            continue;
        }
        kept.push(i);
        counts.kept += 1;
        let mut first = None;
        for (g, gs) in gt.iter().enumerate() {
            if mc.segments_similar(gs, seg, diag) {
                hit[g] = true;
                first.get_or_insert(g);
            }
        }
        if let Some(g) = first {
            counts.matched += 1;
            assignments[i] = Assignment::Matched(g);
        }
    }
    counts.gt_hit = hit.iter().filter(|&&h| h).count();
    MatchResult {
        assignments,
        counts,
    }
}

/// Center-based rotation matching with grouping and no suppression.
pub fn match_rotations(
    candidates: &[RotationCandidate],
    gt: &[GtRotation],
    image: ImageSize,
    mc: &MatchConfig,
) -> MatchResult {
    let diag = image.diagonal();
    let mut hit = vec![false; gt.len()];
    let mut counts = MatchCounts {
        kept: candidates.len(),
        gt_total: gt.len(),
        ..Default::default()
    };
    let assignments = candidates
        .iter()
        .map(|c| {
            let mut first = None;
            for (g, r) in gt.iter().enumerate() {
                if mc.rotation_matches(c, r, diag) {
                    hit[g] = true;
                    first.get_or_insert(g);
                }
            }
            match first {
                Some(g) => {
                    counts.matched += 1;
                    Assignment::Matched(g)
                }
                None => Assignment::FalsePositive,
            }
        })
        .collect();
    counts.gt_hit = hit.iter().filter(|&&h| h).count();
    MatchResult {
        assignments,
        counts,
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepPoint {
    pub threshold: f64,
    pub counts: MatchCounts,
}

impl SweepPoint {
    pub fn precision(&self) -> f64 {
        self.counts.precision()
    }

    pub fn recall(&self) -> f64 {
        self.counts.recall()
    }

    pub fn f1(&self) -> f64 {
        self.counts.f1()
    }
}

/// Precision/recall as a step function of the score threshold, highest
/// threshold first. Curves from different images merge by summing counts.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct PrCurve {
    pub gt_total: usize,
    pub points: Vec<SweepPoint>,
}

impl PrCurve {
    /// Counts when keeping detections scored at or above `t`.
    pub fn counts_at(&self, t: f64) -> MatchCounts {
        self.points
            .iter()
            .rev()
            .find(|p| p.threshold >= t)
            .map(|p| p.counts)
            .unwrap_or(MatchCounts {
                gt_total: self.gt_total,
                ..Default::default()
            })
    }

    pub fn merge(&self, other: &PrCurve) -> PrCurve {
        let mut ts: Vec<f64> = self
            .points
            .iter()
            .chain(&other.points)
            .map(|p| p.threshold)
            .collect();
        ts.sort_by(|a, b| b.total_cmp(a));
        ts.dedup();
        PrCurve {
            gt_total: self.gt_total + other.gt_total,
            points: ts
                .into_iter()
                .map(|t| SweepPoint {
                    threshold: t,
                    counts: self.counts_at(t).merge(&other.counts_at(t)),
                })
                .collect(),
        }
    }

    pub fn max_f1(&self) -> f64 {
        self.points.iter().map(|p| p.f1()).fold(0.0, f64::max)
    }

    /// The point attaining the maximum F1, preferring the higher threshold on ties.
    pub fn best(&self) -> Option<&SweepPoint> {
        self.points
            .iter()
            .fold(None, |best: Option<&SweepPoint>, p| match best {
                Some(b) if b.f1() >= p.f1() => Some(b),
                _ => Some(p),
            })
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct EvalReport {
    pub curve: PrCurve,
    pub max_f1: f64,
    /// Assignments at the best threshold; detections below it are `None`.
    pub assignments: Vec<Option<Assignment>>,
}

pub fn sweep_max_f1(
    detections: &[SymmetryAxis],
    gt: &[Segment],
    image: ImageSize,
    mc: &MatchConfig,
) -> EvalReport {
    let mut ts: Vec<f64> = detections.iter().map(|d| d.score).collect();
    ts.sort_by(|a, b| b.total_cmp(a));
    ts.dedup();
    let mut runs: Vec<(f64, MatchResult)> = ts
        .into_iter()
        .map(|t| {
            let kept: Vec<usize> = (0..detections.len())
                .filter(|&i| detections[i].score >= t)
                .collect();
            let subset: Vec<SymmetryAxis> = kept.iter().map(|&i| detections[i]).collect();
            let r = match_axes(&subset, gt, image, mc);
            // re-index suppression witnesses into the full detection list
            let mut full = MatchResult {
                assignments: vec![Assignment::FalsePositive; detections.len()],
                counts: r.counts,
            };
            for (j, a) in r.assignments.into_iter().enumerate() {
                full.assignments[kept[j]] = match a {
                    Assignment::Suppressed(k) => Assignment::Suppressed(kept[k]),
                    other => other,
                };
            }
            (t, full)
        })
        .collect();
    let curve = PrCurve {
        gt_total: gt.len(),
        points: runs
            .iter()
            .map(|(t, r)| SweepPoint {
                threshold: *t,
                counts: r.counts,
            })
            .collect(),
    };
    let max_f1 = curve.max_f1();
    let assignments = match curve.best().map(|b| b.threshold) {
        Some(bt) => {
            let pos = runs
                .iter()
                .position(|(t, _)| *t == bt)
                .expect("best threshold is in the sweep");
            let (_, r) = runs.swap_remove(pos);
            detections
                .iter()
                .zip(r.assignments)
                .map(|(d, a)| (d.score >= bt).then_some(a))
                .collect()
        }
        None => Vec::new(),
    };
    EvalReport {
        curve,
        max_f1,
        assignments,
    }
}

/// Pools the per-image curves and reports the maximum F1 of the merged curve.
pub fn aggregate(reports: &[EvalReport]) -> PrCurve {
    reports.iter().fold(
        PrCurve {
            gt_total: 0,
            points: Vec::new(),
        },
        |acc, r| acc.merge(&r.curve),
    )
}

fn describe(a: Option<Assignment>) -> String {
    match a {
        None => "below-threshold".into(),
        Some(Assignment::Matched(g)) => format!("matched gt{g}"),
        Some(Assignment::Suppressed(k)) => format!("suppressed by det{k}"),
        Some(Assignment::FalsePositive) => "false-positive".into(),
    }
}

/// Tab-separated `threshold precision recall f1` rows for plotting.
pub fn pr_table(curve: &PrCurve) -> String {
    let mut s = String::from("threshold\tprecision\trecall\tf1\n");
    for p in &curve.points {
        let _ = writeln!(
            s,
            "{}\t{}\t{}\t{}",
            p.threshold,
            p.precision(),
            p.recall(),
            p.f1()
        );
    }
    s
}

pub fn format_report(name: &str, report: &EvalReport) -> String {
    let mut s = format!("image {name}\nmax_f1 {}\n", report.max_f1);
    if let Some(b) = report.curve.best() {
        let _ = writeln!(
            s,
            "best threshold {} precision {} recall {}",
            b.threshold,
            b.precision(),
            b.recall()
        );
    }
    for (i, a) in report.assignments.iter().enumerate() {
        let _ = writeln!(s, "det{i} {}", describe(*a));
    }
    s.push_str(&pr_table(&report.curve));
    s
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{rotate_about, Point};
    use crate::interchange::{AxisSource, Provenance};
    use proptest::prelude::*;

    const IMG: ImageSize = ImageSize {
        width: 100,
        height: 100,
    };

    fn seg(x1: f64, y1: f64, x2: f64, y2: f64) -> Segment {
        Segment::from_coords(x1, y1, x2, y2).unwrap()
    }

    fn det(s: Segment, score: f64) -> SymmetryAxis {
        SymmetryAxis::new(s, score, 0, AxisSource::Builtin).unwrap()
    }

    fn tilted(s: Segment, deg: f64) -> Segment {
        let c = s.midpoint();
        let t = deg.to_radians();
        Segment::new(rotate_about(s.p1(), c, t), rotate_about(s.p2(), c, t)).unwrap()
    }

    /// Two ground truths; SC1 and SC2 straddle GT1, SC4 sits on GT2, SC3 and
    /// SC5 are elsewhere and SC6 nearly duplicates SC5.
    pub(crate) fn toy_instance() -> (Vec<SymmetryAxis>, Vec<Segment>) {
        let gt1 = seg(50.0, 10.0, 50.0, 90.0);
        let gt2 = seg(10.0, 50.0, 90.0, 50.0);
        let dets = vec![
            det(tilted(gt1, 6.0), 0.95),
            det(tilted(gt1, -6.0), 0.9),
            det(seg(5.0, 5.0, 30.0, 30.0), 0.8),
            det(seg(12.0, 50.5, 88.0, 50.5), 0.7),
            det(seg(95.0, 70.0, 70.0, 95.0), 0.6),
            det(seg(94.0, 71.0, 71.0, 94.0), 0.5),
        ];
        (dets, vec![gt1, gt2])
    }

    #[test]
    fn f1_examples() {
        assert_eq!(f1(0.5, 0.5), 0.5);
        assert_eq!(f1(1.0, 0.0), 0.0);
        assert!((f1(0.6, 0.3) - 0.4).abs() < 1e-12);
        assert_eq!(f1(0.0, 0.0), 0.0);
    }

    #[test]
    fn toy_instance_counts() {
        let (dets, gt) = toy_instance();
        let r = match_axes(&dets, &gt, IMG, &MatchConfig::default());
        assert_eq!(
            r.assignments,
            vec![
                Assignment::Matched(0),
                Assignment::Matched(0),
                Assignment::FalsePositive,
                Assignment::Matched(1),
                Assignment::FalsePositive,
                Assignment::Suppressed(4),
            ]
        );
        assert_eq!(r.precision(), 0.6);
        assert_eq!(r.recall(), 1.0);
        assert_eq!(r.f1(), 0.75);
    }

    #[test]
    fn empty_and_identity() {
        let mc = MatchConfig::default();
        let gt = vec![seg(50.0, 10.0, 50.0, 90.0), seg(10.0, 50.0, 90.0, 50.0)];
        let r = match_axes(&[], &gt, IMG, &mc);
        assert_eq!((r.precision(), r.recall(), r.f1()), (0.0, 0.0, 0.0));
        let dets: Vec<_> = gt.iter().map(|&s| det(s, 0.5)).collect();
        let r = match_axes(&dets, &gt, IMG, &mc);
        assert_eq!((r.precision(), r.recall()), (1.0, 1.0));
    }

    #[test]
    fn sweep_examples() {
        let mc = MatchConfig::default();
        let gt = vec![seg(50.0, 10.0, 50.0, 90.0), seg(10.0, 50.0, 90.0, 50.0)];
        let one = sweep_max_f1(&[det(gt[0], 0.7)], &gt[..1], IMG, &mc);
        assert_eq!(one.max_f1, 1.0);
        let none = sweep_max_f1(&[det(seg(5.0, 5.0, 30.0, 30.0), 0.7)], &gt, IMG, &mc);
        assert_eq!(none.max_f1, 0.0);

        let dets = [
            det(gt[0], 0.9),
            det(seg(5.0, 5.0, 30.0, 30.0), 0.5),
            det(gt[1], 0.3),
        ];
        let r = sweep_max_f1(&dets, &gt, IMG, &mc);
        let pts: Vec<(f64, f64, f64)> = r
            .curve
            .points
            .iter()
            .map(|p| (p.precision(), p.recall(), p.f1()))
            .collect();
        assert_eq!(pts[0], (1.0, 0.5, 2.0 / 3.0));
        assert_eq!(pts[1], (0.5, 0.5, 0.5));
        assert_eq!(pts[2].1, 1.0);
        assert!((pts[2].0 - 2.0 / 3.0).abs() < 1e-15 && pts[2].2 == 0.8);
        assert_eq!(r.max_f1, 0.8);
        assert!(r.assignments.iter().all(Option::is_some));
    }

    fn rot(x: f64, y: f64) -> RotationCandidate {
        RotationCandidate::new(Point::new(x, y), 20.0, 0.9, Provenance::Rule).unwrap()
    }

    #[test]
    fn rotation_examples() {
        let mc = MatchConfig::default();
        let gt = [GtRotation {
            center: Point::new(50.0, 50.0),
            radius: None,
        }];
        let r = match_rotations(&[rot(50.0, 50.0)], &gt, IMG, &mc);
        assert_eq!((r.precision(), r.recall(), r.f1()), (1.0, 1.0, 1.0));
        let r = match_rotations(&[rot(99.0, 99.0)], &gt, IMG, &mc);
        assert_eq!((r.precision(), r.recall(), r.f1()), (0.0, 0.0, 0.0));
        let r = match_rotations(
            &[rot(50.0, 50.0), rot(52.0, 51.0), rot(5.0, 95.0)],
            &gt,
            IMG,
            &mc,
        );
        assert_eq!(r.recall(), 1.0);
        assert!((r.precision() - 2.0 / 3.0).abs() < 1e-15);
        assert_eq!(r.f1(), 0.8);
    }

    #[test]
    fn rotation_radius_checked_only_when_present() {
        let mc = MatchConfig::default();
        let with_r = [GtRotation {
            center: Point::new(50.0, 50.0),
            radius: Some(80.0),
        }];
        assert_eq!(
            match_rotations(&[rot(50.0, 50.0)], &with_r, IMG, &mc)
                .counts
                .matched,
            0
        );
        let ok_r = [GtRotation {
            center: Point::new(50.0, 50.0),
            radius: Some(25.0),
        }];
        assert_eq!(
            match_rotations(&[rot(50.0, 50.0)], &ok_r, IMG, &mc)
                .counts
                .matched,
            1
        );
    }

    #[test]
    fn merge_pools_counts() {
        let mc = MatchConfig::default();
        let (dets, gt) = toy_instance();
        let a = sweep_max_f1(&dets, &gt, IMG, &mc);
        let b = sweep_max_f1(&dets[..2], &gt[..1], IMG, &mc);
        let pooled = aggregate(&[a.clone(), b.clone()]);
        assert_eq!(pooled.gt_total, 3);
        let low = pooled.counts_at(0.0);
        assert_eq!(
            low,
            MatchCounts {
                matched: 5,
                kept: 7,
                gt_hit: 3,
                gt_total: 3
            }
        );
        assert_eq!(
            a.curve.merge(&b.curve).merge(&a.curve),
            a.curve.merge(&b.curve.merge(&a.curve))
        );
    }

    #[test]
    fn report_text_lists_every_detection() {
        let (dets, gt) = toy_instance();
        let r = sweep_max_f1(&dets, &gt, IMG, &MatchConfig::default());
        let text = format_report("toy", &r);
        // the sweep peaks at 0.7 with 3 of 4 kept matched, F1 = 6/7
        assert!(text.contains("det2 false-positive") && text.contains("det4 below-threshold"));
        assert!(
            text.starts_with(&format!(
                "image toy\nmax_f1 {}\nbest threshold 0.7",
                6.0 / 7.0
            )),
            "{text}"
        );
    }

    /// The kept set is the unique subset where a detection is kept exactly
    /// when no higher-ranked kept detection is similar to it.
    fn brute_force(dets: &[SymmetryAxis], gt: &[Segment], mc: &MatchConfig) -> MatchCounts {
        let diag = IMG.diagonal();
        let order = rank_order(&dets.iter().map(|d| d.score).collect::<Vec<_>>());
        let n = dets.len();
        let mut found = None;
        for mask in 0u32..(1 << n) {
            let kept = |i: usize| mask & (1 << i) != 0;
            let consistent = order.iter().enumerate().all(|(r, &i)| {
                let blocked = order[..r].iter().any(|&j| {
                    kept(j) && mc.segments_similar(&dets[j].segment, &dets[i].segment, diag)
                });
                kept(i) != blocked
            });
            if consistent {
                assert!(found.is_none(), "fixpoint must be unique");
                let ks: Vec<usize> = (0..n).filter(|&i| kept(i)).collect();
                let matches =
                    |i: usize, g: &Segment| mc.segments_similar(g, &dets[i].segment, diag);
                found = Some(MatchCounts {
                    matched: ks
                        .iter()
                        .filter(|&&i| gt.iter().any(|g| matches(i, g)))
                        .count(),
                    kept: ks.len(),
                    gt_hit: gt
                        .iter()
                        .filter(|g| ks.iter().any(|&i| matches(i, g)))
                        .count(),
                    gt_total: gt.len(),
                });
            }
        }
        found.expect("a consistent kept set exists")
    }

    fn arb_line() -> impl Strategy<Value = Segment> {
        // coarse grid so near-ties in similarity are common
        (0u8..5, 0u8..5, 0u8..8).prop_map(|(x, y, t)| {
            let c = Point::new(20.0 + 15.0 * x as f64, 20.0 + 15.0 * y as f64);
            let a = t as f64 * std::f64::consts::PI / 8.0;
            let d = Point::new(a.cos(), a.sin()) * 15.0;
            Segment::new(c - d, c + d).unwrap()
        })
    }

    proptest! {
        #[test]
        fn greedy_matches_brute_force(
            dets in prop::collection::vec((arb_line(), 0u8..10), 0..=6),
            gt in prop::collection::vec(arb_line(), 0..=3),
        ) {
            let dets: Vec<_> = dets.into_iter().map(|(s, sc)| det(s, sc as f64 / 10.0)).collect();
            let mc = MatchConfig { center_tol: 0.2, ..Default::default() };
            prop_assert_eq!(match_axes(&dets, &gt, IMG, &mc).counts, brute_force(&dets, &gt, &mc));
        }

        #[test]
        fn harmonic_mean_bounds(p in 1e-9..=1.0f64, r in 1e-9..=1.0f64) {
            let f = f1(p, r);
            prop_assert!(p.min(r) <= f + 1e-15 && f <= p.max(r) + 1e-15);
        }

        #[test]
        fn max_dominates_sweep_and_suppression_has_witness(
            dets in prop::collection::vec((arb_line(), 0u8..10), 0..=8),
            gt in prop::collection::vec(arb_line(), 0..=3),
        ) {
            let dets: Vec<_> = dets.into_iter().map(|(s, sc)| det(s, sc as f64 / 10.0)).collect();
            let mc = MatchConfig::default();
            let r = sweep_max_f1(&dets, &gt, IMG, &mc);
            for p in &r.curve.points {
                prop_assert!(r.max_f1 >= p.f1());
                prop_assert!((0.0..=1.0).contains(&p.precision()) && (0.0..=1.0).contains(&p.recall()));
            }
            let m = match_axes(&dets, &gt, IMG, &mc);
            for (i, a) in m.assignments.iter().enumerate() {
                if let Assignment::Suppressed(k) = a {
                    prop_assert!(dets[*k].score >= dets[i].score);
                    prop_assert!(!matches!(m.assignments[*k], Assignment::Suppressed(_)));
                }
            }
        }

        #[test]
        fn duplicate_of_matched_gt_keeps_recall(
            dets in prop::collection::vec((arb_line(), 0u8..10), 1..=6),
            gt in prop::collection::vec(arb_line(), 1..=3),
        ) {
            let dets: Vec<_> = dets.into_iter().map(|(s, sc)| det(s, sc as f64 / 10.0)).collect();
            let mc = MatchConfig::default();
            let before = match_axes(&dets, &gt, IMG, &mc);
            let mut more = dets.clone();
            more.push(det(gt[0], 0.0));
            let after = match_axes(&more, &gt, IMG, &mc);
            prop_assert!(after.recall() >= before.recall());
        }
    }
}
