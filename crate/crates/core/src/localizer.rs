//! Localized symmetry search: cut the image along its strongest axes, run the
//! detector on each piece and map what it finds back to image coordinates.

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::{AxisDetector, ImageRaster};
use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, Segment};
use crate::interchange::{PipelineConfig, SymmetryAxis};
use crate::refine::{axes_similar, dedup_axes, filter_axes};

/// Sub-images with either side shorter than this are not searched.
pub const MIN_FRAME_SIDE: u32 = 32;
/// Retained axes used to cut each node.
pub const CUTS_PER_NODE: usize = 3;

/// A rectangular window of the original image, at integer offsets.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SubImageFrame {
    pub x: u32,
    pub y: u32,
    pub width: u32,
    pub height: u32,
    pub depth: u32,
}

impl SubImageFrame {
    pub fn root(width: u32, height: u32) -> Self {
        SubImageFrame {
            x: 0,
            y: 0,
            width,
            height,
            depth: 0,
        }
    }

    pub fn offset(&self) -> Point {
        Point::new(self.x as f64, self.y as f64)
    }

    pub fn rect(&self) -> Rect {
        Rect::new(
            self.x as f64,
            self.y as f64,
            (self.x + self.width) as f64,
            (self.y + self.height) as f64,
        )
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    pub fn contains_frame(&self, other: &SubImageFrame) -> bool {
        other.x >= self.x
            && other.y >= self.y
            && other.x + other.width <= self.x + self.width
            && other.y + other.height <= self.y + self.height
    }

    pub fn to_global(&self, s: &Segment) -> Segment {
        s.translated(self.x as f64, self.y as f64)
    }

    pub fn to_local(&self, s: &Segment) -> Segment {
        s.translated(-(self.x as f64), -(self.y as f64))
    }
}

/// Part of `poly` on the side of the line where `side(p) >= 0`.
fn clip_half_plane(poly: &[Point], side: impl Fn(Point) -> f64) -> Vec<Point> {
    let mut out = Vec::new();
    for i in 0..poly.len() {
        let (a, b) = (poly[i], poly[(i + 1) % poly.len()]);
        let (sa, sb) = (side(a), side(b));
        if sa >= 0.0 {
            out.push(a);
        }
        if (sa >= 0.0) != (sb >= 0.0) {
            let t = sa / (sa - sb);
            out.push(a + (b - a) * t);
        }
    }
    out
}

/// Splits `frame` along the infinite line through `axis` (image coordinates)
/// into the bounding boxes of the two halves. Halves smaller than
/// [`MIN_FRAME_SIDE`] in either direction are dropped; a line that misses the
/// frame yields nothing.
pub fn cut(frame: &SubImageFrame, axis: &Segment) -> Vec<SubImageFrame> {
    let rect = frame.rect();
    let dir = axis.direction();
    if rect.clip_line(axis.p1(), dir).is_none() {
        return Vec::new();
    }
    let origin = axis.p1();
    let side = |p: Point| dir.cross(p - origin);
    let corners = rect.corners();
    [1.0, -1.0]
        .iter()
        .filter_map(|&sign| {
            let poly = clip_half_plane(&corners, |p| sign * side(p));
            if poly.len() < 3 {
                return None;
            }
            let (mut x0, mut y0, mut x1, mut y1) = (f64::MAX, f64::MAX, f64::MIN, f64::MIN);
            for p in &poly {
                x0 = x0.min(p.x);
                y0 = y0.min(p.y);
                x1 = x1.max(p.x);
                y1 = y1.max(p.y);
            }
            let fx0 = (x0.floor() as i64).max(frame.x as i64) as u32;
            let fy0 = (y0.floor() as i64).max(frame.y as i64) as u32;
            let fx1 = (x1.ceil() as i64).min((frame.x + frame.width) as i64) as u32;
            let fy1 = (y1.ceil() as i64).min((frame.y + frame.height) as i64) as u32;
            let (w, h) = (fx1.saturating_sub(fx0), fy1.saturating_sub(fy0));
            (w >= MIN_FRAME_SIDE && h >= MIN_FRAME_SIDE).then_some(SubImageFrame {
                x: fx0,
                y: fy0,
                width: w,
                height: h,
                depth: frame.depth + 1,
            })
        })
        .collect()
}

/// One searched window and how many sub-windows it spawned.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct NodeTrace {
    pub frame: SubImageFrame,
    pub children: usize,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize)]
pub struct Localization {
    /// Retained axes of every depth in image coordinates.
    pub axes: Vec<SymmetryAxis>,
    pub nodes: Vec<NodeTrace>,
}

fn search(
    img: &ImageRaster,
    frame: SubImageFrame,
    cfg: &PipelineConfig,
    detector: &dyn AxisDetector,
) -> Result<Localization> {
    let crop = img.crop(frame.x, frame.y, frame.width, frame.height)?;
    let found: Vec<SymmetryAxis> = detector
        .detect(&crop)
        .into_iter()
        .map(|a| SymmetryAxis {
            segment: frame.to_global(&a.segment),
            depth: frame.depth,
            ..a
        })
        .collect();
    let kept = dedup_axes(&filter_axes(&found, cfg), cfg, frame.diagonal());
    let children: Vec<SubImageFrame> = if frame.depth < cfg.max_recursion_depth {
        kept.iter()
            .take(CUTS_PER_NODE)
            .flat_map(|a| cut(&frame, &a.segment))
            .collect()
    } else {
        Vec::new()
    };
    let sub: Vec<Localization> = children
        .par_iter()
        .map(|&c| search(img, c, cfg, detector))
        .collect::<Result<_>>()?;
    let mut out = Localization {
        axes: kept,
        nodes: vec![NodeTrace {
            frame,
            children: children.len(),
        }],
    };
    for s in sub {
        out.axes.extend(s.axes);
        out.nodes.extend(s.nodes);
    }
    Ok(out)
}

/// Recursive search from the whole image down to `cfg.max_recursion_depth`.
/// A node whose axes all fail the filter spawns no children. The output is
/// ordered by depth, then window offset, then descending score, and axes that
/// repeat a shallower or stronger one are dropped.
pub fn localize(
    img: &ImageRaster,
    cfg: &PipelineConfig,
    detector: &dyn AxisDetector,
) -> Result<Localization> {
    cfg.validate()?;
    let root = SubImageFrame::root(img.width(), img.height());
    let mut out = search(img, root, cfg, detector)?;
    out.nodes.sort_by_key(|n| {
        (
            n.frame.depth,
            n.frame.y,
            n.frame.x,
            n.frame.height,
            n.frame.width,
        )
    });
    let mut tagged: Vec<(SymmetryAxis, (u32, u32))> = out
        .axes
        .into_iter()
        .map(|a| {
            let p = a.segment.midpoint();
            (a, (p.y as u32, p.x as u32))
        })
        .collect();
    tagged.sort_by(|(a, pa), (b, pb)| {
        a.depth
            .cmp(&b.depth)
            .then(b.score.total_cmp(&a.score))
            .then(pa.cmp(pb))
            .then(
                a.segment
                    .coords()
                    .partial_cmp(&b.segment.coords())
                    .unwrap_or(std::cmp::Ordering::Equal),
            )
    });
    let center_eps = cfg.dedup_center_eps * img.size().diagonal();
    let mut kept: Vec<SymmetryAxis> = Vec::new();
    for (a, _) in tagged {
        if !kept
            .iter()
            .any(|k| axes_similar(k, &a, cfg.dedup_angle_eps, center_eps))
        {
            kept.push(a);
        }
    }
    out.axes = kept;
    for a in &out.axes {
        if !img.size().rect().contains(a.segment.p1())
            || !img.size().rect().contains(a.segment.p2())
        {
            return Err(Error::Contract("localized axis left the image".into()));
        }
    }
    Ok(out)
}
