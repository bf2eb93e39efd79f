//! Drawing axes and rotation circles over an image.

use image::{Rgb, RgbImage};
use imageproc::drawing::{draw_hollow_circle_mut, draw_line_segment_mut};

use crate::detector::ImageRaster;
use crate::interchange::{RotationCandidate, SymmetryAxis};

/// Axis colour by recursion depth; depths past the end reuse the last entry.
/// Depth 0 (whole-image axes) is red.
pub const DEPTH_PALETTE: [[u8; 3]; 8] = [
    [230, 25, 25],
    [30, 100, 240],
    [20, 180, 60],
    [200, 40, 200],
    [0, 200, 210],
    [255, 130, 0],
    [120, 60, 170],
    [245, 245, 245],
];

pub const CIRCLE_COLOR: [u8; 3] = [255, 230, 0];

pub fn depth_color(depth: u32) -> Rgb<u8> {
    Rgb(DEPTH_PALETTE[(depth as usize).min(DEPTH_PALETTE.len() - 1)])
}

pub fn to_rgb(img: &ImageRaster) -> RgbImage {
    image::DynamicImage::ImageLuma8(img.to_gray8()).to_rgb8()
}

/// Greyscale copy of `base` with deeper axes drawn first, so global axes
/// stay on top, and circles drawn last.
pub fn render(
    base: &ImageRaster,
    axes: &[SymmetryAxis],
    circles: &[RotationCandidate],
) -> RgbImage {
    let mut out = to_rgb(base);
    let mut order: Vec<&SymmetryAxis> = axes.iter().collect();
    order.sort_by_key(|a| std::cmp::Reverse(a.depth));
    for a in order {
        let [x1, y1, x2, y2] = a.segment.coords().map(|v| v as f32);
        let color = depth_color(a.depth);
        for off in [-0.5f32, 0.5] {
            draw_line_segment_mut(&mut out, (x1 + off, y1 + off), (x2 + off, y2 + off), color);
        }
    }
    for c in circles {
        let center = (c.center.x.round() as i32, c.center.y.round() as i32);
        let r = c.radius.round().max(1.0) as i32;
        for dr in [0, 1] {
            draw_hollow_circle_mut(&mut out, center, r + dr, Rgb(CIRCLE_COLOR));
        }
        draw_hollow_circle_mut(&mut out, center, 2, Rgb(CIRCLE_COLOR));
    }
    out
}
