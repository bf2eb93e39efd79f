//! Baseline reflection-axis detector.
//!
//! Edge pixels are paired at random; every pair votes for its perpendicular
//! bisector in a (θ, ρ) accumulator, weighted by the product of gradient
//! magnitudes and by how well the two gradient directions mirror each other
//! across that bisector. Accumulator peaks are then re-scored by reflecting
//! every edge pixel across the candidate line and measuring the fraction of
//! edge mass that lands on a mirrored counterpart.
//!
//! Any other detector can stand in through [`AxisDetector`] or through an
//! axis file (see [`detect_or_load`]).

use std::f64::consts::PI;
use std::path::Path;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, Segment};
use crate::interchange::{read_axes_file, AxisSource, ImageSize, SymmetryAxis};

/// Grayscale raster with intensities in `[0, 1]`, row-major.
#[derive(Debug, Clone, PartialEq)]
pub struct ImageRaster {
    width: u32,
    height: u32,
    pixels: Vec<f32>,
}

impl ImageRaster {
    pub fn new(width: u32, height: u32, pixels: Vec<f32>) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::Validation(
                "image dimensions must be positive".into(),
            ));
        }
        if pixels.len() != width as usize * height as usize {
            return Err(Error::Validation(format!(
                "expected {} pixels for {width}x{height}, found {}",
                width as usize * height as usize,
                pixels.len()
            )));
        }
        if let Some(v) = pixels.iter().find(|v| !(0.0..=1.0).contains(*v)) {
            return Err(Error::Validation(format!("intensity {v} outside [0, 1]")));
        }
        Ok(ImageRaster {
            width,
            height,
            pixels,
        })
    }

    pub fn filled(width: u32, height: u32, value: f32) -> Result<Self> {
        ImageRaster::new(width, height, vec![value; width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, mut f: impl FnMut(u32, u32) -> f32) -> Result<Self> {
        let mut pixels = Vec::with_capacity(width as usize * height as usize);
        for y in 0..height {
            for x in 0..width {
                pixels.push(f(x, y).clamp(0.0, 1.0));
            }
        }
        ImageRaster::new(width, height, pixels)
    }

    /// Luminance conversion (Rec. 601 weights) of an 8-bit color image.
    pub fn from_dynamic(img: &image::DynamicImage) -> Result<Self> {
        let rgb = img.to_rgb8();
        let pixels = rgb
            .pixels()
            .map(|p| {
                let [r, g, b] = p.0;
                (0.299 * r as f32 + 0.587 * g as f32 + 0.114 * b as f32) / 255.0
            })
            .map(|v| v.clamp(0.0, 1.0))
            .collect();
        ImageRaster::new(rgb.width(), rgb.height(), pixels)
    }

    pub fn load(path: &Path) -> Result<Self> {
        let img = image::open(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })?;
        ImageRaster::from_dynamic(&img)
    }

    pub fn to_gray8(&self) -> image::GrayImage {
        image::GrayImage::from_fn(self.width, self.height, |x, y| {
            image::Luma([(self.get(x, y) * 255.0).round() as u8])
        })
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        self.to_gray8().save(path).map_err(|source| Error::Image {
            path: path.to_path_buf(),
            source,
        })
    }

    pub fn width(&self) -> u32 {
        self.width
    }

    pub fn height(&self) -> u32 {
        self.height
    }

    pub fn size(&self) -> ImageSize {
        ImageSize::new(self.width, self.height)
    }

    pub fn pixels(&self) -> &[f32] {
        &self.pixels
    }

    pub fn get(&self, x: u32, y: u32) -> f32 {
        self.pixels[y as usize * self.width as usize + x as usize]
    }

    pub fn crop(&self, x0: u32, y0: u32, width: u32, height: u32) -> Result<Self> {
        if x0 + width > self.width || y0 + height > self.height {
            return Err(Error::Contract(format!(
                "crop {width}x{height}+{x0}+{y0} exceeds {}x{} image",
                self.width, self.height
            )));
        }
        ImageRaster::from_fn(width, height, |x, y| self.get(x0 + x, y0 + y))
    }

    pub fn flip_horizontal(&self) -> Self {
        let w = self.width;
        ImageRaster::from_fn(w, self.height, |x, y| self.get(w - 1 - x, y)).expect("same shape")
    }

    /// Quarter turn clockwise.
    pub fn rotate90(&self) -> Self {
        let h = self.height;
        ImageRaster::from_fn(h, self.width, |x, y| self.get(y, h - 1 - x)).expect("same shape")
    }

    pub fn is_constant(&self) -> bool {
        let first = self.pixels[0];
        self.pixels.iter().all(|&v| v == first)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct DetectorConfig {
    /// Edge pixels are those whose gradient magnitude exceeds this percentile.
    pub edge_percentile: f64,
    pub max_pairs: usize,
    /// Pixels per ρ bin.
    pub rho_resolution: f64,
    /// Number of θ bins over `[0, π)`.
    pub theta_bins: usize,
    /// Accumulator smoothing, in bins.
    pub smoothing_sigma: f64,
    /// Pairs closer than this (pixels) do not vote.
    pub min_pair_distance: f64,
    /// Minimum cosine between one mirrored gradient and the other for a pair to vote.
    pub vote_consistency_gate: f64,
    /// Candidate peaks re-scored per requested axis.
    pub candidates_per_axis: usize,
    /// Lines closer than this in θ (degrees) and ρ (pixels) are one peak.
    pub nms_angle_deg: f64,
    pub nms_rho: f64,
    /// Re-scoring denominator floor, as a fraction of total edge mass.
    pub min_support_fraction: f64,
    pub top_k: usize,
    pub seed: u64,
}

impl Default for DetectorConfig {
    fn default() -> Self {
        DetectorConfig {
            edge_percentile: 0.90,
            max_pairs: 200_000,
            rho_resolution: 1.0,
            theta_bins: 180,
            smoothing_sigma: 2.0,
            min_pair_distance: 3.0,
            vote_consistency_gate: 0.9,
            candidates_per_axis: 3,
            nms_angle_deg: 3.0,
            nms_rho: 5.0,
            min_support_fraction: 0.2,
            top_k: 5,
            seed: 0,
        }
    }
}

/// Vote grid over lines `x·cosθ + y·sinθ = ρ`, `θ ∈ [0, π)`, `ρ ∈ [−D, D]`.
#[derive(Debug, Clone, PartialEq)]
pub struct HoughAccumulator {
    theta_bins: usize,
    rho_bins: usize,
    rho_resolution: f64,
    rho_max: f64,
    bins: Vec<f64>,
}

impl HoughAccumulator {
    pub fn new(diagonal: f64, rho_resolution: f64, theta_bins: usize) -> Self {
        let half = (diagonal / rho_resolution).ceil() as usize;
        let rho_bins = 2 * half + 1;
        HoughAccumulator {
            theta_bins,
            rho_bins,
            rho_resolution,
            rho_max: half as f64 * rho_resolution,
            bins: vec![0.0; theta_bins * rho_bins],
        }
    }

    pub fn theta_bins(&self) -> usize {
        self.theta_bins
    }

    pub fn rho_bins(&self) -> usize {
        self.rho_bins
    }

    pub fn get(&self, t: usize, r: usize) -> f64 {
        self.bins[t * self.rho_bins + r]
    }

    pub fn total(&self) -> f64 {
        self.bins.iter().sum()
    }

    pub fn theta(&self, t: usize) -> f64 {
        t as f64 * PI / self.theta_bins as f64
    }

    pub fn rho(&self, r: usize) -> f64 {
        r as f64 * self.rho_resolution - self.rho_max
    }

    /// Bin of a line given in normal form; `theta` may be any angle.
    pub fn bin_of(&self, theta: f64, rho: f64) -> Option<(usize, usize)> {
        let mut theta = theta.rem_euclid(2.0 * PI);
        let mut rho = rho;
        if theta >= PI {
            theta -= PI;
            rho = -rho;
        }
        let mut t = (theta / PI * self.theta_bins as f64).round() as usize;
        if t >= self.theta_bins {
            t -= self.theta_bins;
            rho = -rho;
        }
        let r = ((rho + self.rho_max) / self.rho_resolution).round();
        if r < 0.0 || r >= self.rho_bins as f64 {
            return None;
        }
        Some((t, r as usize))
    }

    /// Adds `weight` (clamped at zero) to the bin of the given line.
    pub fn vote(&mut self, theta: f64, rho: f64, weight: f64) {
        if weight <= 0.0 {
            return;
        }
        if let Some((t, r)) = self.bin_of(theta, rho) {
            self.bins[t * self.rho_bins + r] += weight;
        }
    }

    pub fn merge(&mut self, other: &HoughAccumulator) {
        assert_eq!(
            self.bins.len(),
            other.bins.len(),
            "accumulator shapes differ"
        );
        for (a, b) in self.bins.iter_mut().zip(&other.bins) {
            *a += b;
        }
    }

    /// θ bin `t + dt` with wrap-around; crossing θ = π mirrors the ρ axis.
    fn wrap_theta(&self, t: usize, dt: isize) -> (usize, bool) {
        let n = self.theta_bins as isize;
        let s = t as isize + dt;
        if s >= n {
            ((s - n) as usize, true)
        } else if s < 0 {
            ((s + n) as usize, true)
        } else {
            (s as usize, false)
        }
    }

    /// Separable Gaussian blur; θ wraps around with the ρ sign flip.
    pub fn smooth(&mut self, sigma: f64) {
        if sigma <= 0.0 {
            return;
        }
        let radius = (3.0 * sigma).ceil() as isize;
        let kernel: Vec<f64> = (-radius..=radius)
            .map(|k| (-(k * k) as f64 / (2.0 * sigma * sigma)).exp())
            .collect();
        let norm: f64 = kernel.iter().sum();
        let kernel: Vec<f64> = kernel.iter().map(|k| k / norm).collect();

        let mut tmp = vec![0.0; self.bins.len()];
        for t in 0..self.theta_bins {
            for r in 0..self.rho_bins {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    let rr = r as isize + i as isize - radius;
                    if rr >= 0 && (rr as usize) < self.rho_bins {
                        acc += k * self.bins[t * self.rho_bins + rr as usize];
                    }
                }
                tmp[t * self.rho_bins + r] = acc;
            }
        }
        for t in 0..self.theta_bins {
            for r in 0..self.rho_bins {
                let mut acc = 0.0;
                for (i, k) in kernel.iter().enumerate() {
                    let (tt, flip) = self.wrap_theta(t, i as isize - radius);
                    let rr = if flip { self.rho_bins - 1 - r } else { r };
                    acc += k * tmp[tt * self.rho_bins + rr];
                }
                self.bins[t * self.rho_bins + r] = acc;
            }
        }
    }

    /// Local maxima over the 8-neighbourhood, strongest first.
    pub fn local_maxima(&self) -> Vec<(usize, usize, f64)> {
        let mut out = Vec::new();
        for t in 0..self.theta_bins {
            for r in 0..self.rho_bins {
                let v = self.get(t, r);
                if v <= 0.0 {
                    continue;
                }
                let mut is_max = true;
                'nb: for dt in -1isize..=1 {
                    for dr in -1isize..=1 {
                        if dt == 0 && dr == 0 {
                            continue;
                        }
                        let (tt, flip) = self.wrap_theta(t, dt);
                        let rr = r as isize + dr;
                        let rr = if flip {
                            self.rho_bins as isize - 1 - rr
                        } else {
                            rr
                        };
                        if rr < 0 || rr as usize >= self.rho_bins {
                            continue;
                        }
                        let w = self.get(tt, rr as usize);
                        // ties broken by index so plateaus yield one peak
                        if w > v || (w == v && (tt, rr as usize) < (t, r)) {
                            is_max = false;
                            break 'nb;
                        }
                    }
                }
                if is_max {
                    out.push((t, r, v));
                }
            }
        }
        out.sort_by(|a, b| b.2.total_cmp(&a.2).then((a.0, a.1).cmp(&(b.0, b.1))));
        out
    }
}

/// Angle (radians, in `[0, π/2]`) and ρ distance between two normal-form lines.
fn normal_form_distance(t1: f64, r1: f64, t2: f64, r2: f64) -> (f64, f64) {
    let d = (t1 - t2).abs();
    if d <= PI / 2.0 {
        (d, (r1 - r2).abs())
    } else {
        (PI - d, (r1 + r2).abs())
    }
}

/// Anything that can turn an image into scored reflection axes.
pub trait AxisDetector: Sync {
    fn detect(&self, img: &ImageRaster) -> Vec<SymmetryAxis>;
}

#[derive(Debug, Clone, Default)]
pub struct VotingDetector {
    pub config: DetectorConfig,
}

struct EdgeMap {
    width: usize,
    height: usize,
    /// Normalised gradient magnitude, zero for non-edge pixels.
    magnitude: Vec<f64>,
    /// Unit gradient direction per pixel.
    direction: Vec<Point>,
    edges: Vec<usize>,
}

impl EdgeMap {
    fn build(img: &ImageRaster, percentile: f64) -> Option<EdgeMap> {
        let (w, h) = (img.width as usize, img.height as usize);
        let px = |x: usize, y: usize| img.pixels[y * w + x] as f64;
        let mut gx = vec![0.0; w * h];
        let mut gy = vec![0.0; w * h];
        let mut mag = vec![0.0; w * h];
        for y in 1..h.saturating_sub(1) {
            for x in 1..w.saturating_sub(1) {
                let sx = (px(x + 1, y - 1) + 2.0 * px(x + 1, y) + px(x + 1, y + 1))
                    - (px(x - 1, y - 1) + 2.0 * px(x - 1, y) + px(x - 1, y + 1));
                let sy = (px(x - 1, y + 1) + 2.0 * px(x, y + 1) + px(x + 1, y + 1))
                    - (px(x - 1, y - 1) + 2.0 * px(x, y - 1) + px(x + 1, y - 1));
                let i = y * w + x;
                gx[i] = sx;
                gy[i] = sy;
                mag[i] = sx.hypot(sy);
            }
        }
        let max = mag.iter().cloned().fold(0.0, f64::max);
        if max <= 1e-9 {
            return None;
        }
        let mut sorted = mag.clone();
        sorted.sort_by(f64::total_cmp);
        let k = ((sorted.len() - 1) as f64 * percentile).round() as usize;
        let threshold = sorted[k].max(1e-9 * max);

        let mut magnitude = vec![0.0; w * h];
        let mut direction = vec![Point::default(); w * h];
        let mut edges = Vec::new();
        for i in 0..w * h {
            if mag[i] > threshold {
                magnitude[i] = mag[i] / max;
                direction[i] = Point::new(gx[i] / mag[i], gy[i] / mag[i]);
                edges.push(i);
            }
        }
        if edges.len() < 2 {
            return None;
        }
        Some(EdgeMap {
            width: w,
            height: h,
            magnitude,
            direction,
            edges,
        })
    }

    fn position(&self, i: usize) -> Point {
        Point::new((i % self.width) as f64 + 0.5, (i / self.width) as f64 + 0.5)
    }

    fn total_mass(&self) -> f64 {
        self.edges.iter().map(|&i| self.magnitude[i]).sum()
    }
}

/// Gradient `g` reflected across a line with unit normal `n`.
fn mirror_direction(g: Point, n: Point) -> Point {
    g - n * (2.0 * g.dot(n))
}

struct Verification {
    score: f64,
    extent: Option<(f64, f64)>,
}

impl VotingDetector {
    pub fn new(config: DetectorConfig) -> Self {
        VotingDetector { config }
    }

    pub fn accumulate(&self, img: &ImageRaster) -> Option<HoughAccumulator> {
        let edges = EdgeMap::build(img, self.config.edge_percentile)?;
        Some(self.vote(&edges, img.size().diagonal()))
    }

    fn sample_pairs(&self, n: usize) -> Vec<(u32, u32)> {
        let all = n * (n - 1) / 2;
        if all <= self.config.max_pairs {
            let mut v = Vec::with_capacity(all);
            for i in 0..n {
                for j in i + 1..n {
                    v.push((i as u32, j as u32));
                }
            }
            return v;
        }
        let mut rng = ChaCha8Rng::seed_from_u64(self.config.seed);
        (0..self.config.max_pairs)
            .map(|_| {
                let i = rng.random_range(0..n);
                let mut j = rng.random_range(0..n - 1);
                if j >= i {
                    j += 1;
                }
                (i as u32, j as u32)
            })
            .collect()
    }

    fn vote(&self, edges: &EdgeMap, diagonal: f64) -> HoughAccumulator {
        let cfg = &self.config;
        let pairs = self.sample_pairs(edges.edges.len());
        let empty = HoughAccumulator::new(diagonal, cfg.rho_resolution, cfg.theta_bins);
        // fixed chunking and in-order merge keep the sum deterministic
        let partials: Vec<HoughAccumulator> = pairs
            .par_chunks(16_384)
            .map(|chunk| {
                let mut acc = empty.clone();
                for &(i, j) in chunk {
                    let (a, b) = (edges.edges[i as usize], edges.edges[j as usize]);
                    let (p, q) = (edges.position(a), edges.position(b));
                    let d = q - p;
                    let len = d.norm();
                    if len < cfg.min_pair_distance {
                        continue;
                    }
                    let n = d * (1.0 / len);
                    let consistency =
                        mirror_direction(edges.direction[a], n).dot(edges.direction[b]);
                    if consistency < cfg.vote_consistency_gate {
                        continue;
                    }
                    let mid = (p + q) * 0.5;
                    let theta = n.y.atan2(n.x);
                    let rho = n.dot(mid);
                    acc.vote(
                        theta,
                        rho,
                        edges.magnitude[a] * edges.magnitude[b] * consistency,
                    );
                }
                acc
            })
            .collect();
        let mut acc = empty;
        for p in &partials {
            acc.merge(p);
        }
        acc.smooth(cfg.smoothing_sigma);
        acc
    }

    /// Fraction of plausible edge mass that finds a mirrored partner across the line.
    fn verify(&self, edges: &EdgeMap, normal: Point, rho: f64, total_mass: f64) -> Verification {
        let mut plausible = 0.0;
        let mut matched = 0.0;
        let mut projections = Vec::new();
        let tangent = Point::new(-normal.y, normal.x);
        for &i in &edges.edges {
            let p = edges.position(i);
            let off = normal.dot(p) - rho;
            let r = p - normal * (2.0 * off);
            if r.x < 0.0 || r.y < 0.0 || r.x >= edges.width as f64 || r.y >= edges.height as f64 {
                continue;
            }
            let m = edges.magnitude[i];
            plausible += m;
            let j = r.y as usize * edges.width + r.x as usize;
            if edges.magnitude[j] > 0.0 {
                let c = mirror_direction(edges.direction[i], normal).dot(edges.direction[j]);
                if c > 0.0 {
                    matched += m * c;
                    if c > 0.5 {
                        projections.push(tangent.dot(p));
                    }
                }
            }
        }
        let denom = plausible.max(self.config.min_support_fraction * total_mass);
        let score = if denom > 0.0 {
            (matched / denom).clamp(0.0, 1.0)
        } else {
            0.0
        };
        let extent = if projections.len() >= 4 {
            projections.sort_by(f64::total_cmp);
            let lo = projections[(projections.len() as f64 * 0.05) as usize];
            let hi = projections
                [((projections.len() as f64 * 0.95) as usize).min(projections.len() - 1)];
            (hi > lo).then_some((lo, hi))
        } else {
            None
        };
        Verification { score, extent }
    }

    fn axis_segment(
        &self,
        bounds: Rect,
        normal: Point,
        rho: f64,
        extent: Option<(f64, f64)>,
    ) -> Option<Segment> {
        let tangent = Point::new(-normal.y, normal.x);
        let foot = normal * rho;
        let chord = bounds.clip_line(foot, tangent)?;
        let Some((lo, hi)) = extent else {
            return Some(chord);
        };
        let (c0, c1) = {
            let a = tangent.dot(chord.p1());
            let b = tangent.dot(chord.p2());
            if a <= b {
                (a, b)
            } else {
                (b, a)
            }
        };
        let (lo, hi) = (lo.max(c0), hi.min(c1));
        if hi - lo < 1.0 {
            return Some(chord);
        }
        let at = |s: f64| bounds.clamp(foot + tangent * s);
        Segment::new(at(lo), at(hi)).ok()
    }
}

impl AxisDetector for VotingDetector {
    fn detect(&self, img: &ImageRaster) -> Vec<SymmetryAxis> {
        let cfg = &self.config;
        let Some(edges) = EdgeMap::build(img, cfg.edge_percentile) else {
            return Vec::new();
        };
        let acc = self.vote(&edges, img.size().diagonal());

        let want = cfg.top_k.max(1) * cfg.candidates_per_axis.max(1);
        let nms_angle = cfg.nms_angle_deg.to_radians();
        let mut peaks: Vec<(f64, f64, f64)> = Vec::new();
        for (t, r, v) in acc.local_maxima() {
            if peaks.len() >= want {
                break;
            }
            let (theta, rho) = (acc.theta(t), acc.rho(r));
            let close = peaks.iter().any(|&(t2, r2, _)| {
                let (da, dr) = normal_form_distance(theta, rho, t2, r2);
                da < nms_angle && dr < cfg.nms_rho
            });
            if !close {
                peaks.push((theta, rho, v));
            }
        }

        let bounds = img.size().rect();
        let total = edges.total_mass();
        let mut scored: Vec<(SymmetryAxis, f64)> = peaks
            .iter()
            .filter_map(|&(theta, rho, votes)| {
                let normal = Point::new(theta.cos(), theta.sin());
                let v = self.verify(&edges, normal, rho, total);
                let segment = self.axis_segment(bounds, normal, rho, v.extent)?;
                let axis = SymmetryAxis::new(segment, v.score, 0, AxisSource::Builtin).ok()?;
                Some((axis, votes))
            })
            .collect();
        scored.sort_by(|a, b| b.0.score.total_cmp(&a.0.score).then(b.1.total_cmp(&a.1)));
        scored.truncate(cfg.top_k);
        scored.into_iter().map(|(a, _)| a).collect()
    }
}

/// External axis file when given, otherwise the supplied detector on `img`.
pub fn detect_or_load(
    img: Option<&ImageRaster>,
    axis_file: Option<&Path>,
    detector: &dyn AxisDetector,
) -> Result<Vec<SymmetryAxis>> {
    match (axis_file, img) {
        (Some(path), img) => read_axes_file(path, img.map(|i| i.size())),
        (None, Some(img)) => Ok(detector.detect(img)),
        (None, None) => Err(Error::Config(
            "neither an image nor an axis file was supplied".into(),
        )),
    }
}
