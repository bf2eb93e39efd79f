//! Synthetic patterns with known reflection and rotation symmetries, and the
//! labeled line-pair datasets built from their ground truth.

use std::f64::consts::PI;
use std::fmt;
use std::str::FromStr;

use rand::seq::IndexedRandom;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rand_distr::{Distribution, Normal};
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::detector::ImageRaster;
use crate::error::{Error, Result};
use crate::forest::{augment_rotations, LabeledPair};
use crate::geometry::{rotate_about, Point, Segment};
use crate::interchange::{AxisSource, GroundTruth, GtRotation, ImageSize, SymmetryAxis};
use crate::rotation::featurize;

pub const MIN_SIZE: u32 = 64;
/// Disc radius of dihedral patterns as a fraction of the image side.
pub const DISC_FRACTION: f64 = 0.45;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase", tag = "kind", content = "n")]
pub enum PatternKind {
    Mirror,
    Dihedral(u32),
    Grid,
}

impl fmt::Display for PatternKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            PatternKind::Mirror => f.write_str("mirror"),
            PatternKind::Dihedral(n) => write!(f, "dihedral-{n}"),
            PatternKind::Grid => f.write_str("grid"),
        }
    }
}

impl FromStr for PatternKind {
    type Err = Error;

    /// `mirror`, `grid` or `dihedral-N`.
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "mirror" => Ok(PatternKind::Mirror),
            "grid" => Ok(PatternKind::Grid),
            _ => s
                .strip_prefix("dihedral-")
                .and_then(|n| n.parse().ok())
                .map(PatternKind::Dihedral)
                .ok_or_else(|| Error::Validation(format!("unknown pattern kind {s:?}"))),
        }
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct PatternSpec {
    pub kind: PatternKind,
    pub size: u32,
    pub motif_seed: u64,
    pub noise_sigma: f64,
}

impl PatternSpec {
    pub fn new(kind: PatternKind, size: u32, motif_seed: u64, noise_sigma: f64) -> Self {
        PatternSpec {
            kind,
            size,
            motif_seed,
            noise_sigma,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if let PatternKind::Dihedral(n) = self.kind {
            if n < 2 {
                return Err(Error::Validation(format!(
                    "dihedral order must be at least 2, got {n}"
                )));
            }
        }
        if self.size < MIN_SIZE {
            return Err(Error::Validation(format!(
                "pattern size must be at least {MIN_SIZE}, got {}",
                self.size
            )));
        }
        if !(self.noise_sigma >= 0.0 && self.noise_sigma.is_finite()) {
            return Err(Error::Validation(format!(
                "noise_sigma must be >= 0, got {}",
                self.noise_sigma
            )));
        }
        Ok(())
    }

    pub fn image_size(&self) -> ImageSize {
        ImageSize::new(self.size, self.size)
    }

    fn center(&self) -> Point {
        let h = self.size as f64 / 2.0;
        Point::new(h, h)
    }
}

#[derive(Debug, Clone, Copy)]
struct Shape {
    center: Point,
    half: Point,
    cos: f64,
    sin: f64,
    value: f32,
    disc: bool,
}

impl Shape {
    fn covers(&self, p: Point) -> bool {
        let d = p - self.center;
        let u = (d.x * self.cos + d.y * self.sin) / self.half.x;
        let v = (-d.x * self.sin + d.y * self.cos) / self.half.y;
        if self.disc {
            u * u + v * v <= 1.0
        } else {
            u.abs() <= 1.0 && v.abs() <= 1.0
        }
    }
}

/// Random layered ellipses and rectangles over a flat background.
struct Motif {
    background: f32,
    shapes: Vec<Shape>,
}

impl Motif {
    fn random(
        rng: &mut ChaCha8Rng,
        count: usize,
        mut place: impl FnMut(&mut ChaCha8Rng) -> Point,
        scale: f64,
    ) -> Motif {
        let background = rng.random_range(0.0..1.0f32);
        let shapes = (0..count)
            .map(|_| {
                let angle: f64 = rng.random_range(0.0..PI);
                Shape {
                    center: place(rng),
                    half: Point::new(
                        rng.random_range(0.05..0.3) * scale,
                        rng.random_range(0.05..0.3) * scale,
                    ),
                    cos: angle.cos(),
                    sin: angle.sin(),
                    value: rng.random_range(0.0..1.0f32),
                    disc: rng.random_bool(0.5),
                }
            })
            .collect();
        Motif { background, shapes }
    }

    fn value(&self, p: Point) -> f32 {
        self.shapes
            .iter()
            .rev()
            .find(|s| s.covers(p))
            .map_or(self.background, |s| s.value)
    }
}

fn pixel_center(x: u32, y: u32) -> Point {
    Point::new(x as f64 + 0.5, y as f64 + 0.5)
}

/// Mirror axes of the mirror kind are restricted to orientations whose
/// reflection maps pixel centers onto pixel centers.
const MIRROR_ORIENTATIONS_DEG: [u32; 4] = [0, 45, 90, 135];

fn mirror_pixel(deg: u32, size: u32, x: u32, y: u32) -> (u32, u32) {
    let m = size - 1;
    match deg {
        0 => (x, m - y),
        45 => (y, x),
        90 => (m - x, y),
        _ => (m - y, m - x),
    }
}

fn chord_through(size: ImageSize, center: Point, angle: f64) -> Result<Segment> {
    size.rect()
        .clip_line(center, Point::new(angle.cos(), angle.sin()))
        .ok_or_else(|| Error::Geometry("axis misses the image".into()))
}

/// Tile count of the grid kind: one of 2, 3, 4 that divides the size.
fn grid_tiles(size: u32, rng: &mut ChaCha8Rng) -> u32 {
    let options: Vec<u32> = [2, 3, 4]
        .into_iter()
        .filter(|m| size.is_multiple_of(*m))
        .collect();
    options.choose(rng).copied().unwrap_or(1)
}

struct Layout {
    mirror_deg: u32,
    dihedral_phase: f64,
    tiles: u32,
}

fn layout(spec: &PatternSpec, rng: &mut ChaCha8Rng) -> Layout {
    Layout {
        mirror_deg: MIRROR_ORIENTATIONS_DEG[rng.random_range(0..MIRROR_ORIENTATIONS_DEG.len())],
        dihedral_phase: rng.random_range(0.0..PI),
        tiles: grid_tiles(spec.size, rng),
    }
}

fn truth_for(spec: &PatternSpec, lay: &Layout) -> Result<GroundTruth> {
    let size = spec.image_size();
    let c = spec.center();
    let mut gt = GroundTruth {
        size: Some((spec.size, spec.size)),
        ..Default::default()
    };
    match spec.kind {
        PatternKind::Mirror => {
            gt.axes.push(chord_through(
                size,
                c,
                (lay.mirror_deg as f64).to_radians(),
            )?);
        }
        PatternKind::Dihedral(n) => {
            let r = DISC_FRACTION * spec.size as f64;
            for k in 0..n {
                let a = lay.dihedral_phase + k as f64 * PI / n as f64;
                let u = Point::new(a.cos(), a.sin()) * r;
                gt.axes.push(Segment::new(c - u, c + u)?);
            }
            gt.rotations.push(GtRotation {
                center: c,
                radius: Some(r),
            });
        }
        PatternKind::Grid => {
            let tile = (spec.size / lay.tiles) as f64;
            for k in 1..2 * lay.tiles {
                let x = k as f64 * tile / 2.0;
                gt.axes
                    .push(Segment::from_coords(x, 0.0, x, spec.size as f64)?);
            }
        }
    }
    Ok(gt)
}

/// Ground truth of `spec` without rendering the image.
pub fn ground_truth(spec: &PatternSpec) -> Result<GroundTruth> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.motif_seed);
    let lay = layout(spec, &mut rng);
    truth_for(spec, &lay)
}

/// Renders the pattern and returns it with its ground truth.
pub fn generate(spec: &PatternSpec) -> Result<(ImageRaster, GroundTruth)> {
    spec.validate()?;
    let mut rng = ChaCha8Rng::seed_from_u64(spec.motif_seed);
    let lay = layout(spec, &mut rng);
    let gt = truth_for(spec, &lay)?;
    let s = spec.size;
    let sf = s as f64;
    let mut img = match spec.kind {
        PatternKind::Mirror => {
            let motif = Motif::random(
                &mut rng,
                14,
                |r| Point::new(r.random_range(0.0..sf), r.random_range(0.0..sf)),
                sf,
            );
            ImageRaster::from_fn(s, s, |x, y| {
                let (mx, my) = mirror_pixel(lay.mirror_deg, s, x, y);
                // both members of a mirrored pair read the same source pixel
                let (sx, sy) = if (y, x) <= (my, mx) { (x, y) } else { (mx, my) };
                motif.value(pixel_center(sx, sy))
            })?
        }
        PatternKind::Dihedral(n) => {
            let c = spec.center();
            let r = DISC_FRACTION * sf;
            let wedge = PI / n as f64;
            let motif = Motif::random(
                &mut rng,
                10,
                |g| {
                    let rr = g.random_range(0.15..1.0) * r;
                    let a = g.random_range(0.0..wedge);
                    Point::new(rr * a.cos(), rr * a.sin())
                },
                r,
            );
            let outside = if motif.background < 0.5 { 0.85 } else { 0.15 };
            ImageRaster::from_fn(s, s, |x, y| {
                let d = pixel_center(x, y) - c;
                let rho = d.norm();
                if rho > r {
                    return outside;
                }
                let a = (d.y.atan2(d.x) - lay.dihedral_phase).rem_euclid(2.0 * wedge);
                let a = if a > wedge { 2.0 * wedge - a } else { a };
                motif.value(Point::new(rho * a.cos(), rho * a.sin()))
            })?
        }
        PatternKind::Grid => {
            let tile = s / lay.tiles;
            let tf = tile as f64;
            let motif = Motif::random(
                &mut rng,
                6,
                |g| Point::new(g.random_range(0.0..tf), g.random_range(0.0..tf)),
                tf,
            );
            ImageRaster::from_fn(s, s, |x, y| {
                let (lx, ly) = (x % tile, y % tile);
                let lx = lx.min(tile - 1 - lx);
                motif.value(pixel_center(lx, ly))
            })?
        }
    };
    if spec.noise_sigma > 0.0 {
        let normal =
            Normal::new(0.0, spec.noise_sigma).map_err(|e| Error::Validation(e.to_string()))?;
        let mut noise_rng = ChaCha8Rng::seed_from_u64(spec.motif_seed ^ 0x006e_6f69_7365);
        img = ImageRaster::from_fn(s, s, |x, y| {
            img.get(x, y) + normal.sample(&mut noise_rng) as f32
        })?;
    }
    Ok((img, gt))
}

/// Range of the length factor applied to each half of a training axis.
const EXTENT_RANGE: (f64, f64) = (0.7, 1.1);
/// Largest sideways offset of a positive axis, as a fraction of the diagonal.
const POSITIVE_JITTER: f64 = 0.01;

/// Rescales each half of `s` independently, as detected axes rarely span
/// exactly the symmetric region.
fn rescaled(s: Segment, rng: &mut ChaCha8Rng) -> Segment {
    let m = s.midpoint();
    let u = s.p2() - m;
    Segment::new(
        m - u * rng.random_range(EXTENT_RANGE.0..=EXTENT_RANGE.1),
        m + u * rng.random_range(EXTENT_RANGE.0..=EXTENT_RANGE.1),
    )
    .expect("rescaled halves keep positive length")
}

fn nudged(s: Segment, max_shift: f64, rng: &mut ChaCha8Rng) -> Segment {
    let d = s.direction();
    let normal = Point::new(-d.y, d.x) * (1.0 / d.norm());
    let k = rng.random_range(-max_shift..=max_shift);
    s.translated(normal.x * k, normal.y * k)
}

fn scored(segment: Segment, rng: &mut ChaCha8Rng) -> SymmetryAxis {
    let segment = rescaled(segment, rng);
    let segment = if rng.random_bool(0.5) {
        Segment::new(segment.p2(), segment.p1()).expect("reversed segment is valid")
    } else {
        segment
    };
    SymmetryAxis {
        segment,
        score: rng.random_range(0.6..=1.0),
        depth: 0,
        source: AxisSource::External,
    }
}

fn spin(axis: &SymmetryAxis, center: Point, theta: f64) -> SymmetryAxis {
    let [p, q] = axis.segment.endpoints();
    SymmetryAxis {
        segment: Segment::new(
            rotate_about(p, center, theta),
            rotate_about(q, center, theta),
        )
        .expect("rotation keeps endpoints distinct"),
        ..*axis
    }
}

fn negative(a: &SymmetryAxis, b: &SymmetryAxis, image: ImageSize) -> LabeledPair {
    LabeledPair {
        features: featurize(a, b, image),
        label: false,
    }
}

/// Which family a negative line pair comes from.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum NegativeFamily {
    Composite,
    Jittered,
    NearParallel,
}

/// Labeled line pairs from the ground truth of the dihedral patterns in
/// `specs`. Positives are every pair of axes of one pattern, each expanded
/// to its 720 rotated copies. Each half of every axis is rescaled by a
/// random factor in [0.7, 1.1] and positives are shifted sideways by at
/// most 1 % of the diagonal. Negatives, `negatives_ratio` times as many,
/// come in equal parts from axes of two patterns placed side by side, from
/// positives with one axis shifted 10–30 % of the diagonal along its normal,
/// and from near-parallel pairs.
pub fn build_pair_dataset(
    specs: &[PatternSpec],
    negatives_ratio: f64,
    seed: u64,
) -> Result<Vec<LabeledPair>> {
    if !(negatives_ratio > 0.0 && negatives_ratio.is_finite()) {
        return Err(Error::Validation(format!(
            "negatives_ratio must be positive, got {negatives_ratio}"
        )));
    }
    let dihedral: Vec<(PatternSpec, GroundTruth)> = specs
        .iter()
        .filter(|s| matches!(s.kind, PatternKind::Dihedral(_)))
        .map(|s| Ok((*s, ground_truth(s)?)))
        .collect::<Result<_>>()?;
    if dihedral.is_empty() {
        return Err(Error::Validation(
            "at least one dihedral pattern is needed for positives".into(),
        ));
    }

    let positives: Vec<Vec<LabeledPair>> = dihedral
        .par_iter()
        .enumerate()
        .map(|(i, (spec, gt))| {
            let mut rng = ChaCha8Rng::seed_from_u64(seed.wrapping_add(i as u64));
            let mut out = Vec::new();
            for (j, a) in gt.axes.iter().enumerate() {
                for b in &gt.axes[j + 1..] {
                    let jitter = POSITIVE_JITTER * spec.image_size().diagonal();
                    let a = scored(nudged(*a, jitter, &mut rng), &mut rng);
                    let b = scored(nudged(*b, jitter, &mut rng), &mut rng);
                    out.extend(augment_rotations(&a, &b, spec.image_size())?);
                }
            }
            Ok(out)
        })
        .collect::<Result<_>>()?;
    let mut data: Vec<LabeledPair> = positives.into_iter().flatten().collect();

    let wanted = (data.len() as f64 * negatives_ratio).round() as usize;
    let mut families = vec![NegativeFamily::Jittered, NegativeFamily::NearParallel];
    if dihedral.len() >= 2 {
        families.push(NegativeFamily::Composite);
    }
    // negatives start from a uniformly chosen positive base pair, so their
    // angle statistics follow the positives
    let base: Vec<(usize, usize, usize)> = dihedral
        .iter()
        .enumerate()
        .flat_map(|(p, (_, gt))| {
            let n = gt.axes.len();
            (0..n).flat_map(move |i| (i + 1..n).map(move |j| (p, i, j)))
        })
        .collect();
    let mut rng = ChaCha8Rng::seed_from_u64(seed ^ 0x6e65_6761_7469_7665);
    for k in 0..wanted {
        let family = families[k % families.len()];
        let (p, i, j) = base[rng.random_range(0..base.len())];
        let (spec, gt) = &dihedral[p];
        let size = spec.image_size();
        let diag = size.diagonal();
        let center = spec.center();
        let theta = rng.random_range(0.0..2.0 * PI);
        let pair = match family {
            NegativeFamily::Jittered => {
                let (a, b) = if rng.random_bool(0.5) {
                    (gt.axes[i], gt.axes[j])
                } else {
                    (gt.axes[j], gt.axes[i])
                };
                let d = b.direction();
                let normal = Point::new(-d.y, d.x) * (1.0 / d.norm());
                let shift = rng.random_range(0.10..0.30)
                    * diag
                    * if rng.random_bool(0.5) { 1.0 } else { -1.0 };
                let b = b.translated(normal.x * shift, normal.y * shift);
                let (a, b) = (scored(a, &mut rng), scored(b, &mut rng));
                negative(&spin(&a, center, theta), &spin(&b, center, theta), size)
            }
            NegativeFamily::NearParallel => {
                let a = gt.axes[if rng.random_bool(0.5) { i } else { j }];
                let pivot = Point::new(
                    rng.random_range(0.0..spec.size as f64),
                    rng.random_range(0.0..spec.size as f64),
                );
                let delta = rng.random_range(-10.0..10.0f64).to_radians();
                let b = a.rotated_about(pivot, delta)?;
                let shift = rng.random_range(-0.3..0.3) * diag;
                let d = a.direction();
                let normal = Point::new(-d.y, d.x) * (1.0 / d.norm());
                let b = b.translated(normal.x * shift, normal.y * shift);
                let (a, b) = (scored(a, &mut rng), scored(b, &mut rng));
                negative(&spin(&a, center, theta), &spin(&b, center, theta), size)
            }
            NegativeFamily::Composite => {
                let (q, i2, j2) = base[rng.random_range(0..base.len())];
                let (spec2, gt2) = &dihedral[q];
                let a = gt.axes[if rng.random_bool(0.5) { i } else { j }];
                let b = gt2.axes[if rng.random_bool(0.5) { i2 } else { j2 }]
                    .translated(spec.size as f64, 0.0);
                let canvas = ImageSize::new(spec.size + spec2.size, spec.size.max(spec2.size));
                let mid = Point::new(canvas.width as f64 / 2.0, canvas.height as f64 / 2.0);
                let (a, b) = (scored(a, &mut rng), scored(b, &mut rng));
                negative(&spin(&a, mid, theta), &spin(&b, mid, theta), canvas)
            }
        };
        data.push(pair);
    }
    Ok(data)
}

/// `count` dihedral specs cycling through the orders in `orders`, with
/// consecutive motif seeds starting at `seed`.
pub fn dihedral_specs(
    count: usize,
    orders: &[u32],
    size: u32,
    seed: u64,
    noise_sigma: f64,
) -> Vec<PatternSpec> {
    (0..count)
        .map(|i| {
            PatternSpec::new(
                PatternKind::Dihedral(orders[i % orders.len()]),
                size,
                seed.wrapping_add(i as u64),
                noise_sigma,
            )
        })
        .collect()
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::geometry::{angular_difference, line_intersection, orientation};

    #[test]
    fn kind_parsing() {
        assert_eq!(
            "dihedral-6".parse::<PatternKind>().unwrap(),
            PatternKind::Dihedral(6)
        );
        assert_eq!(
            "mirror".parse::<PatternKind>().unwrap(),
            PatternKind::Mirror
        );
        assert!("dihedral-x".parse::<PatternKind>().is_err());
        assert_eq!(PatternKind::Dihedral(4).to_string(), "dihedral-4");
    }

    #[test]
    fn invalid_specs_fail() {
        assert!(generate(&PatternSpec::new(PatternKind::Dihedral(1), 128, 0, 0.0)).is_err());
        assert!(generate(&PatternSpec::new(PatternKind::Mirror, 32, 0, 0.0)).is_err());
        assert!(generate(&PatternSpec::new(PatternKind::Mirror, 128, 0, -1.0)).is_err());
    }

    #[test]
    fn dihedral_four_ground_truth() {
        let (_, gt) = generate(&PatternSpec::new(PatternKind::Dihedral(4), 256, 3, 0.0)).unwrap();
        assert_eq!(gt.axes.len(), 4);
        assert_eq!(gt.rotations.len(), 1);
        assert_eq!(gt.rotations[0].center, Point::new(128.0, 128.0));
        let mut angles: Vec<f64> = gt.axes.iter().map(orientation).collect();
        angles.sort_by(f64::total_cmp);
        for w in angles.windows(2) {
            assert!((w[1] - w[0] - PI / 4.0).abs() < 1e-9);
        }
        for a in &gt.axes {
            assert!(a.line_distance(Point::new(128.0, 128.0)) < 1e-6);
        }
    }

    #[test]
    fn mirror_has_one_axis_no_rotation() {
        let (_, gt) = generate(&PatternSpec::new(PatternKind::Mirror, 128, 5, 0.0)).unwrap();
        assert_eq!((gt.axes.len(), gt.rotations.len()), (1, 0));
    }

    #[test]
    fn generation_is_deterministic() {
        for kind in [
            PatternKind::Mirror,
            PatternKind::Dihedral(3),
            PatternKind::Grid,
        ] {
            let spec = PatternSpec::new(kind, 96, 11, 0.05);
            assert_eq!(generate(&spec).unwrap(), generate(&spec).unwrap());
        }
    }

    #[test]
    fn mirror_images_reflect_exactly() {
        for seed in 0..12 {
            let spec = PatternSpec::new(PatternKind::Mirror, 100, seed, 0.0);
            let (img, gt) = generate(&spec).unwrap();
            let axis = gt.axes[0];
            for y in 0..100 {
                for x in 0..100 {
                    let m = axis.reflect(pixel_center(x, y));
                    let (mx, my) = ((m.x - 0.5).round() as u32, (m.y - 0.5).round() as u32);
                    assert!(
                        (m.x - 0.5 - mx as f64).abs() < 1e-9
                            && (m.y - 0.5 - my as f64).abs() < 1e-9
                    );
                    assert_eq!(img.get(x, y), img.get(mx, my));
                }
            }
        }
    }

    #[test]
    fn grid_axes_are_mirror_lines() {
        let spec = PatternSpec::new(PatternKind::Grid, 96, 2, 0.0);
        let (img, gt) = generate(&spec).unwrap();
        assert!(gt.rotations.is_empty() && gt.axes.len() >= 3);
        let x0 = gt.axes[0].p1().x;
        // reflect the strip next to the first axis
        for y in 0..96 {
            for d in 0..(x0 as u32).min(8) {
                let l = (x0 - 0.5 - d as f64) as u32;
                let r = (x0 + 0.5 + d as f64) as u32;
                assert_eq!(img.get(l, y), img.get(r, y));
            }
        }
    }

    #[test]
    fn pair_dataset_counts_and_balance() {
        let specs = [
            PatternSpec::new(PatternKind::Dihedral(4), 128, 1, 0.0),
            PatternSpec::new(PatternKind::Mirror, 128, 2, 0.0),
        ];
        let data = build_pair_dataset(&specs, 1.0, 9).unwrap();
        let pos = data.iter().filter(|d| d.label).count();
        assert_eq!(pos, 6 * 720);
        let neg = data.len() - pos;
        assert!((neg as f64 - pos as f64).abs() <= 0.1 * pos as f64);
        assert!(data
            .iter()
            .filter(|d| d.label)
            .all(|d| d.features.intersects()));
        assert_eq!(data, build_pair_dataset(&specs, 1.0, 9).unwrap());
    }

    #[test]
    fn dataset_needs_dihedral_spec() {
        let specs = [PatternSpec::new(PatternKind::Mirror, 128, 2, 0.0)];
        assert!(matches!(
            build_pair_dataset(&specs, 1.0, 0),
            Err(Error::Validation(_))
        ));
    }

    #[test]
    fn dihedral_axes_cross_at_center() {
        for n in [2, 3, 5, 6] {
            let gt = ground_truth(&PatternSpec::new(
                PatternKind::Dihedral(n),
                200,
                n as u64,
                0.0,
            ))
            .unwrap();
            for (i, a) in gt.axes.iter().enumerate() {
                for b in &gt.axes[i + 1..] {
                    let x = line_intersection(a, b).unwrap();
                    assert!(x.distance(Point::new(100.0, 100.0)) < 1e-6);
                    assert!(angular_difference(orientation(a), orientation(b)) > 0.1);
                }
            }
        }
    }
}
