//! Data model and text formats exchanged between pipeline stages and with
//! external reflection-axis detectors.
//!
//! Axis file: UTF-8, one axis per line, `x1,y1,x2,y2,score[,depth]`. Lines
//! starting with `#` and blank lines are ignored.
//!
//! Ground-truth file: segment records `x1,y1,x2,y2` (an optional trailing
//! score and depth are accepted and ignored), rotation records
//! `R,cx,cy[,radius]`, and an optional image-size record `S,width,height`.
//!
//! Rotation file: `cx,cy,radius,confidence,provenance` with provenance one of
//! `rule` or `model`.

use std::fmt;
use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;
use std::str::FromStr;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::{Point, Rect, Segment};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum AxisSource {
    Builtin,
    External,
}

/// A scored reflection-axis hypothesis in image coordinates.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SymmetryAxis {
    pub segment: Segment,
    pub score: f64,
    /// Recursion level that produced the axis; 0 is the whole image.
    pub depth: u32,
    pub source: AxisSource,
}

impl SymmetryAxis {
    pub fn new(segment: Segment, score: f64, depth: u32, source: AxisSource) -> Result<Self> {
        check_unit("score", score)?;
        Ok(SymmetryAxis {
            segment,
            score,
            depth,
            source,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Provenance {
    Rule,
    Model,
}

impl fmt::Display for Provenance {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            Provenance::Rule => "rule",
            Provenance::Model => "model",
        })
    }
}

impl FromStr for Provenance {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "rule" => Ok(Provenance::Rule),
            "model" => Ok(Provenance::Model),
            other => Err(Error::Validation(format!("unknown provenance {other:?}"))),
        }
    }
}

/// A hypothesised rotational symmetry, drawn as a circle.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RotationCandidate {
    pub center: Point,
    pub radius: f64,
    pub confidence: f64,
    pub provenance: Provenance,
}

impl RotationCandidate {
    pub fn new(
        center: Point,
        radius: f64,
        confidence: f64,
        provenance: Provenance,
    ) -> Result<Self> {
        if !center.is_finite() {
            return Err(Error::Validation("non-finite rotation center".into()));
        }
        if !(radius > 0.0 && radius.is_finite()) {
            return Err(Error::Validation(format!(
                "radius must be > 0, got {radius}"
            )));
        }
        check_unit("confidence", confidence)?;
        Ok(RotationCandidate {
            center,
            radius,
            confidence,
            provenance,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct GtRotation {
    pub center: Point,
    pub radius: Option<f64>,
}

#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct GroundTruth {
    pub axes: Vec<Segment>,
    pub rotations: Vec<GtRotation>,
    /// Image dimensions, when the file carries them.
    pub size: Option<(u32, u32)>,
}

/// Image extent used to validate coordinates and to scale tolerances.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct ImageSize {
    pub width: u32,
    pub height: u32,
}

impl ImageSize {
    pub fn new(width: u32, height: u32) -> Self {
        ImageSize { width, height }
    }

    pub fn rect(&self) -> Rect {
        Rect::from_size(self.width as f64, self.height as f64)
    }

    pub fn diagonal(&self) -> f64 {
        (self.width as f64).hypot(self.height as f64)
    }

    pub fn contains(&self, p: Point) -> bool {
        self.rect().contains(p)
    }
}

/// Tunables of the post-processing stages.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct PipelineConfig {
    /// Minimum score the best axis of a frame must reach.
    pub sym_threshold: f64,
    /// Fraction of the best score other axes must reach to be kept.
    pub norm_threshold: f64,
    /// Minimum ratio of the lower to the higher score for the rule-based rotation test.
    pub circle_threshold: f64,
    pub max_recursion_depth: u32,
    /// Radians.
    pub dedup_angle_eps: f64,
    /// Fraction of the image diagonal.
    pub dedup_center_eps: f64,
    pub model_decision_threshold: f64,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        PipelineConfig {
            sym_threshold: 0.20,
            norm_threshold: 0.70,
            circle_threshold: 0.75,
            max_recursion_depth: 3,
            dedup_angle_eps: 0.0873,
            dedup_center_eps: 0.05,
            model_decision_threshold: 0.5,
        }
    }
}

impl PipelineConfig {
    pub fn validate(&self) -> Result<()> {
        check_unit("sym_threshold", self.sym_threshold)?;
        check_unit("norm_threshold", self.norm_threshold)?;
        check_unit("circle_threshold", self.circle_threshold)?;
        check_unit("dedup_center_eps", self.dedup_center_eps)?;
        check_unit("model_decision_threshold", self.model_decision_threshold)?;
        if !(self.dedup_angle_eps >= 0.0 && self.dedup_angle_eps.is_finite()) {
            return Err(Error::Validation(format!(
                "dedup_angle_eps must be a non-negative angle, got {}",
                self.dedup_angle_eps
            )));
        }
        Ok(())
    }
}

fn check_unit(name: &str, v: f64) -> Result<()> {
    if (0.0..=1.0).contains(&v) {
        Ok(())
    } else {
        Err(Error::Validation(format!(
            "{name} must lie in [0, 1], got {v}"
        )))
    }
}

/// Per-image structured document carrying everything the flat formats omit.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct ImageDocument {
    pub image: String,
    pub width: u32,
    pub height: u32,
    pub axes: Vec<SymmetryAxis>,
    pub rotations: Vec<RotationCandidate>,
}

fn records<R: BufRead>(reader: R) -> impl Iterator<Item = Result<(usize, String)>> {
    reader
        .lines()
        .enumerate()
        .filter_map(|(i, line)| match line {
            Err(e) => Some(Err(Error::Stream(e))),
            Ok(l) => {
                let t = l.trim();
                if t.is_empty() || t.starts_with('#') {
                    None
                } else {
                    Some(Ok((i + 1, t.to_string())))
                }
            }
        })
}

fn parse_f64(field: &str, line: usize) -> Result<f64> {
    let v: f64 = field.trim().parse().map_err(|_| Error::Parse {
        line,
        message: format!("expected a number, found {:?}", field.trim()),
    })?;
    if !v.is_finite() {
        return Err(Error::Parse {
            line,
            message: format!("non-finite value {v}"),
        });
    }
    Ok(v)
}

fn parse_segment(fields: &[&str], line: usize) -> Result<Segment> {
    let c: Vec<f64> = fields[..4]
        .iter()
        .map(|f| parse_f64(f, line))
        .collect::<Result<_>>()?;
    Segment::from_coords(c[0], c[1], c[2], c[3])
        .map_err(|e| Error::Validation(format!("line {line}: {e}")))
}

fn check_bounds(seg: &Segment, bounds: Option<ImageSize>, line: usize) -> Result<()> {
    if let Some(b) = bounds {
        for p in seg.endpoints() {
            if !b.contains(p) {
                return Err(Error::Validation(format!(
                    "line {line}: endpoint ({}, {}) outside {}x{} image",
                    p.x, p.y, b.width, b.height
                )));
            }
        }
    }
    Ok(())
}

/// Parse an axis stream. Axes read this way are tagged as external.
pub fn read_axes<R: BufRead>(reader: R, bounds: Option<ImageSize>) -> Result<Vec<SymmetryAxis>> {
    let mut out = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let fields: Vec<&str> = text.split(',').collect();
        if !(5..=6).contains(&fields.len()) {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 or 6 fields, found {}", fields.len()),
            });
        }
        let segment = parse_segment(&fields, line)?;
        check_bounds(&segment, bounds, line)?;
        let score = parse_f64(fields[4], line)?;
        let depth = match fields.get(5) {
            Some(f) => f.trim().parse::<u32>().map_err(|_| Error::Parse {
                line,
                message: format!(
                    "expected a non-negative integer depth, found {:?}",
                    f.trim()
                ),
            })?,
            None => 0,
        };
        let axis = SymmetryAxis::new(segment, score, depth, AxisSource::External)
            .map_err(|e| Error::Validation(format!("line {line}: {e}")))?;
        out.push(axis);
    }
    Ok(out)
}

pub fn write_axes<W: Write>(mut w: W, axes: &[SymmetryAxis]) -> Result<()> {
    for a in axes {
        let [x1, y1, x2, y2] = a.segment.coords();
        writeln!(w, "{x1},{y1},{x2},{y2},{},{}", a.score, a.depth)?;
    }
    Ok(())
}

pub fn read_rotations<R: BufRead>(reader: R) -> Result<Vec<RotationCandidate>> {
    let mut out = Vec::new();
    for rec in records(reader) {
        let (line, text) = rec?;
        let fields: Vec<&str> = text.split(',').collect();
        if fields.len() != 5 {
            return Err(Error::Parse {
                line,
                message: format!("expected 5 fields, found {}", fields.len()),
            });
        }
        let cx = parse_f64(fields[0], line)?;
        let cy = parse_f64(fields[1], line)?;
        let radius = parse_f64(fields[2], line)?;
        let confidence = parse_f64(fields[3], line)?;
        let provenance: Provenance = fields[4].trim().parse().map_err(|e: Error| Error::Parse {
            line,
            message: e.to_string(),
        })?;
        out.push(
            RotationCandidate::new(Point::new(cx, cy), radius, confidence, provenance)
                .map_err(|e| Error::Validation(format!("line {line}: {e}")))?,
        );
    }
    Ok(out)
}

pub fn write_rotations<W: Write>(mut w: W, rotations: &[RotationCandidate]) -> Result<()> {
    for r in rotations {
        writeln!(
            w,
            "{},{},{},{},{}",
            r.center.x, r.center.y, r.radius, r.confidence, r.provenance
        )?;
    }
    Ok(())
}

pub fn read_ground_truth<R: BufRead>(reader: R) -> Result<GroundTruth> {
    let mut gt = GroundTruth::default();
    for rec in records(reader) {
        let (line, text) = rec?;
        let fields: Vec<&str> = text.split(',').map(str::trim).collect();
        match fields[0] {
            "R" | "r" => {
                if !(3..=4).contains(&fields.len()) {
                    return Err(Error::Parse {
                        line,
                        message: "rotation record must be R,cx,cy[,radius]".into(),
                    });
                }
                let center = Point::new(parse_f64(fields[1], line)?, parse_f64(fields[2], line)?);
                let radius = match fields.get(3) {
                    Some(f) => {
                        let r = parse_f64(f, line)?;
                        if r <= 0.0 {
                            return Err(Error::Validation(format!(
                                "line {line}: radius must be > 0"
                            )));
                        }
                        Some(r)
                    }
                    None => None,
                };
                gt.rotations.push(GtRotation { center, radius });
            }
            "S" | "s" => {
                if fields.len() != 3 {
                    return Err(Error::Parse {
                        line,
                        message: "size record must be S,width,height".into(),
                    });
                }
                let dim = |f: &str| {
                    f.parse::<u32>()
                        .ok()
                        .filter(|v| *v > 0)
                        .ok_or_else(|| Error::Parse {
                            line,
                            message: format!("invalid image dimension {f:?}"),
                        })
                };
                gt.size = Some((dim(fields[1])?, dim(fields[2])?));
            }
            _ => {
                if !(4..=6).contains(&fields.len()) {
                    return Err(Error::Parse {
                        line,
                        message: format!("expected 4 to 6 fields, found {}", fields.len()),
                    });
                }
                gt.axes.push(parse_segment(&fields, line)?);
            }
        }
    }
    if let Some((w, h)) = gt.size {
        let b = ImageSize::new(w, h);
        for (i, s) in gt.axes.iter().enumerate() {
            check_bounds(s, Some(b), i + 1)?;
        }
        for r in &gt.rotations {
            if !b.contains(r.center) {
                return Err(Error::Validation(format!(
                    "rotation center ({}, {}) outside image",
                    r.center.x, r.center.y
                )));
            }
        }
    }
    Ok(gt)
}

pub fn write_ground_truth<W: Write>(mut w: W, gt: &GroundTruth) -> Result<()> {
    if let Some((width, height)) = gt.size {
        writeln!(w, "S,{width},{height}")?;
    }
    for s in &gt.axes {
        let [x1, y1, x2, y2] = s.coords();
        writeln!(w, "{x1},{y1},{x2},{y2}")?;
    }
    for r in &gt.rotations {
        match r.radius {
            Some(rad) => writeln!(w, "R,{},{},{rad}", r.center.x, r.center.y)?,
            None => writeln!(w, "R,{},{}", r.center.x, r.center.y)?,
        }
    }
    Ok(())
}

fn open(path: &Path) -> Result<BufReader<File>> {
    File::open(path)
        .map(BufReader::new)
        .map_err(|e| Error::io(path, e))
}

fn create(path: &Path) -> Result<BufWriter<File>> {
    File::create(path)
        .map(BufWriter::new)
        .map_err(|e| Error::io(path, e))
}

pub fn read_axes_file(path: &Path, bounds: Option<ImageSize>) -> Result<Vec<SymmetryAxis>> {
    read_axes(open(path)?, bounds).map_err(|e| e.with_path(path))
}

pub fn write_axes_file(path: &Path, axes: &[SymmetryAxis]) -> Result<()> {
    let mut w = create(path)?;
    write_axes(&mut w, axes)
        .and_then(|_| w.flush().map_err(Error::Stream))
        .map_err(|e| e.with_path(path))
}

pub fn read_rotations_file(path: &Path) -> Result<Vec<RotationCandidate>> {
    read_rotations(open(path)?).map_err(|e| e.with_path(path))
}

pub fn write_rotations_file(path: &Path, rotations: &[RotationCandidate]) -> Result<()> {
    let mut w = create(path)?;
    write_rotations(&mut w, rotations)
        .and_then(|_| w.flush().map_err(Error::Stream))
        .map_err(|e| e.with_path(path))
}

pub fn read_ground_truth_file(path: &Path) -> Result<GroundTruth> {
    read_ground_truth(open(path)?).map_err(|e| e.with_path(path))
}

pub fn write_ground_truth_file(path: &Path, gt: &GroundTruth) -> Result<()> {
    let mut w = create(path)?;
    write_ground_truth(&mut w, gt)
        .and_then(|_| w.flush().map_err(Error::Stream))
        .map_err(|e| e.with_path(path))
}

pub fn write_document(path: &Path, doc: &ImageDocument) -> Result<()> {
    let text = serde_json::to_string_pretty(doc).expect("document serializes");
    std::fs::write(path, text).map_err(|e| Error::io(path, e))
}

pub fn read_document(path: &Path) -> Result<ImageDocument> {
    let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
    serde_json::from_str(&text).map_err(|e| Error::Validation(format!("{}: {e}", path.display())))
}
