//! Random forest of entropy-split decision trees with balanced class weights,
//! plus the rotation augmentation, metrics and model file format used to
//! train and assess the line-pair classifier.

use std::fs::File;
use std::io::{BufRead, BufReader, BufWriter, Write};
use std::path::Path;

use rand::seq::index;
use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::geometry::line_intersection;
use crate::interchange::{ImageSize, SymmetryAxis};
use crate::rotation::{featurize, LinePairFeatures, FEATURE_COUNT, FEATURE_NAMES};

pub const MODEL_FORMAT: &str = "symdetect-forest";
pub const MODEL_VERSION: u64 = 1;

/// Rotation copies generated per positive pair.
pub const AUGMENT_STEPS: usize = 720;
pub const AUGMENT_STEP_DEG: f64 = 0.5;

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct LabeledPair {
    pub features: LinePairFeatures,
    pub label: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Criterion {
    Entropy,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum ClassWeight {
    Balanced,
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
#[serde(default, deny_unknown_fields)]
pub struct ForestConfig {
    pub n_trees: usize,
    pub max_depth: usize,
    pub criterion: Criterion,
    pub class_weight: ClassWeight,
    pub features_per_split: usize,
    pub bootstrap: bool,
    pub seed: u64,
}

impl Default for ForestConfig {
    fn default() -> Self {
        ForestConfig {
            n_trees: 100,
            max_depth: 10,
            criterion: Criterion::Entropy,
            class_weight: ClassWeight::Balanced,
            // ceil(sqrt(12))
            features_per_split: 4,
            bootstrap: true,
            seed: 44,
        }
    }
}

impl ForestConfig {
    pub fn validate(&self) -> Result<()> {
        if self.n_trees == 0 {
            return Err(Error::Validation("n_trees must be at least 1".into()));
        }
        if self.max_depth == 0 {
            return Err(Error::Validation("max_depth must be at least 1".into()));
        }
        if self.features_per_split == 0 || self.features_per_split > FEATURE_COUNT {
            return Err(Error::Validation(format!(
                "features_per_split must lie in 1..={FEATURE_COUNT}"
            )));
        }
        Ok(())
    }
}

/// Shannon entropy in bits of a two-class mass distribution.
pub fn entropy(masses: [f64; 2]) -> Result<f64> {
    if masses.iter().any(|m| *m < 0.0 || !m.is_finite()) {
        return Err(Error::Contract(format!(
            "class masses must be finite and non-negative: {masses:?}"
        )));
    }
    let total = masses[0] + masses[1];
    if total <= 0.0 {
        return Err(Error::Contract("entropy of zero total mass".into()));
    }
    Ok(entropy_unchecked(masses[0], masses[1]))
}

fn entropy_unchecked(m0: f64, m1: f64) -> f64 {
    let total = m0 + m1;
    let mut h = 0.0;
    for m in [m0, m1] {
        if m > 0.0 {
            let p = m / total;
            h -= p * p.log2();
        }
    }
    h
}

/// `N / (2 · N_c)` per class, `[negative, positive]`.
pub fn balanced_weights(counts: [usize; 2]) -> Result<[f64; 2]> {
    if counts.contains(&0) {
        return Err(Error::Training(format!(
            "cannot balance classes with counts {counts:?}: both classes must be present"
        )));
    }
    let n = (counts[0] + counts[1]) as f64;
    Ok([n / (2.0 * counts[0] as f64), n / (2.0 * counts[1] as f64)])
}

/// Flat tree: node `i` is a leaf when `feature[i] < 0`. `mass` holds the
/// weighted class mass reaching every node, internal ones included.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct Tree {
    pub feature: Vec<i32>,
    pub threshold: Vec<f64>,
    pub left: Vec<i32>,
    pub right: Vec<i32>,
    pub mass: Vec<[f64; 2]>,
}

impl Tree {
    fn push(&mut self, mass: [f64; 2]) -> usize {
        self.feature.push(-1);
        self.threshold.push(0.0);
        self.left.push(-1);
        self.right.push(-1);
        self.mass.push(mass);
        self.feature.len() - 1
    }

    pub fn node_count(&self) -> usize {
        self.feature.len()
    }

    pub fn is_leaf(&self, i: usize) -> bool {
        self.feature[i] < 0
    }

    fn leaf_for(&self, x: &[f64]) -> usize {
        let mut i = 0;
        while !self.is_leaf(i) {
            i = if x[self.feature[i] as usize] <= self.threshold[i] {
                self.left[i] as usize
            } else {
                self.right[i] as usize
            };
        }
        i
    }

    pub fn predict_proba(&self, x: &[f64]) -> f64 {
        let [m0, m1] = self.mass[self.leaf_for(x)];
        m1 / (m0 + m1)
    }

    /// Length of the longest root-to-leaf path, in edges.
    pub fn depth(&self) -> usize {
        let mut best = 0;
        let mut stack = vec![(0usize, 0usize)];
        while let Some((i, d)) = stack.pop() {
            best = best.max(d);
            if !self.is_leaf(i) {
                stack.push((self.left[i] as usize, d + 1));
                stack.push((self.right[i] as usize, d + 1));
            }
        }
        best
    }

    /// Information gain of every internal node, in node order.
    pub fn split_gains(&self) -> Vec<f64> {
        (0..self.node_count())
            .filter(|&i| !self.is_leaf(i))
            .map(|i| {
                let (l, r) = (self.left[i] as usize, self.right[i] as usize);
                let [p0, p1] = self.mass[i];
                let total = p0 + p1;
                let wl = (self.mass[l][0] + self.mass[l][1]) / total;
                let wr = (self.mass[r][0] + self.mass[r][1]) / total;
                entropy_unchecked(p0, p1)
                    - wl * entropy_unchecked(self.mass[l][0], self.mass[l][1])
                    - wr * entropy_unchecked(self.mass[r][0], self.mass[r][1])
            })
            .collect()
    }

    fn validate(&self, feature_count: usize) -> Result<()> {
        let n = self.node_count();
        if n == 0
            || self.threshold.len() != n
            || self.left.len() != n
            || self.right.len() != n
            || self.mass.len() != n
        {
            return Err(Error::CorruptModel(
                "tree arrays have inconsistent lengths".into(),
            ));
        }
        for i in 0..n {
            let [m0, m1] = self.mass[i];
            if !(m0 >= 0.0 && m1 >= 0.0 && m0 + m1 > 0.0 && (m0 + m1).is_finite()) {
                return Err(Error::CorruptModel(format!(
                    "node {i} has invalid class mass"
                )));
            }
            if self.is_leaf(i) {
                continue;
            }
            if self.feature[i] as usize >= feature_count || !self.threshold[i].is_finite() {
                return Err(Error::CorruptModel(format!(
                    "node {i} has an invalid split"
                )));
            }
            // children always come after their parent, which rules out cycles
            for c in [self.left[i], self.right[i]] {
                if c as usize <= i || c as usize >= n || c < 0 {
                    return Err(Error::CorruptModel(format!(
                        "node {i} has an invalid child {c}"
                    )));
                }
            }
        }
        Ok(())
    }
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct DecisionForest {
    config: ForestConfig,
    feature_count: usize,
    trees: Vec<Tree>,
}

#[derive(Serialize, Deserialize)]
struct ModelFile {
    format: String,
    version: u64,
    feature_names: Vec<String>,
    #[serde(flatten)]
    forest: DecisionForest,
}

impl DecisionForest {
    pub fn config(&self) -> &ForestConfig {
        &self.config
    }

    pub fn feature_count(&self) -> usize {
        self.feature_count
    }

    pub fn trees(&self) -> &[Tree] {
        &self.trees
    }

    /// Mean of the per-tree positive-class leaf proportions.
    pub fn predict_proba(&self, x: &[f64]) -> Result<f64> {
        if x.len() != self.feature_count {
            return Err(Error::Contract(format!(
                "expected {} features, got {}",
                self.feature_count,
                x.len()
            )));
        }
        let sum: f64 = self.trees.iter().map(|t| t.predict_proba(x)).sum();
        Ok((sum / self.trees.len() as f64).clamp(0.0, 1.0))
    }

    pub fn to_json(&self) -> String {
        let file = ModelFile {
            format: MODEL_FORMAT.into(),
            version: MODEL_VERSION,
            feature_names: FEATURE_NAMES.iter().map(|s| s.to_string()).collect(),
            forest: self.clone(),
        };
        serde_json::to_string(&file).expect("forest serializes")
    }

    pub fn from_json(text: &str) -> Result<Self> {
        let value: serde_json::Value =
            serde_json::from_str(text).map_err(|e| Error::CorruptModel(e.to_string()))?;
        match value.get("format").and_then(|v| v.as_str()) {
            Some(MODEL_FORMAT) => {}
            other => {
                return Err(Error::CorruptModel(format!(
                    "unexpected format tag {other:?}"
                )))
            }
        }
        let version = value
            .get("version")
            .and_then(|v| v.as_u64())
            .ok_or_else(|| Error::CorruptModel("missing version tag".into()))?;
        if version != MODEL_VERSION {
            return Err(Error::ModelVersion {
                found: version,
                expected: MODEL_VERSION,
            });
        }
        let file: ModelFile =
            serde_json::from_value(value).map_err(|e| Error::CorruptModel(e.to_string()))?;
        let forest = file.forest;
        if forest.trees.is_empty() || forest.feature_count == 0 {
            return Err(Error::CorruptModel("model holds no trees".into()));
        }
        for t in &forest.trees {
            t.validate(forest.feature_count)?;
        }
        Ok(forest)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.to_json()).map_err(|e| Error::io(path, e))
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = std::fs::read_to_string(path).map_err(|e| Error::io(path, e))?;
        DecisionForest::from_json(&text)
    }
}

pub fn save_model(model: &DecisionForest, path: &Path) -> Result<()> {
    model.save(path)
}

pub fn load_model(path: &Path) -> Result<DecisionForest> {
    DecisionForest::load(path)
}

/// Column-major copy of the training features.
struct Columns {
    cols: Vec<Vec<f64>>,
    labels: Vec<u8>,
}

struct TreeBuilder<'a> {
    data: &'a Columns,
    weight: Vec<f64>,
    cfg: &'a ForestConfig,
    rng: ChaCha8Rng,
    tree: Tree,
    /// scratch buffer of (value, sample) for split search
    order: Vec<(f64, u32)>,
}

struct Split {
    feature: usize,
    threshold: f64,
    gain: f64,
}

impl TreeBuilder<'_> {
    fn mass_of(&self, idx: &[u32]) -> [f64; 2] {
        let mut m = [0.0; 2];
        for &i in idx {
            m[self.data.labels[i as usize] as usize] += self.weight[i as usize];
        }
        m
    }

    fn best_split(&mut self, idx: &[u32], mass: [f64; 2]) -> Option<Split> {
        let parent = entropy_unchecked(mass[0], mass[1]);
        let total = mass[0] + mass[1];
        let features = index::sample(&mut self.rng, FEATURE_COUNT, self.cfg.features_per_split);
        let mut best: Option<Split> = None;
        for f in features.iter() {
            let col = &self.data.cols[f];
            self.order.clear();
            self.order.extend(idx.iter().map(|&i| (col[i as usize], i)));
            self.order.sort_unstable_by(|a, b| a.0.total_cmp(&b.0));
            let mut left = [0.0; 2];
            for k in 0..self.order.len() - 1 {
                let (v, i) = self.order[k];
                left[self.data.labels[i as usize] as usize] += self.weight[i as usize];
                let next = self.order[k + 1].0;
                if next <= v {
                    continue;
                }
                let right = [mass[0] - left[0], mass[1] - left[1]];
                let wl = left[0] + left[1];
                let wr = (total - wl).max(0.0);
                let child = (wl * entropy_unchecked(left[0], left[1])
                    + wr * entropy_unchecked(right[0].max(0.0), right[1].max(0.0)))
                    / total;
                let gain = parent - child;
                if best.as_ref().is_none_or(|b| gain > b.gain) {
                    let mut threshold = 0.5 * (v + next);
                    if threshold >= next {
                        threshold = v;
                    }
                    best = Some(Split {
                        feature: f,
                        threshold,
                        gain,
                    });
                }
            }
        }
        best.filter(|b| b.gain > 1e-12)
    }

    fn build(mut self, root: Vec<u32>) -> Tree {
        let root_mass = self.mass_of(&root);
        self.tree.push(root_mass);
        let mut stack = vec![(0usize, root, 0usize)];
        while let Some((node, idx, depth)) = stack.pop() {
            let mass = self.tree.mass[node];
            if depth >= self.cfg.max_depth || idx.len() < 2 || mass[0] == 0.0 || mass[1] == 0.0 {
                continue;
            }
            let Some(split) = self.best_split(&idx, mass) else {
                continue;
            };
            let col = &self.data.cols[split.feature];
            let (l, r): (Vec<u32>, Vec<u32>) = idx
                .iter()
                .partition(|&&i| col[i as usize] <= split.threshold);
            if l.is_empty() || r.is_empty() {
                continue;
            }
            let (ml, mr) = (self.mass_of(&l), self.mass_of(&r));
            let li = self.tree.push(ml);
            let ri = self.tree.push(mr);
            self.tree.feature[node] = split.feature as i32;
            self.tree.threshold[node] = split.threshold;
            self.tree.left[node] = li as i32;
            self.tree.right[node] = ri as i32;
            // right first so the left subtree is expanded next
            stack.push((ri, r, depth + 1));
            stack.push((li, l, depth + 1));
        }
        self.tree
    }
}

pub fn train(data: &[LabeledPair], cfg: &ForestConfig) -> Result<DecisionForest> {
    cfg.validate()?;
    if data.len() < 2 {
        return Err(Error::Training(format!(
            "need at least 2 samples, got {}",
            data.len()
        )));
    }
    let mut counts = [0usize; 2];
    for d in data {
        counts[d.label as usize] += 1;
    }
    let class_w = balanced_weights(counts)?;
    let columns = Columns {
        cols: (0..FEATURE_COUNT)
            .map(|f| data.iter().map(|d| d.features.0[f]).collect())
            .collect(),
        labels: data.iter().map(|d| d.label as u8).collect(),
    };
    if columns.cols.iter().flatten().any(|v| !v.is_finite()) {
        return Err(Error::Training("non-finite feature value".into()));
    }
    let n = data.len();
    let trees = (0..cfg.n_trees)
        .into_par_iter()
        .map(|t| {
            let mut rng = ChaCha8Rng::seed_from_u64(cfg.seed.wrapping_add(t as u64));
            let mut draws = vec![0u32; n];
            if cfg.bootstrap {
                for _ in 0..n {
                    draws[rng.random_range(0..n)] += 1;
                }
            } else {
                draws.fill(1);
            }
            let weight: Vec<f64> = draws
                .iter()
                .zip(&columns.labels)
                .map(|(&c, &l)| c as f64 * class_w[l as usize])
                .collect();
            let root: Vec<u32> = (0..n as u32).filter(|&i| draws[i as usize] > 0).collect();
            TreeBuilder {
                data: &columns,
                weight,
                cfg,
                rng,
                tree: Tree {
                    feature: Vec::new(),
                    threshold: Vec::new(),
                    left: Vec::new(),
                    right: Vec::new(),
                    mass: Vec::new(),
                },
                order: Vec::with_capacity(root.len()),
            }
            .build(root)
        })
        .collect();
    Ok(DecisionForest {
        config: *cfg,
        feature_count: FEATURE_COUNT,
        trees,
    })
}

/// Rotates a positive pair about its crossing in 0.5° steps, 720 times,
/// re-featurizing each copy. The last copy is a full turn.
pub fn augment_rotations(
    a: &SymmetryAxis,
    b: &SymmetryAxis,
    image: ImageSize,
) -> Result<Vec<LabeledPair>> {
    let center = line_intersection(&a.segment, &b.segment)
        .ok_or_else(|| Error::Contract("augmentation needs an intersecting pair".into()))?;
    (1..=AUGMENT_STEPS)
        .map(|k| {
            // reduce in degrees so whole turns are exact
            let theta = (k as f64 * AUGMENT_STEP_DEG).rem_euclid(360.0).to_radians();
            let ra = SymmetryAxis {
                segment: a.segment.rotated_about(center, theta)?,
                ..*a
            };
            let rb = SymmetryAxis {
                segment: b.segment.rotated_about(center, theta)?,
                ..*b
            };
            Ok(LabeledPair {
                features: featurize(&ra, &rb, image),
                label: true,
            })
        })
        .collect()
}

pub fn accuracy(model: &DecisionForest, data: &[LabeledPair], threshold: f64) -> Result<f64> {
    if data.is_empty() {
        return Err(Error::Contract("accuracy of an empty dataset".into()));
    }
    let mut correct = 0usize;
    for d in data {
        let p = model.predict_proba(d.features.values())?;
        if (p >= threshold) == d.label {
            correct += 1;
        }
    }
    Ok(correct as f64 / data.len() as f64)
}

/// Area under the ROC curve as the Mann–Whitney rank statistic: the
/// probability that a random positive outscores a random negative, ties ½.
pub fn roc_auc(scores: &[f64], labels: &[bool]) -> Result<f64> {
    if scores.len() != labels.len() {
        return Err(Error::Contract("scores and labels differ in length".into()));
    }
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 {
        return Err(Error::Contract("AUC needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[a].total_cmp(&scores[b]));
    // doubled ranks keep tie averages integral
    let mut rank_sum2 = 0u128;
    let mut i = 0;
    while i < order.len() {
        let mut j = i;
        while j + 1 < order.len() && scores[order[j + 1]] == scores[order[i]] {
            j += 1;
        }
        let avg2 = (i + 1 + j + 1) as u128;
        let npos = order[i..=j].iter().filter(|&&k| labels[k]).count() as u128;
        rank_sum2 += avg2 * npos;
        i = j + 1;
    }
    let (p, n) = (pos as u128, neg as u128);
    let u2 = rank_sum2 - p * (p + 1);
    Ok(u2 as f64 / (2 * p * n) as f64)
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct RocPoint {
    pub threshold: f64,
    pub fpr: f64,
    pub tpr: f64,
}

/// ROC curve over every distinct score, from the strictest threshold down.
pub fn roc_curve(scores: &[f64], labels: &[bool]) -> Result<Vec<RocPoint>> {
    let pos = labels.iter().filter(|&&l| l).count();
    let neg = labels.len() - pos;
    if pos == 0 || neg == 0 || scores.len() != labels.len() {
        return Err(Error::Contract("ROC curve needs both classes".into()));
    }
    let mut order: Vec<usize> = (0..scores.len()).collect();
    order.sort_by(|&a, &b| scores[b].total_cmp(&scores[a]));
    let mut out = vec![RocPoint {
        threshold: f64::INFINITY,
        fpr: 0.0,
        tpr: 0.0,
    }];
    let (mut tp, mut fp) = (0usize, 0usize);
    let mut i = 0;
    while i < order.len() {
        let s = scores[order[i]];
        while i < order.len() && scores[order[i]] == s {
            if labels[order[i]] {
                tp += 1;
            } else {
                fp += 1;
            }
            i += 1;
        }
        out.push(RocPoint {
            threshold: s,
            fpr: fp as f64 / neg as f64,
            tpr: tp as f64 / pos as f64,
        });
    }
    Ok(out)
}

/// One sample per line: twelve comma-separated features then `0` or `1`.
pub fn write_dataset<W: Write>(mut w: W, data: &[LabeledPair]) -> Result<()> {
    for d in data {
        for v in d.features.values() {
            write!(w, "{v},")?;
        }
        writeln!(w, "{}", d.label as u8)?;
    }
    Ok(())
}

pub fn read_dataset<R: BufRead>(reader: R) -> Result<Vec<LabeledPair>> {
    let mut out = Vec::new();
    for (i, line) in reader.lines().enumerate() {
        let line = line?;
        let t = line.trim();
        if t.is_empty() || t.starts_with('#') {
            continue;
        }
        let parse_err = |message: String| Error::Parse {
            line: i + 1,
            message,
        };
        let fields: Vec<&str> = t.split(',').map(str::trim).collect();
        if fields.len() != FEATURE_COUNT + 1 {
            return Err(parse_err(format!(
                "expected {} fields, found {}",
                FEATURE_COUNT + 1,
                fields.len()
            )));
        }
        let mut f = [0.0; FEATURE_COUNT];
        for (slot, s) in f.iter_mut().zip(&fields) {
            *slot = s
                .parse::<f64>()
                .ok()
                .filter(|v| v.is_finite())
                .ok_or_else(|| parse_err(format!("invalid feature {s:?}")))?;
        }
        let label = match fields[FEATURE_COUNT] {
            "1" => true,
            "0" => false,
            other => return Err(parse_err(format!("label must be 0 or 1, found {other:?}"))),
        };
        out.push(LabeledPair {
            features: LinePairFeatures(f),
            label,
        });
    }
    Ok(out)
}

pub fn write_dataset_file(path: &Path, data: &[LabeledPair]) -> Result<()> {
    let mut w = BufWriter::new(File::create(path).map_err(|e| Error::io(path, e))?);
    write_dataset(&mut w, data)
        .and_then(|_| w.flush().map_err(Error::Stream))
        .map_err(|e| e.with_path(path))
}

pub fn read_dataset_file(path: &Path) -> Result<Vec<LabeledPair>> {
    let r = BufReader::new(File::open(path).map_err(|e| Error::io(path, e))?);
    read_dataset(r).map_err(|e| e.with_path(path))
}
