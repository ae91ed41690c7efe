//! Part bounding-box ground truth.
//!
//! Geometry ground truth comes from highlight renders: every 8-connected
//! blue region of one class yields a tight box with a one-hot class vector.
//! Transferred ground truth reuses confident detections from uncolored views
//! on the colored views of the same cameras, so box coordinates carry over
//! unchanged.

mod components;

pub use components::{connected_components, Component};

use std::collections::BTreeMap;
use std::io::{BufRead, Write};
use std::path::Path;

use serde::{Deserialize, Serialize};

use crate::bbox::BBox;
use crate::error::{Error, IoContext, Result};
use crate::geometry::LabeledVoxelGrid;
use crate::render::{render_labels, Camera, LabelMap};

/// Default minimum component size; smaller blobs are speckle.
pub const DEFAULT_MIN_PIXELS: usize = 9;

/// Default confidence for turning detections into transferred ground truth.
pub const DEFAULT_TRANSFER_THRESHOLD: f64 = 0.7;

const PROB_TOLERANCE: f64 = 1e-6;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum BoxStage {
    GeometryGt,
    TransferredGt,
    Detection,
}

/// How highlight regions of one class become boxes.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum BoxGrouping {
    /// One box per connected component.
    #[default]
    Component,
    /// One box around all qualifying components of the class.
    MergedPerClass,
}

#[derive(Debug, Clone, PartialEq)]
pub struct PartBox {
    pub bbox: BBox,
    pub probs: Vec<f64>,
    pub stage: BoxStage,
}

impl PartBox {
    pub fn one_hot(bbox: BBox, class: usize, num_classes: usize, stage: BoxStage) -> Self {
        let mut probs = vec![0.0; num_classes];
        probs[class] = 1.0;
        Self { bbox, probs, stage }
    }

    /// Index of the largest probability (first on ties).
    pub fn class(&self) -> usize {
        argmax(&self.probs)
    }

    pub fn max_prob(&self) -> f64 {
        self.probs.iter().copied().fold(f64::NEG_INFINITY, f64::max)
    }

    pub fn is_one_hot(&self) -> bool {
        self.probs.iter().filter(|&&p| p == 1.0).count() == 1
            && self.probs.iter().all(|&p| p == 0.0 || p == 1.0)
    }

    pub fn validate(&self, width: usize, height: usize) -> Result<()> {
        if !self.bbox.is_valid() || !self.bbox.within(width, height) {
            return Err(Error::InvalidArgument(format!("box {:?} invalid for {width}x{height}", self.bbox)));
        }
        let sum: f64 = self.probs.iter().sum();
        if (sum - 1.0).abs() > PROB_TOLERANCE || self.probs.iter().any(|&p| !(0.0..=1.0).contains(&p)) {
            return Err(Error::InvalidArgument(format!("probabilities sum to {sum}")));
        }
        if self.stage != BoxStage::Detection && !self.is_one_hot() {
            return Err(Error::InvalidArgument("ground-truth boxes must be one-hot".into()));
        }
        Ok(())
    }
}

pub(crate) fn argmax(v: &[f64]) -> usize {
    let mut best = 0;
    for (i, &x) in v.iter().enumerate() {
        if x > v[best] {
            best = i;
        }
    }
    best
}

#[derive(Debug, Clone, PartialEq)]
pub struct ViewAnnotation {
    pub shape_id: String,
    pub view_index: usize,
    pub boxes: Vec<PartBox>,
}

impl ViewAnnotation {
    pub fn stage(&self) -> Option<BoxStage> {
        self.boxes.first().map(|b| b.stage)
    }

    pub fn is_homogeneous(&self) -> bool {
        self.boxes.windows(2).all(|w| w[0].stage == w[1].stage)
    }
}

/// Views that produced no boxes during ground-truth construction.
#[derive(Debug, Clone, Default, PartialEq, Serialize, Deserialize)]
pub struct CoverageReport {
    pub views: usize,
    pub empty_views: usize,
    pub boxes: usize,
    pub boxes_per_class: Vec<usize>,
}

impl CoverageReport {
    pub fn absorb(&mut self, other: &CoverageReport) {
        self.views += other.views;
        self.empty_views += other.empty_views;
        self.boxes += other.boxes;
        if self.boxes_per_class.len() < other.boxes_per_class.len() {
            self.boxes_per_class.resize(other.boxes_per_class.len(), 0);
        }
        for (a, b) in self.boxes_per_class.iter_mut().zip(&other.boxes_per_class) {
            *a += b;
        }
    }
}

/// Boxes of `class` from an already rendered label map.
pub fn boxes_from_label_map(
    map: &LabelMap,
    class: usize,
    num_classes: usize,
    min_pixels: usize,
    grouping: BoxGrouping,
) -> Vec<PartBox> {
    let mask = map.class_mask(class);
    let comps: Vec<Component> = connected_components(&mask, map.size)
        .into_iter()
        .filter(|c| c.pixels >= min_pixels)
        .collect();
    let boxes: Vec<BBox> = match grouping {
        BoxGrouping::Component => comps.iter().map(|c| c.bbox).collect(),
        BoxGrouping::MergedPerClass => comps
            .iter()
            .map(|c| c.bbox)
            .reduce(|a, b| BBox::new(a.x0.min(b.x0), a.y0.min(b.y0), a.x1.max(b.x1), a.y1.max(b.y1)))
            .into_iter()
            .collect(),
    };
    boxes
        .into_iter()
        .map(|b| PartBox::one_hot(b, class, num_classes, BoxStage::GeometryGt))
        .collect()
}

/// Tight boxes around the blue regions of `part_class` seen from `cam`.
pub fn extract_part_boxes(
    grid: &LabeledVoxelGrid,
    cam: &Camera,
    part_class: usize,
    min_pixels: usize,
) -> Result<Vec<PartBox>> {
    if part_class >= grid.num_classes() {
        return Err(Error::InvalidArgument(format!(
            "part class {part_class} >= class count {}",
            grid.num_classes()
        )));
    }
    let map = render_labels(grid, cam);
    Ok(boxes_from_label_map(&map, part_class, grid.num_classes(), min_pixels, BoxGrouping::Component))
}

/// Geometry ground truth for every camera, boxes ordered by class.
pub fn build_geometry_gt(
    shape_id: &str,
    grid: &LabeledVoxelGrid,
    cameras: &[Camera],
    min_pixels: usize,
    grouping: BoxGrouping,
) -> (Vec<ViewAnnotation>, CoverageReport) {
    let c = grid.num_classes();
    let mut report = CoverageReport {
        boxes_per_class: vec![0; c],
        ..Default::default()
    };
    let anns = cameras
        .iter()
        .enumerate()
        .map(|(vi, cam)| {
            let map = render_labels(grid, cam);
            let boxes: Vec<PartBox> = (0..c)
                .flat_map(|k| boxes_from_label_map(&map, k, c, min_pixels, grouping))
                .collect();
            report.views += 1;
            report.boxes += boxes.len();
            if boxes.is_empty() {
                report.empty_views += 1;
            }
            for b in &boxes {
                report.boxes_per_class[b.class()] += 1;
            }
            ViewAnnotation {
                shape_id: shape_id.to_string(),
                view_index: vi,
                boxes,
            }
        })
        .collect();
    (anns, report)
}

/// Keeps detections whose top probability exceeds `keep_threshold` and turns
/// them into one-hot transferred ground truth with the same box.
pub fn map_detections(dets: &[PartBox], keep_threshold: f64) -> Vec<PartBox> {
    dets.iter()
        .filter(|d| d.max_prob() > keep_threshold)
        .map(|d| PartBox::one_hot(d.bbox, d.class(), d.probs.len(), BoxStage::TransferredGt))
        .collect()
}

/// One line of an annotation file. Views without boxes are written as a
/// record with null `class_probs` and `box` so they survive a round trip.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct AnnotationRecord {
    pub shape_id: String,
    pub view_index: usize,
    pub stage: BoxStage,
    pub class_probs: Option<Vec<f64>>,
    #[serde(rename = "box")]
    pub bbox: Option<[f64; 4]>,
}

pub fn to_records(anns: &[ViewAnnotation], empty_stage: BoxStage) -> Vec<AnnotationRecord> {
    let mut out = Vec::new();
    for a in anns {
        if a.boxes.is_empty() {
            out.push(AnnotationRecord {
                shape_id: a.shape_id.clone(),
                view_index: a.view_index,
                stage: empty_stage,
                class_probs: None,
                bbox: None,
            });
        }
        for b in &a.boxes {
            out.push(AnnotationRecord {
                shape_id: a.shape_id.clone(),
                view_index: a.view_index,
                stage: b.stage,
                class_probs: Some(b.probs.clone()),
                bbox: Some([b.bbox.x0, b.bbox.y0, b.bbox.x1, b.bbox.y1]),
            });
        }
    }
    out
}

/// Groups records back into annotations ordered by `(shape_id, view_index)`.
pub fn from_records(records: &[AnnotationRecord]) -> Vec<ViewAnnotation> {
    let mut grouped: BTreeMap<(String, usize), Vec<PartBox>> = BTreeMap::new();
    for r in records {
        let entry = grouped.entry((r.shape_id.clone(), r.view_index)).or_default();
        if let (Some(p), Some(b)) = (&r.class_probs, r.bbox) {
            entry.push(PartBox {
                bbox: BBox::new(b[0], b[1], b[2], b[3]),
                probs: p.clone(),
                stage: r.stage,
            });
        }
    }
    grouped
        .into_iter()
        .map(|((shape_id, view_index), boxes)| ViewAnnotation {
            shape_id,
            view_index,
            boxes,
        })
        .collect()
}

pub fn write_annotations(path: &Path, anns: &[ViewAnnotation], empty_stage: BoxStage) -> Result<()> {
    let mut f = std::io::BufWriter::new(std::fs::File::create(path).at(path)?);
    for r in to_records(anns, empty_stage) {
        serde_json::to_writer(&mut f, &r)?;
        f.write_all(b"\n").at(path)?;
    }
    f.flush().at(path)
}

pub fn read_annotations(path: &Path) -> Result<Vec<ViewAnnotation>> {
    let f = std::io::BufReader::new(std::fs::File::open(path).at(path)?);
    let mut records = Vec::new();
    for (i, line) in f.lines().enumerate() {
        let line = line.at(path)?;
        if line.trim().is_empty() {
            continue;
        }
        records.push(serde_json::from_str(&line).map_err(|e| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg: e.to_string(),
        })?);
    }
    Ok(from_records(&records))
}
