//! Confidence selection and per-class pooling of detected part features
//! into one fixed-shape feature per shape.

use std::collections::BTreeMap;
use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::detector::Detection;
use crate::error::{Error, Result};
use crate::nn::{Checkpoint, NamedTensor, TensorData};

pub const DEFAULT_RHO: f64 = 0.8;

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum PoolingMode {
    /// Elementwise max per class.
    #[default]
    Max,
    /// Elementwise mean per class.
    Mean,
    /// Max within each view, then mean across views, per class.
    Mixed,
    /// One max over every detection regardless of class, copied into each
    /// class slot.
    MaxAll,
}

impl FromStr for PoolingMode {
    type Err = Error;
    fn from_str(s: &str) -> Result<Self> {
        match s {
            "max" => Ok(Self::Max),
            "mean" => Ok(Self::Mean),
            "mixed" => Ok(Self::Mixed),
            "max_all" => Ok(Self::MaxAll),
            other => Err(Error::Config(format!("unknown pooling mode `{other}` (max|mean|mixed|max_all)"))),
        }
    }
}

impl fmt::Display for PoolingMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.pad(match self {
            Self::Max => "max",
            Self::Mean => "mean",
            Self::Mixed => "mixed",
            Self::MaxAll => "max_all",
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct AggregationConfig {
    pub rho: f64,
    pub mode: PoolingMode,
    pub num_classes: usize,
    pub feature_dim: usize,
}

impl AggregationConfig {
    pub fn new(num_classes: usize, feature_dim: usize) -> Self {
        Self {
            rho: DEFAULT_RHO,
            mode: PoolingMode::Max,
            num_classes,
            feature_dim,
        }
    }

    pub fn validate(&self) -> Result<()> {
        if !(0.0..=1.0).contains(&self.rho) {
            return Err(Error::Config(format!("rho must lie in [0, 1], got {}", self.rho)));
        }
        if self.num_classes == 0 || self.feature_dim == 0 {
            return Err(Error::Config("aggregation needs at least one class and feature".into()));
        }
        Ok(())
    }
}

/// Per-class pooled features in class order, with a presence flag per class.
#[derive(Debug, Clone, PartialEq)]
pub struct ShapeFeature {
    pub per_class: Vec<Vec<f64>>,
    pub present: Vec<bool>,
}

impl ShapeFeature {
    pub fn empty(num_classes: usize, feature_dim: usize) -> Self {
        Self {
            per_class: vec![vec![0.0; feature_dim]; num_classes],
            present: vec![false; num_classes],
        }
    }

    pub fn num_classes(&self) -> usize {
        self.per_class.len()
    }

    pub fn feature_dim(&self) -> usize {
        self.per_class.first().map_or(0, Vec::len)
    }

    fn tensors(&self, prefix: &str) -> [NamedTensor; 2] {
        [
            NamedTensor {
                name: format!("{prefix}features"),
                shape: vec![self.num_classes(), self.feature_dim()],
                data: TensorData::F32(self.per_class.iter().flatten().map(|&v| v as f32).collect()),
            },
            NamedTensor {
                name: format!("{prefix}mask"),
                shape: vec![self.num_classes()],
                data: TensorData::U8(self.present.iter().map(|&p| p as u8).collect()),
            },
        ]
    }

    fn from_tensors(features: &NamedTensor, mask: &NamedTensor) -> Result<Self> {
        let (TensorData::F32(f), TensorData::U8(m)) = (&features.data, &mask.data) else {
            return Err(Error::Format("shape feature tensors have the wrong dtype".into()));
        };
        let [c, d] = features.shape[..] else {
            return Err(Error::Format("shape feature matrix must be 2-D".into()));
        };
        if mask.shape != [c] {
            return Err(Error::Format("shape feature mask length differs from class count".into()));
        }
        Ok(Self {
            per_class: f.chunks(d.max(1)).take(c).map(|r| r.iter().map(|&v| v as f64).collect()).collect(),
            present: m.iter().map(|&b| b != 0).collect(),
        })
    }

    pub fn to_checkpoint(&self) -> Checkpoint {
        Checkpoint {
            config: vec![("kind".into(), "shape_feature".into())],
            tensors: self.tensors("").to_vec(),
        }
    }

    pub fn from_checkpoint(ck: &Checkpoint) -> Result<Self> {
        match (ck.tensor("features"), ck.tensor("mask")) {
            (Some(f), Some(m)) => Self::from_tensors(f, m),
            _ => Err(Error::Format("checkpoint holds no shape feature".into())),
        }
    }
}

/// Writes several shape features into one container, tensors named
/// `<id>/features` and `<id>/mask`, in the given order.
pub fn write_shape_features(path: &Path, features: &[(String, ShapeFeature)]) -> Result<()> {
    let mut ck = Checkpoint {
        config: vec![("kind".into(), "shape_features".into())],
        tensors: Vec::new(),
    };
    for (id, f) in features {
        if id.contains('/') {
            return Err(Error::InvalidArgument(format!("shape id `{id}` must not contain '/'")));
        }
        ck.tensors.extend(f.tensors(&format!("{id}/")));
    }
    ck.write(path)
}

pub fn read_shape_features(path: &Path) -> Result<Vec<(String, ShapeFeature)>> {
    let ck = Checkpoint::read(path)?;
    ck.tensors
        .chunks(2)
        .map(|pair| {
            let [f, m] = pair else {
                return Err(Error::Format("odd tensor count in shape feature file".into()));
            };
            let id = f
                .name
                .strip_suffix("/features")
                .ok_or_else(|| Error::Format(format!("unexpected tensor `{}`", f.name)))?;
            if m.name != format!("{id}/mask") {
                return Err(Error::Format(format!("tensor `{}` does not pair with `{}`", m.name, f.name)));
            }
            Ok((id.to_string(), ShapeFeature::from_tensors(f, m)?))
        })
        .collect()
}

/// Detections whose top class probability is strictly above `rho`.
pub fn select_parts(dets: &[Detection], rho: f64) -> Vec<Detection> {
    dets.iter().filter(|d| d.max_prob() > rho).cloned().collect()
}

fn elementwise_max<'a>(rows: impl Iterator<Item = &'a [f64]>, dim: usize) -> Vec<f64> {
    let mut out = vec![f64::NEG_INFINITY; dim];
    for r in rows {
        for (o, &v) in out.iter_mut().zip(r) {
            *o = o.max(v);
        }
    }
    out
}

/// Mean in a canonical row order so the result does not depend on input
/// order down to the last bit.
fn canonical_mean(mut rows: Vec<&[f64]>, dim: usize) -> Vec<f64> {
    rows.sort_by(|a, b| {
        a.iter()
            .zip(b.iter())
            .map(|(x, y)| x.total_cmp(y))
            .find(|o| o.is_ne())
            .unwrap_or(std::cmp::Ordering::Equal)
    });
    let mut out = vec![0.0; dim];
    for r in &rows {
        for (o, &v) in out.iter_mut().zip(r.iter()) {
            *o += v;
        }
    }
    let n = rows.len() as f64;
    out.iter_mut().for_each(|o| *o /= n);
    out
}

/// Pools selected detections by their argmax class.
pub fn aggregate(selected: &[Detection], cfg: &AggregationConfig) -> Result<ShapeFeature> {
    cfg.validate()?;
    let (c, dim) = (cfg.num_classes, cfg.feature_dim);
    for d in selected {
        if d.class() >= c || d.probs.len() != c {
            return Err(Error::InvalidArgument(format!(
                "detection with {} class probabilities for a {c}-class aggregation",
                d.probs.len()
            )));
        }
        if d.feature.len() != dim {
            return Err(Error::DimensionMismatch {
                expected: dim,
                actual: d.feature.len(),
                context: "detection feature",
            });
        }
    }
    let mut out = ShapeFeature::empty(c, dim);
    if selected.is_empty() {
        return Ok(out);
    }
    if cfg.mode == PoolingMode::MaxAll {
        let pooled = elementwise_max(selected.iter().map(|d| d.feature.as_slice()), dim);
        out.per_class = vec![pooled; c];
        out.present = vec![true; c];
        return Ok(out);
    }
    for class in 0..c {
        let members: Vec<&Detection> = selected.iter().filter(|d| d.class() == class).collect();
        if members.is_empty() {
            continue;
        }
        out.present[class] = true;
        out.per_class[class] = match cfg.mode {
            PoolingMode::Max => elementwise_max(members.iter().map(|d| d.feature.as_slice()), dim),
            PoolingMode::Mean => canonical_mean(members.iter().map(|d| d.feature.as_slice()).collect(), dim),
            PoolingMode::Mixed => {
                let mut by_view: BTreeMap<usize, Vec<&[f64]>> = BTreeMap::new();
                for d in &members {
                    by_view.entry(d.view_index).or_default().push(&d.feature);
                }
                let maxes: Vec<Vec<f64>> = by_view
                    .into_values()
                    .map(|rows| elementwise_max(rows.into_iter(), dim))
                    .collect();
                canonical_mean(maxes.iter().map(Vec::as_slice).collect(), dim)
            }
            PoolingMode::MaxAll => unreachable!(),
        };
    }
    Ok(out)
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::bbox::BBox;

    fn det(view: usize, class: usize, feature: Vec<f64>) -> Detection {
        let mut probs = vec![0.0; 2];
        probs[class] = 1.0;
        Detection {
            view_index: view,
            bbox: BBox::new(0.0, 0.0, 4.0, 4.0),
            probs,
            feature,
        }
    }

    fn cfg(mode: PoolingMode, d: usize) -> AggregationConfig {
        AggregationConfig {
            mode,
            ..AggregationConfig::new(2, d)
        }
    }

    #[test]
    fn max_and_mean() {
        let dets = vec![det(0, 1, vec![1.0, 0.0, 3.0]), det(1, 1, vec![2.0, 2.0, 0.0])];
        let f = aggregate(&dets, &cfg(PoolingMode::Max, 3)).unwrap();
        assert_eq!(f.per_class[1], vec![2.0, 2.0, 3.0]);
        assert_eq!(f.per_class[0], vec![0.0; 3]);
        assert_eq!(f.present, vec![false, true]);
        let f = aggregate(&dets, &cfg(PoolingMode::Mean, 3)).unwrap();
        assert_eq!(f.per_class[1], vec![1.5, 1.0, 1.5]);
    }

    #[test]
    fn mixed_pools_views_first() {
        let dets = vec![
            det(1, 0, vec![1.0, 0.0]),
            det(1, 0, vec![0.0, 4.0]),
            det(2, 0, vec![2.0, 2.0]),
        ];
        let f = aggregate(&dets, &cfg(PoolingMode::Mixed, 2)).unwrap();
        assert_eq!(f.per_class[0], vec![1.5, 3.0]);
    }

    #[test]
    fn strict_selection() {
        let mut d = det(0, 0, vec![0.0]);
        d.probs = vec![0.8, 0.2];
        assert!(select_parts(&[d.clone()], 0.8).is_empty());
        d.probs = vec![0.81, 0.19];
        assert_eq!(select_parts(&[d], 0.8).len(), 1);
    }

    #[test]
    fn feature_file_roundtrip() {
        let dir = tempfile::tempdir().unwrap();
        let p = dir.path().join("f.bin");
        let a = ShapeFeature {
            per_class: vec![vec![1.0, -0.5], vec![0.0, 0.0]],
            present: vec![true, false],
        };
        let list = vec![("chair_000".to_string(), a.clone()), ("chair_001".to_string(), ShapeFeature::empty(2, 2))];
        write_shape_features(&p, &list).unwrap();
        assert_eq!(read_shape_features(&p).unwrap(), list);
        assert_eq!(ShapeFeature::from_checkpoint(&a.to_checkpoint()).unwrap(), a);
    }
}
