use crate::error::{Error, Result};
use crate::nn::softmax;

pub fn smooth_l1(x: f64) -> f64 {
    let a = x.abs();
    if a < 1.0 {
        0.5 * x * x
    } else {
        a - 0.5
    }
}

pub fn smooth_l1_grad(x: f64) -> f64 {
    x.clamp(-1.0, 1.0)
}

/// Cross-entropy against a one-hot target plus `lambda ×` the smooth-L1
/// offset loss, which is dropped when `gt_offsets` is `None` (background).
///
/// `gt_probs` must be one-hot over `pred_probs.len()` classes.
pub fn detector_loss(
    pred_probs: &[f64],
    pred_offsets: &[f64; 4],
    gt_probs: &[f64],
    gt_offsets: Option<&[f64; 4]>,
    lambda: f64,
) -> Result<f64> {
    if pred_probs.len() != gt_probs.len() {
        return Err(Error::DimensionMismatch {
            expected: pred_probs.len(),
            actual: gt_probs.len(),
            context: "ground-truth class vector",
        });
    }
    let ones = gt_probs.iter().filter(|&&p| p == 1.0).count();
    let zeros = gt_probs.iter().filter(|&&p| p == 0.0).count();
    if ones != 1 || ones + zeros != gt_probs.len() {
        return Err(Error::InvalidArgument("ground-truth class vector must be one-hot".into()));
    }
    let k = gt_probs.iter().position(|&p| p == 1.0).unwrap();
    let cls = -pred_probs[k].max(f64::MIN_POSITIVE).ln();
    Ok(cls + lambda * localization(pred_offsets, gt_offsets))
}

fn localization(pred: &[f64; 4], gt: Option<&[f64; 4]>) -> f64 {
    gt.map_or(0.0, |g| (0..4).map(|i| smooth_l1(pred[i] - g[i])).sum())
}

/// Loss from raw logits and its gradient with respect to the logits.
pub(crate) fn detector_loss_from_logits(
    logits: &[f64],
    offsets: &[f64; 4],
    class: usize,
    gt_offsets: Option<&[f64; 4]>,
    lambda: f64,
) -> (f64, Vec<f64>) {
    let mut p = softmax(logits);
    let cls = -p[class].max(f64::MIN_POSITIVE).ln();
    p[class] -= 1.0;
    (cls + lambda * localization(offsets, gt_offsets), p)
}
