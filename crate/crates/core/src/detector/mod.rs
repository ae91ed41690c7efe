//! Small part detector: a two-layer convolutional backbone, bilinear box
//! pooling, and a head with a `C + 1`-way classifier and a box-offset
//! regressor, trained with cross-entropy plus weighted smooth-L1.

mod infer;
mod loss;
mod model;
mod proposals;
mod roi;
mod train;

pub use infer::{best_ious, detect, Detection, NMS_IOU};
pub use loss::{detector_loss, smooth_l1, smooth_l1_grad};
pub use model::{Backbone, DetectorConfig, DetectorModel, HeadOutput, RoiTarget, FEATURE_STRIDE, MIN_BOX_AREA};
pub use proposals::{
    anchor_boxes, jitter_box, label_proposals, propose_regions, propose_training_regions, ForegroundIntegral,
    Proposal, ProposalSource, BACKGROUND_IOU, DEFAULT_ASPECTS, POSITIVE_IOU,
};
pub use roi::{roi_pool, roi_pool_backward, RoiLayout, RoiTaps};
pub use train::{finetune_detector, train_detector, DetectorTrainConfig};
