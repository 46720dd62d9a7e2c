//! The trainable stack: observation encoder, conditional occupancy decoder,
//! latent posterior, displacement regressor, losses, Adam and training.

mod adam;
mod decoder;
mod encoder;
mod layers;
mod loss;
mod model;
mod posterior;
mod train;

pub use adam::Adam;
pub use encoder::Observation;
pub use layers::{round_to_f32, Layout, ParamEntry};
pub use loss::{kl_gaussian, sigmoid, wbce, wbce_logit, EPS};
pub use model::{CoarseModel, DispModel, ModelDims, CHECKPOINT_MAGIC, CHECKPOINT_VERSION};
pub use train::{
    coarse_loss, coarse_loss_grad, disp_loss, disp_loss_grad, latent_noise, train_coarse, train_disp, CoarseBatchItem,
    CoarseExample, CoarseLossWeights, DispBatchItem, DispExample, EpochLoss, TrainConfig,
};
