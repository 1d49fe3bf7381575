//! Miniature training framework (tensors, reverse-mode differentiation,
//! Adam) and the scaled-down RRDB super-resolution network trained with an
//! L1 loss.

pub mod adam;
pub mod checkpoint;
pub mod gradcheck;
pub mod model;
pub mod tape;
pub mod tensor;
pub mod train;

pub use adam::{adam_step, AdamConfig, AdamState};
pub use checkpoint::{file_hash, load_checkpoint, save_checkpoint};
pub use model::{bind_params, model_forward, predict, ModelParams, ModelSpec, RESIDUAL_SCALE};
pub use tape::{Gradients, NodeId, Tape};
pub use tensor::{Elem, Tensor};
pub use train::{load_split_pairs, raster_to_tensor, tensor_to_raster, train, TrainConfig, TrainOutcome};
