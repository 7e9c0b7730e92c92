//! Probabilistic recurrent regressor: one ensemble member.
//!
//! A single-layer LSTM reads the exogenous inputs and, for autoregressive
//! models, its own previous mean prediction. Two affine heads give the mean
//! and (through softplus plus a floor) the standard deviation. Inputs and
//! target are standardized with training statistics stored in the model.

mod gradcheck;
mod model;
mod net;
mod train;

pub use gradcheck::{finite_difference_check, grad_check, relative_error, FD_STEP};
pub use model::{
    loss_mse, loss_nll, ModelParams, Normalization, Pnn, PnnArchitecture, Rollout,
    CHECKPOINT_FORMAT, CHECKPOINT_VERSION,
};
pub use train::{fit, train_member, EpochLog, Objective, TrainConfig, TrainLog};
