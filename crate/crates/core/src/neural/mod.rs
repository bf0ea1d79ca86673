//! Minimal differentiable-computation substrate: dense tensors, the
//! fixed operator set with explicit backward passes, losses, plain SGD
//! with exponential decay, a finite-difference gradient checker and a
//! byte-exact checkpoint container.

pub mod checkpoint;
pub mod gradcheck;
pub mod linalg;
pub mod ops;
pub mod params;
pub mod tensor;

pub use gradcheck::grad_check;
pub use ops::{
    attended_output, attention_weights, lstm_step, mlsm_loss, softmax, softmax_xent,
};
pub use params::{GradBuffer, Param, ParamStore};
pub use tensor::Tensor;
