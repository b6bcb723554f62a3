//! Minimal dense-tensor and reverse-mode autodiff engine.

pub mod checkpoint;
pub mod init;
pub mod layers;
pub mod param;
pub mod sparse;
pub mod tape;
pub mod tensor;

pub use init::seeded_init;
pub use layers::{GcnConv, GruCell, Linear};
pub use param::{adam_step, AdamConfig, AdamState, ParamId, ParamSet, Parameter};
pub use sparse::SparseMatrix;
pub use tape::{sigmoid, Gradients, Tape, Var, BCE_EPS};
pub use tensor::Tensor;
