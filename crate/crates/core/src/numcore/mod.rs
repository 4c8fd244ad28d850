//! Dense tensors, reverse-mode autodiff, AdamW and seeded PRNG streams.

mod adamw;
mod gradcheck;
mod prng;
mod tape;
mod tensor;

pub use adamw::{adamw_step, AdamWConfig, OptimizerState};
pub use gradcheck::{finite_diff_check, finite_diff_check_coords, DEFAULT_STEP};
pub use prng::{hash_str, mix64, PrngStream};
pub use tape::{Gradients, Primitive, Tape, Var, MASK_FILL};
pub use tensor::Tensor;

#[derive(Debug, thiserror::Error)]
pub enum NumError {
    #[error("{kind}: shape mismatch {shapes:?}: {detail}")]
    Shape {
        kind: &'static str,
        shapes: Vec<Vec<usize>>,
        detail: String,
    },
    #[error("{kind}: expected {expected} inputs, got {got}")]
    Arity {
        kind: &'static str,
        expected: usize,
        got: usize,
    },
    #[error("{kind}: index {index} out of range (bound {bound})")]
    IndexOutOfRange {
        kind: &'static str,
        index: usize,
        bound: usize,
    },
    #[error("tensors of rank {rank} are not supported")]
    Rank { rank: usize },
    #[error("shape {shape:?} does not match data length {len}")]
    DataLength { shape: Vec<usize>, len: usize },
    #[error("backward needs a one-element loss, got shape {shape:?}")]
    NonScalarLoss { shape: Vec<usize> },
    #[error("parameter {name}: {param} values but gradient has {grad}")]
    GradientShape {
        name: String,
        param: usize,
        grad: usize,
    },
}
