//! Dense numeric kernel: matrices, two-layer MLPs, softmax cross-entropy,
//! Adam, and a finite-difference gradient checker. Gradients are derived by
//! hand for exactly the operations the model needs.

pub mod adam;
pub mod gradcheck;
pub mod loss;
pub mod matrix;
pub mod mlp;

pub use adam::{scheduled_lr, AdamState};
pub use gradcheck::{grad_check, GradCheckReport, Parameterized};
pub use loss::{argmax_row, softmax_cross_entropy, softmax_rows};
pub use matrix::Matrix;
pub use mlp::{Mlp, MlpCache, MlpParamGrads};
