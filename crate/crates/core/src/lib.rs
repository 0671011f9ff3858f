//! Graph classification from first principles: a GNN whose combine step
//! both concatenates and sums the ego- and neighbor-embeddings of each
//! node, with a readout that sorts nodes by their final embeddings and
//! concatenates the rows zero-padded to a common size. Around the model:
//! homophily analytics, a TUDataset loader, an exact 1-WL refinement
//! engine, a hand-rolled dense kernel with Adam and gradient checking, and
//! a ten-fold cross-validation harness.
//!
//! The numeric core is generic over the scalar type ([`Scalar`], `f32` or
//! `f64`); the aliases below pin the common concrete choices. All training
//! entry points consume one seed and produce bit-reproducible results.

pub mod error;
pub mod fixtures;
pub mod graph;
pub mod harness;
pub mod model;
pub mod nn;
pub mod scalar;
pub mod tud;
pub mod wl;

pub use error::{Error, Result};
pub use scalar::Scalar;

pub type Matrix32 = nn::Matrix<f32>;
pub type Matrix64 = nn::Matrix<f64>;
pub type Mlp32 = nn::Mlp<f32>;
pub type Mlp64 = nn::Mlp<f64>;
pub type AdamState32 = nn::AdamState<f32>;
pub type AdamState64 = nn::AdamState<f64>;
pub type IhgnnModel32 = model::IhgnnModel<f32>;
pub type IhgnnModel64 = model::IhgnnModel<f64>;
