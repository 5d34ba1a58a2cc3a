//! Multi-view subspace clustering in third-order tensor space.
//!
//! Views are stacked into a `D × n × k` tensor `X`, a representation tensor
//! `C` is learned by minimizing
//!
//! ```text
//! α‖C‖_F1 + λ‖C‖_TNN + ½‖X − X*C‖_F² + (β/2) Σ_{i≠j} ‖C(:,:,i) − C(:,:,j)‖_F²
//! ```
//!
//! with a two-level ADMM, and the per-view frontal slices of `C` are turned
//! into cluster labels through a Markov-chain spectral embedding and k-means.
//!
//! The numerical core is generic over [`Real`] (`f32` or `f64`); the aliases
//! below fix the scalar for the common cases.

pub mod construct;
pub mod error;
pub mod io;
pub mod kmeans;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod prox;
pub mod scalar;
pub mod selftest;
pub mod solver;
pub mod spectral;
pub mod tensor3;

pub use error::{Error, Result};
pub use scalar::Real;
pub use tensor3::{SpectralTensor3, Tensor3};

pub type Tensor3f64 = Tensor3<f64>;
pub type Tensor3f32 = Tensor3<f32>;
pub type SpectralTensor3f64 = SpectralTensor3<f64>;
pub type MultiViewDatasetF64 = construct::MultiViewDataset<f64>;
