//! Robust group subspace recovery for multimodal data fusion.
//!
//! Observations seen through several sensing modalities are clustered by
//! learning a group-sparse self-representation jointly across modalities,
//! fusing the per-modality coefficient matrices and running spectral
//! clustering on the result. Held-out points are classified by projection
//! onto per-cluster principal subspaces.

pub mod classify;
pub mod clustering;
pub mod error;
pub mod fusion;
pub mod io;
pub mod linalg;
pub mod metrics;
pub mod pipeline;
pub mod seed;
pub mod solver;
pub mod synth;
pub mod theory;

mod par;

pub use error::{Error, Result};
pub use linalg::{Matrix, MatrixStack, ModalityStack};
