//! Desk-scale skeleton sign recognition with weight-shared looped
//! transformers and hyperbolic contrastive alignment.
//!
//! The crate is organised bottom-up:
//!
//! - [`tensor`]: a minimal dense-tensor engine with reverse-mode autodiff
//! - [`manifold`]: the hyperbolic geometry kernel (adaptive Poincaré ball,
//!   Lorentz hyperboloid, Möbius operations, Fréchet mean)
//! - [`model`]: part-wise skeleton encoding, fusion, the toy encoder–decoder
//!   transformer, and the three recurrent looping variants
//! - [`losses`]: geometry-aware contrastive alignment, language-modelling
//!   loss, and the joint objective
//! - [`data`]: JSON-lines skeleton records, synthetic task generation,
//!   vocabulary, and batching
//! - [`harness`]: training, evaluation, ablation sweeps, and export
//! - [`checks`]: self-contained geometry and gradient verification suites

pub mod checks;
pub mod data;
pub mod error;
pub mod harness;
pub mod losses;
pub mod manifold;
pub mod model;
pub mod tensor;

pub use error::{Error, Result};
pub use tensor::{DType, Tensor};
