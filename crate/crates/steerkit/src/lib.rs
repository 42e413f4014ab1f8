//! steerkit: a self-contained laboratory for inference-time steering of
//! transformer-style models through sparse-autoencoder latents.

pub mod config;
pub mod contrastive;
pub mod error;
pub mod evalkit;
pub mod model;
pub mod numerics;
pub mod pipeline;
pub mod sae;
pub mod steering;
pub(crate) mod tensor_io;

pub use error::{Error, Result};
