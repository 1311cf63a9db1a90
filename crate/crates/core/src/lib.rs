//! Variational denoising of manifold-valued signals and images.

pub mod error;
pub mod manifold;
pub mod model;
pub mod prox;
pub mod sample;
pub mod solvers;
pub mod transport;

pub use error::{Error, Result};
pub use manifold::{ManifoldTag, Point, TangentVector};
