//! Command line plumbing for `manivar`: synthetic phantoms, tangent noise,
//! the MVD1 text format, PNG rendering and denoising runs.

mod error;
pub mod io;
pub mod noise;
pub mod phantom;
pub mod render;
pub mod run;

pub use error::CliError;
pub use io::{read_mvd, write_mvd};
pub use noise::{add_noise, NoiseSpec};
pub use phantom::{phantom, Phantom};
pub use render::{render, render_png};
pub use run::{mse, run_denoise, write_trace, DenoiseSettings};
