//! Tangent Gaussian noise: per pixel, exp of an isotropic Gaussian tangent
//! vector drawn in an orthonormal basis.

use manivar::model::ManifoldImage;
use manivar::sample::gaussian_tangent_coords;
use rand::SeedableRng;
use rand_chacha::ChaCha8Rng;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct NoiseSpec {
    /// Standard deviation per tangent coordinate.
    pub sigma: f64,
    pub seed: u64,
}

impl NoiseSpec {
    pub fn new(sigma: f64, seed: u64) -> Result<Self, CliError> {
        if !(sigma >= 0.0 && sigma.is_finite()) {
            return Err(CliError::usage(format!(
                "--sigma must be finite and non-negative, got {sigma}"
            )));
        }
        Ok(NoiseSpec { sigma, seed })
    }
}

/// Pixels are drawn in row-major order from one ChaCha8 stream.
pub fn add_noise(u: &ManifoldImage, spec: &NoiseSpec) -> Result<ManifoldImage, CliError> {
    let spec = NoiseSpec::new(spec.sigma, spec.seed)?;
    if spec.sigma == 0.0 {
        return Ok(u.clone());
    }
    let mut rng = ChaCha8Rng::seed_from_u64(spec.seed);
    let tag = u.tag();
    let mut data = Vec::with_capacity(u.data().len());
    for i in 0..u.len() {
        let v = gaussian_tangent_coords(tag, u.px(i), spec.sigma, &mut rng);
        data.extend(tag.exp(u.px(i), &v));
    }
    Ok(ManifoldImage::new(tag.clone(), u.n1(), u.n2(), data)?)
}
