//! Random points and tangent vectors, for noise models and randomized tests.

use rand::Rng;
use rand_distr::StandardNormal;

use crate::manifold::{self, ManifoldTag, Point, TangentVector};

/// Isotropic Gaussian tangent vector at `x`: independent N(0, σ²)
/// coordinates in an orthonormal basis of T_x.
pub fn gaussian_tangent_coords<R: Rng + ?Sized>(
    tag: &ManifoldTag,
    x: &[f64],
    sigma: f64,
    rng: &mut R,
) -> Vec<f64> {
    let mut v = tag.zero_tangent();
    for b in tag.tangent_basis(x) {
        let c: f64 = rng.sample(StandardNormal);
        manifold::axpy(sigma * c, &b, &mut v);
    }
    v
}

/// A random point: standard normal on Euclidean spaces, uniform on the
/// circle, the sphere and the rotations, and exp of a Gaussian tangent
/// vector of scale ½ at the identity on SPD.
pub fn random_coords<R: Rng + ?Sized>(tag: &ManifoldTag, rng: &mut R) -> Vec<f64> {
    match tag {
        ManifoldTag::Euclidean(m) => (0..*m).map(|_| rng.sample(StandardNormal)).collect(),
        ManifoldTag::Circle => vec![rng.gen_range(-std::f64::consts::PI..std::f64::consts::PI)],
        ManifoldTag::Sphere2 => loop {
            let v: Vec<f64> = (0..3).map(|_| rng.sample(StandardNormal)).collect();
            let n = v.iter().map(|c| c * c).sum::<f64>().sqrt();
            if n > 1e-8 {
                break v.iter().map(|c| c / n).collect();
            }
        },
        ManifoldTag::Spd(d) => {
            let mut eye = vec![0.0; d * d];
            (0..*d).for_each(|i| eye[i * d + i] = 1.0);
            let v = gaussian_tangent_coords(tag, &eye, 0.5, rng);
            tag.exp(&eye, &v)
        }
        ManifoldTag::Rotations3 => {
            // uniform on SO(3) from a uniform unit quaternion
            let q: Vec<f64> = loop {
                let q: Vec<f64> = (0..4).map(|_| rng.sample(StandardNormal)).collect();
                let n = q.iter().map(|c| c * c).sum::<f64>().sqrt();
                if n > 1e-8 {
                    break q.iter().map(|c| c / n).collect();
                }
            };
            let (w, x, y, z) = (q[0], q[1], q[2], q[3]);
            vec![
                1.0 - 2.0 * (y * y + z * z),
                2.0 * (x * y - w * z),
                2.0 * (x * z + w * y),
                2.0 * (x * y + w * z),
                1.0 - 2.0 * (x * x + z * z),
                2.0 * (y * z - w * x),
                2.0 * (x * z - w * y),
                2.0 * (y * z + w * x),
                1.0 - 2.0 * (x * x + y * y),
            ]
        }
        ManifoldTag::Product(v) => v.iter().flat_map(|t| random_coords(t, rng)).collect(),
        ManifoldTag::Power(b, n) => (0..*n).flat_map(|_| random_coords(b, rng)).collect(),
    }
}

pub fn random_point<R: Rng + ?Sized>(tag: &ManifoldTag, rng: &mut R) -> Point {
    Point::from_chart(tag.clone(), random_coords(tag, rng))
}

pub fn gaussian_tangent<R: Rng + ?Sized>(x: &Point, sigma: f64, rng: &mut R) -> TangentVector {
    let v = gaussian_tangent_coords(x.tag(), x.coords(), sigma, rng);
    TangentVector::from_chart(x.clone(), v)
}

/// A tangent vector at `x` with uniformly random direction and the given norm.
pub fn tangent_with_norm<R: Rng + ?Sized>(x: &Point, norm: f64, rng: &mut R) -> TangentVector {
    let v = gaussian_tangent(x, 1.0, rng);
    let n = v.norm();
    if n == 0.0 {
        return v;
    }
    v.scaled(norm / n)
}
