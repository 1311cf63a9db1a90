//! The rotation group SO(3) with its bi-invariant metric.
//!
//! Points are 3×3 matrices (row-major). A tangent vector at R is stored as
//! the 3-vector ω of the left-trivialized velocity R[ω]×, so the metric is
//! the dot product of the ω's and distances are rotation angles.

use nalgebra::{Matrix3, Rotation3, Vector3};

use crate::error::{Error, Result};

/// Rotation angles within this distance of π are treated as cut points.
pub const CUT_TOLERANCE: f64 = 1e-12;

pub(crate) fn mat(c: &[f64]) -> Matrix3<f64> {
    Matrix3::from_row_slice(c)
}

pub(crate) fn flat(m: &Matrix3<f64>) -> Vec<f64> {
    let mut out = Vec::with_capacity(9);
    for i in 0..3 {
        for j in 0..3 {
            out.push(m[(i, j)]);
        }
    }
    out
}

fn vec3(v: &[f64]) -> Vector3<f64> {
    Vector3::new(v[0], v[1], v[2])
}

/// Rodrigues exponential of [ω]×.
fn expm(w: &Vector3<f64>) -> Matrix3<f64> {
    Rotation3::new(*w).into_inner()
}

/// Axis-angle vector of a rotation matrix, angle in [0, π].
fn logm(r: &Matrix3<f64>) -> (Vector3<f64>, f64) {
    let skew = Vector3::new(
        r[(2, 1)] - r[(1, 2)],
        r[(0, 2)] - r[(2, 0)],
        r[(1, 0)] - r[(0, 1)],
    ) * 0.5;
    let s = skew.norm();
    let c = 0.5 * (r.trace() - 1.0);
    let angle = s.atan2(c);
    if s > 1e-6 || c > 0.0 {
        // away from π the skew part determines the axis
        let factor = if s < 1e-15 { 1.0 } else { angle / s };
        (skew * factor, angle)
    } else {
        // near π: axis from the symmetric part (R + I)/2 ≈ n nᵀ
        let b = (r + Matrix3::identity()) * 0.5;
        let mut k = 0;
        for j in 1..3 {
            if b[(j, j)] > b[(k, k)] {
                k = j;
            }
        }
        let mut n: Vector3<f64> = b.column(k).into();
        n /= n.norm();
        if n.dot(&skew) < 0.0 {
            n = -n;
        }
        (n * angle, angle)
    }
}

pub(crate) fn exp(x: &[f64], v: &[f64]) -> Vec<f64> {
    flat(&(mat(x) * expm(&vec3(v))))
}

pub(crate) fn log(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let rel = mat(x).transpose() * mat(y);
    let (w, angle) = logm(&rel);
    if angle > std::f64::consts::PI - CUT_TOLERANCE {
        return Err(Error::cut_locus());
    }
    Ok(w.as_slice().to_vec())
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    logm(&(mat(x).transpose() * mat(y))).1
}

/// Along R exp(t[v]×) the left-trivialized parallel field solves
/// ω' = −½ v × ω, i.e. ω rotates by −t‖v‖/2 about v.
pub(crate) fn transport_along(v: &[f64], t: f64, xi: &[f64]) -> Vec<f64> {
    let rot = expm(&(vec3(v) * (-0.5 * t)));
    (rot * vec3(xi)).as_slice().to_vec()
}

/// Curvature eigenframe: κ = 0 along v, κ = ‖v‖²/4 across.
pub(crate) fn eigenframe(v: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let v = vec3(v);
    let nv = v.norm();
    if nv < 1e-300 {
        return (0..3)
            .map(|k| {
                let mut e = vec![0.0; 3];
                e[k] = 1.0;
                (e, 0.0)
            })
            .collect();
    }
    let u = v / nv;
    let mut k = 0;
    for j in 1..3 {
        if u[j].abs() < u[k].abs() {
            k = j;
        }
    }
    let mut e = Vector3::zeros();
    e[k] = 1.0;
    let b1 = (e - u * u.dot(&e)).normalize();
    let b2 = u.cross(&b1);
    let kappa = 0.25 * nv * nv;
    vec![
        (u.as_slice().to_vec(), 0.0),
        (b1.as_slice().to_vec(), kappa),
        (b2.as_slice().to_vec(), kappa),
    ]
}

pub(crate) fn check_point(x: &[f64]) -> Result<()> {
    let r = mat(x);
    if (r.transpose() * r - Matrix3::identity()).amax() > 1e-10 {
        return Err(Error::invalid("rotation matrix is not orthogonal"));
    }
    if (r.determinant() - 1.0).abs() > 1e-10 {
        return Err(Error::invalid("rotation matrix has determinant != +1"));
    }
    Ok(())
}
