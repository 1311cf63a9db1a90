//! The unit sphere S² embedded in ℝ³.

use crate::error::{Error, Result};

/// `⟨x, y⟩ ≤ −1 + CUT_TOLERANCE` is treated as an antipodal pair.
pub const CUT_TOLERANCE: f64 = 1e-12;

pub(crate) fn dot(a: &[f64], b: &[f64]) -> f64 {
    a[0] * b[0] + a[1] * b[1] + a[2] * b[2]
}

pub(crate) fn cross(a: &[f64], b: &[f64]) -> [f64; 3] {
    [
        a[1] * b[2] - a[2] * b[1],
        a[2] * b[0] - a[0] * b[2],
        a[0] * b[1] - a[1] * b[0],
    ]
}

fn norm(a: &[f64]) -> f64 {
    dot(a, a).sqrt()
}

pub(crate) fn exp(x: &[f64], v: &[f64]) -> Vec<f64> {
    let t = norm(v);
    if t < 1e-300 {
        return x.to_vec();
    }
    let (s, c) = t.sin_cos();
    let mut y: Vec<f64> = (0..3).map(|k| c * x[k] + s * v[k] / t).collect();
    let n = norm(&y);
    y.iter_mut().for_each(|e| *e /= n);
    y
}

pub(crate) fn log(x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
    let c = dot(x, y);
    if c <= -1.0 + CUT_TOLERANCE {
        return Err(Error::cut_locus());
    }
    let w: Vec<f64> = (0..3).map(|k| y[k] - c * x[k]).collect();
    let nw = norm(&w);
    if nw < 1e-300 {
        return Ok(vec![0.0; 3]);
    }
    let theta = nw.atan2(c);
    Ok(w.iter().map(|e| theta * e / nw).collect())
}

pub(crate) fn dist(x: &[f64], y: &[f64]) -> f64 {
    norm(&cross(x, y)).atan2(dot(x, y))
}

/// Parallel transport of `xi` along t ↦ exp_x(t v) up to parameter `t`.
pub(crate) fn transport_along(x: &[f64], v: &[f64], t: f64, xi: &[f64]) -> Vec<f64> {
    let nv = norm(v);
    if nv < 1e-300 {
        return xi.to_vec();
    }
    let u: Vec<f64> = v.iter().map(|e| e / nv).collect();
    let (s, c) = (t * nv).sin_cos();
    let a = dot(xi, &u);
    (0..3)
        .map(|k| xi[k] + a * ((c - 1.0) * u[k] - s * x[k]))
        .collect()
}

/// Deterministic orthonormal basis of the tangent plane at `x`.
pub(crate) fn basis(x: &[f64]) -> [Vec<f64>; 2] {
    // axis least aligned with x
    let mut k = 0;
    for j in 1..3 {
        if x[j].abs() < x[k].abs() {
            k = j;
        }
    }
    let mut e = [0.0; 3];
    e[k] = 1.0;
    let a = dot(&e, x);
    let mut b1: Vec<f64> = (0..3).map(|j| e[j] - a * x[j]).collect();
    let n = norm(&b1);
    b1.iter_mut().for_each(|c| *c /= n);
    let b2 = cross(x, &b1).to_vec();
    [b1, b2]
}

/// Curvature eigenframe along the geodesic with initial velocity `v`:
/// direction of travel (κ = 0) and its rotation by 90° (κ = ‖v‖²).
pub(crate) fn eigenframe(x: &[f64], v: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let nv = norm(v);
    if nv < 1e-300 {
        let [b1, b2] = basis(x);
        return vec![(b1, 0.0), (b2, 0.0)];
    }
    let u: Vec<f64> = v.iter().map(|e| e / nv).collect();
    let w = cross(x, &u).to_vec();
    vec![(u, 0.0), (w, nv * nv)]
}
