//! Symmetric positive definite matrices with the affine-invariant metric
//! ⟨v, w⟩ₓ = tr(x⁻¹ v x⁻¹ w).
//!
//! Points and tangent vectors are stored as full d×d matrices in row-major
//! order. Every result is symmetrized before it is returned.

use nalgebra::DMatrix;

use crate::error::{Error, Result};

pub(crate) fn mat(d: usize, c: &[f64]) -> DMatrix<f64> {
    DMatrix::from_row_slice(d, d, c)
}

pub(crate) fn flat(m: &DMatrix<f64>) -> Vec<f64> {
    let d = m.nrows();
    let mut out = Vec::with_capacity(d * d);
    for i in 0..d {
        for j in 0..d {
            out.push(0.5 * (m[(i, j)] + m[(j, i)]));
        }
    }
    out
}

/// Eigen-decomposition with eigenvalues in ascending order.
pub(crate) fn eig_sorted(m: &DMatrix<f64>) -> (Vec<f64>, DMatrix<f64>) {
    let sym = 0.5 * (m + m.transpose());
    let e = sym.symmetric_eigen();
    let d = m.nrows();
    let mut idx: Vec<usize> = (0..d).collect();
    idx.sort_by(|&a, &b| e.eigenvalues[a].total_cmp(&e.eigenvalues[b]));
    let vals = idx.iter().map(|&i| e.eigenvalues[i]).collect();
    let mut q = DMatrix::zeros(d, d);
    for (c, &i) in idx.iter().enumerate() {
        q.set_column(c, &e.eigenvectors.column(i));
    }
    (vals, q)
}

fn spectral(vals: &[f64], q: &DMatrix<f64>, f: impl Fn(f64) -> f64) -> DMatrix<f64> {
    let d = q.nrows();
    let mut diag = DMatrix::zeros(d, d);
    for i in 0..d {
        diag[(i, i)] = f(vals[i]);
    }
    q * diag * q.transpose()
}

pub(crate) fn expm_sym(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (v, q) = eig_sorted(m);
    spectral(&v, &q, f64::exp)
}

pub(crate) fn logm_spd(m: &DMatrix<f64>) -> DMatrix<f64> {
    let (v, q) = eig_sorted(m);
    spectral(&v, &q, f64::ln)
}

/// x^{1/2} and x^{−1/2} of a base point.
pub(crate) struct Whitening {
    pub sqrt: DMatrix<f64>,
    pub isqrt: DMatrix<f64>,
}

impl Whitening {
    pub fn new(d: usize, x: &[f64]) -> Self {
        let (v, q) = eig_sorted(&mat(d, x));
        Whitening {
            sqrt: spectral(&v, &q, f64::sqrt),
            isqrt: spectral(&v, &q, |l| 1.0 / l.sqrt()),
        }
    }

    /// Pulls a matrix at x back to the identity: x^{−1/2} m x^{−1/2}.
    pub fn whiten(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.isqrt * m * &self.isqrt
    }

    /// Pushes a matrix at the identity forward to x: x^{1/2} m x^{1/2}.
    pub fn color(&self, m: &DMatrix<f64>) -> DMatrix<f64> {
        &self.sqrt * m * &self.sqrt
    }
}

pub(crate) fn exp(d: usize, x: &[f64], v: &[f64]) -> Vec<f64> {
    let w = Whitening::new(d, x);
    flat(&w.color(&expm_sym(&w.whiten(&mat(d, v)))))
}

pub(crate) fn log(d: usize, x: &[f64], y: &[f64]) -> Vec<f64> {
    let w = Whitening::new(d, x);
    flat(&w.color(&logm_spd(&w.whiten(&mat(d, y)))))
}

pub(crate) fn dist(d: usize, x: &[f64], y: &[f64]) -> f64 {
    let w = Whitening::new(d, x);
    let (vals, _) = eig_sorted(&w.whiten(&mat(d, y)));
    vals.iter().map(|l| l.ln().powi(2)).sum::<f64>().sqrt()
}

pub(crate) fn inner(d: usize, x: &[f64], v: &[f64], u: &[f64]) -> f64 {
    let w = Whitening::new(d, x);
    let a = w.whiten(&mat(d, v));
    let b = w.whiten(&mat(d, u));
    (a * b).trace()
}

pub(crate) fn transport_along(d: usize, x: &[f64], v: &[f64], t: f64, xi: &[f64]) -> Vec<f64> {
    let w = Whitening::new(d, x);
    let half = expm_sym(&(w.whiten(&mat(d, v)) * (0.5 * t)));
    let e = &w.sqrt * half * &w.isqrt;
    flat(&(&e * mat(d, xi) * e.transpose()))
}

fn sym_unit(d: usize, i: usize, j: usize) -> DMatrix<f64> {
    let mut m = DMatrix::zeros(d, d);
    if i == j {
        m[(i, i)] = 1.0;
    } else {
        let s = std::f64::consts::FRAC_1_SQRT_2;
        m[(i, j)] = s;
        m[(j, i)] = s;
    }
    m
}

/// Orthonormal basis of T_x: x^{1/2} B x^{1/2} for the standard symmetric
/// basis B at the identity (diagonal units first, then off-diagonal pairs).
pub(crate) fn basis(d: usize, x: &[f64]) -> Vec<Vec<f64>> {
    let w = Whitening::new(d, x);
    let mut out = Vec::with_capacity(d * (d + 1) / 2);
    for i in 0..d {
        out.push(flat(&w.color(&sym_unit(d, i, i))));
    }
    for i in 0..d {
        for j in i + 1..d {
            out.push(flat(&w.color(&sym_unit(d, i, j))));
        }
    }
    out
}

fn outer_sym(a: &DMatrix<f64>, i: usize, j: usize) -> DMatrix<f64> {
    let qi = a.column(i);
    let qj = a.column(j);
    if i == j {
        qi * qi.transpose()
    } else {
        (qi * qj.transpose() + qj * qi.transpose()) * std::f64::consts::FRAC_1_SQRT_2
    }
}

fn frob(a: &DMatrix<f64>, b: &DMatrix<f64>) -> f64 {
    a.component_mul(b).sum()
}

/// Curvature eigenframe at x for the geodesic with initial velocity v.
///
/// In the whitened chart the curvature operator is R(ξ, V)V = −¼[[ξ, V], V];
/// with V = Q diag(λ) Qᵀ its eigenvectors are q_i q_iᵀ (κ = 0) and the
/// symmetrized q_i q_jᵀ (κ = −¼(λ_i − λ_j)²). The κ = 0 block is
/// re-orthonormalized so that V/‖V‖ comes first.
pub(crate) fn eigenframe(d: usize, x: &[f64], v: &[f64]) -> Vec<(Vec<f64>, f64)> {
    let w = Whitening::new(d, x);
    let vw = w.whiten(&mat(d, v));
    let vw = 0.5 * (&vw + vw.transpose());
    let (lam, q) = eig_sorted(&vw);
    let nv = vw.norm();

    let mut flat_block: Vec<DMatrix<f64>> = Vec::with_capacity(d);
    if nv > 1e-300 {
        flat_block.push(&vw / nv);
        let drop = (0..d)
            .max_by(|&a, &b| lam[a].abs().total_cmp(&lam[b].abs()))
            .unwrap_or(0);
        for i in (0..d).filter(|&i| i != drop) {
            let mut e = outer_sym(&q, i, i);
            for b in &flat_block {
                let c = frob(&e, b);
                e -= b * c;
            }
            let n = e.norm();
            flat_block.push(e / n);
        }
    } else {
        for i in 0..d {
            flat_block.push(outer_sym(&q, i, i));
        }
    }

    let mut out: Vec<(Vec<f64>, f64)> = flat_block
        .iter()
        .map(|e| (flat(&w.color(e)), 0.0))
        .collect();
    for i in 0..d {
        for j in i + 1..d {
            let kappa = -0.25 * (lam[i] - lam[j]).powi(2);
            out.push((flat(&w.color(&outer_sym(&q, i, j))), kappa));
        }
    }
    out
}

pub(crate) fn check_point(d: usize, x: &[f64]) -> Result<()> {
    let m = mat(d, x);
    let scale = m.amax().max(1.0);
    if (&m - m.transpose()).amax() > 1e-12 * scale {
        return Err(Error::invalid("SPD point is not symmetric"));
    }
    let (vals, _) = eig_sorted(&m);
    if !(vals[0] > 0.0) || vals.iter().any(|v| !v.is_finite()) {
        return Err(Error::invalid("SPD point is not positive definite"));
    }
    Ok(())
}

#[cfg(test)]
mod tests {
    use super::*;

    fn eye(d: usize) -> Vec<f64> {
        flat(&DMatrix::identity(d, d))
    }

    #[test]
    fn exp_at_identity_is_matrix_exponential() {
        let v = [0.3, 0.1, 0.1, -0.2];
        let y = exp(2, &eye(2), &v);
        // series oracle for the matrix exponential
        let m = mat(2, &v);
        let mut term = DMatrix::identity(2, 2);
        let mut sum = DMatrix::identity(2, 2);
        for k in 1..30 {
            term = &term * &m / k as f64;
            sum += &term;
        }
        for (a, b) in y.iter().zip(flat(&sum)) {
            assert!((a - b).abs() < 1e-14);
        }
    }

    #[test]
    fn distance_to_scaled_axis() {
        let y = flat(&DMatrix::from_diagonal(&nalgebra::DVector::from_vec(vec![
            std::f64::consts::E,
            1.0,
            1.0,
        ])));
        assert!((dist(3, &eye(3), &y) - 1.0).abs() < 1e-14);
    }

    #[test]
    fn eigenframe_is_orthonormal_and_velocity_first() {
        let x = [2.0, 0.3, 0.3, 1.0];
        let v = [0.4, -0.2, -0.2, 0.9];
        let frame = eigenframe(2, &x, &v);
        assert_eq!(frame.len(), 3);
        for (a, (ea, _)) in frame.iter().enumerate() {
            for (b, (eb, _)) in frame.iter().enumerate() {
                let g = inner(2, &x, ea, eb);
                let want = if a == b { 1.0 } else { 0.0 };
                assert!((g - want).abs() < 1e-12, "{a} {b} {g}");
            }
        }
        let nv = inner(2, &x, &v, &v).sqrt();
        let c = inner(2, &x, &frame[0].0, &v) / nv;
        assert!((c - 1.0).abs() < 1e-12);
        assert!(frame.iter().all(|(_, k)| *k <= 0.0));
    }
}
