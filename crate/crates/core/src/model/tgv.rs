//! The TGV regularizer: the infimum over tangent fields of β·R₁ + (1−β)·R₂.
//!
//! In orthonormal coordinates of each tangent space the objective is a sum
//! of Euclidean norms of affine maps of the field (transport is linear), so
//! the inner problem is convex. Small problems are solved with a log-barrier
//! Newton method, large ones with primal-dual hybrid gradient iterations.

use nalgebra::{DMatrix, DVector};

use super::terms::{self, Block};
use super::{forward_differences, tgv_terms, tv, ManifoldImage, TangentField};
use crate::error::{Error, Result};
use crate::manifold;

/// Problems with at most this many unknowns use the barrier method.
const BARRIER_MAX_VARS: usize = 240;
const PDHG_MAX_ITER: usize = 20_000;

/// Result of [`tgv`].
#[derive(Debug, Clone)]
pub struct TgvValue {
    pub value: f64,
    /// The minimizing tangent field.
    pub field: TangentField,
    pub converged: bool,
}

/// One norm term w·‖A c − b‖ with sparse rows.
#[derive(Debug, Clone)]
pub(crate) struct NormGroup {
    pub weight: f64,
    pub rows: Vec<Vec<(usize, f64)>>,
    pub b: Vec<f64>,
}

impl NormGroup {
    fn residual(&self, c: &[f64]) -> Vec<f64> {
        self.rows
            .iter()
            .zip(&self.b)
            .map(|(row, b)| row.iter().map(|&(j, a)| a * c[j]).sum::<f64>() - b)
            .collect()
    }
}

/// Minimizes Σ w_g ‖A_g c − b_g‖ over c ∈ ℝⁿ.
#[derive(Debug, Clone)]
pub(crate) struct SumOfNorms {
    pub n: usize,
    pub groups: Vec<NormGroup>,
}

impl SumOfNorms {
    pub fn value(&self, c: &[f64]) -> f64 {
        let v: Vec<f64> = self
            .groups
            .iter()
            .map(|g| g.weight * norm(&g.residual(c)))
            .collect();
        super::pairwise_sum(&v)
    }

    pub fn solve(&self, c0: &[f64]) -> (Vec<f64>, bool) {
        if self.n <= BARRIER_MAX_VARS {
            self.barrier(c0)
        } else {
            self.pdhg(c0)
        }
    }

    /// Barrier function of the cones ‖r_g‖ ≤ t_g with t eliminated:
    /// for ρ = ‖r‖ and q = √(1 + s²w²ρ²) the optimal t is (1 + q)/(s w)
    /// and the reduced term is (1 + q) − ln(2(1 + q)/(s²w²)).
    fn barrier_value(&self, s: f64, c: &[f64]) -> f64 {
        self.groups
            .iter()
            .map(|g| {
                let sw = s * g.weight;
                let rho = norm(&g.residual(c));
                let q = (1.0 + (sw * rho).powi(2)).sqrt();
                (1.0 + q) - (2.0 * (1.0 + q) / (sw * sw)).ln()
            })
            .sum()
    }

    fn barrier_newton(&self, s: f64, c: &[f64]) -> (DVector<f64>, DMatrix<f64>) {
        let mut grad = DVector::zeros(self.n);
        let mut hess = DMatrix::zeros(self.n, self.n);
        for g in &self.groups {
            let sw = s * g.weight;
            let r = g.residual(c);
            let rho = norm(&r);
            let q = (1.0 + (sw * rho).powi(2)).sqrt();
            let t = (1.0 + q) / sw;
            // h'(ρ)/ρ and h''(ρ)
            let a1 = sw / t;
            let a2 = (1.0 + q) / (q * t * t);
            let dim = r.len();
            let u: Vec<f64> = if rho > 0.0 {
                r.iter().map(|v| v / rho).collect()
            } else {
                vec![0.0; dim]
            };
            for (k, row) in g.rows.iter().enumerate() {
                for &(j, a) in row {
                    grad[j] += a * a1 * r[k];
                }
            }
            for k1 in 0..dim {
                for k2 in 0..dim {
                    let mut m = (a2 - a1) * u[k1] * u[k2];
                    if k1 == k2 {
                        m += a1;
                    }
                    if m == 0.0 {
                        continue;
                    }
                    for &(i, a) in &g.rows[k1] {
                        for &(j, b) in &g.rows[k2] {
                            hess[(i, j)] += a * m * b;
                        }
                    }
                }
            }
        }
        (grad, hess)
    }

    fn barrier(&self, c0: &[f64]) -> (Vec<f64>, bool) {
        let cones = self.groups.len() as f64;
        let mut c = c0.to_vec();
        let f0 = self.value(&c).max(1e-3);
        let mut s = cones / f0;
        let mut converged = false;
        for _ in 0..60 {
            for _ in 0..80 {
                let (grad, hess) = self.barrier_newton(s, &c);
                let step = match hess.clone().cholesky() {
                    Some(ch) => ch.solve(&(-&grad)),
                    None => {
                        let ridge = 1e-14 * hess.diagonal().amax().max(1.0);
                        let h = hess + DMatrix::identity(self.n, self.n) * ridge;
                        match h.lu().solve(&(-&grad)) {
                            Some(d) => d,
                            None => break,
                        }
                    }
                };
                let dec = -grad.dot(&step);
                if !(dec > 1e-11) {
                    break;
                }
                let f = self.barrier_value(s, &c);
                let mut alpha = 1.0;
                let mut moved = false;
                for _ in 0..60 {
                    let trial: Vec<f64> = c
                        .iter()
                        .zip(step.iter())
                        .map(|(a, d)| a + alpha * d)
                        .collect();
                    if self.barrier_value(s, &trial) <= f - 0.25 * alpha * dec {
                        c = trial;
                        moved = true;
                        break;
                    }
                    alpha *= 0.5;
                }
                if !moved {
                    break;
                }
            }
            // each cone contributes 2/s to the duality gap
            if 2.0 * cones / s <= 1e-12 * self.value(&c).max(1.0) {
                converged = true;
                break;
            }
            s *= 8.0;
        }
        (c, converged)
    }

    /// Chambolle–Pock iterations for min_c Σ w_g‖A_g c − b_g‖.
    fn pdhg(&self, c0: &[f64]) -> (Vec<f64>, bool) {
        let apply = |c: &[f64]| -> Vec<Vec<f64>> {
            self.groups
                .iter()
                .map(|g| {
                    g.rows
                        .iter()
                        .map(|row| row.iter().map(|&(j, a)| a * c[j]).sum())
                        .collect()
                })
                .collect()
        };
        let apply_t = |y: &[Vec<f64>]| -> Vec<f64> {
            let mut out = vec![0.0; self.n];
            for (g, yg) in self.groups.iter().zip(y) {
                for (row, &v) in g.rows.iter().zip(yg) {
                    for &(j, a) in row {
                        out[j] += a * v;
                    }
                }
            }
            out
        };
        // operator norm by power iteration
        let mut v: Vec<f64> = (0..self.n).map(|k| 1.0 + (k % 7) as f64 * 0.1).collect();
        let mut op = 1.0;
        for _ in 0..50 {
            let nv = norm(&v);
            if nv == 0.0 {
                break;
            }
            v.iter_mut().for_each(|x| *x /= nv);
            v = apply_t(&apply(&v));
            op = norm(&v).sqrt();
        }
        let step = 0.95 / (1.1 * op).max(1e-12);
        let mut c = c0.to_vec();
        let mut cbar = c.clone();
        let mut y: Vec<Vec<f64>> = self.groups.iter().map(|g| vec![0.0; g.b.len()]).collect();
        let mut best = (self.value(&c), c.clone());
        let mut last_check = best.0;
        for it in 1..=PDHG_MAX_ITER {
            let kc = apply(&cbar);
            for ((g, yg), kg) in self.groups.iter().zip(y.iter_mut()).zip(kc) {
                for k in 0..yg.len() {
                    yg[k] += step * (kg[k] - g.b[k]);
                }
                let n = norm(yg);
                if n > g.weight {
                    yg.iter_mut().for_each(|v| *v *= g.weight / n);
                }
            }
            let kt = apply_t(&y);
            let prev = c.clone();
            for j in 0..self.n {
                c[j] -= step * kt[j];
                cbar[j] = 2.0 * c[j] - prev[j];
            }
            if it % 50 == 0 {
                let val = self.value(&c);
                if val < best.0 {
                    best = (val, c.clone());
                }
                if (last_check - val).abs() <= 1e-10 * val.max(1.0) {
                    return (best.1, true);
                }
                last_check = val;
            }
        }
        (best.1, false)
    }
}

fn norm(v: &[f64]) -> f64 {
    v.iter().map(|x| x * x).sum::<f64>().sqrt()
}

/// TGV(u) = inf_ξ β·R₁(u, ξ) + (1 − β)·R₂(ξ), with the minimizing field.
pub fn tgv(u: &ManifoldImage, beta: f64, p: u8) -> Result<TgvValue> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    super::check_p(p)?;
    let tag = u.tag();
    let n = u.len();
    let m = tag.tangent_len();
    let grad = forward_differences(u)?;
    let bases: Vec<Vec<Vec<f64>>> = (0..n).map(|i| tag.tangent_basis(u.px(i))).collect();
    let d = tag.dim();
    let coeffs = |i: usize, v: &[f64]| -> Vec<f64> {
        bases[i].iter().map(|e| tag.inner(u.px(i), e, v)).collect()
    };
    let idx = |k: usize, i: usize, l: usize| (k * n + i) * d + l;

    let mut groups = Vec::new();
    let families = terms::tgv_r1_families(u, p, beta)
        .into_iter()
        .chain(terms::tgv_r2_families(u, p, 1.0 - beta));
    for fam in families {
        for group in &fam.groups {
            let mut rows = Vec::new();
            let mut b = Vec::new();
            for block in group {
                match *block {
                    Block::Gap { k, a, .. } => {
                        let target = coeffs(a, grad.at(k, a));
                        for l in 0..d {
                            rows.push(vec![(idx(k, a, l), 1.0)]);
                            b.push(target[l]);
                        }
                    }
                    Block::FieldDiff { k, i, j } => {
                        // transported basis of T_{u_j} in coordinates of T_{u_i}
                        let q: Vec<Vec<f64>> = bases[j]
                            .iter()
                            .map(|e| {
                                tag.transport(u.px(j), u.px(i), e)
                                    .map(|t| coeffs(i, &t))
                                    .map_err(|e| e.at_index(i))
                            })
                            .collect::<Result<_>>()?;
                        for l in 0..d {
                            let mut row = vec![(idx(k, i, l), 1.0)];
                            for (lp, col) in q.iter().enumerate() {
                                if col[l] != 0.0 {
                                    row.push((idx(k, j, lp), -col[l]));
                                }
                            }
                            rows.push(row);
                            b.push(0.0);
                        }
                    }
                    _ => unreachable!("TGV families hold only gap and field blocks"),
                }
            }
            groups.push(NormGroup {
                weight: fam.weight,
                rows,
                b,
            });
        }
    }
    let problem = SumOfNorms {
        n: 2 * n * d,
        groups,
    };
    let (c, converged) = problem.solve(&vec![0.0; problem.n]);

    let mut fields = [vec![0.0; n * m], vec![0.0; n * m]];
    for (k, field) in fields.iter_mut().enumerate() {
        for i in 0..n {
            let mut v = vec![0.0; m];
            for l in 0..d {
                manifold::axpy(c[idx(k, i, l)], &bases[i][l], &mut v);
            }
            field[i * m..(i + 1) * m].copy_from_slice(&v);
        }
    }
    let [x, y] = fields;
    let field = TangentField::from_parts(u.clone(), x, y);
    let (r1, r2) = tgv_terms(u, &field, p)?;
    let value = beta * r1 + (1.0 - beta) * r2;
    // ξ = 0 is always feasible
    let bound = beta * tv(u, p)?;
    if bound < value {
        return Ok(TgvValue {
            value: bound,
            field: TangentField::zeros(u),
            converged,
        });
    }
    if !converged {
        log::warn!("TGV inner minimization stopped before reaching its tolerance");
    }
    Ok(TgvValue {
        value,
        field,
        converged,
    })
}
