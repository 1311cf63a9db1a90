//! Proximal maps of distance-based terms.
//!
//! Throughout, "power 2" means the halved square: the prox of λ·(1/p)·d^p
//! is computed for p ∈ {1, 2}.

use std::f64::consts::PI;

use nalgebra::DMatrix;

use crate::error::{Error, Result};
use crate::manifold::circle::wrap;
use crate::manifold::{self, ManifoldTag, Point};
use crate::model::terms::Block;
use crate::model::{Iterate, ManifoldImage};

/// Gradient-norm threshold of the numerical prox.
pub const NUMERIC_TOLERANCE: f64 = 1e-8;
/// Iteration cap of the numerical prox.
pub const NUMERIC_MAX_ITER: usize = 200;

/// Output of a proximal map.
#[derive(Debug, Clone, PartialEq)]
pub struct ProxResult {
    /// One point per argument of the term.
    pub points: Vec<Point>,
    /// True when the prox is set-valued at this input.
    pub multivalued: bool,
    /// The second branch of a two-fold prox.
    pub alternatives: Option<Vec<Point>>,
    /// False when a numerical prox stopped at its iteration cap.
    pub converged: bool,
}

impl ProxResult {
    fn single(points: Vec<Point>) -> Self {
        ProxResult {
            points,
            multivalued: false,
            alternatives: None,
            converged: true,
        }
    }
}

fn check_lambda(lambda: f64) -> Result<()> {
    if lambda > 0.0 && lambda.is_finite() {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "prox parameter must be positive, got {lambda}"
        )))
    }
}

fn check_power(p: u8) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(Error::invalid(format!("power must be 1 or 2, got {p}")))
    }
}

/// Geodesic parameter of the prox of λ·(1/p)·dist(·, y)^p.
pub fn point_step(d: f64, lambda: f64, p: u8) -> f64 {
    match p {
        1 if d == 0.0 => 0.0,
        1 => (lambda / d).min(1.0),
        _ => lambda / (1.0 + lambda),
    }
}

/// Geodesic parameter of the prox of λ·(1/p)·dist(x, y)^p in both arguments.
pub fn pair_step(d: f64, lambda: f64, p: u8) -> f64 {
    match p {
        1 if d == 0.0 => 0.0,
        1 => (lambda / d).min(0.5),
        _ => lambda / (1.0 + 2.0 * lambda),
    }
}

pub(crate) fn prox_point_chart(
    tag: &ManifoldTag,
    x: &[f64],
    y: &[f64],
    lambda: f64,
    p: u8,
) -> Result<Vec<f64>> {
    let v = tag.log(x, y)?;
    let t = point_step(tag.norm(x, &v), lambda, p);
    Ok(tag.exp(x, &manifold::scale(&v, t)))
}

pub(crate) fn prox_pair_chart(
    tag: &ManifoldTag,
    x: &[f64],
    y: &[f64],
    lambda: f64,
    p: u8,
) -> Result<(Vec<f64>, Vec<f64>)> {
    let v = tag.log(x, y)?;
    let t = pair_step(tag.norm(x, &v), lambda, p);
    if t == 0.0 {
        return Ok((x.to_vec(), y.to_vec()));
    }
    let w = tag.log(y, x)?;
    Ok((
        tag.exp(x, &manifold::scale(&v, t)),
        tag.exp(y, &manifold::scale(&w, t)),
    ))
}

fn same_tags(points: &[&Point]) -> Result<()> {
    let tag = points[0].tag();
    if points.iter().all(|p| p.tag() == tag) {
        Ok(())
    } else {
        Err(Error::invalid("manifold mismatch"))
    }
}

/// prox of λ·(1/p)·dist(·, y)^p at x: γ(x, y; t̂).
pub fn prox_dist_to_point(x: &Point, y: &Point, lambda: f64, p: u8) -> Result<ProxResult> {
    check_lambda(lambda)?;
    check_power(p)?;
    same_tags(&[x, y])?;
    let out = prox_point_chart(x.tag(), x.coords(), y.coords(), lambda, p)?;
    Ok(ProxResult::single(vec![Point::from_chart(
        x.tag().clone(),
        out,
    )]))
}

/// prox of λ·(1/p)·dist(x, y)^p in both arguments: each end point moves
/// toward the other by the same geodesic fraction t̂.
pub fn prox_dist_pair(x: &Point, y: &Point, lambda: f64, p: u8) -> Result<ProxResult> {
    check_lambda(lambda)?;
    check_power(p)?;
    same_tags(&[x, y])?;
    let (a, b) = prox_pair_chart(x.tag(), x.coords(), y.coords(), lambda, p)?;
    Ok(ProxResult::single(vec![
        Point::from_chart(x.tag().clone(), a),
        Point::from_chart(x.tag().clone(), b),
    ]))
}

/// Prox on angles of λ·|(⟨x, w⟩)_{2π}| (power 1) or λ·½(⟨x, w⟩)_{2π}²
/// (power 2) for an integer weight vector w.
#[derive(Debug, Clone, PartialEq)]
pub struct CircleProx {
    pub principal: Vec<f64>,
    /// The "−" branch when |(⟨x, w⟩)_{2π}| = π.
    pub alternative: Option<Vec<f64>>,
}

pub fn circle_weighted_prox(x: &[f64], w: &[f64], lambda: f64, power: u8) -> CircleProx {
    let s = wrap(x.iter().zip(w).map(|(a, b)| a * b).sum());
    let nw2: f64 = w.iter().map(|c| c * c).sum();
    let sign = if s < 0.0 { -1.0 } else { 1.0 };
    let shift = |c: f64| -> Vec<f64> { x.iter().zip(w).map(|(a, b)| wrap(a + c * b)).collect() };
    let boundary = (s.abs() - PI).abs() < crate::manifold::circle::CUT_TOLERANCE;
    match (power, boundary) {
        (1, false) => CircleProx {
            principal: shift(-sign * lambda.min(s.abs() / nw2)),
            alternative: None,
        },
        (1, true) => {
            let m = lambda.min(PI / nw2);
            CircleProx {
                principal: shift(sign * m),
                alternative: Some(shift(-sign * m)),
            }
        }
        (_, false) => CircleProx {
            principal: shift(-lambda * s / (1.0 + lambda * nw2)),
            alternative: None,
        },
        (_, true) => {
            let m = lambda * PI / (1.0 + lambda * nw2);
            CircleProx {
                principal: shift(m),
                alternative: Some(shift(-m)),
            }
        }
    }
}

fn angles(points: &[Point]) -> Result<Vec<f64>> {
    points
        .iter()
        .map(|p| match p.tag() {
            ManifoldTag::Circle => Ok(p.coords()[0]),
            other => Err(Error::invalid(format!(
                "expected Circle points, got {other}"
            ))),
        })
        .collect()
}

/// Prox of λ·(1/power)·|(⟨x, w_ν⟩)_{2π}|^power on the circle, with
/// w₁ = (−1, 1) and w₂ = (1, −2, 1).
pub fn prox_circle_diff(x: &[Point], lambda: f64, order: u8, power: u8) -> Result<ProxResult> {
    check_lambda(lambda)?;
    check_power(power)?;
    let w: &[f64] = match order {
        1 => &[-1.0, 1.0],
        2 => &[1.0, -2.0, 1.0],
        _ => {
            return Err(Error::invalid(format!(
                "difference order must be 1 or 2, got {order}"
            )))
        }
    };
    if x.len() != w.len() {
        return Err(Error::invalid(format!(
            "order {order} difference takes {} angles, got {}",
            w.len(),
            x.len()
        )));
    }
    let r = circle_weighted_prox(&angles(x)?, w, lambda, power);
    let to_points = |v: Vec<f64>| v.into_iter().map(Point::circle).collect::<Vec<_>>();
    Ok(ProxResult {
        multivalued: r.alternative.is_some(),
        alternatives: r.alternative.map(to_points),
        points: to_points(r.principal),
        converged: true,
    })
}

/// Prox of λ·½·dist(·, y)² on the circle, written on angles.
pub fn prox_circle_data(x: &Point, y: &Point, lambda: f64) -> Result<ProxResult> {
    check_lambda(lambda)?;
    let a = angles(&[x.clone(), y.clone()])?;
    let (x, y) = (a[0], a[1]);
    let v = if (x - y).abs() > PI {
        (x - y).signum()
    } else {
        0.0
    };
    let out = wrap((x + lambda * y) / (1.0 + lambda) + lambda / (1.0 + lambda) * 2.0 * PI * v);
    Ok(ProxResult::single(vec![Point::circle(out)]))
}

/// Exact prox of λ·‖r‖ for a residual that is linear in the arguments.
///
/// The residual is r = Σ_j W[k, j]·θ_j stacked over blocks k, each of
/// dimension `m`, with current value `r0` (blocks concatenated). Returns
/// the dual vector q such that moving θ_j by −Σ_k W[k, j]·q_k is the prox.
/// Solves the secular equation μ‖(I + μG)⁻¹ r0‖ = λ with G = W Wᵀ.
pub fn linear_norm_dual(weights: &DMatrix<f64>, m: usize, r0: &[f64], lambda: f64) -> Vec<f64> {
    gram_norm_dual(weights * weights.transpose(), m, r0, lambda)
}

/// [`linear_norm_dual`] for a given Gram matrix G = W Wᵀ.
pub(crate) fn gram_norm_dual(g: DMatrix<f64>, m: usize, r0: &[f64], lambda: f64) -> Vec<f64> {
    let nb = g.nrows();
    let eig = g.symmetric_eigen();
    // coordinates of each residual component in the eigenbasis of G
    let r0m = DMatrix::from_column_slice(m, nb, r0).transpose();
    let c = eig.eigenvectors.transpose() * &r0m;
    let gam = eig.eigenvalues.clone();
    let norm_r = |mu: f64| -> f64 {
        let mut s = 0.0;
        for k in 0..nb {
            let f = 1.0 / (1.0 + mu * gam[k]);
            for j in 0..m {
                s += (c[(k, j)] * f).powi(2);
            }
        }
        s.sqrt()
    };
    let r0n = norm_r(0.0);
    if r0n == 0.0 {
        return vec![0.0; nb * m];
    }
    // μ → ∞ limit of μ‖r(μ)‖ is ‖G⁺ r0‖ on range(G)
    let mut limit = 0.0;
    let mut null_part = false;
    for k in 0..nb {
        for j in 0..m {
            if gam[k] > 1e-12 {
                limit += (c[(k, j)] / gam[k]).powi(2);
            } else if c[(k, j)].abs() > 1e-14 {
                null_part = true;
            }
        }
    }
    let limit = limit.sqrt();
    let q_of = |mu: f64| -> Vec<f64> {
        // q = μ r(μ)
        let mut cq = DMatrix::zeros(nb, m);
        for k in 0..nb {
            let f = mu / (1.0 + mu * gam[k]);
            for j in 0..m {
                cq[(k, j)] = c[(k, j)] * f;
            }
        }
        let q = &eig.eigenvectors * cq;
        q.transpose().as_slice().to_vec()
    };
    if !null_part && limit <= lambda {
        // the residual can be annihilated: q = G⁻¹ r0
        let mut cq = DMatrix::zeros(nb, m);
        for k in 0..nb {
            for j in 0..m {
                if gam[k] > 1e-12 {
                    cq[(k, j)] = c[(k, j)] / gam[k];
                }
            }
        }
        let q = &eig.eigenvectors * cq;
        return q.transpose().as_slice().to_vec();
    }
    let phi = |mu: f64| mu * norm_r(mu) - lambda;
    let (mut lo, mut hi) = (0.0, lambda / r0n);
    while phi(hi) < 0.0 {
        lo = hi;
        hi *= 2.0;
    }
    for _ in 0..200 {
        let mid = 0.5 * (lo + hi);
        if phi(mid) < 0.0 {
            lo = mid;
        } else {
            hi = mid;
        }
        if hi - lo <= 1e-16 * hi {
            break;
        }
    }
    q_of(0.5 * (lo + hi))
}

/// Exact prox of λ·½‖r‖² for a linear residual (see [`linear_norm_dual`]).
pub fn linear_square_dual(weights: &DMatrix<f64>, m: usize, r0: &[f64], lambda: f64) -> Vec<f64> {
    gram_square_dual(weights * weights.transpose(), m, r0, lambda)
}

/// [`linear_square_dual`] for a given Gram matrix G = W Wᵀ.
pub(crate) fn gram_square_dual(g: DMatrix<f64>, m: usize, r0: &[f64], lambda: f64) -> Vec<f64> {
    // q = λ (I + λ G)⁻¹ r0
    let nb = g.nrows();
    let a = DMatrix::identity(nb, nb) + g * lambda;
    let r0m = DMatrix::from_column_slice(m, nb, r0).transpose();
    let q = a
        .lu()
        .solve(&(r0m * lambda))
        .expect("I + λG is positive definite");
    q.transpose().as_slice().to_vec()
}

/// Prox of λ·‖r(y)‖ (p = 1) or λ·½‖r(y)‖² (p = 2) by proximal Gauss–Newton
/// steps: each step solves the prox exactly for the residual linearized
/// at the current points, then backtracks until the true objective does
/// not increase. Exact after one step when r is affine.
///
/// `lin` returns r in orthonormal coordinates and its Jacobian, whose
/// columns are the `tag.tangent_basis` coordinates of each argument in
/// turn.
pub(crate) fn gauss_newton_prox<L>(
    tag: &ManifoldTag,
    anchors: &[Vec<f64>],
    lambda: f64,
    p: u8,
    tolerance: f64,
    lin: L,
) -> NumericProx
where
    L: Fn(&[Vec<f64>]) -> Result<(Vec<f64>, DMatrix<f64>)>,
{
    let n = tag.dim();
    let value = |y: &[Vec<f64>]| -> Result<f64> {
        let (c, _) = lin(y)?;
        let norm = c.iter().map(|v| v * v).sum::<f64>().sqrt();
        let data: f64 = y
            .iter()
            .zip(anchors)
            .map(|(a, b)| 0.5 * tag.dist(a, b).powi(2))
            .sum();
        Ok(data + lambda * if p == 1 { norm } else { 0.5 * norm * norm })
    };
    let mut y = anchors.to_vec();
    let fail = |y: Vec<Vec<f64>>, iterations| NumericProx {
        points: y,
        converged: false,
        iterations,
    };
    let Ok(mut f) = value(&y) else {
        return fail(y, 0);
    };
    for it in 0..NUMERIC_MAX_ITER {
        let Ok((c, j)) = lin(&y) else {
            return fail(y, it);
        };
        let bases: Vec<Vec<Vec<f64>>> = y.iter().map(|q| tag.tangent_basis(q)).collect();
        let mut a = nalgebra::DVector::zeros(y.len() * n);
        for (k, (yk, xk)) in y.iter().zip(anchors).enumerate() {
            let Ok(v) = tag.log(yk, xk) else {
                return fail(y, it);
            };
            for (l, e) in bases[k].iter().enumerate() {
                a[k * n + l] = tag.inner(yk, e, &v);
            }
        }
        let c2 = nalgebra::DVector::from_column_slice(&c) + &j * &a;
        let gram = &j * j.transpose();
        let q = if p == 1 {
            gram_norm_dual(gram, 1, c2.as_slice(), lambda)
        } else {
            gram_square_dual(gram, 1, c2.as_slice(), lambda)
        };
        let delta = a - j.transpose() * nalgebra::DVector::from_vec(q);
        let size = delta.norm();
        if size <= tolerance {
            return NumericProx {
                points: y,
                converged: true,
                iterations: it,
            };
        }
        let mut t = 1.0;
        let mut accepted = false;
        for _ in 0..40 {
            let trial: Vec<Vec<f64>> = y
                .iter()
                .enumerate()
                .map(|(k, yk)| {
                    let mut v = tag.zero_tangent();
                    for (l, e) in bases[k].iter().enumerate() {
                        manifold::axpy(t * delta[k * n + l], e, &mut v);
                    }
                    tag.exp(yk, &v)
                })
                .collect();
            if let Ok(ft) = value(&trial) {
                if ft <= f + 1e-15 * f.abs() {
                    y = trial;
                    f = ft;
                    accepted = true;
                    break;
                }
            }
            t *= 0.5;
        }
        if !accepted {
            return NumericProx {
                points: y,
                converged: size <= 1e-6,
                iterations: it,
            };
        }
    }
    fail(y, NUMERIC_MAX_ITER)
}

/// Result of [`numeric_prox`].
#[derive(Debug, Clone)]
pub struct NumericProx {
    pub points: Vec<Vec<f64>>,
    pub converged: bool,
    pub iterations: usize,
}

/// Prox of λ·g by Riemannian gradient descent with Armijo backtracking
/// (initial step 1, factor ½, slope 1e−4).
///
/// `g` returns the value and one gradient per argument; at points where g
/// is not differentiable it should return an element of its subdifferential.
pub fn numeric_prox<G>(tag: &ManifoldTag, anchors: &[Vec<f64>], lambda: f64, g: G) -> NumericProx
where
    G: Fn(&[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)>,
{
    numeric_prox_within(tag, anchors, lambda, NUMERIC_TOLERANCE, g)
}

/// [`numeric_prox`] stopping at gradient norm `tolerance`. The prox
/// objective is 1-strongly convex on Hadamard manifolds, so the result is
/// then within `tolerance` of the exact prox there.
pub fn numeric_prox_within<G>(
    tag: &ManifoldTag,
    anchors: &[Vec<f64>],
    lambda: f64,
    tolerance: f64,
    g: G,
) -> NumericProx
where
    G: Fn(&[Vec<f64>]) -> Result<(f64, Vec<Vec<f64>>)>,
{
    let objective = |y: &[Vec<f64>]| -> Result<(f64, Vec<Vec<f64>>)> {
        let (gv, gg) = g(y)?;
        let mut val = lambda * gv;
        let mut grad = Vec::with_capacity(y.len());
        for ((yk, xk), gk) in y.iter().zip(anchors).zip(gg) {
            let v = tag.log(yk, xk)?;
            val += 0.5 * tag.inner(yk, &v, &v);
            let mut d = manifold::scale(&v, -1.0);
            manifold::axpy(lambda, &gk, &mut d);
            grad.push(d);
        }
        Ok((val, grad))
    };
    let mut y: Vec<Vec<f64>> = anchors.to_vec();
    let Ok((mut val, mut grad)) = objective(&y) else {
        return NumericProx {
            points: y,
            converged: false,
            iterations: 0,
        };
    };
    for it in 0..NUMERIC_MAX_ITER {
        let gn2: f64 = y.iter().zip(&grad).map(|(p, d)| tag.inner(p, d, d)).sum();
        if gn2.sqrt() <= tolerance {
            return NumericProx {
                points: y,
                converged: true,
                iterations: it,
            };
        }
        let mut step = 1.0;
        let mut accepted = false;
        for _ in 0..60 {
            let trial: Vec<Vec<f64>> = y
                .iter()
                .zip(&grad)
                .map(|(p, d)| tag.exp(p, &manifold::scale(d, -step)))
                .collect();
            if let Ok((tv, tg)) = objective(&trial) {
                if tv <= val - 1e-4 * step * gn2 {
                    y = trial;
                    val = tv;
                    grad = tg;
                    accepted = true;
                    break;
                }
            }
            step *= 0.5;
        }
        if !accepted {
            // no descent possible along the (sub)gradient at machine precision
            return NumericProx {
                points: y,
                converged: gn2.sqrt() <= 1e-6,
                iterations: it,
            };
        }
    }
    NumericProx {
        points: y,
        converged: false,
        iterations: NUMERIC_MAX_ITER,
    }
}

/// Prox of λ·(1/p)·d₂(·, ·, ·)^p at (x, y, z).
///
/// Circle arguments use the closed form on angles; other manifolds use
/// proximal Gauss–Newton steps with the Jacobi-field differential of d₂.
pub fn prox_second_order(
    x: &Point,
    y: &Point,
    z: &Point,
    lambda: f64,
    p: u8,
) -> Result<ProxResult> {
    check_lambda(lambda)?;
    check_power(p)?;
    same_tags(&[x, y, z])?;
    let tag = x.tag();
    if *tag == ManifoldTag::Circle {
        // on angles, |(x − 2y + z)_{2π}| = 2 d₂
        let scale = if p == 1 { 0.5 } else { 0.25 };
        return prox_circle_diff(&[x.clone(), y.clone(), z.clone()], lambda * scale, 2, p);
    }
    let anchors = vec![
        x.coords().to_vec(),
        y.coords().to_vec(),
        z.coords().to_vec(),
    ];
    let block = Block::Second { x: 0, y: 1, z: 2 };
    let n = tag.dim();
    let r = gauss_newton_prox(tag, &anchors, lambda, p, NUMERIC_TOLERANCE, |pts| {
        let data: Vec<f64> = pts.iter().flatten().copied().collect();
        let it = Iterate::new(ManifoldImage::from_chart(tag.clone(), 3, 1, data));
        let (c, rows) = block.linearize(&it)?;
        let mut j = DMatrix::zeros(c.len(), 3 * n);
        for (k, jk) in rows {
            j.view_mut((0, k * n), (c.len(), n)).copy_from(&jk);
        }
        Ok((c, j))
    });
    Ok(ProxResult {
        points: r
            .points
            .into_iter()
            .map(|c| Point::from_chart(tag.clone(), c))
            .collect(),
        multivalued: false,
        alternatives: None,
        converged: r.converged,
    })
}
