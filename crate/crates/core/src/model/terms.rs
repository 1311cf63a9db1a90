//! Internal representation of the regularizers as sums of norm terms.
//!
//! Every model is a weighted sum of families; a family is a list of groups
//! sharing a shape (p-norm or φ), and a group couples a few blocks. Each
//! block is a distance-like residual on pixels and, for TGV, on the
//! tangent-field components. Solvers evaluate, differentiate and take
//! proxes group by group.

use std::collections::HashSet;

use nalgebra::DMatrix;

use super::diff;
use super::{pairwise_sum, ManifoldImage, ModelConfig, ModelKind, Phi, TangentField};
use crate::error::{Error, Result};
use crate::manifold::{self, ManifoldTag};
use crate::transport::{self, CoefficientCase, JacobiFrame};

/// One variable of the joint state: a pixel, or a component ξ_k of the
/// tangent field at a pixel.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub(crate) enum Var {
    U(usize),
    Xi(usize, usize),
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Block {
    /// dist(u_a, u_b)
    Pair { a: usize, b: usize },
    /// d₂(u_x, u_y, u_z)
    Second { x: usize, y: usize, z: usize },
    /// d₁,₁(u_a, u_b, u_c, u_d)
    Mixed {
        a: usize,
        b: usize,
        c: usize,
        d: usize,
    },
    /// ‖log_{u_a} u_b − ξ_{k,a}‖, with a zero difference when b is absent.
    Gap {
        k: usize,
        a: usize,
        b: Option<usize>,
    },
    /// ‖ξ_{k,i} − P_{u_j→u_i} ξ_{k,j}‖ with the pole ladder.
    FieldDiff { k: usize, i: usize, j: usize },
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub(crate) enum Shape {
    Norm(u8),
    Phi(Phi, u8),
}

#[derive(Debug, Clone)]
pub(crate) struct Family {
    pub label: &'static str,
    pub weight: f64,
    pub shape: Shape,
    pub groups: Vec<Vec<Block>>,
}

/// Solver state: an image plus, for TGV, the two tangent-field components.
#[derive(Debug, Clone, PartialEq)]
pub struct Iterate {
    pub(crate) u: ManifoldImage,
    pub(crate) xi: Option<[Vec<f64>; 2]>,
}

impl Iterate {
    pub fn new(u: ManifoldImage) -> Self {
        Iterate { u, xi: None }
    }

    /// Image and tangent field; the field's base becomes the image.
    pub fn from_field(field: TangentField) -> Self {
        let (u, x, y) = field.into_parts();
        Iterate {
            u,
            xi: Some([x, y]),
        }
    }

    pub(crate) fn with_field(u: ManifoldImage, x: Vec<f64>, y: Vec<f64>) -> Self {
        Iterate {
            u,
            xi: Some([x, y]),
        }
    }

    pub fn image(&self) -> &ManifoldImage {
        &self.u
    }

    pub fn into_image(self) -> ManifoldImage {
        self.u
    }

    pub fn has_field(&self) -> bool {
        self.xi.is_some()
    }

    pub(crate) fn tag(&self) -> &ManifoldTag {
        self.u.tag()
    }

    pub(crate) fn px(&self, i: usize) -> &[f64] {
        self.u.px(i)
    }

    pub(crate) fn xi(&self, k: usize, i: usize) -> &[f64] {
        let m = self.tag().tangent_len();
        &self.xi.as_ref().expect("state carries a tangent field")[k][i * m..(i + 1) * m]
    }

    pub(crate) fn set_xi(&mut self, k: usize, i: usize, v: &[f64]) {
        let m = self.tag().tangent_len();
        self.xi.as_mut().expect("state carries a tangent field")[k][i * m..(i + 1) * m]
            .copy_from_slice(v);
    }

    /// Current value of a variable (pixel coordinates or tangent vector).
    pub(crate) fn get(&self, v: Var) -> &[f64] {
        match v {
            Var::U(i) => self.px(i),
            Var::Xi(k, i) => self.xi(k, i),
        }
    }

    pub(crate) fn set(&mut self, v: Var, value: &[f64]) {
        match v {
            Var::U(i) => self.u.set_px(i, value),
            Var::Xi(k, i) => self.set_xi(k, i, value),
        }
    }

    pub fn field(&self) -> Option<TangentField> {
        self.xi
            .as_ref()
            .map(|[x, y]| TangentField::from_parts(self.u.clone(), x.clone(), y.clone()))
    }
}

impl Block {
    pub fn vars(&self) -> Vec<Var> {
        match *self {
            Block::Pair { a, b } => vec![Var::U(a), Var::U(b)],
            Block::Second { x, y, z } => vec![Var::U(x), Var::U(y), Var::U(z)],
            Block::Mixed { a, b, c, d } => vec![Var::U(a), Var::U(b), Var::U(c), Var::U(d)],
            Block::Gap { k, a, b: Some(b) } => vec![Var::U(a), Var::U(b), Var::Xi(k, a)],
            Block::Gap { k, a, b: None } => vec![Var::Xi(k, a)],
            Block::FieldDiff { k, i, j } => {
                vec![Var::Xi(k, i), Var::Xi(k, j), Var::U(i), Var::U(j)]
            }
        }
    }

    /// Pixel used to annotate errors.
    fn anchor(&self) -> usize {
        match *self {
            Block::Pair { a, .. } | Block::Mixed { a, .. } | Block::Gap { a, .. } => a,
            Block::Second { y, .. } => y,
            Block::FieldDiff { i, .. } => i,
        }
    }

    fn gap_residual(s: &Iterate, k: usize, a: usize, b: Option<usize>) -> Result<Vec<f64>> {
        let tag = s.tag();
        let mut r = match b {
            Some(b) => tag.log(s.px(a), s.px(b))?,
            None => tag.zero_tangent(),
        };
        manifold::axpy(-1.0, s.xi(k, a), &mut r);
        Ok(r)
    }

    fn field_residual(s: &Iterate, k: usize, i: usize, j: usize) -> Result<Vec<f64>> {
        let p = transport::pole_chart(s.tag(), s.px(j), s.px(i), s.xi(k, j))?;
        let mut r = s.xi(k, i).to_vec();
        manifold::axpy(-1.0, &p, &mut r);
        Ok(r)
    }

    pub fn value(&self, s: &Iterate) -> Result<f64> {
        let tag = s.tag();
        let v = match *self {
            Block::Pair { a, b } => Ok(tag.dist(s.px(a), s.px(b))),
            Block::Second { x, y, z } => diff::second_diff_chart(tag, s.px(x), s.px(y), s.px(z)),
            Block::Mixed { a, b, c, d } => {
                diff::mixed_diff_chart(tag, s.px(a), s.px(b), s.px(c), s.px(d))
            }
            Block::Gap { k, a, b } => Self::gap_residual(s, k, a, b).map(|r| tag.norm(s.px(a), &r)),
            Block::FieldDiff { k, i, j } => {
                Self::field_residual(s, k, i, j).map(|r| tag.norm(s.px(i), &r))
            }
        };
        v.map_err(|e| e.at_index(self.anchor()))
    }

    /// Value and a (sub)gradient per variable. Tangent-field variables are
    /// differentiated with the field held parallel when its base moves.
    pub fn grad(&self, s: &Iterate) -> Result<(f64, Vec<(Var, Vec<f64>)>)> {
        self.grad_inner(s).map_err(|e| e.at_index(self.anchor()))
    }

    fn grad_inner(&self, s: &Iterate) -> Result<(f64, Vec<(Var, Vec<f64>)>)> {
        let tag = s.tag();
        let vars = self.vars();
        match *self {
            Block::Pair { a, b } => {
                let d = tag.dist(s.px(a), s.px(b));
                if d == 0.0 {
                    return Ok((0.0, zeros(tag, &vars)));
                }
                let ga = manifold::scale(&tag.log(s.px(a), s.px(b))?, -1.0 / d);
                let gb = manifold::scale(&tag.log(s.px(b), s.px(a))?, -1.0 / d);
                Ok((d, vec![(vars[0], ga), (vars[1], gb)]))
            }
            Block::Second { x, y, z } => {
                let (d, g) = diff::second_diff_grad(tag, s.px(x), s.px(y), s.px(z))?;
                Ok((d, vars.into_iter().zip(g).collect()))
            }
            Block::Mixed { a, b, c, d } => {
                let (v, g) = diff::mixed_diff_grad(tag, s.px(a), s.px(b), s.px(c), s.px(d))?;
                Ok((v, vars.into_iter().zip(g).collect()))
            }
            Block::Gap { k, a, b } => {
                let r = Self::gap_residual(s, k, a, b)?;
                let n = tag.norm(s.px(a), &r);
                if n == 0.0 {
                    return Ok((0.0, zeros(tag, &vars)));
                }
                let g = manifold::scale(&r, 1.0 / n);
                let gxi = manifold::scale(&g, -1.0);
                match b {
                    None => Ok((n, vec![(Var::Xi(k, a), gxi)])),
                    Some(b) => {
                        let ga = JacobiFrame::between(tag, s.px(a), s.px(b))?
                            .apply_adjoint(CoefficientCase::LogBase, &g)?;
                        let gb = JacobiFrame::between(tag, s.px(b), s.px(a))?
                            .apply_adjoint(CoefficientCase::LogArg, &g)?;
                        Ok((
                            n,
                            vec![(Var::U(a), ga), (Var::U(b), gb), (Var::Xi(k, a), gxi)],
                        ))
                    }
                }
            }
            Block::FieldDiff { k, i, j } => {
                let r = Self::field_residual(s, k, i, j)?;
                let n = tag.norm(s.px(i), &r);
                if n == 0.0 {
                    return Ok((0.0, zeros(tag, &vars)));
                }
                let g = manifold::scale(&r, 1.0 / n);
                let neg = manifold::scale(&g, -1.0);
                let adj = transport::pole_ladder_adjoint(tag, s.px(j), s.px(i), s.xi(k, j), &neg)?;
                Ok((
                    n,
                    vec![
                        (Var::Xi(k, i), g),
                        (Var::Xi(k, j), adj.zeta),
                        (Var::U(i), adj.y),
                        (Var::U(j), adj.x),
                    ],
                ))
            }
        }
    }

    /// Residual vector and its linear weights over [`Block::vars`] on flat
    /// manifolds, where every block is a linear map of the variables.
    pub fn flat_residual(&self, s: &Iterate) -> Result<(Vec<f64>, Vec<f64>)> {
        let tag = s.tag();
        let r = match *self {
            Block::Pair { a, b } => (tag.log(s.px(a), s.px(b))?, vec![-1.0, 1.0]),
            Block::Second { x, y, z } => {
                let m = tag.geodesic(s.px(x), s.px(z), 0.5)?;
                (tag.log(s.px(y), &m)?, vec![0.5, -1.0, 0.5])
            }
            Block::Mixed { a, b, c, d } => {
                let m1 = tag.geodesic(s.px(a), s.px(c), 0.5)?;
                let m2 = tag.geodesic(s.px(b), s.px(d), 0.5)?;
                (tag.log(&m2, &m1)?, vec![0.5, -0.5, 0.5, -0.5])
            }
            Block::Gap { k, a, b } => {
                let w = if b.is_some() {
                    vec![-1.0, 1.0, -1.0]
                } else {
                    vec![-1.0]
                };
                (Self::gap_residual(s, k, a, b)?, w)
            }
            Block::FieldDiff { k, i, j } => {
                let mut r = s.xi(k, i).to_vec();
                manifold::axpy(-1.0, s.xi(k, j), &mut r);
                (r, vec![1.0, -1.0, 0.0, 0.0])
            }
        };
        Ok(r)
    }

    /// Residual r with ‖r‖ the block value, in orthonormal coordinates at
    /// its base, and per pixel the Jacobian rows in orthonormal coordinates
    /// at that pixel. Pixel blocks only.
    pub(crate) fn linearize(&self, s: &Iterate) -> Result<(Vec<f64>, Vec<(usize, DMatrix<f64>)>)> {
        self.linearize_inner(s)
            .map_err(|e| e.at_index(self.anchor()))
    }

    fn linearize_inner(&self, s: &Iterate) -> Result<(Vec<f64>, Vec<(usize, DMatrix<f64>)>)> {
        let tag = s.tag();
        // adjoints of (p, q) ↦ log_p q
        let log_adj = |p: &[f64], q: &[f64], w: &[f64]| -> Result<(Vec<f64>, Vec<f64>)> {
            if tag.dist(p, q) < 1e-14 {
                return Ok((manifold::scale(w, -1.0), w.to_vec()));
            }
            let gp = JacobiFrame::between(tag, p, q)?.apply_adjoint(CoefficientCase::LogBase, w)?;
            let gq = JacobiFrame::between(tag, q, p)?.apply_adjoint(CoefficientCase::LogArg, w)?;
            Ok((gp, gq))
        };
        let mid = |a: usize, c: usize| {
            tag.geodesic(s.px(a), s.px(c), 0.5)
                .map_err(|e| e.in_step("midpoint"))
        };
        let (base, r, pixels, adjoint): (
            Vec<f64>,
            Vec<f64>,
            Vec<usize>,
            Box<dyn Fn(&[f64]) -> Result<Vec<Vec<f64>>>>,
        ) = match *self {
            Block::Pair { a, b } => (
                s.px(a).to_vec(),
                tag.log(s.px(a), s.px(b))?,
                vec![a, b],
                Box::new(move |w| {
                    let (ga, gb) = log_adj(s.px(a), s.px(b), w)?;
                    Ok(vec![ga, gb])
                }),
            ),
            Block::Second { x, y, z } => {
                let m = mid(x, z)?;
                let r = tag.log(s.px(y), &m)?;
                (
                    s.px(y).to_vec(),
                    r,
                    vec![x, y, z],
                    Box::new(move |w| {
                        let (gy, gm) = log_adj(s.px(y), &m, w)?;
                        let (gx, gz) = diff::midpoint_adjoint(tag, s.px(x), s.px(z), &gm)?;
                        Ok(vec![gx, gy, gz])
                    }),
                )
            }
            Block::Mixed { a, b, c, d } => {
                let m1 = mid(a, c)?;
                let m2 = mid(b, d)?;
                let r = tag.log(&m2, &m1)?;
                (
                    m2.clone(),
                    r,
                    vec![a, b, c, d],
                    Box::new(move |w| {
                        let (g2, g1) = log_adj(&m2, &m1, w)?;
                        let (ga, gc) = diff::midpoint_adjoint(tag, s.px(a), s.px(c), &g1)?;
                        let (gb, gd) = diff::midpoint_adjoint(tag, s.px(b), s.px(d), &g2)?;
                        Ok(vec![ga, gb, gc, gd])
                    }),
                )
            }
            Block::Gap { .. } | Block::FieldDiff { .. } => {
                return Err(Error::invalid(
                    "tangent-field blocks have no pixel linearization",
                ))
            }
        };
        let frame = tag.tangent_basis(&base);
        let rc: Vec<f64> = frame.iter().map(|e| tag.inner(&base, e, &r)).collect();
        let n = frame.len();
        let mut rows: Vec<DMatrix<f64>> = vec![DMatrix::zeros(n, n); pixels.len()];
        let pixel_bases: Vec<Vec<Vec<f64>>> =
            pixels.iter().map(|&i| tag.tangent_basis(s.px(i))).collect();
        for (l, w) in frame.iter().enumerate() {
            for (k, g) in adjoint(w)?.into_iter().enumerate() {
                let p = s.px(pixels[k]);
                for (j, e) in pixel_bases[k].iter().enumerate() {
                    rows[k][(l, j)] = tag.inner(p, e, &g);
                }
            }
        }
        Ok((rc, pixels.into_iter().zip(rows).collect()))
    }

    /// The same block with pixel indices mapped through `f`.
    pub(crate) fn remap(&self, f: impl Fn(usize) -> usize) -> Block {
        match *self {
            Block::Pair { a, b } => Block::Pair { a: f(a), b: f(b) },
            Block::Second { x, y, z } => Block::Second {
                x: f(x),
                y: f(y),
                z: f(z),
            },
            Block::Mixed { a, b, c, d } => Block::Mixed {
                a: f(a),
                b: f(b),
                c: f(c),
                d: f(d),
            },
            Block::Gap { k, a, b } => Block::Gap {
                k,
                a: f(a),
                b: b.map(&f),
            },
            Block::FieldDiff { k, i, j } => Block::FieldDiff {
                k,
                i: f(i),
                j: f(j),
            },
        }
    }

    /// Integer weights and λ scale of the closed-form circle prox.
    pub fn circle_weights(&self) -> Option<(Vec<f64>, f64)> {
        match self {
            Block::Pair { .. } => Some((vec![-1.0, 1.0], 1.0)),
            Block::Second { .. } => Some((vec![1.0, -2.0, 1.0], 0.5)),
            Block::Mixed { .. } => Some((vec![1.0, -1.0, 1.0, -1.0], 0.5)),
            _ => None,
        }
    }
}

fn zeros(tag: &ManifoldTag, vars: &[Var]) -> Vec<(Var, Vec<f64>)> {
    vars.iter().map(|&v| (v, tag.zero_tangent())).collect()
}

impl Shape {
    pub fn p(&self) -> u8 {
        match *self {
            Shape::Norm(p) | Shape::Phi(_, p) => p,
        }
    }

    /// Combines block values into the group value.
    pub fn combine(&self, d: &[f64]) -> f64 {
        match *self {
            Shape::Norm(1) => d.iter().sum(),
            Shape::Norm(_) => d.iter().map(|v| v * v).sum::<f64>().sqrt(),
            Shape::Phi(phi, 1) => d.iter().map(|&v| phi.value(v)).sum(),
            Shape::Phi(phi, _) => phi.value(d.iter().map(|v| v * v).sum::<f64>().sqrt()),
        }
    }
}

pub(crate) fn group_value(shape: &Shape, group: &[Block], s: &Iterate) -> Result<f64> {
    let d = group
        .iter()
        .map(|b| b.value(s))
        .collect::<Result<Vec<_>>>()?;
    Ok(shape.combine(&d))
}

/// Value and subgradient of one group; kinks get the zero element.
pub(crate) fn group_grad(
    shape: &Shape,
    group: &[Block],
    s: &Iterate,
) -> Result<(f64, Vec<(Var, Vec<f64>)>)> {
    let parts = group
        .iter()
        .map(|b| b.grad(s))
        .collect::<Result<Vec<_>>>()?;
    let d: Vec<f64> = parts.iter().map(|(v, _)| *v).collect();
    let value = shape.combine(&d);
    let norm2 = d.iter().map(|v| v * v).sum::<f64>().sqrt();
    let mut out = Vec::new();
    for (dv, grads) in parts {
        let c = match *shape {
            Shape::Norm(1) => 1.0,
            Shape::Norm(_) => {
                if norm2 > 0.0 {
                    dv / norm2
                } else {
                    0.0
                }
            }
            Shape::Phi(phi, 1) => phi.derivative(dv),
            Shape::Phi(phi, _) => {
                if norm2 > 0.0 {
                    phi.derivative(norm2) * dv / norm2
                } else {
                    0.0
                }
            }
        };
        if c != 0.0 {
            out.extend(grads.into_iter().map(|(v, g)| (v, manifold::scale(&g, c))));
        }
    }
    Ok((value, out))
}

/// Distinct variables touched by a group.
pub(crate) fn footprint(group: &[Block]) -> Vec<Var> {
    let mut v: Vec<Var> = group.iter().flat_map(|b| b.vars()).collect();
    v.sort();
    v.dedup();
    v
}

impl Family {
    fn new(label: &'static str, weight: f64, shape: Shape, groups: Vec<Vec<Block>>) -> Self {
        Family {
            label,
            weight,
            shape,
            groups,
        }
    }

    /// Unweighted family value.
    pub fn value(&self, s: &Iterate) -> Result<f64> {
        let v = super::par_collect(self.groups.len(), |k| {
            group_value(&self.shape, &self.groups[k], s)
        })?;
        Ok(pairwise_sum(&v))
    }

    /// Splits the groups into batches with pairwise disjoint footprints,
    /// greedily in group order.
    pub fn batches(&self) -> Vec<Vec<usize>> {
        let mut batches: Vec<(Vec<usize>, HashSet<Var>)> = Vec::new();
        for (gi, g) in self.groups.iter().enumerate() {
            if g.is_empty() {
                continue;
            }
            let fp = footprint(g);
            match batches
                .iter_mut()
                .find(|(_, used)| fp.iter().all(|v| !used.contains(v)))
            {
                Some((ids, used)) => {
                    ids.push(gi);
                    used.extend(fp);
                }
                None => batches.push((vec![gi], fp.into_iter().collect())),
            }
        }
        batches.into_iter().map(|(ids, _)| ids).collect()
    }
}

/// p = 1 splits every block into its own group; p = 2 keeps pixel groups.
fn families_from(
    labels: &[&'static str],
    weight: f64,
    shape: Shape,
    per_pixel: Vec<Vec<Option<Block>>>,
    keep_empty: bool,
) -> Vec<Family> {
    if shape.p() == 1 {
        labels
            .iter()
            .enumerate()
            .map(|(k, label)| {
                let groups = per_pixel
                    .iter()
                    .filter_map(|bs| bs[k].map(|b| vec![b]))
                    .collect();
                Family::new(label, weight, shape, groups)
            })
            .collect()
    } else {
        let groups: Vec<Vec<Block>> = per_pixel
            .into_iter()
            .map(|bs| bs.into_iter().flatten().collect::<Vec<_>>())
            .filter(|g| keep_empty || !g.is_empty())
            .collect();
        vec![Family::new(labels[0], weight, shape, groups)]
    }
}

const X: (isize, isize) = (1, 0);
const Y: (isize, isize) = (0, 1);

fn off(u: &ManifoldImage, i: usize, d: (isize, isize)) -> Option<usize> {
    u.offset(i, d.0, d.1)
}

pub(crate) fn tv_families(u: &ManifoldImage, p: u8, phi: Option<Phi>, weight: f64) -> Vec<Family> {
    let shape = match phi {
        Some(phi) => Shape::Phi(phi, p),
        None => Shape::Norm(p),
    };
    let per_pixel = (0..u.len())
        .map(|i| {
            [X, Y]
                .iter()
                .map(|&e| off(u, i, e).map(|b| Block::Pair { a: i, b }))
                .collect()
        })
        .collect();
    // isotropic φ charges φ(0) at pixels without forward neighbors
    families_from(&["tv-x", "tv-y"], weight, shape, per_pixel, phi.is_some())
}

pub(crate) fn tv2_families(u: &ManifoldImage, p: u8, weight: f64) -> Vec<Family> {
    let neg = |e: (isize, isize)| (-e.0, -e.1);
    let per_pixel = (0..u.len())
        .map(|i| {
            let second = |e| match (off(u, i, e), off(u, i, neg(e))) {
                (Some(z), Some(x)) => Some(Block::Second { x: z, y: i, z: x }),
                _ => None,
            };
            // d_xy: i ± (0,1) and i + (1,0) in the grid; d_yx with the axes
            // swapped. Midpoints are taken along the diagonals of the 2×2
            // cell so that the stencil is a mixed second difference.
            let mixed = |a: (isize, isize), b: (isize, isize)| match (
                off(u, i, b),
                off(u, i, neg(b)),
                off(u, i, a),
            ) {
                (Some(_), Some(bm), Some(ap)) => Some(Block::Mixed {
                    a: i,
                    b: bm,
                    c: off(u, i, (a.0 - b.0, a.1 - b.1)).expect("inside the grid"),
                    d: ap,
                }),
                _ => None,
            };
            vec![second(X), second(Y), mixed(X, Y), mixed(Y, X)]
        })
        .collect();
    families_from(
        &["tv2-xx", "tv2-yy", "tv2-xy", "tv2-yx"],
        weight,
        Shape::Norm(p),
        per_pixel,
        false,
    )
}

pub(crate) fn tgv_r1_families(u: &ManifoldImage, p: u8, weight: f64) -> Vec<Family> {
    let per_pixel = (0..u.len())
        .map(|i| {
            vec![
                Some(Block::Gap {
                    k: 0,
                    a: i,
                    b: off(u, i, X),
                }),
                Some(Block::Gap {
                    k: 1,
                    a: i,
                    b: off(u, i, Y),
                }),
            ]
        })
        .collect();
    families_from(
        &["tgv-r1-x", "tgv-r1-y"],
        weight,
        Shape::Norm(p),
        per_pixel,
        false,
    )
}

pub(crate) fn tgv_r2_families(u: &ManifoldImage, p: u8, weight: f64) -> Vec<Family> {
    let per_pixel = (0..u.len())
        .map(|i| {
            let back = |k: usize, e: (isize, isize)| match (off(u, i, e), off(u, i, (-e.0, -e.1))) {
                (Some(_), Some(j)) => Some(Block::FieldDiff { k, i, j }),
                _ => None,
            };
            vec![back(0, X), back(0, Y), back(1, X), back(1, Y)]
        })
        .collect();
    families_from(
        &["tgv-r2-1x", "tgv-r2-1y", "tgv-r2-2x", "tgv-r2-2y"],
        weight,
        Shape::Norm(p),
        per_pixel,
        false,
    )
}

/// All regularizer families of a model, weighted by α (and β).
pub(crate) fn model_families(u: &ManifoldImage, c: &ModelConfig) -> Vec<Family> {
    let (a, b, p) = (c.alpha, c.beta, c.p);
    match c.model {
        ModelKind::Tv => tv_families(u, p, None, a),
        ModelKind::TvPhi => tv_families(u, p, c.phi, a),
        ModelKind::Tv2 => tv2_families(u, p, a),
        ModelKind::TvTv2 => {
            let mut f = tv_families(u, p, None, a * b);
            f.extend(tv2_families(u, p, a * (1.0 - b)));
            f
        }
        ModelKind::Tgv => {
            let mut f = tgv_r1_families(u, p, a * b);
            f.extend(tgv_r2_families(u, p, a * (1.0 - b)));
            f
        }
    }
}

/// Weighted sum of family values.
pub(crate) fn families_value(families: &[Family], s: &Iterate) -> Result<f64> {
    let v = families
        .iter()
        .map(|f| f.value(s).map(|v| f.weight * v))
        .collect::<Result<Vec<_>>>()?;
    Ok(pairwise_sum(&v))
}
