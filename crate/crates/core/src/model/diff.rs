//! Second-order differences on manifolds and their gradients.

use crate::error::Result;
use crate::manifold::{self, ManifoldTag, Point};
use crate::transport::{CoefficientCase, JacobiFrame};

/// Points closer than this are treated as coincident when differentiating
/// a midpoint.
const COINCIDENT: f64 = 1e-14;

fn same_tags(points: &[&Point]) -> Result<()> {
    let tag = points[0].tag();
    for p in points {
        if p.tag() != tag {
            return Err(crate::Error::invalid(format!(
                "manifold mismatch: {} vs {}",
                tag,
                p.tag()
            )));
        }
    }
    Ok(())
}

/// d₂(x, y, z) = dist(γ(x, z; ½), y) with the principal midpoint.
pub fn second_diff(x: &Point, y: &Point, z: &Point) -> Result<f64> {
    same_tags(&[x, y, z])?;
    second_diff_chart(x.tag(), x.coords(), y.coords(), z.coords())
}

/// d₁,₁(a, b, c, d) = dist(γ(a, c; ½), γ(b, d; ½)).
pub fn mixed_diff(a: &Point, b: &Point, c: &Point, d: &Point) -> Result<f64> {
    same_tags(&[a, b, c, d])?;
    mixed_diff_chart(a.tag(), a.coords(), b.coords(), c.coords(), d.coords())
}

pub(crate) fn second_diff_chart(tag: &ManifoldTag, x: &[f64], y: &[f64], z: &[f64]) -> Result<f64> {
    let m = tag.geodesic(x, z, 0.5).map_err(|e| e.in_step("midpoint"))?;
    Ok(tag.dist(&m, y))
}

pub(crate) fn mixed_diff_chart(
    tag: &ManifoldTag,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
) -> Result<f64> {
    let m1 = tag.geodesic(a, c, 0.5).map_err(|e| e.in_step("midpoint"))?;
    let m2 = tag.geodesic(b, d, 0.5).map_err(|e| e.in_step("midpoint"))?;
    Ok(tag.dist(&m1, &m2))
}

/// Pulls a gradient at m = γ(x, z; ½) back to x and z.
pub(crate) fn midpoint_adjoint(
    tag: &ManifoldTag,
    x: &[f64],
    z: &[f64],
    g_m: &[f64],
) -> Result<(Vec<f64>, Vec<f64>)> {
    if tag.dist(x, z) < COINCIDENT {
        let half = manifold::scale(g_m, 0.5);
        return Ok((half.clone(), half));
    }
    let gx = JacobiFrame::between(tag, x, z)?.apply_adjoint(CoefficientCase::GeoFirst(0.5), g_m)?;
    let gz =
        JacobiFrame::between(tag, z, x)?.apply_adjoint(CoefficientCase::GeoSecond(0.5), g_m)?;
    Ok((gx, gz))
}

/// Value and gradients of d₂ in (x, y, z). At d₂ = 0 the zero
/// subgradient is returned.
pub(crate) fn second_diff_grad(
    tag: &ManifoldTag,
    x: &[f64],
    y: &[f64],
    z: &[f64],
) -> Result<(f64, [Vec<f64>; 3])> {
    let m = tag.geodesic(x, z, 0.5).map_err(|e| e.in_step("midpoint"))?;
    let d = tag.dist(&m, y);
    let zero = tag.zero_tangent();
    if d == 0.0 {
        return Ok((0.0, [zero.clone(), zero.clone(), zero]));
    }
    let gy = manifold::scale(&tag.log(y, &m)?, -1.0 / d);
    let g_m = manifold::scale(&tag.log(&m, y)?, -1.0 / d);
    let (gx, gz) = midpoint_adjoint(tag, x, z, &g_m)?;
    Ok((d, [gx, gy, gz]))
}

/// Value and gradients of d₁,₁ in (a, b, c, d).
pub(crate) fn mixed_diff_grad(
    tag: &ManifoldTag,
    a: &[f64],
    b: &[f64],
    c: &[f64],
    d: &[f64],
) -> Result<(f64, [Vec<f64>; 4])> {
    let m1 = tag.geodesic(a, c, 0.5).map_err(|e| e.in_step("midpoint"))?;
    let m2 = tag.geodesic(b, d, 0.5).map_err(|e| e.in_step("midpoint"))?;
    let dist = tag.dist(&m1, &m2);
    let zero = tag.zero_tangent();
    if dist == 0.0 {
        return Ok((0.0, [zero.clone(), zero.clone(), zero.clone(), zero]));
    }
    let g1 = manifold::scale(&tag.log(&m1, &m2)?, -1.0 / dist);
    let g2 = manifold::scale(&tag.log(&m2, &m1)?, -1.0 / dist);
    let (ga, gc) = midpoint_adjoint(tag, a, c, &g1)?;
    let (gb, gd) = midpoint_adjoint(tag, b, d, &g2)?;
    Ok((dist, [ga, gb, gc, gd]))
}
