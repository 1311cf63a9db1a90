use crate::error::{Error, Result};
use crate::manifold::{self, ManifoldTag, Point};

const GRADIENT_TOLERANCE: f64 = 1e-10;
const MAX_ITER: usize = 1000;

/// Result of [`karcher_mean`].
#[derive(Debug, Clone)]
pub struct KarcherMean {
    pub point: Point,
    pub iterations: usize,
    pub warnings: Vec<String>,
}

/// Weighted Karcher mean argmin_x Σ w_k dist²(x, x_k).
pub fn karcher_mean(points: &[Point], weights: &[f64]) -> Result<KarcherMean> {
    let Some(first) = points.first() else {
        return Err(Error::invalid("karcher mean of an empty list"));
    };
    if weights.len() != points.len() {
        return Err(Error::invalid(format!(
            "{} weights for {} points",
            weights.len(),
            points.len()
        )));
    }
    if weights.iter().any(|&w| !(w >= 0.0 && w.is_finite())) || weights.iter().sum::<f64>() <= 0.0 {
        return Err(Error::invalid(
            "weights must be non-negative with a positive sum",
        ));
    }
    let tag = first.tag().clone();
    if points.iter().any(|p| *p.tag() != tag) {
        return Err(Error::invalid("points live on different manifolds"));
    }
    let chart: Vec<&[f64]> = points.iter().map(|p| p.coords()).collect();
    let (x, iterations) = karcher_chart(&tag, &chart, weights)?;
    let mut warnings = Vec::new();
    if matches!(tag, ManifoldTag::Sphere2) {
        let radius = chart.iter().map(|p| tag.dist(&x, p)).fold(0.0, f64::max);
        if radius >= std::f64::consts::FRAC_PI_2 {
            warnings.push(format!(
                "points are not inside a ball of radius pi/2 (radius {radius:.3}); the mean may not be unique"
            ));
        }
    }
    Ok(KarcherMean {
        point: Point::from_chart(tag, x),
        iterations,
        warnings,
    })
}

fn energy(tag: &ManifoldTag, x: &[f64], points: &[&[f64]], w: &[f64]) -> f64 {
    points
        .iter()
        .zip(w)
        .map(|(p, wk)| wk * tag.dist(x, p).powi(2))
        .sum()
}

/// Gradient descent x ← exp_x(t·Σ w_k log_x x_k / Σ w), t = 1 unless the
/// energy goes up.
pub(crate) fn karcher_chart(
    tag: &ManifoldTag,
    points: &[&[f64]],
    w: &[f64],
) -> Result<(Vec<f64>, usize)> {
    let total: f64 = w.iter().sum();
    let start = w
        .iter()
        .enumerate()
        .fold(0, |best, (k, &wk)| if wk > w[best] { k } else { best });
    let mut x = points[start].to_vec();
    let mut e = energy(tag, &x, points, w);
    for it in 0..MAX_ITER {
        let mut g = tag.zero_tangent();
        for (p, &wk) in points.iter().zip(w) {
            if wk > 0.0 {
                manifold::axpy(wk / total, &tag.log(&x, p)?, &mut g);
            }
        }
        let gn = tag.norm(&x, &g);
        if gn <= GRADIENT_TOLERANCE {
            return Ok((x, it));
        }
        let mut t = 1.0;
        loop {
            let y = tag.exp(&x, &manifold::scale(&g, t));
            let ey = energy(tag, &y, points, w);
            // near the minimum energy differences drown in rounding
            if ey <= e || t < 1e-8 || gn < 1e-6 {
                x = y;
                e = ey;
                break;
            }
            t *= 0.5;
        }
    }
    Err(Error::NotConverged {
        what: "karcher mean",
        iterations: MAX_ITER,
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    #[test]
    fn circle_symmetric() {
        let pts: Vec<Point> = [-0.1, 0.0, 0.1].iter().map(|&a| Point::circle(a)).collect();
        let m = karcher_mean(&pts, &[1.0; 3]).unwrap();
        assert!(m.point.coords()[0].abs() < 1e-12);
    }

    #[test]
    fn spd_midpoint() {
        let tag = ManifoldTag::Spd(2);
        let a = Point::new(tag.clone(), vec![1.0, 0.0, 0.0, 1.0]).unwrap();
        let b = Point::new(tag, vec![4.0, 0.0, 0.0, 1.0]).unwrap();
        let m = karcher_mean(&[a, b], &[1.0, 1.0]).unwrap();
        let c = m.point.coords();
        for (got, want) in c.iter().zip([2.0, 0.0, 0.0, 1.0]) {
            assert!((got - want).abs() < 1e-9, "{c:?}");
        }
    }

    #[test]
    fn sphere_spread_warns() {
        let tag = ManifoldTag::Sphere2;
        let pts: Vec<Point> = [0.0f64, 1.8, -1.8]
            .iter()
            .map(|a| Point::new(tag.clone(), vec![a.cos(), a.sin(), 0.0]).unwrap())
            .collect();
        let m = karcher_mean(&pts, &[1.0, 1.0, 1.0]).unwrap();
        assert!(!m.warnings.is_empty());
    }

    #[test]
    fn rejects_empty() {
        assert!(karcher_mean(&[], &[]).is_err());
    }
}
