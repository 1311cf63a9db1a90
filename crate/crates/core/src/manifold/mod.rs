//! Manifolds with closed-form exponential and logarithmic maps.
//!
//! A [`ManifoldTag`] names a manifold and carries its chart conventions.
//! The chart-level methods on the tag work on flat coordinate slices and are
//! what the models and solvers use in their pixel loops; [`Point`] and
//! [`TangentVector`] wrap coordinates together with their tag for the checked
//! public API (`distance`, `exp`, `log`, ...).
//!
//! Charts:
//!
//! | manifold     | point coords              | tangent coords            |
//! |--------------|---------------------------|---------------------------|
//! | Euclidean(m) | m reals                   | m reals                   |
//! | Circle       | angle in [−π, π)          | one real                  |
//! | Sphere2      | unit 3-vector             | 3-vector ⟂ base           |
//! | SPD(d)       | d×d symmetric, row-major  | d×d symmetric, row-major  |
//! | Rotations3   | 3×3 rotation, row-major   | ω with velocity R[ω]×     |
//! | Product/Power| concatenation             | concatenation             |

pub mod circle;
pub(crate) mod rotations;
pub(crate) mod spd;
pub(crate) mod sphere;

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

/// Sign of the sectional curvature of a manifold.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Curvature {
    Flat,
    NonNegative,
    NonPositive,
    Mixed,
}

#[derive(Debug, Clone, PartialEq)]
pub enum ManifoldTag {
    Euclidean(usize),
    Circle,
    Sphere2,
    Spd(usize),
    Rotations3,
    Product(Vec<ManifoldTag>),
    Power(Box<ManifoldTag>, usize),
}

struct Part<'a> {
    tag: &'a ManifoldTag,
    p: usize,
    t: usize,
}

impl ManifoldTag {
    pub fn validate(&self) -> Result<()> {
        match self {
            ManifoldTag::Euclidean(m) if *m == 0 => {
                Err(Error::invalid("Euclidean dimension must be at least 1"))
            }
            ManifoldTag::Spd(d) if !(2..=3).contains(d) => {
                Err(Error::invalid("SPD dimension must be 2 or 3"))
            }
            ManifoldTag::Product(v) if v.is_empty() => {
                Err(Error::invalid("product manifold needs at least one factor"))
            }
            ManifoldTag::Product(v) => v.iter().try_for_each(|t| t.validate()),
            ManifoldTag::Power(_, 0) => Err(Error::invalid("power manifold needs n >= 1")),
            ManifoldTag::Power(b, _) => b.validate(),
            _ => Ok(()),
        }
    }

    /// Number of chart coordinates of a point.
    pub fn point_len(&self) -> usize {
        match self {
            ManifoldTag::Euclidean(m) => *m,
            ManifoldTag::Circle => 1,
            ManifoldTag::Sphere2 => 3,
            ManifoldTag::Spd(d) => d * d,
            ManifoldTag::Rotations3 => 9,
            ManifoldTag::Product(v) => v.iter().map(|t| t.point_len()).sum(),
            ManifoldTag::Power(b, n) => b.point_len() * n,
        }
    }

    /// Number of coordinates of a tangent vector.
    pub fn tangent_len(&self) -> usize {
        match self {
            ManifoldTag::Euclidean(m) => *m,
            ManifoldTag::Circle => 1,
            ManifoldTag::Sphere2 => 3,
            ManifoldTag::Spd(d) => d * d,
            ManifoldTag::Rotations3 => 3,
            ManifoldTag::Product(v) => v.iter().map(|t| t.tangent_len()).sum(),
            ManifoldTag::Power(b, n) => b.tangent_len() * n,
        }
    }

    /// Manifold dimension.
    pub fn dim(&self) -> usize {
        match self {
            ManifoldTag::Euclidean(m) => *m,
            ManifoldTag::Circle => 1,
            ManifoldTag::Sphere2 => 2,
            ManifoldTag::Spd(d) => d * (d + 1) / 2,
            ManifoldTag::Rotations3 => 3,
            ManifoldTag::Product(v) => v.iter().map(|t| t.dim()).sum(),
            ManifoldTag::Power(b, n) => b.dim() * n,
        }
    }

    pub fn curvature(&self) -> Curvature {
        match self {
            ManifoldTag::Euclidean(_) | ManifoldTag::Circle => Curvature::Flat,
            ManifoldTag::Sphere2 | ManifoldTag::Rotations3 => Curvature::NonNegative,
            ManifoldTag::Spd(_) => Curvature::NonPositive,
            ManifoldTag::Power(b, _) => b.curvature(),
            ManifoldTag::Product(v) => {
                v.iter()
                    .fold(Curvature::Flat, |acc, t| match (acc, t.curvature()) {
                        (a, Curvature::Flat) => a,
                        (Curvature::Flat, c) => c,
                        (a, c) if a == c => a,
                        _ => Curvature::Mixed,
                    })
            }
        }
    }

    /// Complete, simply connected and non-positively curved.
    pub fn is_hadamard(&self) -> bool {
        match self {
            ManifoldTag::Euclidean(_) | ManifoldTag::Spd(_) => true,
            ManifoldTag::Power(b, _) => b.is_hadamard(),
            ManifoldTag::Product(v) => v.iter().all(|t| t.is_hadamard()),
            _ => false,
        }
    }

    fn parts(&self) -> Vec<Part<'_>> {
        let mut out = Vec::new();
        let (mut p, mut t) = (0, 0);
        match self {
            ManifoldTag::Product(v) => {
                for tag in v {
                    out.push(Part { tag, p, t });
                    p += tag.point_len();
                    t += tag.tangent_len();
                }
            }
            ManifoldTag::Power(b, n) => {
                for _ in 0..*n {
                    out.push(Part { tag: b, p, t });
                    p += b.point_len();
                    t += b.tangent_len();
                }
            }
            _ => out.push(Part { tag: self, p, t }),
        }
        out
    }

    fn is_compound(&self) -> bool {
        matches!(self, ManifoldTag::Product(_) | ManifoldTag::Power(..))
    }

    pub fn check_point(&self, x: &[f64]) -> Result<()> {
        if x.len() != self.point_len() {
            return Err(Error::invalid(format!(
                "{self} expects {} coordinates, got {}",
                self.point_len(),
                x.len()
            )));
        }
        if x.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("point has non-finite coordinates"));
        }
        match self {
            ManifoldTag::Euclidean(_) => Ok(()),
            ManifoldTag::Circle => {
                if (-std::f64::consts::PI..std::f64::consts::PI).contains(&x[0]) {
                    Ok(())
                } else {
                    Err(Error::invalid("circle angle outside [-pi, pi)"))
                }
            }
            ManifoldTag::Sphere2 => {
                if (sphere::dot(x, x).sqrt() - 1.0).abs() <= 1e-12 {
                    Ok(())
                } else {
                    Err(Error::invalid("sphere point does not have unit norm"))
                }
            }
            ManifoldTag::Spd(d) => spd::check_point(*d, x),
            ManifoldTag::Rotations3 => rotations::check_point(x),
            _ => self
                .parts()
                .iter()
                .try_for_each(|pt| pt.tag.check_point(&x[pt.p..pt.p + pt.tag.point_len()])),
        }
    }

    pub fn check_tangent(&self, x: &[f64], v: &[f64]) -> Result<()> {
        if v.len() != self.tangent_len() {
            return Err(Error::invalid(format!(
                "{self} expects {} tangent coordinates, got {}",
                self.tangent_len(),
                v.len()
            )));
        }
        if v.iter().any(|c| !c.is_finite()) {
            return Err(Error::invalid("tangent vector has non-finite coordinates"));
        }
        match self {
            ManifoldTag::Sphere2 => {
                if sphere::dot(x, v).abs() <= 1e-10 * (1.0 + sphere::dot(v, v).sqrt()) {
                    Ok(())
                } else {
                    Err(Error::invalid(
                        "sphere tangent is not orthogonal to its base",
                    ))
                }
            }
            ManifoldTag::Spd(d) => {
                let m = spd::mat(*d, v);
                if (&m - m.transpose()).amax() <= 1e-10 * m.amax().max(1.0) {
                    Ok(())
                } else {
                    Err(Error::invalid("SPD tangent is not symmetric"))
                }
            }
            _ if self.is_compound() => self.parts().iter().try_for_each(|pt| {
                pt.tag.check_tangent(
                    &x[pt.p..pt.p + pt.tag.point_len()],
                    &v[pt.t..pt.t + pt.tag.tangent_len()],
                )
            }),
            _ => Ok(()),
        }
    }

    /// Applies a per-factor tangent-valued map and concatenates the results.
    fn concat_tangent(&self, f: impl Fn(&ManifoldTag, usize, usize) -> Vec<f64>) -> Vec<f64> {
        let mut out = Vec::with_capacity(self.tangent_len());
        for pt in self.parts() {
            out.extend(f(pt.tag, pt.p, pt.t));
        }
        out
    }

    pub fn exp(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            ManifoldTag::Euclidean(_) => x.iter().zip(v).map(|(a, b)| a + b).collect(),
            ManifoldTag::Circle => vec![circle::exp(x[0], v[0])],
            ManifoldTag::Sphere2 => sphere::exp(x, v),
            ManifoldTag::Spd(d) => spd::exp(*d, x, v),
            ManifoldTag::Rotations3 => rotations::exp(x, v),
            _ => {
                let mut out = Vec::with_capacity(self.point_len());
                for pt in self.parts() {
                    let (np, nt) = (pt.tag.point_len(), pt.tag.tangent_len());
                    out.extend(pt.tag.exp(&x[pt.p..pt.p + np], &v[pt.t..pt.t + nt]));
                }
                out
            }
        }
    }

    pub fn log(&self, x: &[f64], y: &[f64]) -> Result<Vec<f64>> {
        match self {
            ManifoldTag::Euclidean(_) => Ok(y.iter().zip(x).map(|(a, b)| a - b).collect()),
            ManifoldTag::Circle => Ok(vec![circle::log(x[0], y[0])?]),
            ManifoldTag::Sphere2 => sphere::log(x, y),
            ManifoldTag::Spd(d) => Ok(spd::log(*d, x, y)),
            ManifoldTag::Rotations3 => rotations::log(x, y),
            _ => {
                let mut out = Vec::with_capacity(self.tangent_len());
                for (k, pt) in self.parts().iter().enumerate() {
                    let np = pt.tag.point_len();
                    let v = pt
                        .tag
                        .log(&x[pt.p..pt.p + np], &y[pt.p..pt.p + np])
                        .map_err(|e| e.at_index(k))?;
                    out.extend(v);
                }
                Ok(out)
            }
        }
    }

    pub fn dist(&self, x: &[f64], y: &[f64]) -> f64 {
        match self {
            ManifoldTag::Euclidean(_) => x
                .iter()
                .zip(y)
                .map(|(a, b)| (a - b) * (a - b))
                .sum::<f64>()
                .sqrt(),
            ManifoldTag::Circle => circle::dist(x[0], y[0]),
            ManifoldTag::Sphere2 => sphere::dist(x, y),
            ManifoldTag::Spd(d) => spd::dist(*d, x, y),
            ManifoldTag::Rotations3 => rotations::dist(x, y),
            _ => self
                .parts()
                .iter()
                .map(|pt| {
                    let np = pt.tag.point_len();
                    pt.tag
                        .dist(&x[pt.p..pt.p + np], &y[pt.p..pt.p + np])
                        .powi(2)
                })
                .sum::<f64>()
                .sqrt(),
        }
    }

    pub fn inner(&self, x: &[f64], v: &[f64], w: &[f64]) -> f64 {
        match self {
            ManifoldTag::Spd(d) => spd::inner(*d, x, v, w),
            _ if self.is_compound() => self
                .parts()
                .iter()
                .map(|pt| {
                    let (np, nt) = (pt.tag.point_len(), pt.tag.tangent_len());
                    pt.tag.inner(
                        &x[pt.p..pt.p + np],
                        &v[pt.t..pt.t + nt],
                        &w[pt.t..pt.t + nt],
                    )
                })
                .sum(),
            _ => v.iter().zip(w).map(|(a, b)| a * b).sum(),
        }
    }

    pub fn norm(&self, x: &[f64], v: &[f64]) -> f64 {
        self.inner(x, v, v).max(0.0).sqrt()
    }

    pub fn zero_tangent(&self) -> Vec<f64> {
        vec![0.0; self.tangent_len()]
    }

    /// γ(x, y; t) = exp_x(t log_x y), for any real t.
    pub fn geodesic(&self, x: &[f64], y: &[f64], t: f64) -> Result<Vec<f64>> {
        let v = self.log(x, y)?;
        Ok(self.exp(x, &scale(&v, t)))
    }

    /// Geodesic reflection of x at p: exp_p(−log_p x).
    pub fn reflect(&self, p: &[f64], x: &[f64]) -> Result<Vec<f64>> {
        let v = self.log(p, x)?;
        Ok(self.exp(p, &scale(&v, -1.0)))
    }

    /// Closed-form parallel transport of ξ ∈ T_x along the minimizing geodesic to y.
    pub fn transport(&self, x: &[f64], y: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
        let v = self.log(x, y)?;
        Ok(self.transport_along(x, &v, 1.0, xi))
    }

    /// Parallel transport of ξ ∈ T_x along s ↦ exp_x(s v), s from 0 to t.
    pub fn transport_along(&self, x: &[f64], v: &[f64], t: f64, xi: &[f64]) -> Vec<f64> {
        match self {
            ManifoldTag::Euclidean(_) | ManifoldTag::Circle => xi.to_vec(),
            ManifoldTag::Sphere2 => sphere::transport_along(x, v, t, xi),
            ManifoldTag::Spd(d) => spd::transport_along(*d, x, v, t, xi),
            ManifoldTag::Rotations3 => rotations::transport_along(v, t, xi),
            _ => self.concat_tangent(|tag, p, q| {
                let (np, nt) = (tag.point_len(), tag.tangent_len());
                tag.transport_along(&x[p..p + np], &v[q..q + nt], t, &xi[q..q + nt])
            }),
        }
    }

    /// A deterministic orthonormal basis of T_x.
    pub fn tangent_basis(&self, x: &[f64]) -> Vec<Vec<f64>> {
        match self {
            ManifoldTag::Euclidean(m) => unit_vectors(*m, *m),
            ManifoldTag::Circle => vec![vec![1.0]],
            ManifoldTag::Sphere2 => sphere::basis(x).to_vec(),
            ManifoldTag::Spd(d) => spd::basis(*d, x),
            ManifoldTag::Rotations3 => unit_vectors(3, 3),
            _ => {
                let n = self.tangent_len();
                let mut out = Vec::with_capacity(self.dim());
                for pt in self.parts() {
                    for b in pt.tag.tangent_basis(&x[pt.p..pt.p + pt.tag.point_len()]) {
                        let mut e = vec![0.0; n];
                        e[pt.t..pt.t + b.len()].copy_from_slice(&b);
                        out.push(e);
                    }
                }
                out
            }
        }
    }

    /// Orthonormal frame of T_x diagonalizing ξ ↦ R(ξ, v)v, with eigenvalues.
    ///
    /// For v = log_x(y) the eigenvalues are those of the unit-interval
    /// geodesic from x to y, i.e. already scaled by dist(x, y)².
    pub fn eigenframe(&self, x: &[f64], v: &[f64]) -> Vec<(Vec<f64>, f64)> {
        match self {
            ManifoldTag::Euclidean(m) => {
                unit_vectors(*m, *m).into_iter().map(|e| (e, 0.0)).collect()
            }
            ManifoldTag::Circle => vec![(vec![1.0], 0.0)],
            ManifoldTag::Sphere2 => sphere::eigenframe(x, v),
            ManifoldTag::Spd(d) => spd::eigenframe(*d, x, v),
            ManifoldTag::Rotations3 => rotations::eigenframe(v),
            _ => {
                let n = self.tangent_len();
                let mut out = Vec::with_capacity(self.dim());
                for pt in self.parts() {
                    let (np, nt) = (pt.tag.point_len(), pt.tag.tangent_len());
                    for (b, k) in pt.tag.eigenframe(&x[pt.p..pt.p + np], &v[pt.t..pt.t + nt]) {
                        let mut e = vec![0.0; n];
                        e[pt.t..pt.t + nt].copy_from_slice(&b);
                        out.push((e, k));
                    }
                }
                out
            }
        }
    }

    /// Orthogonal projection of an ambient vector onto T_x.
    pub fn project_tangent(&self, x: &[f64], v: &[f64]) -> Vec<f64> {
        match self {
            ManifoldTag::Sphere2 => {
                let a = sphere::dot(x, v);
                (0..3).map(|k| v[k] - a * x[k]).collect()
            }
            ManifoldTag::Spd(d) => spd::flat(&spd::mat(*d, v)),
            _ if self.is_compound() => self.concat_tangent(|tag, p, q| {
                tag.project_tangent(&x[p..p + tag.point_len()], &v[q..q + tag.tangent_len()])
            }),
            _ => v.to_vec(),
        }
    }
}

fn unit_vectors(n: usize, len: usize) -> Vec<Vec<f64>> {
    (0..n)
        .map(|k| {
            let mut e = vec![0.0; len];
            e[k] = 1.0;
            e
        })
        .collect()
}

pub(crate) fn scale(v: &[f64], s: f64) -> Vec<f64> {
    v.iter().map(|e| e * s).collect()
}

pub(crate) fn axpy(alpha: f64, x: &[f64], y: &mut [f64]) {
    y.iter_mut().zip(x).for_each(|(b, a)| *b += alpha * a);
}

impl fmt::Display for ManifoldTag {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        match self {
            ManifoldTag::Euclidean(m) => write!(f, "Euclidean({m})"),
            ManifoldTag::Circle => write!(f, "Circle"),
            ManifoldTag::Sphere2 => write!(f, "Sphere2"),
            ManifoldTag::Spd(d) => write!(f, "SPD({d})"),
            ManifoldTag::Rotations3 => write!(f, "Rotations3"),
            ManifoldTag::Product(v) => {
                write!(f, "Product(")?;
                for (i, t) in v.iter().enumerate() {
                    if i > 0 {
                        write!(f, ",")?;
                    }
                    write!(f, "{t}")?;
                }
                write!(f, ")")
            }
            ManifoldTag::Power(b, n) => write!(f, "Power({b},{n})"),
        }
    }
}

impl FromStr for ManifoldTag {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let mut parser = TagParser {
            s: s.as_bytes(),
            pos: 0,
        };
        let tag = parser.tag()?;
        parser.skip_ws();
        if parser.pos != parser.s.len() {
            return Err(Error::invalid(format!(
                "trailing input in manifold tag '{s}'"
            )));
        }
        tag.validate()?;
        Ok(tag)
    }
}

struct TagParser<'a> {
    s: &'a [u8],
    pos: usize,
}

impl TagParser<'_> {
    fn skip_ws(&mut self) {
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_whitespace() {
            self.pos += 1;
        }
    }

    fn expect(&mut self, c: u8) -> Result<()> {
        self.skip_ws();
        if self.s.get(self.pos) == Some(&c) {
            self.pos += 1;
            Ok(())
        } else {
            Err(Error::invalid(format!(
                "expected '{}' at offset {} of manifold tag",
                c as char, self.pos
            )))
        }
    }

    fn ident(&mut self) -> String {
        self.skip_ws();
        let start = self.pos;
        while self.pos < self.s.len() && self.s[self.pos].is_ascii_alphanumeric() {
            self.pos += 1;
        }
        String::from_utf8_lossy(&self.s[start..self.pos]).into_owned()
    }

    fn number(&mut self) -> Result<usize> {
        let id = self.ident();
        id.parse()
            .map_err(|_| Error::invalid(format!("expected an integer, found '{id}'")))
    }

    fn tag(&mut self) -> Result<ManifoldTag> {
        let name = self.ident();
        match name.as_str() {
            "Circle" => Ok(ManifoldTag::Circle),
            "Sphere2" => Ok(ManifoldTag::Sphere2),
            "Rotations3" => Ok(ManifoldTag::Rotations3),
            "Euclidean" | "SPD" => {
                self.expect(b'(')?;
                let n = self.number()?;
                self.expect(b')')?;
                Ok(if name == "SPD" {
                    ManifoldTag::Spd(n)
                } else {
                    ManifoldTag::Euclidean(n)
                })
            }
            "Product" => {
                self.expect(b'(')?;
                let mut v = vec![self.tag()?];
                loop {
                    self.skip_ws();
                    if self.s.get(self.pos) == Some(&b',') {
                        self.pos += 1;
                        v.push(self.tag()?);
                    } else {
                        break;
                    }
                }
                self.expect(b')')?;
                Ok(ManifoldTag::Product(v))
            }
            "Power" => {
                self.expect(b'(')?;
                let b = self.tag()?;
                self.expect(b',')?;
                let n = self.number()?;
                self.expect(b')')?;
                Ok(ManifoldTag::Power(Box::new(b), n))
            }
            other => Err(Error::invalid(format!("unknown manifold '{other}'"))),
        }
    }
}

/// A point on a tagged manifold.
#[derive(Debug, Clone, PartialEq)]
pub struct Point {
    tag: ManifoldTag,
    coords: Vec<f64>,
}

impl Point {
    /// Validates the coordinates against the chart of `tag`.
    pub fn new(tag: ManifoldTag, coords: Vec<f64>) -> Result<Self> {
        tag.validate()?;
        tag.check_point(&coords)?;
        Ok(Point { tag, coords })
    }

    /// Builds a point without validation; for coordinates produced by the
    /// chart maps themselves.
    pub(crate) fn from_chart(tag: ManifoldTag, coords: Vec<f64>) -> Self {
        Point { tag, coords }
    }

    pub fn circle(angle: f64) -> Self {
        Point::from_chart(ManifoldTag::Circle, vec![circle::wrap(angle)])
    }

    pub fn tag(&self) -> &ManifoldTag {
        &self.tag
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn into_coords(self) -> Vec<f64> {
        self.coords
    }
}

/// A tangent vector together with its base point.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentVector {
    base: Point,
    coords: Vec<f64>,
}

impl TangentVector {
    pub fn new(base: Point, coords: Vec<f64>) -> Result<Self> {
        base.tag.check_tangent(&base.coords, &coords)?;
        Ok(TangentVector { base, coords })
    }

    pub(crate) fn from_chart(base: Point, coords: Vec<f64>) -> Self {
        TangentVector { base, coords }
    }

    pub fn zero(base: &Point) -> Self {
        let coords = base.tag.zero_tangent();
        TangentVector {
            base: base.clone(),
            coords,
        }
    }

    pub fn base(&self) -> &Point {
        &self.base
    }

    pub fn coords(&self) -> &[f64] {
        &self.coords
    }

    pub fn norm(&self) -> f64 {
        self.base.tag.norm(&self.base.coords, &self.coords)
    }

    pub fn scaled(&self, s: f64) -> Self {
        TangentVector {
            base: self.base.clone(),
            coords: scale(&self.coords, s),
        }
    }
}

fn same_tag(x: &Point, y: &Point) -> Result<()> {
    if x.tag == y.tag {
        Ok(())
    } else {
        Err(Error::invalid(format!(
            "manifold mismatch: {} vs {}",
            x.tag, y.tag
        )))
    }
}

pub(crate) fn based_at(x: &Point, v: &TangentVector) -> Result<()> {
    if &v.base == x {
        Ok(())
    } else {
        Err(Error::invalid(
            "tangent vector is not based at the given point",
        ))
    }
}

/// Geodesic distance; the product distance on products and powers.
pub fn distance(x: &Point, y: &Point) -> Result<f64> {
    same_tag(x, y)?;
    Ok(x.tag.dist(&x.coords, &y.coords))
}

pub fn exp(x: &Point, v: &TangentVector) -> Result<Point> {
    based_at(x, v)?;
    Ok(Point::from_chart(
        x.tag.clone(),
        x.tag.exp(&x.coords, &v.coords),
    ))
}

pub fn log(x: &Point, y: &Point) -> Result<TangentVector> {
    same_tag(x, y)?;
    let v = x.tag.log(&x.coords, &y.coords)?;
    Ok(TangentVector::from_chart(x.clone(), v))
}

pub fn geodesic_point(x: &Point, y: &Point, t: f64) -> Result<Point> {
    same_tag(x, y)?;
    Ok(Point::from_chart(
        x.tag.clone(),
        x.tag.geodesic(&x.coords, &y.coords, t)?,
    ))
}

pub fn inner(x: &Point, v: &TangentVector, w: &TangentVector) -> Result<f64> {
    based_at(x, v)?;
    based_at(x, w)?;
    Ok(x.tag.inner(&x.coords, &v.coords, &w.coords))
}

/// Geodesic reflection of x at p.
pub fn reflect(p: &Point, x: &Point) -> Result<Point> {
    same_tag(p, x)?;
    Ok(Point::from_chart(
        p.tag.clone(),
        p.tag.reflect(&p.coords, &x.coords)?,
    ))
}
