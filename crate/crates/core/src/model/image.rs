use crate::error::{Error, Result};
use crate::manifold::{ManifoldTag, Point, TangentVector};

/// An n₁ × n₂ grid of points on one manifold, stored row-major as flat
/// chart coordinates. Signals are n₁ × 1.
///
/// The x-direction steps the first index (i₁ + 1), the y-direction the
/// second (i₂ + 1).
#[derive(Debug, Clone, PartialEq)]
pub struct ManifoldImage {
    tag: ManifoldTag,
    n1: usize,
    n2: usize,
    data: Vec<f64>,
}

impl ManifoldImage {
    /// Validates the shape and every pixel against the chart of `tag`.
    pub fn new(tag: ManifoldTag, n1: usize, n2: usize, data: Vec<f64>) -> Result<Self> {
        tag.validate()?;
        if n1 == 0 || n2 == 0 {
            return Err(Error::invalid("image dimensions must be positive"));
        }
        let len = tag.point_len();
        if data.len() != n1 * n2 * len {
            return Err(Error::invalid(format!(
                "{n1}x{n2} image on {tag} needs {} coordinates, got {}",
                n1 * n2 * len,
                data.len()
            )));
        }
        for (i, px) in data.chunks(len).enumerate() {
            tag.check_point(px)
                .map_err(|e| Error::invalid(format!("pixel {i}: {e}")))?;
        }
        Ok(ManifoldImage { tag, n1, n2, data })
    }

    pub(crate) fn from_chart(tag: ManifoldTag, n1: usize, n2: usize, data: Vec<f64>) -> Self {
        debug_assert_eq!(data.len(), n1 * n2 * tag.point_len());
        ManifoldImage { tag, n1, n2, data }
    }

    /// Every pixel set to `p`.
    pub fn constant(p: &Point, n1: usize, n2: usize) -> Self {
        let data = p.coords().repeat(n1 * n2);
        ManifoldImage::from_chart(p.tag().clone(), n1, n2, data)
    }

    pub fn from_points(points: &[Point], n1: usize, n2: usize) -> Result<Self> {
        if points.is_empty() || points.len() != n1 * n2 {
            return Err(Error::invalid("point count does not match the image shape"));
        }
        let tag = points[0].tag().clone();
        if points.iter().any(|p| *p.tag() != tag) {
            return Err(Error::invalid("image pixels must share one manifold"));
        }
        let data = points.iter().flat_map(|p| p.coords().to_vec()).collect();
        Ok(ManifoldImage::from_chart(tag, n1, n2, data))
    }

    pub fn tag(&self) -> &ManifoldTag {
        &self.tag
    }

    pub fn n1(&self) -> usize {
        self.n1
    }

    pub fn n2(&self) -> usize {
        self.n2
    }

    pub fn len(&self) -> usize {
        self.n1 * self.n2
    }

    pub fn is_empty(&self) -> bool {
        self.len() == 0
    }

    pub fn data(&self) -> &[f64] {
        &self.data
    }

    pub fn into_data(self) -> Vec<f64> {
        self.data
    }

    /// Chart coordinates of pixel `i` (row-major index).
    pub fn px(&self, i: usize) -> &[f64] {
        let l = self.tag.point_len();
        &self.data[i * l..(i + 1) * l]
    }

    pub(crate) fn set_px(&mut self, i: usize, v: &[f64]) {
        let l = self.tag.point_len();
        self.data[i * l..(i + 1) * l].copy_from_slice(v);
    }

    pub fn pixel(&self, i1: usize, i2: usize) -> Point {
        Point::from_chart(self.tag.clone(), self.px(self.index(i1, i2)).to_vec())
    }

    pub fn index(&self, i1: usize, i2: usize) -> usize {
        i1 * self.n2 + i2
    }

    /// Row-major index of (i₁ + d₁, i₂ + d₂) when it lies in the grid.
    pub fn offset(&self, i: usize, d1: isize, d2: isize) -> Option<usize> {
        let a = (i / self.n2) as isize + d1;
        let b = (i % self.n2) as isize + d2;
        if a < 0 || b < 0 || a >= self.n1 as isize || b >= self.n2 as isize {
            None
        } else {
            Some(a as usize * self.n2 + b as usize)
        }
    }

    pub(crate) fn same_shape(&self, other: &ManifoldImage) -> Result<()> {
        if self.tag != other.tag {
            return Err(Error::invalid(format!(
                "manifold mismatch: {} vs {}",
                self.tag, other.tag
            )));
        }
        if self.n1 != other.n1 || self.n2 != other.n2 {
            return Err(Error::invalid(format!(
                "shape mismatch: {}x{} vs {}x{}",
                self.n1, self.n2, other.n1, other.n2
            )));
        }
        Ok(())
    }
}

/// Two tangent vectors per pixel, based at the pixels of `base`.
#[derive(Debug, Clone, PartialEq)]
pub struct TangentField {
    base: ManifoldImage,
    x: Vec<f64>,
    y: Vec<f64>,
}

impl TangentField {
    pub fn zeros(base: &ManifoldImage) -> Self {
        let n = base.len() * base.tag().tangent_len();
        TangentField {
            base: base.clone(),
            x: vec![0.0; n],
            y: vec![0.0; n],
        }
    }

    /// Validates that every component is tangent at its pixel.
    pub fn new(base: ManifoldImage, x: Vec<f64>, y: Vec<f64>) -> Result<Self> {
        let t = base.tag().tangent_len();
        if x.len() != base.len() * t || y.len() != base.len() * t {
            return Err(Error::invalid(
                "tangent field has the wrong number of coordinates",
            ));
        }
        for i in 0..base.len() {
            base.tag()
                .check_tangent(base.px(i), &x[i * t..(i + 1) * t])?;
            base.tag()
                .check_tangent(base.px(i), &y[i * t..(i + 1) * t])?;
        }
        Ok(TangentField { base, x, y })
    }

    pub(crate) fn from_parts(base: ManifoldImage, x: Vec<f64>, y: Vec<f64>) -> Self {
        TangentField { base, x, y }
    }

    pub fn base(&self) -> &ManifoldImage {
        &self.base
    }

    /// Component ξ₁ (k = 0) or ξ₂ (k = 1) at pixel `i`.
    pub fn at(&self, k: usize, i: usize) -> &[f64] {
        let t = self.base.tag().tangent_len();
        let v = if k == 0 { &self.x } else { &self.y };
        &v[i * t..(i + 1) * t]
    }

    pub fn vector(&self, k: usize, i: usize) -> TangentVector {
        let p = Point::from_chart(self.base.tag().clone(), self.base.px(i).to_vec());
        TangentVector::from_chart(p, self.at(k, i).to_vec())
    }

    pub fn x(&self) -> &[f64] {
        &self.x
    }

    pub fn y(&self) -> &[f64] {
        &self.y
    }

    pub(crate) fn into_parts(self) -> (ManifoldImage, Vec<f64>, Vec<f64>) {
        (self.base, self.x, self.y)
    }
}
