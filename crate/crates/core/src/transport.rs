//! Parallel transport and Jacobi-field differentials.
//!
//! The differentials of the maps built from `exp` and `log` on a symmetric
//! manifold diagonalize in a parallel frame along the connecting geodesic.
//! With `{Ξ_k}` that frame and `κ_k` the eigenvalues of `R(·, γ̇)γ̇` along
//! the unit-interval geodesic γ from x to y,
//!
//! ```text
//! DF(x)[ξ] = Σ_k ⟨ξ, Ξ_k(0)⟩ α(κ_k) Ξ_k(T)
//! ```
//!
//! where α and T depend on which map F is differentiated
//! (see [`CoefficientCase`]). Because γ runs over the unit interval, the
//! κ_k are the curvature eigenvalues scaled by `dist(x, y)²`; on the unit
//! sphere, for instance, they are `0` and `dist(x, y)²`.

use crate::error::{Error, Result};
use crate::manifold::{self, based_at, ManifoldTag, Point, TangentVector};

/// Below this |κ| the coefficient maps are evaluated by their Taylor series.
const SERIES_THRESHOLD: f64 = 1e-8;

/// `|sin √κ|` below this counts as a pole of the coefficient map.
const POLE_TOLERANCE: f64 = 1e-12;

/// Which map is differentiated.
///
/// `GeoFirst(τ)` and `GeoSecond(τ)` accept any real τ: values outside
/// [0, 1] differentiate points on the extended geodesic, as needed for the
/// reflection step γ(·, ·; 2) of the pole ladder.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum CoefficientCase {
    /// x ↦ exp_x(u), with u parallel transported along the variation.
    ExpBase,
    /// x ↦ log_x(y), as a covariant derivative.
    LogBase,
    /// x ↦ log_y(x).
    LogArg,
    /// x ↦ γ(x, y; τ).
    GeoFirst(f64),
    /// x ↦ γ(y, x; τ).
    GeoSecond(f64),
    /// u ↦ exp_x(u).
    ExpArg,
}

impl CoefficientCase {
    /// Parameter T at which the output of the differential lives on γ.
    pub fn output_time(&self) -> f64 {
        match *self {
            CoefficientCase::LogBase => 0.0,
            CoefficientCase::GeoFirst(t) => t,
            CoefficientCase::GeoSecond(t) => 1.0 - t,
            _ => 1.0,
        }
    }

    fn validate(&self) -> Result<()> {
        match *self {
            CoefficientCase::GeoFirst(t) | CoefficientCase::GeoSecond(t) if !t.is_finite() => {
                Err(Error::invalid("geodesic parameter must be finite"))
            }
            _ => Ok(()),
        }
    }
}

fn check_pole(s: f64, kappa: f64) -> Result<()> {
    if s.abs() < POLE_TOLERANCE {
        Err(Error::SingularCoefficient { kappa })
    } else {
        Ok(())
    }
}

/// sin(a√κ)/sin(√κ), continued to κ ≤ 0.
fn sine_ratio(a: f64, kappa: f64) -> Result<f64> {
    if kappa.abs() < SERIES_THRESHOLD {
        return Ok(a * (1.0 + kappa * (1.0 - a * a) / 6.0));
    }
    if kappa > 0.0 {
        let r = kappa.sqrt();
        let s = r.sin();
        check_pole(s, kappa)?;
        Ok((a * r).sin() / s)
    } else {
        let r = (-kappa).sqrt();
        Ok((a * r).sinh() / r.sinh())
    }
}

/// The coefficient map α of the given case at the (scaled) eigenvalue κ.
pub fn alpha(case: CoefficientCase, kappa: f64) -> Result<f64> {
    case.validate()?;
    if !kappa.is_finite() {
        return Err(Error::invalid("curvature eigenvalue must be finite"));
    }
    let small = kappa.abs() < SERIES_THRESHOLD;
    let k2 = kappa * kappa;
    match case {
        CoefficientCase::ExpBase => Ok(if small {
            1.0 - kappa / 2.0 + k2 / 24.0
        } else if kappa > 0.0 {
            kappa.sqrt().cos()
        } else {
            (-kappa).sqrt().cosh()
        }),
        CoefficientCase::LogBase => {
            if small {
                return Ok(-(1.0 - kappa / 3.0 - k2 / 45.0));
            }
            if kappa > 0.0 {
                let r = kappa.sqrt();
                let s = r.sin();
                check_pole(s, kappa)?;
                Ok(-r * r.cos() / s)
            } else {
                let r = (-kappa).sqrt();
                Ok(-r / r.tanh())
            }
        }
        CoefficientCase::LogArg => {
            if small {
                return Ok(1.0 + kappa / 6.0 + 7.0 * k2 / 360.0);
            }
            if kappa > 0.0 {
                let r = kappa.sqrt();
                let s = r.sin();
                check_pole(s, kappa)?;
                Ok(r / s)
            } else {
                let r = (-kappa).sqrt();
                Ok(r / r.sinh())
            }
        }
        CoefficientCase::GeoFirst(t) => sine_ratio(1.0 - t, kappa),
        CoefficientCase::GeoSecond(t) => sine_ratio(t, kappa),
        CoefficientCase::ExpArg => Ok(if small {
            1.0 - kappa / 6.0 + k2 / 120.0
        } else if kappa > 0.0 {
            let r = kappa.sqrt();
            r.sin() / r
        } else {
            let r = (-kappa).sqrt();
            r.sinh() / r
        }),
    }
}

/// Parallel orthonormal frame along t ↦ exp_x(t v) diagonalizing the
/// curvature operator, with its scaled eigenvalues.
#[derive(Debug, Clone)]
pub struct JacobiFrame {
    tag: ManifoldTag,
    x: Vec<f64>,
    v: Vec<f64>,
    vectors: Vec<Vec<f64>>,
    kappa: Vec<f64>,
}

impl JacobiFrame {
    /// Frame along the geodesic with initial velocity `v` at `x`.
    pub fn along(tag: &ManifoldTag, x: &[f64], v: &[f64]) -> Self {
        let (vectors, kappa) = tag.eigenframe(x, v).into_iter().unzip();
        JacobiFrame {
            tag: tag.clone(),
            x: x.to_vec(),
            v: v.to_vec(),
            vectors,
            kappa,
        }
    }

    /// Frame along the minimizing geodesic from `x` to `y`.
    pub fn between(tag: &ManifoldTag, x: &[f64], y: &[f64]) -> Result<Self> {
        let v = tag.log(x, y)?;
        Ok(Self::along(tag, x, &v))
    }

    pub fn tag(&self) -> &ManifoldTag {
        &self.tag
    }

    pub fn base(&self) -> &[f64] {
        &self.x
    }

    /// Initial velocity of the unit-interval geodesic.
    pub fn velocity(&self) -> &[f64] {
        &self.v
    }

    /// Frame vectors Ξ_k(0) at the base point.
    pub fn vectors(&self) -> &[Vec<f64>] {
        &self.vectors
    }

    /// Eigenvalues κ_k, scaled to the unit-interval geodesic.
    pub fn eigenvalues(&self) -> &[f64] {
        &self.kappa
    }

    /// γ(t).
    pub fn point_at(&self, t: f64) -> Vec<f64> {
        if t == 0.0 {
            return self.x.clone();
        }
        self.tag.exp(&self.x, &manifold::scale(&self.v, t))
    }

    /// Ξ_k(t) for every k.
    pub fn vectors_at(&self, t: f64) -> Vec<Vec<f64>> {
        if t == 0.0 {
            return self.vectors.clone();
        }
        self.vectors
            .iter()
            .map(|e| self.tag.transport_along(&self.x, &self.v, t, e))
            .collect()
    }

    fn coefficients(&self, case: CoefficientCase) -> Result<Vec<f64>> {
        self.kappa.iter().map(|&k| alpha(case, k)).collect()
    }

    /// DF(x)[ξ], a tangent vector at γ(T).
    pub fn apply(&self, case: CoefficientCase, xi: &[f64]) -> Result<Vec<f64>> {
        let a = self.coefficients(case)?;
        let t = case.output_time();
        let mut out = self.tag.zero_tangent();
        for ((e, ek), ak) in self.vectors.iter().zip(self.vectors_at(t)).zip(a) {
            let c = self.tag.inner(&self.x, xi, e) * ak;
            manifold::axpy(c, &ek, &mut out);
        }
        Ok(out)
    }

    /// DF(x)*[w] for w at γ(T), a tangent vector at x.
    pub fn apply_adjoint(&self, case: CoefficientCase, w: &[f64]) -> Result<Vec<f64>> {
        let a = self.coefficients(case)?;
        let t = case.output_time();
        let at = self.point_at(t);
        let mut out = self.tag.zero_tangent();
        for ((e, ek), ak) in self.vectors.iter().zip(self.vectors_at(t)).zip(a) {
            let c = self.tag.inner(&at, w, &ek) * ak;
            manifold::axpy(c, e, &mut out);
        }
        Ok(out)
    }
}

/// The Jacobi frame of the minimizing geodesic from `x` to `y`.
pub fn jacobi_frame(x: &Point, y: &Point) -> Result<JacobiFrame> {
    if x.tag() != y.tag() {
        return Err(Error::invalid("manifold mismatch"));
    }
    let tag = x.tag();
    let v = tag.log(x.coords(), y.coords())?;
    if tag.norm(x.coords(), &v) == 0.0 {
        return Err(Error::DegenerateGeodesic);
    }
    Ok(JacobiFrame::along(tag, x.coords(), &v))
}

/// The second argument of a differentiated map: the other end point y,
/// or the tangent vector u at x (then y = exp_x(u)).
#[derive(Debug, Clone, Copy)]
pub enum Anchor<'a> {
    Point(&'a Point),
    Tangent(&'a TangentVector),
}

fn frame_for(case: CoefficientCase, x: &Point, anchor: Anchor<'_>) -> Result<JacobiFrame> {
    case.validate()?;
    let tag = x.tag();
    match anchor {
        Anchor::Point(y) => {
            if y.tag() != tag {
                return Err(Error::invalid("manifold mismatch"));
            }
            JacobiFrame::between(tag, x.coords(), y.coords())
        }
        Anchor::Tangent(u) => {
            based_at(x, u)?;
            Ok(JacobiFrame::along(tag, x.coords(), u.coords()))
        }
    }
}

fn output_base(case: CoefficientCase, frame: &JacobiFrame, x: &Point, anchor: Anchor<'_>) -> Point {
    let t = case.output_time();
    match anchor {
        Anchor::Point(y) if t == 1.0 => y.clone(),
        _ if t == 0.0 => x.clone(),
        _ => Point::from_chart(x.tag().clone(), frame.point_at(t)),
    }
}

/// DF(x)[ξ] for the map selected by `case`.
pub fn differential(
    case: CoefficientCase,
    x: &Point,
    anchor: Anchor<'_>,
    xi: &TangentVector,
) -> Result<TangentVector> {
    based_at(x, xi)?;
    let frame = frame_for(case, x, anchor)?;
    let out = frame.apply(case, xi.coords())?;
    Ok(TangentVector::from_chart(
        output_base(case, &frame, x, anchor),
        out,
    ))
}

/// (DF(x))*[w] for w based at F(x).
pub fn adjoint_differential(
    case: CoefficientCase,
    x: &Point,
    anchor: Anchor<'_>,
    w: &TangentVector,
) -> Result<TangentVector> {
    let frame = frame_for(case, x, anchor)?;
    let at = output_base(case, &frame, x, anchor);
    let tag = x.tag();
    if w.base().tag() != tag
        || tag.dist(w.base().coords(), at.coords())
            > 1e-8 * (1.0 + tag.norm(x.coords(), frame.velocity()))
    {
        return Err(Error::invalid(
            "adjoint argument must be based at the image point F(x)",
        ));
    }
    let out = frame.apply_adjoint(case, w.coords())?;
    Ok(TangentVector::from_chart(x.clone(), out))
}

fn same_base(x: &Point, y: &Point, xi: &TangentVector) -> Result<()> {
    based_at(x, xi)?;
    if x.tag() != y.tag() {
        return Err(Error::invalid("manifold mismatch"));
    }
    Ok(())
}

/// Pole ladder −log_y(γ(exp_x ξ, γ(x, y; ½); 2)) on chart coordinates.
pub(crate) fn pole_chart(tag: &ManifoldTag, x: &[f64], y: &[f64], xi: &[f64]) -> Result<Vec<f64>> {
    let z = tag.exp(x, xi);
    let m = tag.geodesic(x, y, 0.5).map_err(|e| e.in_step("midpoint"))?;
    let w = tag
        .geodesic(&z, &m, 2.0)
        .map_err(|e| e.in_step("reflection"))?;
    let v = tag.log(y, &w).map_err(|e| e.in_step("final log"))?;
    Ok(manifold::scale(&v, -1.0))
}

/// Schild's ladder log_y(γ(x, γ(y, exp_x ξ; ½); 2)) on chart coordinates.
pub(crate) fn schild_chart(
    tag: &ManifoldTag,
    x: &[f64],
    y: &[f64],
    xi: &[f64],
) -> Result<Vec<f64>> {
    let z = tag.exp(x, xi);
    let m = tag
        .geodesic(y, &z, 0.5)
        .map_err(|e| e.in_step("midpoint"))?;
    let w = tag
        .geodesic(x, &m, 2.0)
        .map_err(|e| e.in_step("reflection"))?;
    tag.log(y, &w).map_err(|e| e.in_step("final log"))
}

/// Closed-form parallel transport along the minimizing geodesic.
pub fn transport_closed(x: &Point, y: &Point, xi: &TangentVector) -> Result<TangentVector> {
    same_base(x, y, xi)?;
    let out = x.tag().transport(x.coords(), y.coords(), xi.coords())?;
    Ok(TangentVector::from_chart(y.clone(), out))
}

/// Pole-ladder transport; exact on symmetric spaces.
pub fn transport_pole(x: &Point, y: &Point, xi: &TangentVector) -> Result<TangentVector> {
    same_base(x, y, xi)?;
    let out = pole_chart(x.tag(), x.coords(), y.coords(), xi.coords())?;
    Ok(TangentVector::from_chart(y.clone(), out))
}

/// Schild's-ladder transport; a first-order approximation on curved spaces.
pub fn transport_schild(x: &Point, y: &Point, xi: &TangentVector) -> Result<TangentVector> {
    same_base(x, y, xi)?;
    let out = schild_chart(x.tag(), x.coords(), y.coords(), xi.coords())?;
    Ok(TangentVector::from_chart(y.clone(), out))
}

/// Gradient pieces of ⟨P^P_{x→y}(ζ), g⟩_y with respect to x, y and ζ.
///
/// Derivatives in x and y are covariant: ζ is carried along x by parallel
/// transport and the output is compared at y by parallel transport.
#[derive(Debug, Clone, PartialEq)]
pub struct PoleAdjoint {
    pub x: Vec<f64>,
    pub y: Vec<f64>,
    pub zeta: Vec<f64>,
}

/// Applies the adjoint of the pole-ladder differential to `g ∈ T_y`.
///
/// With z = exp_x ζ, m = γ(x, y; ½), w = γ(z, m; 2) and P = −log_y w the
/// chain rule combines the cases of [`CoefficientCase`].
pub fn pole_ladder_adjoint(
    tag: &ManifoldTag,
    x: &[f64],
    y: &[f64],
    zeta: &[f64],
    g: &[f64],
) -> Result<PoleAdjoint> {
    use CoefficientCase::*;
    let z = tag.exp(x, zeta);
    let m = tag.geodesic(x, y, 0.5).map_err(|e| e.in_step("midpoint"))?;
    let w = tag
        .geodesic(&z, &m, 2.0)
        .map_err(|e| e.in_step("reflection"))?;

    let neg_g = manifold::scale(g, -1.0);
    // P = −log_y(w): in w (case iii, geodesic w → y) and in y (case ii, y → w)
    let g_w = JacobiFrame::between(tag, &w, y)
        .map_err(|e| e.in_step("final log"))?
        .apply_adjoint(LogArg, &neg_g)?;
    let mut g_y = JacobiFrame::between(tag, y, &w)?.apply_adjoint(LogBase, &neg_g)?;

    // w = γ(z, m; 2): in z (case iv, z → m) and in m (case v, m → z)
    let g_z = JacobiFrame::between(tag, &z, &m)?.apply_adjoint(GeoFirst(2.0), &g_w)?;
    let g_m = JacobiFrame::between(tag, &m, &z)?.apply_adjoint(GeoSecond(2.0), &g_w)?;

    // z = exp_x(ζ): in x (case i) and in ζ (case vi), same geodesic x → z
    let fz = JacobiFrame::along(tag, x, zeta);
    let mut g_x = fz.apply_adjoint(ExpBase, &g_z)?;
    let g_zeta = fz.apply_adjoint(ExpArg, &g_z)?;

    // m = γ(x, y; ½): in x (case iv, x → y) and in y (case v, y → x)
    let gx_m = JacobiFrame::between(tag, x, y)?.apply_adjoint(GeoFirst(0.5), &g_m)?;
    let gy_m = JacobiFrame::between(tag, y, x)?.apply_adjoint(GeoSecond(0.5), &g_m)?;
    manifold::axpy(1.0, &gx_m, &mut g_x);
    manifold::axpy(1.0, &gy_m, &mut g_y);

    Ok(PoleAdjoint {
        x: g_x,
        y: g_y,
        zeta: g_zeta,
    })
}
