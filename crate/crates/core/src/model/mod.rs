//! Denoising functionals: data term, TV, TV_φ, TV₂, TV-TV₂ and TGV.

use std::fmt;
use std::str::FromStr;

use crate::error::{Error, Result};

pub mod diff;
mod image;
pub(crate) mod terms;
mod tgv;

pub use diff::{mixed_diff, second_diff};
pub use image::{ManifoldImage, TangentField};
pub use tgv::{tgv, TgvValue};

use terms::Family;
pub use terms::Iterate;

/// Which regularizer the objective uses.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ModelKind {
    Tv,
    TvPhi,
    Tv2,
    TvTv2,
    Tgv,
}

impl fmt::Display for ModelKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ModelKind::Tv => "tv",
            ModelKind::TvPhi => "tvphi",
            ModelKind::Tv2 => "tv2",
            ModelKind::TvTv2 => "tvtv2",
            ModelKind::Tgv => "tgv",
        })
    }
}

impl FromStr for ModelKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s.to_ascii_lowercase().as_str() {
            "tv" => Ok(ModelKind::Tv),
            "tvphi" | "tv-phi" => Ok(ModelKind::TvPhi),
            "tv2" => Ok(ModelKind::Tv2),
            "tvtv2" | "tv-tv2" => Ok(ModelKind::TvTv2),
            "tgv" => Ok(ModelKind::Tgv),
            _ => Err(Error::invalid(format!("unknown model '{s}'"))),
        }
    }
}

/// The smooth, even penalties used by TV_φ.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PhiKind {
    /// √(t² + ε²)
    Phi1,
    /// Huber: ½t² below ε, ε|t| − ½ε² above.
    Phi2,
    /// 1 − exp(−ε²t²)
    Phi3,
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct Phi {
    kind: PhiKind,
    eps: f64,
}

impl Phi {
    pub fn new(kind: PhiKind, eps: f64) -> Result<Self> {
        if !(eps > 0.0 && eps.is_finite()) {
            return Err(Error::invalid(format!("phi needs eps > 0, got {eps}")));
        }
        Ok(Phi { kind, eps })
    }

    pub fn kind(&self) -> PhiKind {
        self.kind
    }

    pub fn eps(&self) -> f64 {
        self.eps
    }

    pub fn value(&self, t: f64) -> f64 {
        let e = self.eps;
        match self.kind {
            PhiKind::Phi1 => t.hypot(e),
            PhiKind::Phi2 => {
                if t.abs() < e {
                    0.5 * t * t
                } else {
                    e * t.abs() - 0.5 * e * e
                }
            }
            PhiKind::Phi3 => -(-(e * e * t * t)).exp_m1(),
        }
    }

    pub fn derivative(&self, t: f64) -> f64 {
        let e = self.eps;
        match self.kind {
            PhiKind::Phi1 => t / t.hypot(e),
            PhiKind::Phi2 => {
                if t.abs() < e {
                    t
                } else {
                    e * t.signum()
                }
            }
            PhiKind::Phi3 => 2.0 * e * e * t * (-(e * e * t * t)).exp(),
        }
    }

    /// Half-quadratic weight s(t) = φ'(t)/(2t), with its limit at t = 0.
    pub fn weight(&self, t: f64) -> f64 {
        let e = self.eps;
        let t = t.abs();
        match self.kind {
            PhiKind::Phi1 => 0.5 / t.hypot(e),
            PhiKind::Phi2 => {
                if t < e {
                    0.5
                } else {
                    e / (2.0 * t)
                }
            }
            PhiKind::Phi3 => e * e * (-(e * e * t * t)).exp(),
        }
    }
}

impl FromStr for PhiKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "1" | "phi1" => Ok(PhiKind::Phi1),
            "2" | "phi2" | "huber" => Ok(PhiKind::Phi2),
            "3" | "phi3" => Ok(PhiKind::Phi3),
            _ => Err(Error::invalid(format!("unknown phi '{s}'"))),
        }
    }
}

/// Model selection and parameters.
#[derive(Debug, Clone, PartialEq)]
pub struct ModelConfig {
    pub model: ModelKind,
    pub alpha: f64,
    pub beta: f64,
    pub p: u8,
    pub phi: Option<Phi>,
}

impl ModelConfig {
    pub fn new(model: ModelKind, alpha: f64) -> Self {
        ModelConfig {
            model,
            alpha,
            beta: 0.5,
            p: 1,
            phi: None,
        }
    }

    pub fn with_beta(mut self, beta: f64) -> Self {
        self.beta = beta;
        self
    }

    pub fn with_p(mut self, p: u8) -> Self {
        self.p = p;
        self
    }

    pub fn with_phi(mut self, phi: Phi) -> Self {
        self.phi = Some(phi);
        self
    }

    pub fn validate(&self) -> Result<()> {
        if !(self.alpha > 0.0 && self.alpha.is_finite()) {
            return Err(Error::invalid(format!(
                "alpha must be positive, got {}",
                self.alpha
            )));
        }
        if !(self.beta > 0.0 && self.beta < 1.0) {
            return Err(Error::invalid(format!(
                "beta must lie in (0, 1), got {}",
                self.beta
            )));
        }
        check_p(self.p)?;
        if self.model == ModelKind::TvPhi && self.phi.is_none() {
            return Err(Error::invalid("the tvphi model needs a phi function"));
        }
        Ok(())
    }
}

fn check_p(p: u8) -> Result<()> {
    if p == 1 || p == 2 {
        Ok(())
    } else {
        Err(Error::invalid(format!("p must be 1 or 2, got {p}")))
    }
}

/// Below this many items loops run on the calling thread.
const PARALLEL_MIN: usize = 256;

/// `(0..n).map(f)` collected into a vector, on the rayon pool when n is
/// large enough to pay for it. The order of the results never changes.
pub(crate) fn par_collect<T, F>(n: usize, f: F) -> Result<Vec<T>>
where
    T: Send,
    F: Fn(usize) -> Result<T> + Sync + Send,
{
    if n < PARALLEL_MIN {
        (0..n).map(f).collect()
    } else {
        use rayon::prelude::*;
        (0..n).into_par_iter().map(f).collect()
    }
}

/// Deterministic pairwise summation.
pub(crate) fn pairwise_sum(v: &[f64]) -> f64 {
    if v.len() <= 16 {
        v.iter().sum()
    } else {
        let (a, b) = v.split_at(v.len() / 2);
        pairwise_sum(a) + pairwise_sum(b)
    }
}

/// ½ Σ dist²(u_i, f_i).
pub fn data_term(u: &ManifoldImage, f: &ManifoldImage) -> Result<f64> {
    u.same_shape(f)?;
    let tag = u.tag();
    let v: Vec<f64> = (0..u.len())
        .map(|i| {
            let d = tag.dist(u.px(i), f.px(i));
            0.5 * d * d
        })
        .collect();
    Ok(pairwise_sum(&v))
}

/// Forward differences log_{u_i} u_{i+e}, zero where the neighbor leaves
/// the grid. A neighbor in the cut locus is an error carrying the pixel.
pub fn forward_differences(u: &ManifoldImage) -> Result<TangentField> {
    let tag = u.tag();
    let m = tag.tangent_len();
    let mut dx = vec![0.0; u.len() * m];
    let mut dy = vec![0.0; u.len() * m];
    for i in 0..u.len() {
        for (field, (d1, d2)) in [(&mut dx, (1, 0)), (&mut dy, (0, 1))] {
            if let Some(j) = u.offset(i, d1, d2) {
                let v = tag.log(u.px(i), u.px(j)).map_err(|e| e.at_index(i))?;
                field[i * m..(i + 1) * m].copy_from_slice(&v);
            }
        }
    }
    Ok(TangentField::from_parts(u.clone(), dx, dy))
}

/// Size of the geodesic nudge applied to cut-locus neighbors.
pub const NUDGE: f64 = 1e-9;

/// Moves pixel `j` by `size` toward `previous` when it differs, and along
/// the first tangent basis vector otherwise.
pub(crate) fn nudge_pixel(
    u: &mut ManifoldImage,
    j: usize,
    previous: Option<&ManifoldImage>,
    size: f64,
) {
    let tag = u.tag().clone();
    let x = u.px(j).to_vec();
    let mut dir = previous
        .and_then(|p| tag.log(&x, p.px(j)).ok())
        .filter(|v| tag.norm(&x, v) > 0.0);
    if dir.is_none() {
        dir = tag.tangent_basis(&x).into_iter().next();
    }
    let Some(v) = dir else { return };
    let n = tag.norm(&x, &v);
    let moved = tag.exp(&x, &crate::manifold::scale(&v, size / n));
    log::warn!("pixel {j} lies in a cut locus; nudged by {size:e}");
    u.set_px(j, &moved);
}

/// [`forward_differences`] with the nudge policy: a cut-locus neighbor is
/// moved by [`NUDGE`] (toward `previous` when given) and the differences
/// recomputed; repeated failures at the same pixel double the nudge.
/// Returns the field (based at the nudged image) and the nudged pixels.
pub fn forward_differences_nudged(
    u: &ManifoldImage,
    previous: Option<&ManifoldImage>,
) -> Result<(TangentField, Vec<usize>)> {
    let mut u = u.clone();
    let mut nudged: Vec<usize> = Vec::new();
    for _ in 0..64 * u.len() {
        match forward_differences(&u) {
            Ok(field) => {
                nudged.dedup();
                return Ok((field, nudged));
            }
            Err(Error::CutLocus { index: Some(i), .. }) => {
                let tag = u.tag().clone();
                let j = [(1, 0), (0, 1)]
                    .iter()
                    .filter_map(|&(a, b)| u.offset(i, a, b))
                    .find(|&j| tag.log(u.px(i), u.px(j)).is_err())
                    .unwrap_or(i);
                let tries = nudged.iter().filter(|&&k| k == j).count();
                nudge_pixel(&mut u, j, previous, NUDGE * 2f64.powi(tries as i32));
                nudged.push(j);
            }
            Err(e) => return Err(e),
        }
    }
    Err(Error::cut_locus())
}

fn family_sum(families: &[Family], state: &Iterate, weighted: bool) -> Result<f64> {
    let mut parts = Vec::with_capacity(families.len());
    for fam in families {
        let v = fam.value(state)?;
        parts.push(if weighted { fam.weight * v } else { v });
    }
    Ok(pairwise_sum(&parts))
}

/// Σ_i (Σ_j dist(u_i, u_j)^p)^{1/p} over forward neighbors.
pub fn tv(u: &ManifoldImage, p: u8) -> Result<f64> {
    check_p(p)?;
    family_sum(
        &terms::tv_families(u, p, None, 1.0),
        &Iterate::new(u.clone()),
        false,
    )
}

/// Σ φ(dist) (p = 1) or Σ_i φ((Σ_j dist²)^{1/2}) (p = 2).
pub fn tv_phi(u: &ManifoldImage, phi: &Phi, p: u8) -> Result<f64> {
    check_p(p)?;
    family_sum(
        &terms::tv_families(u, p, Some(*phi), 1.0),
        &Iterate::new(u.clone()),
        false,
    )
}

/// Σ_i (d_xx^p + d_yy^p + d_xy^p + d_yx^p)^{1/p}.
pub fn tv2(u: &ManifoldImage, p: u8) -> Result<f64> {
    check_p(p)?;
    family_sum(
        &terms::tv2_families(u, p, 1.0),
        &Iterate::new(u.clone()),
        false,
    )
}

/// β·TV(u) + (1 − β)·TV₂(u).
pub fn tv_tv2(u: &ManifoldImage, beta: f64, p: u8) -> Result<f64> {
    if !(beta > 0.0 && beta < 1.0) {
        return Err(Error::invalid(format!(
            "beta must lie in (0, 1), got {beta}"
        )));
    }
    Ok(beta * tv(u, p)? + (1.0 - beta) * tv2(u, p)?)
}

/// (R₁(u, ξ), R₂(ξ)) with pole-ladder backward differences in R₂.
pub fn tgv_terms(u: &ManifoldImage, xi: &TangentField, p: u8) -> Result<(f64, f64)> {
    check_p(p)?;
    if xi.base() != u {
        return Err(Error::invalid("tangent field is not based at the image"));
    }
    let state = Iterate::with_field(u.clone(), xi.x().to_vec(), xi.y().to_vec());
    let r1 = family_sum(&terms::tgv_r1_families(u, p, 1.0), &state, false)?;
    let r2 = family_sum(&terms::tgv_r2_families(u, p, 1.0), &state, false)?;
    Ok((r1, r2))
}

/// The regularizer R(u) selected by `config` (without α).
pub fn regularizer(u: &ManifoldImage, config: &ModelConfig) -> Result<f64> {
    config.validate()?;
    let p = config.p;
    match config.model {
        ModelKind::Tv => tv(u, p),
        ModelKind::TvPhi => tv_phi(u, config.phi.as_ref().expect("validated"), p),
        ModelKind::Tv2 => tv2(u, p),
        ModelKind::TvTv2 => tv_tv2(u, config.beta, p),
        ModelKind::Tgv => Ok(tgv(u, config.beta, p)?.value),
    }
}

/// J(u) = D(u; f) + α·R(u).
pub fn objective(u: &ManifoldImage, f: &ManifoldImage, config: &ModelConfig) -> Result<f64> {
    config.validate()?;
    Ok(data_term(u, f)? + config.alpha * regularizer(u, config)?)
}
