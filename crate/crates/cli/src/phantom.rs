//! Deterministic piecewise-geodesic test images.

use std::f64::consts::{FRAC_1_SQRT_2, PI};
use std::str::FromStr;

use manivar::manifold::circle;
use manivar::model::ManifoldImage;
use manivar::ManifoldTag;

use crate::CliError;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Phantom {
    /// Circle: two constant blocks on the left, two angle ramps on the right.
    S1Blocks,
    /// Sphere2: a 2×2 tiling of great-circle ramps.
    S2Patches,
    /// SPD(2): geodesic ramps between diagonal matrices, jumping at the
    /// vertical midline.
    SpdGradient,
}

impl FromStr for Phantom {
    type Err = CliError;

    fn from_str(s: &str) -> Result<Self, CliError> {
        match s {
            "s1-blocks" => Ok(Phantom::S1Blocks),
            "s2-patches" => Ok(Phantom::S2Patches),
            "spd-gradient" => Ok(Phantom::SpdGradient),
            _ => Err(CliError::usage(format!(
                "unknown phantom '{s}' (expected s1-blocks, s2-patches or spd-gradient)"
            ))),
        }
    }
}

impl Phantom {
    pub fn tag(self) -> ManifoldTag {
        match self {
            Phantom::S1Blocks => ManifoldTag::Circle,
            Phantom::S2Patches => ManifoldTag::Sphere2,
            Phantom::SpdGradient => ManifoldTag::Spd(2),
        }
    }
}

/// Relative position of index `i` in `0..n`, in [0, 1).
fn rel(i: usize, n: usize) -> f64 {
    i as f64 / n as f64
}

/// Position of `i` within its half of `0..n`, in [0, 1].
fn within_half(i: usize, n: usize) -> f64 {
    let h = n.div_ceil(2);
    let (j, len) = if i < h { (i, h) } else { (i - h, n - h) };
    if len <= 1 {
        0.5
    } else {
        j as f64 / (len - 1) as f64
    }
}

fn s1_pixel(i1: usize, i2: usize, n1: usize, n2: usize) -> Vec<f64> {
    let (u, v) = (rel(i1, n1), rel(i2, n2));
    let angle = match (u < 0.5, v < 0.5) {
        (true, true) => -2.0,
        (false, true) => 1.2,
        // one full turn across the block, wrapping once
        (true, false) => -PI + 2.0 * PI * within_half(i2, n2),
        (false, false) => 0.3 + 2.5 * within_half(i1, n1),
    };
    vec![circle::wrap(angle)]
}

fn s2_pixel(i1: usize, i2: usize, n1: usize, n2: usize) -> Vec<f64> {
    let s = 1.0 / 3f64.sqrt();
    let tiles: [([f64; 3], [f64; 3]); 4] = [
        ([0.0, 0.0, 1.0], [1.0, 0.0, 0.0]),
        ([1.0, 0.0, 0.0], [0.0, 1.0, 0.0]),
        ([0.0, 1.0, 0.0], [0.0, 0.0, 1.0]),
        ([s, s, s], [FRAC_1_SQRT_2, -FRAC_1_SQRT_2, 0.0]),
    ];
    let top = rel(i1, n1) < 0.5;
    let left = rel(i2, n2) < 0.5;
    let k = 2 * usize::from(!top) + usize::from(!left);
    let (base, dir) = tiles[k];
    // alternate ramp orientation between tiles
    let t = if k % 2 == 0 {
        within_half(i2, n2)
    } else {
        within_half(i1, n1)
    };
    let theta = 1.2 * (t - 0.5);
    let (sn, cs) = theta.sin_cos();
    let p: Vec<f64> = (0..3).map(|j| cs * base[j] + sn * dir[j]).collect();
    let n = p.iter().map(|c| c * c).sum::<f64>().sqrt();
    p.iter().map(|c| c / n).collect()
}

fn diag(a: f64, b: f64) -> Vec<f64> {
    vec![a, 0.0, 0.0, b]
}

fn spd_pixel(i1: usize, i2: usize, n1: usize, n2: usize) -> Vec<f64> {
    let tag = ManifoldTag::Spd(2);
    let (from, to, t) = if rel(i2, n2) < 0.5 {
        (diag(1.0, 1.0), diag(4.0, 0.5), within_half(i2, n2))
    } else {
        (diag(0.3, 2.0), diag(2.0, 2.5), within_half(i1, n1))
    };
    tag.geodesic(&from, &to, t)
        .expect("SPD(2) has no cut locus")
}

pub fn phantom(name: Phantom, n1: usize, n2: usize) -> ManifoldImage {
    assert!(n1 > 0 && n2 > 0, "phantom dimensions must be positive");
    let pixel = match name {
        Phantom::S1Blocks => s1_pixel,
        Phantom::S2Patches => s2_pixel,
        Phantom::SpdGradient => spd_pixel,
    };
    let mut data = Vec::with_capacity(n1 * n2 * name.tag().point_len());
    for i1 in 0..n1 {
        for i2 in 0..n2 {
            data.extend(pixel(i1, i2, n1, n2));
        }
    }
    ManifoldImage::new(name.tag(), n1, n2, data).expect("phantom pixels are valid")
}
