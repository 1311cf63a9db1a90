//! The circle S¹, charted by angles in [−π, π).

use std::f64::consts::PI;

use crate::error::{Error, Result};

/// Distance to π below which an angle difference counts as antipodal.
pub const CUT_TOLERANCE: f64 = 1e-12;

/// Maps a real number to its representative `(a)_{2π}` in [−π, π).
pub fn wrap(a: f64) -> f64 {
    let two_pi = 2.0 * PI;
    let mut w = a - two_pi * ((a + PI) / two_pi).floor();
    // floor can land on the upper end for values just below an odd multiple of π
    if w >= PI {
        w -= two_pi;
    }
    if w < -PI {
        w += two_pi;
    }
    w
}

pub(crate) fn exp(x: f64, v: f64) -> f64 {
    wrap(x + v)
}

pub(crate) fn log(x: f64, y: f64) -> Result<f64> {
    let d = wrap(y - x);
    if (d.abs() - PI).abs() < CUT_TOLERANCE {
        return Err(Error::cut_locus());
    }
    Ok(d)
}

pub(crate) fn dist(x: f64, y: f64) -> f64 {
    wrap(y - x).abs()
}
