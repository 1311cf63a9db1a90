//! PNG rendering.
//!
//! * Circle: hue wheel, angle −π ↦ red, increasing counter-clockwise.
//! * Sphere2: x ↦ round(255 (x + 1)/2) per channel; the north pole (0, 0, 1)
//!   is rgb(128, 128, 255).
//! * SPD: one ellipse glyph per pixel on a black background with semi-axes
//!   proportional to the eigenvalues (normalized by the image maximum),
//!   colored by the hue of the principal direction. SPD(3) shows the
//!   leading 2×2 block.
//! * Euclidean: grayscale of the first coordinate, min-max scaled.

use std::f64::consts::PI;
use std::path::Path;

use image::{ImageFormat, Rgb, RgbImage};
use manivar::model::ManifoldImage;
use manivar::ManifoldTag;
use nalgebra::{Matrix2, SymmetricEigen};

use crate::CliError;

/// Output pixels per image pixel for the color maps.
pub const COLOR_CELL: u32 = 4;
/// Output pixels per image pixel for SPD glyphs.
pub const GLYPH_CELL: u32 = 16;

pub const NORTH_POLE_RGB: [u8; 3] = [128, 128, 255];

fn channel(x: f64) -> u8 {
    (255.0 * x.clamp(0.0, 1.0)).round() as u8
}

/// HSV with full saturation and value; `h` in turns.
fn hue(h: f64) -> Rgb<u8> {
    let h6 = h.rem_euclid(1.0) * 6.0;
    let f = h6 - h6.floor();
    let (r, g, b) = match h6 as u32 {
        0 => (1.0, f, 0.0),
        1 => (1.0 - f, 1.0, 0.0),
        2 => (0.0, 1.0, f),
        3 => (0.0, 1.0 - f, 1.0),
        4 => (f, 0.0, 1.0),
        _ => (1.0, 0.0, 1.0 - f),
    };
    Rgb([channel(r), channel(g), channel(b)])
}

fn color_map(u: &ManifoldImage, color: impl Fn(&[f64]) -> Rgb<u8>) -> RgbImage {
    let c = COLOR_CELL;
    let n2 = u.n2() as u32;
    RgbImage::from_fn(n2 * c, u.n1() as u32 * c, |x, y| {
        color(u.px(((y / c) * n2 + x / c) as usize))
    })
}

fn leading_block(tag: &ManifoldTag, px: &[f64]) -> Matrix2<f64> {
    let d = match tag {
        ManifoldTag::Spd(d) => *d,
        _ => unreachable!("glyphs are drawn for SPD images only"),
    };
    Matrix2::new(px[0], px[1], px[d], px[d + 1])
}

fn glyphs(u: &ManifoldImage) -> RgbImage {
    let c = GLYPH_CELL;
    let eig: Vec<SymmetricEigen<f64, nalgebra::U2>> = (0..u.len())
        .map(|i| leading_block(u.tag(), u.px(i)).symmetric_eigen())
        .collect();
    let largest = eig
        .iter()
        .flat_map(|e| e.eigenvalues.iter().copied())
        .fold(f64::MIN_POSITIVE, f64::max);
    let radius = 0.45 * c as f64;
    let n2 = u.n2() as u32;
    let mut img = RgbImage::new(n2 * c, u.n1() as u32 * c);
    for (i, e) in eig.iter().enumerate() {
        let (cy, cx) = ((i as u32 / n2) * c, (i as u32 % n2) * c);
        let k = if e.eigenvalues[0] >= e.eigenvalues[1] {
            0
        } else {
            1
        };
        let major = e.eigenvectors.column(k);
        let minor = e.eigenvectors.column(1 - k);
        let a = (radius * e.eigenvalues[k] / largest).max(0.5);
        let b = (radius * e.eigenvalues[1 - k] / largest).max(0.5);
        // image rows grow downwards, so flip y for the orientation
        let color = hue((major[1]).atan2(major[0]).rem_euclid(PI) / PI);
        for dy in 0..c {
            for dx in 0..c {
                let ox = dx as f64 + 0.5 - 0.5 * c as f64;
                let oy = 0.5 * c as f64 - dy as f64 - 0.5;
                let s = (ox * major[0] + oy * major[1]) / a;
                let t = (ox * minor[0] + oy * minor[1]) / b;
                if s * s + t * t <= 1.0 {
                    img.put_pixel(cx + dx, cy + dy, color);
                }
            }
        }
    }
    img
}

pub fn render(u: &ManifoldImage) -> Result<RgbImage, CliError> {
    match u.tag() {
        ManifoldTag::Circle => Ok(color_map(u, |px| hue((px[0] + PI) / (2.0 * PI)))),
        ManifoldTag::Sphere2 => Ok(color_map(u, |px| {
            Rgb([
                channel(0.5 * (px[0] + 1.0)),
                channel(0.5 * (px[1] + 1.0)),
                channel(0.5 * (px[2] + 1.0)),
            ])
        })),
        ManifoldTag::Spd(_) => Ok(glyphs(u)),
        ManifoldTag::Euclidean(m) => {
            let m = *m;
            let first = u.data().iter().step_by(m);
            let lo = first.clone().copied().fold(f64::INFINITY, f64::min);
            let hi = first.copied().fold(f64::NEG_INFINITY, f64::max);
            Ok(color_map(u, |px| {
                let g = if hi > lo {
                    channel((px[0] - lo) / (hi - lo))
                } else {
                    128
                };
                Rgb([g, g, g])
            }))
        }
        other => Err(CliError::usage(format!(
            "rendering {other} images is not supported"
        ))),
    }
}

pub fn render_png(u: &ManifoldImage, path: &Path) -> Result<(), CliError> {
    render(u)?
        .save_with_format(path, ImageFormat::Png)
        .map_err(|source| CliError::Png {
            path: path.to_path_buf(),
            source,
        })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::phantom::{phantom, Phantom};
    use manivar::Point;

    #[test]
    fn constant_circle_is_one_color() {
        let u = ManifoldImage::constant(&Point::circle(1.0), 5, 7);
        let img = render(&u).unwrap();
        let first = *img.get_pixel(0, 0);
        assert!(img.pixels().all(|p| *p == first));
        assert_eq!(img.dimensions(), (7 * COLOR_CELL, 5 * COLOR_CELL));
    }

    #[test]
    fn north_pole_reference_color() {
        let p = Point::new(ManifoldTag::Sphere2, vec![0.0, 0.0, 1.0]).unwrap();
        let img = render(&ManifoldImage::constant(&p, 1, 1)).unwrap();
        assert_eq!(img.get_pixel(0, 0).0, NORTH_POLE_RGB);
    }

    #[test]
    fn hue_wheel_anchors() {
        assert_eq!(hue(0.0).0, [255, 0, 0]);
        assert_eq!(hue(1.0 / 3.0).0, [0, 255, 0]);
        assert_eq!(hue(2.0 / 3.0).0, [0, 0, 255]);
    }

    #[test]
    fn png_bytes_are_reproducible() {
        let dir = tempfile::tempdir().unwrap();
        for name in [Phantom::S1Blocks, Phantom::S2Patches, Phantom::SpdGradient] {
            let u = phantom(name, 6, 5);
            let (a, b) = (dir.path().join("a.png"), dir.path().join("b.png"));
            render_png(&u, &a).unwrap();
            render_png(&u, &b).unwrap();
            assert_eq!(std::fs::read(a).unwrap(), std::fs::read(b).unwrap());
        }
    }

    #[test]
    fn glyph_follows_principal_axis() {
        // diag(4, 1): wide horizontal ellipse
        let p = Point::new(ManifoldTag::Spd(2), vec![4.0, 0.0, 0.0, 1.0]).unwrap();
        let img = render(&ManifoldImage::constant(&p, 1, 1)).unwrap();
        let mid = GLYPH_CELL / 2;
        let black = Rgb([0, 0, 0]);
        assert_ne!(*img.get_pixel(1, mid), black);
        assert_eq!(*img.get_pixel(mid, 1), black);
    }

    #[test]
    fn rotations_are_not_rendered() {
        let r = Point::new(
            ManifoldTag::Rotations3,
            vec![1.0, 0.0, 0.0, 0.0, 1.0, 0.0, 0.0, 0.0, 1.0],
        )
        .unwrap();
        assert!(render(&ManifoldImage::constant(&r, 1, 1)).is_err());
    }
}
