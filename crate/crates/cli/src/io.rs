//! The MVD1 text format.
//!
//! ```text
//! MVD1
//! <manifold tag>
//! <n1> <n2>
//! <coordinates of pixel 0>
//! <coordinates of pixel 1>
//! ...
//! ```
//!
//! Pixels are listed in row-major order, one per line, each coordinate in
//! scientific notation with 17 significant digits so every f64 survives a
//! round trip exactly.

use std::fmt::Write as _;
use std::path::Path;

use manivar::model::ManifoldImage;
use manivar::ManifoldTag;

use crate::CliError;

pub const MAGIC: &str = "MVD1";

pub fn to_string(u: &ManifoldImage) -> String {
    let len = u.tag().point_len();
    let mut s = String::with_capacity(32 + u.data().len() * 25);
    let _ = writeln!(s, "{MAGIC}\n{}\n{} {}", u.tag(), u.n1(), u.n2());
    for px in u.data().chunks(len) {
        for (k, c) in px.iter().enumerate() {
            if k > 0 {
                s.push(' ');
            }
            let _ = write!(s, "{c:.16e}");
        }
        s.push('\n');
    }
    s
}

/// Parses MVD1 text; `Err` carries a message without the file name.
pub fn from_str(text: &str) -> Result<ManifoldImage, String> {
    let mut lines = text.lines().filter(|l| !l.trim().is_empty());
    match lines.next() {
        Some(l) if l.trim() == MAGIC => {}
        _ => return Err(format!("missing {MAGIC} header")),
    }
    let tag: ManifoldTag = lines
        .next()
        .ok_or("missing manifold tag")?
        .trim()
        .parse()
        .map_err(|e| format!("bad manifold tag: {e}"))?;
    let dims: Vec<usize> = lines
        .next()
        .ok_or("missing image size")?
        .split_whitespace()
        .map(|t| {
            t.parse::<usize>()
                .map_err(|_| format!("bad image size '{t}'"))
        })
        .collect::<Result<_, _>>()?;
    let [n1, n2] = dims[..] else {
        return Err("image size line needs exactly n1 and n2".into());
    };
    let data = lines
        .flat_map(str::split_whitespace)
        .map(|t| {
            t.parse::<f64>()
                .map_err(|_| format!("bad coordinate '{t}'"))
        })
        .collect::<Result<Vec<_>, _>>()?;
    ManifoldImage::new(tag, n1, n2, data).map_err(|e| e.to_string())
}

pub fn write_mvd(u: &ManifoldImage, path: &Path) -> Result<(), CliError> {
    std::fs::write(path, to_string(u)).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })
}

pub fn read_mvd(path: &Path) -> Result<ManifoldImage, CliError> {
    let text = std::fs::read_to_string(path).map_err(|source| CliError::Io {
        path: path.to_path_buf(),
        source,
    })?;
    from_str(&text).map_err(|msg| CliError::Format {
        path: path.to_path_buf(),
        msg,
    })
}
