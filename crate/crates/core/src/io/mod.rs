//! File formats, surface sampling and the synthetic shape corpus.
//!
//! Grammars accepted by the parsers are described in `docs/formats.md`.

mod off;
mod ply;
mod sampling;
mod synthetic;

pub use off::{parse_off, read_off, Mesh};
pub use ply::{colormap, read_ply, read_ply_file, write_ply, write_ply_file, PlyCloud, PlyExtras};
pub use sampling::{farthest_point_sample, sample_surface};
pub use synthetic::{generate_synthetic, sample_shape, LabeledCloud, ShapeClass, SyntheticSpec};

use crate::error::{Error, Result};

/// Splits `bytes` into (1-based line number, line) pairs, rejecting
/// invalid UTF-8 with the line it occurs on.
pub(crate) fn text_lines<'a>(format: &'static str, bytes: &'a [u8]) -> Result<impl Iterator<Item = (usize, &'a str)>> {
    let text = std::str::from_utf8(bytes).map_err(|e| {
        let line = bytes[..e.valid_up_to()].iter().filter(|&&b| b == b'\n').count() + 1;
        Error::parse(format, line, "invalid UTF-8")
    })?;
    Ok(text.lines().enumerate().map(|(i, l)| (i + 1, l)))
}
