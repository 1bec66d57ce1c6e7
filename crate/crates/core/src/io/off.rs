use std::path::Path;

use super::text_lines;
use crate::error::{Error, Result};
use crate::geometry::Vec3;

const FORMAT: &str = "OFF";

/// Triangle mesh; polygonal faces are fan-triangulated on read.
#[derive(Debug, Clone, PartialEq)]
pub struct Mesh {
    pub vertices: Vec<Vec3>,
    pub triangles: Vec<[usize; 3]>,
}

fn parse_count(tok: &str, line: usize, what: &str) -> Result<usize> {
    tok.parse::<usize>()
        .map_err(|_| Error::parse(FORMAT, line, format!("{what}: expected a non-negative integer, found {tok:?}")))
}

fn parse_coord(tok: &str, line: usize) -> Result<f64> {
    match tok.parse::<f64>() {
        Ok(v) if v.is_finite() => Ok(v),
        _ => Err(Error::parse(FORMAT, line, format!("expected a finite number, found {tok:?}"))),
    }
}

/// Parses an ASCII OFF mesh. Accepts both the standard header and the
/// fused `OFF<nv> <nf> <ne>` first line. `#` starts a comment.
pub fn parse_off(bytes: &[u8]) -> Result<Mesh> {
    let last_line = std::cell::Cell::new(0);
    let mut lines = text_lines(FORMAT, bytes)?
        .inspect(|(n, _)| last_line.set(*n))
        .map(|(n, l)| (n, l.split('#').next().unwrap_or("").trim()))
        .filter(|(_, l)| !l.is_empty());

    let (hline, header) = lines.next().ok_or_else(|| Error::parse(FORMAT, 1, "empty file"))?;
    let rest = header
        .strip_prefix("OFF")
        .ok_or_else(|| Error::parse(FORMAT, hline, format!("expected OFF header, found {header:?}")))?;
    let (cline, counts) = if rest.trim().is_empty() {
        lines
            .next()
            .ok_or_else(|| Error::parse(FORMAT, hline + 1, "missing vertex/face counts"))?
    } else {
        // Fused header ("OFF4 4 0") or counts after a space on the same line.
        (hline, rest.trim())
    };
    let toks: Vec<&str> = counts.split_whitespace().collect();
    if toks.len() != 3 {
        return Err(Error::parse(FORMAT, cline, format!("expected 3 counts, found {}", toks.len())));
    }
    let nv = parse_count(toks[0], cline, "vertex count")?;
    let nf = parse_count(toks[1], cline, "face count")?;
    parse_count(toks[2], cline, "edge count")?;

    let mut vertices = Vec::with_capacity(nv.min(1 << 20));
    for k in 0..nv {
        let Some((n, l)) = lines.next() else {
            return Err(Error::parse(FORMAT, last_line.get() + 1, format!("expected {nv} vertices, found {k}")));
        };
        let toks: Vec<&str> = l.split_whitespace().collect();
        if toks.len() != 3 {
            return Err(Error::parse(FORMAT, n, format!("vertex needs 3 coordinates, found {}", toks.len())));
        }
        vertices.push(Vec3::new(parse_coord(toks[0], n)?, parse_coord(toks[1], n)?, parse_coord(toks[2], n)?));
    }

    let mut triangles = Vec::with_capacity(nf.min(1 << 20));
    for k in 0..nf {
        let Some((n, l)) = lines.next() else {
            return Err(Error::parse(FORMAT, last_line.get() + 1, format!("expected {nf} faces, found {k}")));
        };
        let toks: Vec<&str> = l.split_whitespace().collect();
        let arity = parse_count(toks[0], n, "face arity")?;
        if arity < 3 {
            return Err(Error::parse(FORMAT, n, format!("face needs at least 3 vertices, found {arity}")));
        }
        if toks.len() < arity + 1 {
            return Err(Error::parse(FORMAT, n, format!("face declares {arity} vertices but lists {}", toks.len() - 1)));
        }
        let mut idx = Vec::with_capacity(arity);
        for t in &toks[1..=arity] {
            let i = parse_count(t, n, "vertex index")?;
            if i >= nv {
                return Err(Error::parse(FORMAT, n, format!("vertex index {i} out of range for {nv} vertices")));
            }
            idx.push(i);
        }
        // Trailing tokens are optional per-face colors.
        for t in &toks[arity + 1..] {
            parse_coord(t, n)?;
        }
        for j in 1..arity - 1 {
            triangles.push([idx[0], idx[j], idx[j + 1]]);
        }
    }
    if let Some((n, _)) = lines.next() {
        return Err(Error::parse(FORMAT, n, "unexpected data after the last face"));
    }
    Ok(Mesh { vertices, triangles })
}

pub fn read_off(path: impl AsRef<Path>) -> Result<Mesh> {
    parse_off(&std::fs::read(path)?)
}
