use std::io::Write;
use std::path::Path;

use super::text_lines;
use crate::error::{Error, Result};
use crate::geometry::{PointCloud, Vec3};

const FORMAT: &str = "PLY";

/// Optional per-vertex attributes written after the coordinates.
#[derive(Debug, Clone, Default, PartialEq)]
pub struct PlyExtras<'a> {
    pub quality: Option<&'a [f64]>,
    pub colors: Option<&'a [[u8; 3]]>,
    pub comments: &'a [String],
}

#[derive(Debug, Clone, PartialEq)]
pub struct PlyCloud {
    pub cloud: PointCloud,
    pub quality: Option<Vec<f64>>,
    pub colors: Option<Vec<[u8; 3]>>,
    pub comments: Vec<String>,
}

/// Mask colormap: blue at 0, green at 0.5, red at 1.
pub fn colormap(v: f64) -> [u8; 3] {
    let v = if v.is_nan() { 0.0 } else { v.clamp(0.0, 1.0) };
    let c = |x: f64| (255.0 * x).round() as u8;
    if v < 0.5 {
        let t = 2.0 * v;
        [0, c(t), c(1.0 - t)]
    } else {
        let t = 2.0 * v - 1.0;
        [c(t), c(1.0 - t), 0]
    }
}

/// Writes an ASCII PLY. Numbers use the shortest form that reads back to
/// the same `f64`, so a write/read round trip is exact.
pub fn write_ply<W: Write>(mut w: W, cloud: &PointCloud, extras: &PlyExtras) -> Result<()> {
    let n = cloud.len();
    for (what, len) in [("quality", extras.quality.map(<[f64]>::len)), ("colors", extras.colors.map(<[_]>::len))] {
        if let Some(len) = len {
            if len != n {
                return Err(Error::Parameter(format!("{what} has {len} entries for {n} points")));
            }
        }
    }
    writeln!(w, "ply\nformat ascii 1.0")?;
    for c in extras.comments {
        if c.contains('\n') {
            return Err(Error::Parameter("PLY comments must be single-line".into()));
        }
        writeln!(w, "comment {c}")?;
    }
    writeln!(w, "element vertex {n}\nproperty double x\nproperty double y\nproperty double z")?;
    if extras.quality.is_some() {
        writeln!(w, "property double quality")?;
    }
    if extras.colors.is_some() {
        writeln!(w, "property uchar red\nproperty uchar green\nproperty uchar blue")?;
    }
    writeln!(w, "end_header")?;
    for (i, p) in cloud.points().iter().enumerate() {
        write!(w, "{:e} {:e} {:e}", p.x, p.y, p.z)?;
        if let Some(q) = extras.quality {
            write!(w, " {:e}", q[i])?;
        }
        if let Some(c) = extras.colors {
            write!(w, " {} {} {}", c[i][0], c[i][1], c[i][2])?;
        }
        writeln!(w)?;
    }
    Ok(())
}

pub fn write_ply_file(path: impl AsRef<Path>, cloud: &PointCloud, extras: &PlyExtras) -> Result<()> {
    let mut buf = Vec::new();
    write_ply(&mut buf, cloud, extras)?;
    std::fs::write(path, buf)?;
    Ok(())
}

const SCALAR_TYPES: &[&str] = &[
    "char", "uchar", "short", "ushort", "int", "uint", "float", "double", "int8", "uint8", "int16", "uint16",
    "int32", "uint32", "float32", "float64",
];

struct Element {
    name: String,
    count: usize,
    line: usize,
    /// (name, type) of scalar properties; `None` name marks a list property.
    props: Vec<Option<String>>,
}

fn next<'a>(lines: &mut impl Iterator<Item = (usize, &'a str)>, last: &mut usize) -> Option<(usize, &'a str)> {
    let r = lines.next();
    if let Some((n, _)) = r {
        *last = n;
    }
    r
}

/// Parses an ASCII PLY point cloud. Elements other than `vertex` are
/// skipped (their lines must still be present).
pub fn read_ply(bytes: &[u8]) -> Result<PlyCloud> {
    let mut lines = text_lines(FORMAT, bytes)?;
    let mut last = 0;

    match next(&mut lines, &mut last) {
        Some((_, l)) if l.trim() == "ply" => {}
        _ => return Err(Error::parse(FORMAT, 1, "missing 'ply' magic")),
    }
    let mut comments = vec![];
    let mut elements: Vec<Element> = vec![];
    let mut saw_format = false;
    loop {
        let Some((n, l)) = next(&mut lines, &mut last) else {
            return Err(Error::parse(FORMAT, last + 1, "header ends without end_header"));
        };
        let toks: Vec<&str> = l.split_whitespace().collect();
        match toks.first().copied() {
            Some("format") => {
                if toks[1..] != ["ascii", "1.0"] {
                    return Err(Error::parse(FORMAT, n, format!("unsupported format {:?}", l.trim())));
                }
                saw_format = true;
            }
            Some("comment") | Some("obj_info") => {
                comments.push(l.trim_start().splitn(2, ' ').nth(1).unwrap_or("").to_string());
            }
            Some("element") => {
                if toks.len() != 3 {
                    return Err(Error::parse(FORMAT, n, "element needs a name and a count"));
                }
                let count = toks[2]
                    .parse()
                    .map_err(|_| Error::parse(FORMAT, n, format!("bad element count {:?}", toks[2])))?;
                elements.push(Element { name: toks[1].to_string(), count, line: n, props: vec![] });
            }
            Some("property") => {
                let Some(el) = elements.last_mut() else {
                    return Err(Error::parse(FORMAT, n, "property before any element"));
                };
                match toks.as_slice() {
                    [_, "list", c, i, _] if SCALAR_TYPES.contains(c) && SCALAR_TYPES.contains(i) => el.props.push(None),
                    [_, ty, name] if SCALAR_TYPES.contains(ty) => {
                        if el.props.iter().flatten().any(|p| p == name) {
                            return Err(Error::parse(FORMAT, n, format!("duplicate property {name}")));
                        }
                        el.props.push(Some(name.to_string()))
                    }
                    _ => return Err(Error::parse(FORMAT, n, format!("malformed property {:?}", l.trim()))),
                }
            }
            Some("end_header") if toks.len() == 1 => break,
            _ => return Err(Error::parse(FORMAT, n, format!("unexpected header line {:?}", l.trim()))),
        }
    }
    if !saw_format {
        return Err(Error::parse(FORMAT, last, "header has no format line"));
    }

    let vi = elements
        .iter()
        .position(|e| e.name == "vertex")
        .ok_or_else(|| Error::parse(FORMAT, last, "no vertex element"))?;
    let vertex = &elements[vi];
    if vertex.props.iter().any(Option::is_none) {
        return Err(Error::parse(FORMAT, vertex.line, "list properties on vertices are not supported"));
    }
    let col = |name: &str| vertex.props.iter().position(|p| p.as_deref() == Some(name));
    let (Some(xi), Some(yi), Some(zi)) = (col("x"), col("y"), col("z")) else {
        return Err(Error::parse(FORMAT, vertex.line, "vertex element lacks x, y or z"));
    };
    if vertex.count == 0 {
        return Err(Error::parse(FORMAT, vertex.line, "vertex element is empty"));
    }
    let qi = col("quality");
    let rgb = match (col("red"), col("green"), col("blue")) {
        (Some(r), Some(g), Some(b)) => Some([r, g, b]),
        (None, None, None) => None,
        _ => return Err(Error::parse(FORMAT, vertex.line, "incomplete red/green/blue properties")),
    };

    let mut points = vec![];
    let mut quality = qi.map(|_| vec![]);
    let mut colors = rgb.map(|_| vec![]);
    for (ei, el) in elements.iter().enumerate() {
        for k in 0..el.count {
            let Some((n, l)) = next(&mut lines, &mut last) else {
                return Err(Error::parse(
                    FORMAT,
                    last + 1,
                    format!("expected {} {} rows, found {k}", el.count, el.name),
                ));
            };
            let toks: Vec<&str> = l.split_whitespace().collect();
            if ei != vi {
                if el.props.iter().all(Option::is_some) && toks.len() != el.props.len() {
                    return Err(Error::parse(FORMAT, n, format!("expected {} values, found {}", el.props.len(), toks.len())));
                }
                continue;
            }
            if toks.len() != el.props.len() {
                return Err(Error::parse(FORMAT, n, format!("expected {} values, found {}", el.props.len(), toks.len())));
            }
            let mut vals = Vec::with_capacity(toks.len());
            for t in &toks {
                match t.parse::<f64>() {
                    Ok(v) if v.is_finite() => vals.push(v),
                    _ => return Err(Error::parse(FORMAT, n, format!("expected a finite number, found {t:?}"))),
                }
            }
            points.push(Vec3::new(vals[xi], vals[yi], vals[zi]));
            if let (Some(q), Some(qi)) = (quality.as_mut(), qi) {
                q.push(vals[qi]);
            }
            if let (Some(c), Some(rgb)) = (colors.as_mut(), rgb) {
                let mut px = [0u8; 3];
                for (dst, &j) in px.iter_mut().zip(&rgb) {
                    let v = vals[j];
                    if v.fract() != 0.0 || !(0.0..=255.0).contains(&v) {
                        return Err(Error::parse(FORMAT, n, format!("color value {v} is not a byte")));
                    }
                    *dst = v as u8;
                }
                c.push(px);
            }
        }
    }
    for (n, l) in lines {
        if !l.trim().is_empty() {
            return Err(Error::parse(FORMAT, n, "unexpected data after the last element"));
        }
    }
    let cloud = PointCloud::new(points).map_err(|e| Error::parse(FORMAT, vertex.line, e.to_string()))?;
    Ok(PlyCloud { cloud, quality, colors, comments })
}

pub fn read_ply_file(path: impl AsRef<Path>) -> Result<PlyCloud> {
    read_ply(&std::fs::read(path)?)
}
