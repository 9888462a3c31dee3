//! PLY 1.0 reader and writer (ASCII and binary little-endian).
//!
//! The reader accepts any scalar types for the recognized properties and
//! skips elements and properties it does not know. The writer always emits
//! `float` coordinates, `uchar` colors and `list uchar int` face indices.

use std::collections::HashSet;
use std::io::{self, Write};

use tracing::warn;

use crate::damage::DamageLabeling;
use crate::error::{ParseError, Result};
use crate::mesh::{Rgb, TriFace, TriMesh};

/// Body encoding of a PLY file.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum PlyEncoding {
    Ascii,
    BinaryLittleEndian,
}

/// Knobs for [`parse_ply_with`].
#[derive(Debug, Clone, Copy, Default)]
pub struct ReadOptions {
    /// Accept meshes without vertex colors instead of failing with
    /// [`ParseError::Colorless`].
    pub allow_colorless: bool,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
enum ScalarType {
    I8,
    U8,
    I16,
    U16,
    I32,
    U32,
    F32,
    F64,
}

impl ScalarType {
    fn from_name(name: &str) -> Option<Self> {
        Some(match name {
            "char" | "int8" => ScalarType::I8,
            "uchar" | "uint8" => ScalarType::U8,
            "short" | "int16" => ScalarType::I16,
            "ushort" | "uint16" => ScalarType::U16,
            "int" | "int32" => ScalarType::I32,
            "uint" | "uint32" => ScalarType::U32,
            "float" | "float32" => ScalarType::F32,
            "double" | "float64" => ScalarType::F64,
            _ => return None,
        })
    }

    fn size(self) -> usize {
        match self {
            ScalarType::I8 | ScalarType::U8 => 1,
            ScalarType::I16 | ScalarType::U16 => 2,
            ScalarType::I32 | ScalarType::U32 | ScalarType::F32 => 4,
            ScalarType::F64 => 8,
        }
    }

    fn is_float(self) -> bool {
        matches!(self, ScalarType::F32 | ScalarType::F64)
    }

    fn range(self) -> (i64, i64) {
        match self {
            ScalarType::I8 => (i8::MIN as i64, i8::MAX as i64),
            ScalarType::U8 => (0, u8::MAX as i64),
            ScalarType::I16 => (i16::MIN as i64, i16::MAX as i64),
            ScalarType::U16 => (0, u16::MAX as i64),
            ScalarType::I32 => (i32::MIN as i64, i32::MAX as i64),
            ScalarType::U32 => (0, u32::MAX as i64),
            ScalarType::F32 | ScalarType::F64 => (i64::MIN, i64::MAX),
        }
    }
}

#[derive(Debug, Clone)]
enum Property {
    Scalar {
        name: String,
        ty: ScalarType,
    },
    List {
        name: String,
        count: ScalarType,
        item: ScalarType,
    },
}

impl Property {
    fn name(&self) -> &str {
        match self {
            Property::Scalar { name, .. } | Property::List { name, .. } => name,
        }
    }
}

#[derive(Debug, Clone)]
struct Element {
    name: String,
    count: usize,
    props: Vec<Property>,
}

#[derive(Debug)]
struct Header {
    encoding: PlyEncoding,
    elements: Vec<Element>,
    body_offset: usize,
}

fn parse_header(bytes: &[u8]) -> Result<Header, ParseError> {
    let mut offset = 0;
    let mut lines = Vec::new();
    loop {
        let rest = &bytes[offset..];
        let Some(nl) = rest.iter().position(|&b| b == b'\n') else {
            return Err(ParseError::Header("missing end_header".into()));
        };
        let raw = &rest[..nl];
        offset += nl + 1;
        let line = std::str::from_utf8(raw)
            .map_err(|_| ParseError::Header("header is not valid text".into()))?
            .trim_end_matches('\r');
        if line.trim() == "end_header" {
            break;
        }
        lines.push(line);
    }

    let mut lines = lines.into_iter();
    if lines.next().map(str::trim) != Some("ply") {
        return Err(ParseError::Header("file does not start with 'ply'".into()));
    }

    let mut encoding = None;
    let mut elements: Vec<Element> = Vec::new();
    for line in lines {
        let mut words = line.split_whitespace();
        let Some(keyword) = words.next() else { continue };
        match keyword {
            "comment" | "obj_info" => {}
            "format" => {
                let kind = words.next().unwrap_or_default();
                let version = words.next().unwrap_or_default();
                if version != "1.0" {
                    return Err(ParseError::UnsupportedFormat(format!("version {version:?}")));
                }
                encoding = Some(match kind {
                    "ascii" => PlyEncoding::Ascii,
                    "binary_little_endian" => PlyEncoding::BinaryLittleEndian,
                    other => return Err(ParseError::UnsupportedFormat(other.to_string())),
                });
            }
            "element" => {
                let (Some(name), Some(count)) = (words.next(), words.next()) else {
                    return Err(ParseError::Header(format!("bad element line {line:?}")));
                };
                let count: usize = count
                    .parse()
                    .map_err(|_| ParseError::Header(format!("bad element count {count:?}")))?;
                if elements.iter().any(|e| e.name == name) {
                    return Err(ParseError::Header(format!("duplicate element {name:?}")));
                }
                elements.push(Element {
                    name: name.to_string(),
                    count,
                    props: Vec::new(),
                });
            }
            "property" => {
                let element = elements
                    .last_mut()
                    .ok_or_else(|| ParseError::Header("property before any element".into()))?;
                let ty_name = words.next().unwrap_or_default();
                let prop = if ty_name == "list" {
                    let count = words.next().and_then(ScalarType::from_name);
                    let item = words.next().and_then(ScalarType::from_name);
                    let name = words.next();
                    match (count, item, name) {
                        (Some(count), Some(item), Some(name)) if !count.is_float() => Property::List {
                            name: name.to_string(),
                            count,
                            item,
                        },
                        _ => return Err(ParseError::Header(format!("bad list property {line:?}"))),
                    }
                } else {
                    let ty = ScalarType::from_name(ty_name)
                        .ok_or_else(|| ParseError::Header(format!("unknown type {ty_name:?}")))?;
                    let name = words
                        .next()
                        .ok_or_else(|| ParseError::Header(format!("bad property {line:?}")))?;
                    Property::Scalar {
                        name: name.to_string(),
                        ty,
                    }
                };
                if element.props.iter().any(|p| p.name() == prop.name()) {
                    return Err(ParseError::Header(format!("duplicate property {:?}", prop.name())));
                }
                element.props.push(prop);
            }
            other => return Err(ParseError::Header(format!("unknown keyword {other:?}"))),
        }
    }

    let encoding = encoding.ok_or_else(|| ParseError::Header("missing format line".into()))?;
    Ok(Header {
        encoding,
        elements,
        body_offset: offset,
    })
}

/// Read failure without location; callers attach it on the error path only.
#[derive(Debug)]
enum ReadFail {
    Eof,
    Invalid(String),
}

impl ReadFail {
    fn at(self, location: impl FnOnce() -> String) -> ParseError {
        match self {
            ReadFail::Eof => ParseError::UnexpectedEof(location()),
            ReadFail::Invalid(message) => ParseError::InvalidValue {
                location: location(),
                message,
            },
        }
    }
}

/// Sequential value reader over either body encoding.
enum Body<'a> {
    Ascii { data: &'a [u8], pos: usize },
    Binary { data: &'a [u8], pos: usize },
}

impl<'a> Body<'a> {
    fn next_token(data: &'a [u8], pos: &mut usize) -> Option<&'a [u8]> {
        while *pos < data.len() && data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        let start = *pos;
        while *pos < data.len() && !data[*pos].is_ascii_whitespace() {
            *pos += 1;
        }
        (start < *pos).then(|| &data[start..*pos])
    }

    fn read(&mut self, ty: ScalarType) -> Result<f64, ReadFail> {
        match self {
            Body::Ascii { data, pos } => {
                let token = Self::next_token(data, pos).ok_or(ReadFail::Eof)?;
                let text =
                    std::str::from_utf8(token).map_err(|_| ReadFail::Invalid("value is not valid text".into()))?;
                match ty {
                    ScalarType::F32 => text
                        .parse::<f32>()
                        .map(f64::from)
                        .map_err(|_| ReadFail::Invalid(format!("{text:?} is not a float"))),
                    ScalarType::F64 => text
                        .parse::<f64>()
                        .map_err(|_| ReadFail::Invalid(format!("{text:?} is not a float"))),
                    _ => {
                        let v: i64 = text
                            .parse()
                            .map_err(|_| ReadFail::Invalid(format!("{text:?} is not an integer")))?;
                        let (lo, hi) = ty.range();
                        if v < lo || v > hi {
                            return Err(ReadFail::Invalid(format!("{v} out of range for {ty:?}")));
                        }
                        Ok(v as f64)
                    }
                }
            }
            Body::Binary { data, pos } => {
                let n = ty.size();
                let end = pos.checked_add(n).filter(|&e| e <= data.len()).ok_or(ReadFail::Eof)?;
                let b = &data[*pos..end];
                *pos = end;
                Ok(match ty {
                    ScalarType::I8 => b[0] as i8 as f64,
                    ScalarType::U8 => b[0] as f64,
                    ScalarType::I16 => i16::from_le_bytes([b[0], b[1]]) as f64,
                    ScalarType::U16 => u16::from_le_bytes([b[0], b[1]]) as f64,
                    ScalarType::I32 => i32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
                    ScalarType::U32 => u32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
                    ScalarType::F32 => f32::from_le_bytes([b[0], b[1], b[2], b[3]]) as f64,
                    ScalarType::F64 => f64::from_le_bytes(b.try_into().expect("8 bytes")),
                })
            }
        }
    }

    fn remaining(&self) -> usize {
        match self {
            Body::Ascii { data, pos } | Body::Binary { data, pos } => data.len().saturating_sub(*pos),
        }
    }

    fn skip_property(&mut self, prop: &Property) -> Result<(), ReadFail> {
        match prop {
            Property::Scalar { ty, .. } => {
                self.read(*ty)?;
            }
            Property::List { count, item, .. } => {
                let n = self.read(*count)?;
                if n < 0.0 {
                    return Err(ReadFail::Invalid("negative list length".into()));
                }
                for _ in 0..n as usize {
                    self.read(*item)?;
                }
            }
        }
        Ok(())
    }
}

fn color_channel(value: f64, ty: ScalarType) -> Result<u8, ReadFail> {
    if ty.is_float() {
        if !(0.0..=1.0).contains(&value) {
            return Err(ReadFail::Invalid(format!("float color {value} outside 0-1")));
        }
        Ok((value * 255.0).round() as u8)
    } else if (0.0..=255.0).contains(&value) {
        Ok(value as u8)
    } else {
        Err(ReadFail::Invalid(format!("color {value} outside 0-255")))
    }
}

/// Locates the `red`, `green` and `blue` scalar properties of an element.
fn color_slots(props: &[Property]) -> Option<[usize; 3]> {
    let find = |names: &[&str]| {
        props
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, .. } if names.contains(&name.as_str())))
    };
    Some([
        find(&["red", "diffuse_red"])?,
        find(&["green", "diffuse_green"])?,
        find(&["blue", "diffuse_blue"])?,
    ])
}

/// Parses a PLY file into a vertex-colored mesh.
///
/// Fails with [`ParseError::Colorless`] when vertices carry no colors.
pub fn parse_ply(bytes: &[u8]) -> Result<TriMesh, ParseError> {
    parse_ply_with(bytes, &ReadOptions::default())
}

pub fn parse_ply_with(bytes: &[u8], options: &ReadOptions) -> Result<TriMesh, ParseError> {
    let header = parse_header(bytes)?;
    let data = &bytes[header.body_offset..];
    let mut body = match header.encoding {
        PlyEncoding::Ascii => Body::Ascii { data, pos: 0 },
        PlyEncoding::BinaryLittleEndian => Body::Binary { data, pos: 0 },
    };

    let vertex_el = header
        .elements
        .iter()
        .find(|e| e.name == "vertex")
        .ok_or_else(|| ParseError::Header("no vertex element".into()))?;
    let coord_slots = ["x", "y", "z"].map(|axis| {
        vertex_el
            .props
            .iter()
            .position(|p| matches!(p, Property::Scalar { name, .. } if name == axis))
    });
    let [Some(xi), Some(yi), Some(zi)] = coord_slots else {
        return Err(ParseError::Header("vertex element lacks x/y/z".into()));
    };
    let vcolor = color_slots(&vertex_el.props);
    if vcolor.is_none() && !options.allow_colorless {
        return Err(ParseError::Colorless);
    }

    let mut positions: Vec<[f32; 3]> = Vec::new();
    let mut vertex_colors: Vec<Rgb> = Vec::new();
    let mut faces: Vec<TriFace> = Vec::new();
    let mut face_colors: Vec<Rgb> = Vec::new();
    let mut has_face_colors = false;
    let mut warned: HashSet<(String, String)> = HashSet::new();
    let mut warn_once = |element: &str, prop: &str| {
        if warned.insert((element.to_string(), prop.to_string())) {
            warn!("skipping unrecognized PLY property {element}.{prop}");
        }
    };

    for element in &header.elements {
        if element.props.is_empty() {
            continue;
        }
        // Cap reservations by what the body could possibly hold.
        let cap = element.count.min(body.remaining());
        match element.name.as_str() {
            "vertex" => {
                positions.reserve(cap);
                if vcolor.is_some() {
                    vertex_colors.reserve(cap);
                }
                let mut values = vec![0.0f64; element.props.len()];
                for v in 0..element.count {
                    let at = |e: ReadFail| e.at(|| format!("vertex {v}"));
                    for (slot, prop) in element.props.iter().enumerate() {
                        match prop {
                            Property::Scalar { ty, .. } => values[slot] = body.read(*ty).map_err(at)?,
                            Property::List { name, .. } => {
                                warn_once("vertex", name);
                                body.skip_property(prop).map_err(at)?;
                            }
                        }
                    }
                    let p = [values[xi] as f32, values[yi] as f32, values[zi] as f32];
                    if p.iter().any(|c| !c.is_finite()) {
                        return Err(ParseError::NonFinite { vertex: v });
                    }
                    positions.push(p);
                    if let Some(slots) = vcolor {
                        let mut c = [0u8; 3];
                        for (ch, &slot) in c.iter_mut().zip(&slots) {
                            let Property::Scalar { ty, .. } = &element.props[slot] else {
                                unreachable!()
                            };
                            *ch = color_channel(values[slot], *ty).map_err(at)?;
                        }
                        vertex_colors.push(Rgb::from(c));
                    }
                }
                for p in &element.props {
                    let known = [
                        "x",
                        "y",
                        "z",
                        "red",
                        "green",
                        "blue",
                        "diffuse_red",
                        "diffuse_green",
                        "diffuse_blue",
                    ];
                    if matches!(p, Property::Scalar { .. }) && !known.contains(&p.name()) {
                        warn_once("vertex", p.name());
                    }
                }
            }
            "face" => {
                let index_slot = element.props.iter().position(
                    |p| matches!(p, Property::List { name, .. } if name == "vertex_indices" || name == "vertex_index"),
                );
                let Some(index_slot) = index_slot else {
                    return Err(ParseError::Header("face element lacks vertex_indices".into()));
                };
                let Property::List {
                    count: count_ty,
                    item: item_ty,
                    ..
                } = element.props[index_slot]
                else {
                    unreachable!()
                };
                if item_ty.is_float() {
                    return Err(ParseError::Header("face indices must be integers".into()));
                }
                let fcolor = color_slots(&element.props);
                has_face_colors = fcolor.is_some();
                faces.reserve(cap);
                let mut values = vec![0.0f64; element.props.len()];
                for f in 0..element.count {
                    let at = |e: ReadFail| e.at(|| format!("face {f}"));
                    let mut idx = [0u32; 3];
                    for (slot, prop) in element.props.iter().enumerate() {
                        if slot == index_slot {
                            let n = body.read(count_ty).map_err(at)?;
                            if n != 3.0 {
                                return Err(ParseError::FaceArity {
                                    face: f,
                                    arity: n.max(0.0) as usize,
                                });
                            }
                            for slot in &mut idx {
                                let i = body.read(item_ty).map_err(at)?;
                                if i < 0.0 || i >= u32::MAX as f64 {
                                    return Err(ParseError::IndexOutOfRange {
                                        face: f,
                                        index: i as i64,
                                        vertex_count: vertex_el.count,
                                    });
                                }
                                *slot = i as u32;
                            }
                        } else {
                            match prop {
                                Property::Scalar { ty, .. } => values[slot] = body.read(*ty).map_err(at)?,
                                Property::List { name, .. } => {
                                    warn_once("face", name);
                                    body.skip_property(prop).map_err(at)?;
                                }
                            }
                        }
                    }
                    faces.push(TriFace(idx));
                    if let Some(slots) = fcolor {
                        let mut c = [0u8; 3];
                        for (ch, &slot) in c.iter_mut().zip(&slots) {
                            let Property::Scalar { ty, .. } = &element.props[slot] else {
                                unreachable!()
                            };
                            *ch = color_channel(values[slot], *ty).map_err(at)?;
                        }
                        face_colors.push(Rgb::from(c));
                    }
                }
            }
            other => {
                warn!("skipping unrecognized PLY element {other:?} ({} items)", element.count);
                for i in 0..element.count {
                    for prop in &element.props {
                        body.skip_property(prop).map_err(|e| e.at(|| format!("{other} {i}")))?;
                    }
                }
            }
        }
    }

    let vertex_count = positions.len();
    for (f, face) in faces.iter().enumerate() {
        if let Some(&bad) = face.0.iter().find(|&&i| i as usize >= vertex_count) {
            return Err(ParseError::IndexOutOfRange {
                face: f,
                index: bad as i64,
                vertex_count,
            });
        }
    }

    let mesh = TriMesh::from_parts(
        positions,
        vcolor.map(|_| vertex_colors),
        faces,
        has_face_colors.then_some(face_colors),
    );
    // Every invariant checked by from_parts has already been enforced above.
    mesh.map_err(|e| ParseError::invalid("mesh", e.to_string()))
}

/// Serializes `mesh`, recoloring faces marked in `labeling` green.
pub fn write_ply(mesh: &TriMesh, labeling: Option<&DamageLabeling>, encoding: PlyEncoding) -> Result<Vec<u8>> {
    let mut out = Vec::new();
    write_ply_to(&mut out, mesh, labeling, encoding)?;
    Ok(out)
}

/// Face colors to emit, if any: the labeling's recoloring wins over colors
/// already stored on the mesh.
fn output_face_colors(mesh: &TriMesh, labeling: Option<&DamageLabeling>) -> Result<Option<Vec<Rgb>>> {
    let Some(labeling) = labeling else {
        return Ok(mesh.face_colors().map(<[Rgb]>::to_vec));
    };
    labeling.check_mesh(mesh)?;
    let mut colors = match mesh.face_colors() {
        Some(c) => c.to_vec(),
        None => mesh.faces().iter().map(|f| base_face_color(mesh, *f)).collect(),
    };
    for &id in labeling.face_ids() {
        colors[id as usize] = Rgb::GREEN;
    }
    Ok(Some(colors))
}

/// Mean of the face's vertex colors, or white for a colorless mesh.
fn base_face_color(mesh: &TriMesh, face: TriFace) -> Rgb {
    let Some(vc) = mesh.vertex_colors() else {
        return Rgb::new(255, 255, 255);
    };
    let mut sum = [0u32; 3];
    for i in face.0 {
        let c = vc[i as usize];
        sum[0] += c.r as u32;
        sum[1] += c.g as u32;
        sum[2] += c.b as u32;
    }
    let avg = |s: u32| ((s + 1) / 3) as u8;
    Rgb::new(avg(sum[0]), avg(sum[1]), avg(sum[2]))
}

pub fn write_ply_to<W: Write>(
    mut w: W,
    mesh: &TriMesh,
    labeling: Option<&DamageLabeling>,
    encoding: PlyEncoding,
) -> Result<()> {
    let face_colors = output_face_colors(mesh, labeling)?;
    let vertex_colors = mesh.vertex_colors();

    let mut header = String::from("ply\n");
    header.push_str(match encoding {
        PlyEncoding::Ascii => "format ascii 1.0\n",
        PlyEncoding::BinaryLittleEndian => "format binary_little_endian 1.0\n",
    });
    header.push_str("comment written by jdq\n");
    header.push_str(&format!("element vertex {}\n", mesh.vertex_count()));
    header.push_str("property float x\nproperty float y\nproperty float z\n");
    if vertex_colors.is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    header.push_str(&format!("element face {}\n", mesh.face_count()));
    header.push_str("property list uchar int vertex_indices\n");
    if face_colors.is_some() {
        header.push_str("property uchar red\nproperty uchar green\nproperty uchar blue\n");
    }
    header.push_str("end_header\n");

    let mut w = io::BufWriter::new(&mut w);
    w.write_all(header.as_bytes())?;
    match encoding {
        PlyEncoding::Ascii => {
            for (i, p) in mesh.positions().iter().enumerate() {
                write!(w, "{:.8e} {:.8e} {:.8e}", p[0], p[1], p[2])?;
                if let Some(c) = vertex_colors {
                    write!(w, " {} {} {}", c[i].r, c[i].g, c[i].b)?;
                }
                w.write_all(b"\n")?;
            }
            for (i, f) in mesh.faces().iter().enumerate() {
                write!(w, "3 {} {} {}", f.0[0], f.0[1], f.0[2])?;
                if let Some(c) = &face_colors {
                    write!(w, " {} {} {}", c[i].r, c[i].g, c[i].b)?;
                }
                w.write_all(b"\n")?;
            }
        }
        PlyEncoding::BinaryLittleEndian => {
            for (i, p) in mesh.positions().iter().enumerate() {
                for c in p {
                    w.write_all(&c.to_le_bytes())?;
                }
                if let Some(c) = vertex_colors {
                    w.write_all(&c[i].to_array())?;
                }
            }
            for (i, f) in mesh.faces().iter().enumerate() {
                w.write_all(&[3u8])?;
                for &v in &f.0 {
                    // Indices are bounded by the vertex count; int32 holds any
                    // mesh this format can describe in practice.
                    w.write_all(&(v as i32).to_le_bytes())?;
                }
                if let Some(c) = &face_colors {
                    w.write_all(&c[i].to_array())?;
                }
            }
        }
    }
    w.flush()?;
    Ok(())
}
