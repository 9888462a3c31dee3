//! Wavefront OBJ with the six-component `v x y z r g b` vertex extension.

use std::io::{self, Write};

use crate::error::{ParseError, Result};
use crate::mesh::{Rgb, TriFace, TriMesh};

fn parse_channel(token: &str, line_no: usize) -> Result<u8, ParseError> {
    let c: f64 = token
        .parse()
        .map_err(|_| ParseError::invalid(format!("line {line_no}"), format!("{token:?} is not a number")))?;
    if !(0.0..=1.0).contains(&c) {
        return Err(ParseError::invalid(
            format!("line {line_no}"),
            format!("color component {c} outside 0-1"),
        ));
    }
    Ok((c * 255.0).round() as u8)
}

/// Parses an OBJ document whose vertex records carry 0-1 RGB after the
/// coordinates. Texture, normal, group and material records are ignored.
pub fn parse_obj(text: &str) -> Result<TriMesh, ParseError> {
    let mut positions = Vec::new();
    let mut colors = Vec::new();
    // (1-based line number, raw indices) resolved after all vertices are known.
    let mut raw_faces: Vec<(usize, [i64; 3])> = Vec::new();

    for (i, line) in text.lines().enumerate() {
        let line_no = i + 1;
        let line = line.split('#').next().unwrap_or_default();
        let mut tokens = line.split_whitespace();
        match tokens.next() {
            Some("v") => {
                let fields: Vec<&str> = tokens.collect();
                if fields.len() < 3 {
                    return Err(ParseError::invalid(format!("line {line_no}"), "vertex needs x y z"));
                }
                if fields.len() < 6 {
                    return Err(ParseError::Colorless);
                }
                let mut p = [0f32; 3];
                for (slot, tok) in p.iter_mut().zip(&fields[..3]) {
                    *slot = tok.parse().map_err(|_| {
                        ParseError::invalid(format!("line {line_no}"), format!("{tok:?} is not a number"))
                    })?;
                }
                if p.iter().any(|c| !c.is_finite()) {
                    return Err(ParseError::NonFinite {
                        vertex: positions.len(),
                    });
                }
                let mut c = [0u8; 3];
                for (slot, tok) in c.iter_mut().zip(&fields[3..6]) {
                    *slot = parse_channel(tok, line_no)?;
                }
                positions.push(p);
                colors.push(Rgb::from(c));
            }
            Some("f") => {
                let refs: Vec<&str> = tokens.collect();
                if refs.len() != 3 {
                    return Err(ParseError::FaceArity {
                        face: raw_faces.len(),
                        arity: refs.len(),
                    });
                }
                let mut idx = [0i64; 3];
                for (slot, r) in idx.iter_mut().zip(&refs) {
                    let v = r.split('/').next().unwrap_or_default();
                    *slot = v.parse().map_err(|_| {
                        ParseError::invalid(format!("line {line_no}"), format!("bad vertex reference {r:?}"))
                    })?;
                }
                raw_faces.push((line_no, idx));
            }
            _ => {}
        }
    }

    let n = positions.len();
    let mut faces = Vec::with_capacity(raw_faces.len());
    for (f, (_, idx)) in raw_faces.iter().enumerate() {
        let mut tri = [0u32; 3];
        for (slot, &i) in tri.iter_mut().zip(idx) {
            if i <= 0 || i as u64 > n as u64 {
                return Err(ParseError::IndexOutOfRange {
                    face: f,
                    index: i,
                    vertex_count: n,
                });
            }
            *slot = (i - 1) as u32;
        }
        faces.push(TriFace(tri));
    }

    TriMesh::from_parts(positions, Some(colors), faces, None).map_err(|e| ParseError::invalid("mesh", e.to_string()))
}

/// Writes vertices as `v x y z r g b` (colors scaled to 0-1) and 1-based
/// triangular faces. Per-face colors have no OBJ representation and are dropped.
pub fn write_obj<W: Write>(w: W, mesh: &TriMesh) -> io::Result<()> {
    let mut w = io::BufWriter::new(w);
    writeln!(w, "# written by jdq")?;
    let colors = mesh.vertex_colors();
    for (i, p) in mesh.positions().iter().enumerate() {
        write!(w, "v {:.8e} {:.8e} {:.8e}", p[0], p[1], p[2])?;
        let c = colors.map_or(Rgb::default(), |c| c[i]);
        for ch in c.to_array() {
            write!(w, " {:.9}", ch as f64 / 255.0)?;
        }
        writeln!(w)?;
    }
    for f in mesh.faces() {
        writeln!(w, "f {} {} {}", f.0[0] + 1, f.0[1] + 1, f.0[2] + 1)?;
    }
    w.flush()
}

pub fn obj_string(mesh: &TriMesh) -> String {
    let mut out = Vec::new();
    write_obj(&mut out, mesh).expect("writing to a Vec cannot fail");
    String::from_utf8(out).expect("OBJ output is ASCII")
}
