//! Mesh file formats.

mod obj;
mod ply;

use std::path::Path;

pub use obj::{obj_string, parse_obj, write_obj};
pub use ply::{parse_ply, parse_ply_with, write_ply, write_ply_to, PlyEncoding, ReadOptions};

use crate::error::{ParseError, Result};
use crate::mesh::TriMesh;

/// Loads a `.ply` or `.obj` file, choosing the parser by extension.
pub fn load_mesh(path: &Path, options: &ReadOptions) -> Result<TriMesh> {
    let ext = path.extension().and_then(|e| e.to_str()).map(str::to_ascii_lowercase);
    let bytes = std::fs::read(path)?;
    match ext.as_deref() {
        Some("obj") => {
            let text =
                std::str::from_utf8(&bytes).map_err(|_| ParseError::invalid("file", "OBJ is not valid UTF-8"))?;
            // OBJ has no colorless variant here; the color extension is required.
            Ok(parse_obj(text)?)
        }
        _ => Ok(parse_ply_with(&bytes, options)?),
    }
}
