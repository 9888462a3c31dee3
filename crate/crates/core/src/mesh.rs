//! Vertex-colored triangle meshes.

use std::fmt;
use std::hash::{Hash, Hasher};
use std::str::FromStr;
use std::sync::OnceLock;

use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};

/// An 8-bit RGB color.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Default, Serialize, Deserialize)]
pub struct Rgb {
    pub r: u8,
    pub g: u8,
    pub b: u8,
}

impl Rgb {
    pub const RED: Rgb = Rgb::new(255, 0, 0);
    pub const GREEN: Rgb = Rgb::new(0, 255, 0);
    pub const YELLOW: Rgb = Rgb::new(255, 255, 0);

    pub const fn new(r: u8, g: u8, b: u8) -> Self {
        Rgb { r, g, b }
    }

    pub fn to_array(self) -> [u8; 3] {
        [self.r, self.g, self.b]
    }

    /// Per-channel absolute difference no larger than `tolerance`.
    pub fn within(self, other: Rgb, tolerance: u8) -> bool {
        self.r.abs_diff(other.r) <= tolerance
            && self.g.abs_diff(other.g) <= tolerance
            && self.b.abs_diff(other.b) <= tolerance
    }
}

impl From<[u8; 3]> for Rgb {
    fn from([r, g, b]: [u8; 3]) -> Self {
        Rgb { r, g, b }
    }
}

impl fmt::Display for Rgb {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        write!(f, "{},{},{}", self.r, self.g, self.b)
    }
}

impl FromStr for Rgb {
    type Err = String;

    /// Parses `r,g,b` with each channel in 0-255.
    fn from_str(s: &str) -> std::result::Result<Self, Self::Err> {
        let parts: Vec<&str> = s.split(',').map(str::trim).collect();
        if parts.len() != 3 {
            return Err(format!("expected r,g,b but got {s:?}"));
        }
        let mut channels = [0u8; 3];
        for (slot, part) in channels.iter_mut().zip(&parts) {
            *slot = part
                .parse()
                .map_err(|_| format!("channel {part:?} is not an integer in 0-255"))?;
        }
        Ok(Rgb::from(channels))
    }
}

/// A vertex position with its color, used to build meshes.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct ColoredVertex {
    pub position: [f32; 3],
    pub color: Rgb,
}

impl ColoredVertex {
    pub fn new(position: [f32; 3], color: Rgb) -> Self {
        ColoredVertex { position, color }
    }
}

/// Three vertex indices. Repeated indices are allowed and give a zero-area face.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash)]
pub struct TriFace(pub [u32; 3]);

impl TriFace {
    pub fn new(v0: u32, v1: u32, v2: u32) -> Self {
        TriFace([v0, v1, v2])
    }

    pub fn indices(self) -> [u32; 3] {
        self.0
    }
}

/// A triangle mesh with optional per-vertex and per-face colors.
///
/// Construction validates that every face index is in range and every
/// coordinate is finite, so downstream code may index without checks.
#[derive(Clone, Default)]
pub struct TriMesh {
    positions: Vec<[f32; 3]>,
    vertex_colors: Option<Vec<Rgb>>,
    faces: Vec<TriFace>,
    face_colors: Option<Vec<Rgb>>,
    fingerprint: OnceLock<u64>,
}

impl TriMesh {
    /// Builds a vertex-colored mesh.
    pub fn new(vertices: Vec<ColoredVertex>, faces: Vec<TriFace>) -> Result<Self> {
        let (positions, colors) = vertices.into_iter().map(|v| (v.position, v.color)).unzip();
        Self::from_parts(positions, Some(colors), faces, None)
    }

    pub fn from_parts(
        positions: Vec<[f32; 3]>,
        vertex_colors: Option<Vec<Rgb>>,
        faces: Vec<TriFace>,
        face_colors: Option<Vec<Rgb>>,
    ) -> Result<Self> {
        if let Some(i) = positions.iter().position(|p| p.iter().any(|c| !c.is_finite())) {
            return Err(Error::InvalidMesh(format!("vertex {i} has a non-finite coordinate")));
        }
        if let Some(colors) = &vertex_colors {
            if colors.len() != positions.len() {
                return Err(Error::InvalidMesh(format!(
                    "{} vertex colors for {} vertices",
                    colors.len(),
                    positions.len()
                )));
            }
        }
        if let Some(colors) = &face_colors {
            if colors.len() != faces.len() {
                return Err(Error::InvalidMesh(format!(
                    "{} face colors for {} faces",
                    colors.len(),
                    faces.len()
                )));
            }
        }
        let n = positions.len();
        for (i, f) in faces.iter().enumerate() {
            if let Some(&bad) = f.0.iter().find(|&&v| v as usize >= n) {
                return Err(Error::InvalidMesh(format!(
                    "face {i} references vertex {bad}, but the mesh has {n} vertices"
                )));
            }
        }
        Ok(TriMesh {
            positions,
            vertex_colors,
            faces,
            face_colors,
            fingerprint: OnceLock::new(),
        })
    }

    pub fn vertex_count(&self) -> usize {
        self.positions.len()
    }

    pub fn face_count(&self) -> usize {
        self.faces.len()
    }

    pub fn positions(&self) -> &[[f32; 3]] {
        &self.positions
    }

    pub fn vertex_colors(&self) -> Option<&[Rgb]> {
        self.vertex_colors.as_deref()
    }

    pub fn has_vertex_colors(&self) -> bool {
        self.vertex_colors.is_some()
    }

    pub fn faces(&self) -> &[TriFace] {
        &self.faces
    }

    pub fn face_colors(&self) -> Option<&[Rgb]> {
        self.face_colors.as_deref()
    }

    pub fn vertex(&self, index: usize) -> Option<ColoredVertex> {
        let position = *self.positions.get(index)?;
        let color = self.vertex_colors.as_ref().map_or(Rgb::default(), |c| c[index]);
        Some(ColoredVertex { position, color })
    }

    /// Replaces the per-face colors; `None` removes them.
    pub fn with_face_colors(mut self, colors: Option<Vec<Rgb>>) -> Result<Self> {
        if let Some(c) = &colors {
            if c.len() != self.faces.len() {
                return Err(Error::InvalidMesh(format!(
                    "{} face colors for {} faces",
                    c.len(),
                    self.faces.len()
                )));
            }
        }
        self.face_colors = colors;
        Ok(self)
    }

    /// Hash of the geometry (positions and connectivity, not colors).
    ///
    /// Two meshes that differ only in colors share a fingerprint, so a
    /// ground-truth mesh recolored from the same reconstruction matches.
    pub fn fingerprint(&self) -> u64 {
        *self.fingerprint.get_or_init(|| {
            let mut h = std::collections::hash_map::DefaultHasher::new();
            self.positions.len().hash(&mut h);
            for p in &self.positions {
                for c in p {
                    c.to_bits().hash(&mut h);
                }
            }
            self.faces.hash(&mut h);
            h.finish()
        })
    }
}

impl PartialEq for TriMesh {
    fn eq(&self, other: &Self) -> bool {
        self.faces == other.faces
            && self.vertex_colors == other.vertex_colors
            && self.face_colors == other.face_colors
            && self.positions.len() == other.positions.len()
            && self
                .positions
                .iter()
                .zip(&other.positions)
                .all(|(a, b)| a.iter().zip(b).all(|(x, y)| x.to_bits() == y.to_bits()))
    }
}

impl fmt::Debug for TriMesh {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.debug_struct("TriMesh")
            .field("vertices", &self.positions.len())
            .field("faces", &self.faces.len())
            .field("vertex_colors", &self.vertex_colors.is_some())
            .field("face_colors", &self.face_colors.is_some())
            .finish()
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn tri() -> Vec<ColoredVertex> {
        vec![
            ColoredVertex::new([0.0, 0.0, 0.0], Rgb::RED),
            ColoredVertex::new([1.0, 0.0, 0.0], Rgb::RED),
            ColoredVertex::new([0.0, 1.0, 0.0], Rgb::RED),
        ]
    }

    #[test]
    fn rejects_out_of_range_index() {
        let err = TriMesh::new(tri(), vec![TriFace::new(0, 1, 5)]).unwrap_err();
        assert!(matches!(err, Error::InvalidMesh(_)));
    }

    #[test]
    fn rejects_nan() {
        let mut v = tri();
        v[1].position[2] = f32::NAN;
        assert!(TriMesh::new(v, vec![]).is_err());
    }

    #[test]
    fn degenerate_faces_allowed() {
        let m = TriMesh::new(tri(), vec![TriFace::new(0, 0, 0)]).unwrap();
        assert_eq!(m.face_count(), 1);
    }

    #[test]
    fn fingerprint_ignores_colors() {
        let a = TriMesh::new(tri(), vec![TriFace::new(0, 1, 2)]).unwrap();
        let mut v = tri();
        v[0].color = Rgb::YELLOW;
        let b = TriMesh::new(v, vec![TriFace::new(0, 1, 2)]).unwrap();
        assert_eq!(a.fingerprint(), b.fingerprint());
        assert_ne!(a, b);
        let c = TriMesh::new(tri(), vec![TriFace::new(0, 2, 1)]).unwrap();
        assert_ne!(a.fingerprint(), c.fingerprint());
    }

    #[test]
    fn rgb_from_str() {
        assert_eq!("255, 0,0".parse::<Rgb>().unwrap(), Rgb::RED);
        assert!("256,0,0".parse::<Rgb>().is_err());
        assert!("1,2".parse::<Rgb>().is_err());
    }
}
