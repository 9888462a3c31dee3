//! Synthetic meshes and masks with exactly known damage.
//!
//! Planar grids are split into two triangles per cell along the
//! lower-left to upper-right diagonal. A vertex belongs to a patch when it
//! lies in the patch's closed rectangle, so only faces of cells inside a
//! patch have all three vertices colored.

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use serde::{Deserialize, Serialize};

use crate::damage::DamageLabeling;
use crate::error::{Error, Result};
use crate::mesh::{Rgb, TriFace, TriMesh};
use crate::metrics::SegMetrics;
use crate::raster::BinaryMask;

/// Green and blue of vertices outside any patch.
pub const BACKGROUND_GRAY: u8 = 128;

/// A rectangle of grid cells `[x0, x1) × [y0, y1)` painted with `red`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Patch {
    pub x0: u32,
    pub y0: u32,
    pub x1: u32,
    pub y1: u32,
    pub red: u8,
}

impl Patch {
    pub fn cells(&self) -> u64 {
        (self.x1 - self.x0) as u64 * (self.y1 - self.y0) as u64
    }

    fn contains_vertex(&self, i: u32, j: u32) -> bool {
        (self.x0..=self.x1).contains(&i) && (self.y0..=self.y1).contains(&j)
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
#[serde(rename_all = "lowercase")]
pub enum Axis {
    X,
    Y,
}

/// Background red varying linearly from `start` at the first grid line to
/// `end` at the last, rounded to the nearest integer.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct RedGradient {
    pub axis: Axis,
    pub start: u8,
    pub end: u8,
}

#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SynthMeshSpec {
    pub grid_nx: u32,
    pub grid_ny: u32,
    /// Cell edge length, mm.
    pub cell_size: f64,
    #[serde(default)]
    pub patches: Vec<Patch>,
    #[serde(default)]
    pub background_red: u8,
    /// Half-width of uniform red noise; 0 disables it.
    #[serde(default)]
    pub noise: u8,
    #[serde(default)]
    pub noise_seed: u64,
    #[serde(default)]
    pub gradient: Option<RedGradient>,
}

impl SynthMeshSpec {
    pub fn plane(grid_nx: u32, grid_ny: u32, cell_size: f64) -> Self {
        SynthMeshSpec {
            grid_nx,
            grid_ny,
            cell_size,
            patches: Vec::new(),
            background_red: 0,
            noise: 0,
            noise_seed: 0,
            gradient: None,
        }
    }

    pub fn with_patch(mut self, patch: Patch) -> Self {
        self.patches.push(patch);
        self
    }

    fn validate(&self) -> Result<()> {
        if self.grid_nx == 0 || self.grid_ny == 0 {
            return Err(Error::InvalidParameter("grid needs at least one cell per axis".into()));
        }
        let vertices = (self.grid_nx as u64 + 1) * (self.grid_ny as u64 + 1);
        if vertices > u32::MAX as u64 || 2 * self.grid_nx as u64 * self.grid_ny as u64 > u32::MAX as u64 {
            return Err(Error::InvalidParameter("grid too large".into()));
        }
        if !(self.cell_size.is_finite() && self.cell_size > 0.0) {
            return Err(Error::InvalidParameter(format!(
                "cell_size must be positive, got {}",
                self.cell_size
            )));
        }
        for (k, p) in self.patches.iter().enumerate() {
            if p.x0 >= p.x1 || p.y0 >= p.y1 || p.x1 > self.grid_nx || p.y1 > self.grid_ny {
                return Err(Error::InvalidParameter(format!(
                    "patch {k} is empty or outside the grid"
                )));
            }
        }
        for (a, pa) in self.patches.iter().enumerate() {
            for (b, pb) in self.patches.iter().enumerate().skip(a + 1) {
                let touch = pa.x0 <= pb.x1 && pb.x0 <= pa.x1 && pa.y0 <= pb.y1 && pb.y0 <= pa.y1;
                if touch && pa.red != pb.red {
                    return Err(Error::InvalidParameter(format!(
                        "patches {a} and {b} share vertices with different red intensities"
                    )));
                }
            }
        }
        Ok(())
    }

    fn background(&self, i: u32, j: u32) -> u8 {
        match self.gradient {
            None => self.background_red,
            Some(g) => {
                let (pos, n) = match g.axis {
                    Axis::X => (i, self.grid_nx),
                    Axis::Y => (j, self.grid_ny),
                };
                let t = pos as f64 / n as f64;
                (g.start as f64 + (g.end as f64 - g.start as f64) * t).round() as u8
            }
        }
    }
}

/// Output of [`generate_plane_mesh`].
#[derive(Debug, Clone)]
pub struct SynthMesh {
    pub mesh: TriMesh,
    pub gt: DamageLabeling,
    /// Sum of patch cell counts times `cell_size²`, mm².
    pub exact_patch_area: f64,
}

/// Vertex index of grid corner `(i, j)`.
fn vid(spec: &SynthMeshSpec, i: u32, j: u32) -> u32 {
    j * (spec.grid_nx + 1) + i
}

pub fn generate_plane_mesh(spec: &SynthMeshSpec) -> Result<SynthMesh> {
    spec.validate()?;
    let (nx, ny) = (spec.grid_nx, spec.grid_ny);
    let nverts = (nx as usize + 1) * (ny as usize + 1);
    let mut positions = Vec::with_capacity(nverts);
    let mut colors = Vec::with_capacity(nverts);
    let mut in_patch = Vec::with_capacity(nverts);
    let mut rng = ChaCha8Rng::seed_from_u64(spec.noise_seed);

    for j in 0..=ny {
        for i in 0..=nx {
            positions.push([
                (i as f64 * spec.cell_size) as f32,
                (j as f64 * spec.cell_size) as f32,
                0.0,
            ]);
            let patch = spec.patches.iter().find(|p| p.contains_vertex(i, j));
            in_patch.push(patch.is_some());
            let mut color = match patch {
                Some(p) => Rgb::new(p.red, 0, 0),
                None => Rgb::new(spec.background(i, j), BACKGROUND_GRAY, BACKGROUND_GRAY),
            };
            if spec.noise > 0 {
                let n = spec.noise as i16;
                let delta: i16 = rng.random_range(-n..=n);
                color.r = (color.r as i16 + delta).clamp(0, 255) as u8;
            }
            colors.push(color);
        }
    }

    let mut faces = Vec::with_capacity(2 * nx as usize * ny as usize);
    for j in 0..ny {
        for i in 0..nx {
            let a = vid(spec, i, j);
            let b = vid(spec, i + 1, j);
            let c = vid(spec, i + 1, j + 1);
            let d = vid(spec, i, j + 1);
            faces.push(TriFace::new(a, b, c));
            faces.push(TriFace::new(a, c, d));
        }
    }

    let gt_ids: Vec<usize> = faces
        .iter()
        .enumerate()
        .filter(|(_, f)| f.0.iter().all(|&v| in_patch[v as usize]))
        .map(|(k, _)| k)
        .collect();
    let mesh = TriMesh::from_parts(positions, Some(colors), faces, None)?;
    let gt = DamageLabeling::from_face_ids(&mesh, gt_ids)?;
    let cells: u64 = spec.patches.iter().map(Patch::cells).sum();
    Ok(SynthMesh {
        mesh,
        gt,
        exact_patch_area: cells as f64 * spec.cell_size * spec.cell_size,
    })
}

/// Pixel rectangle `[x, x + w) × [y, y + h)`.
#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct Rect {
    pub x: u32,
    pub y: u32,
    pub w: u32,
    pub h: u32,
}

impl Rect {
    pub fn new(x: u32, y: u32, w: u32, h: u32) -> Self {
        Rect { x, y, w, h }
    }

    pub fn area(&self) -> u64 {
        self.w as u64 * self.h as u64
    }

    pub fn contains(&self, px: u32, py: u32) -> bool {
        px >= self.x && px - self.x < self.w && py >= self.y && py - self.y < self.h
    }

    pub fn intersection_area(&self, other: &Rect) -> u64 {
        let overlap = |a0: u32, a1: u64, b0: u32, b1: u64| {
            let lo = a0.max(b0) as u64;
            let hi = a1.min(b1);
            hi.saturating_sub(lo)
        };
        overlap(
            self.x,
            self.x as u64 + self.w as u64,
            other.x,
            other.x as u64 + other.w as u64,
        ) * overlap(
            self.y,
            self.y as u64 + self.h as u64,
            other.y,
            other.y as u64 + other.h as u64,
        )
    }

    fn fits(&self, width: u32, height: u32) -> bool {
        self.x as u64 + self.w as u64 <= width as u64 && self.y as u64 + self.h as u64 <= height as u64
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Serialize, Deserialize)]
pub struct SynthMaskSpec {
    pub width: u32,
    pub height: u32,
    pub gt: Rect,
    pub pred: Rect,
}

#[derive(Debug, Clone)]
pub struct SynthMasks {
    pub pred: BinaryMask,
    pub gt: BinaryMask,
    pub expected: SegMetrics,
}

/// Builds a prediction/ground-truth mask pair whose metrics follow from
/// rectangle intersection alone.
pub fn generate_mask_pair(spec: &SynthMaskSpec) -> Result<SynthMasks> {
    if !spec.gt.fits(spec.width, spec.height) || !spec.pred.fits(spec.width, spec.height) {
        return Err(Error::InvalidParameter("rectangle outside the mask".into()));
    }
    if spec.gt.area() == 0 {
        return Err(Error::InvalidParameter("ground-truth rectangle is empty".into()));
    }
    let tp = spec.gt.intersection_area(&spec.pred);
    let expected = SegMetrics::from_counts(tp, spec.pred.area() - tp, spec.gt.area() - tp)?;
    Ok(SynthMasks {
        pred: BinaryMask::from_fn(spec.width, spec.height, |x, y| spec.pred.contains(x, y))?,
        gt: BinaryMask::from_fn(spec.width, spec.height, |x, y| spec.gt.contains(x, y))?,
        expected,
    })
}

/// Either kind of synthetic fixture, tagged by `"kind"` in JSON.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
#[serde(tag = "kind", rename_all = "snake_case")]
pub enum SynthSpec {
    Mesh(SynthMeshSpec),
    Masks(SynthMaskSpec),
}
