//! Fixtures shared by the benchmarks.

use jdq_core::synth::{generate_plane_mesh, Axis, Patch, RedGradient, SynthMeshSpec};
use jdq_core::{RasterImage, TriMesh};

/// A red-gradient grid of `2 × nx × ny` faces with a saturated patch in
/// the middle.
pub fn gradient_mesh(nx: u32, ny: u32) -> TriMesh {
    let mut spec = SynthMeshSpec::plane(nx, ny, 1.0).with_patch(Patch {
        x0: nx / 4,
        y0: ny / 4,
        x1: 3 * nx / 4,
        y1: 3 * ny / 4,
        red: 255,
    });
    spec.gradient = Some(RedGradient {
        axis: Axis::X,
        start: 150,
        end: 250,
    });
    generate_plane_mesh(&spec).expect("valid spec").mesh
}

/// A full-HD frame with a smooth color ramp.
pub fn frame(width: u32, height: u32) -> RasterImage {
    RasterImage::from_fn(width, height, |x, y| {
        [(x % 256) as u8, (y % 256) as u8, ((x ^ y) % 256) as u8]
    })
    .expect("non-empty frame")
}
