//! Joint damage quantification for sawcut contraction joints.
//!
//! The pipeline starts from 2D photos whose damaged pixels were painted a
//! sentinel red ([`raster::apply_color_mask`]). A photogrammetry tool turns
//! those photos into a vertex-colored mesh, which this crate reads
//! ([`io`]), thresholds on the red channel, and measures
//! ([`damage`]). The damaged area is reported as a Joint Damage Index,
//! and both the 2D masks and the 3D labeling can be scored against ground
//! truth with recall and error ([`metrics`]).
//!
//! ```
//! use jdq_core::{classify_damage, compute_jdi, JdiParams};
//! use jdq_core::synth::{generate_plane_mesh, Patch, SynthMeshSpec};
//!
//! // A 500 mm × 75 mm strip, fully painted red.
//! let spec = SynthMeshSpec::plane(20, 3, 25.0)
//!     .with_patch(Patch { x0: 0, y0: 0, x1: 20, y1: 3, red: 255 });
//! let scene = generate_plane_mesh(&spec).unwrap();
//! let damaged = classify_damage(&scene.mesh, 230).unwrap();
//! let report = compute_jdi(&damaged, &JdiParams::default()).unwrap();
//! assert_eq!(report.damage_area, 37_500.0);
//! assert_eq!(report.jdi, 100.0);
//! ```

pub mod augment;
pub mod damage;
pub mod error;
pub mod io;
pub mod mesh;
pub mod metrics;
pub mod raster;
pub mod report;
pub mod sum;
pub mod synth;

pub use augment::{augment_batch, augment_batch_with, AugmentConfig, AugmentOp, Augmented};
pub use damage::{
    classify_damage, classify_damage_with, compute_jdi, face_area, ground_truth_from_color, metrics_3d,
    threshold_sweep, threshold_sweep_with, ClassifyRule, DamageLabeling, JdiParams, JdiReport, SweepRow,
};
pub use error::{Error, ParseError, Result};
pub use io::{parse_obj, parse_ply, write_ply, PlyEncoding};
pub use mesh::{ColoredVertex, Rgb, TriFace, TriMesh};
pub use metrics::SegMetrics;
pub use raster::{adjust_brightness, apply_color_mask, gaussian_blur, metrics_2d, BinaryMask, RasterImage};
pub use report::Versioned;
