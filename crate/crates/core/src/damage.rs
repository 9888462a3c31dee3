//! Damage quantification on reconstructed meshes.
//!
//! A face counts as damaged when the red channel of all three of its
//! vertices is strictly above a threshold. The damaged area is normalized by
//! a fixed strip of `3 × D_max` on either side of the sawcut to give the
//! Joint Damage Index:
//!
//! ```text
//! JDI (%) = 100 × Σ area(damaged faces) / (3 × sawcut_length × d_max)
//! ```

use std::io::Write;

use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::error::{Error, Result};
use crate::mesh::{Rgb, TriFace, TriMesh};
use crate::metrics::SegMetrics;
use crate::sum::pairwise_sum;

/// Red threshold at which the reported field results balance recall and error.
pub const DEFAULT_THRESHOLD: u8 = 230;

/// Thresholds evaluated by a default sweep.
pub const DEFAULT_SWEEP: [u8; 4] = [190, 210, 230, 250];

/// Unscaled area of a face, computed in double precision.
fn triangle_area(mesh: &TriMesh, face: TriFace) -> f64 {
    let p = mesh.positions();
    let [a, b, c] = face.0.map(|i| p[i as usize].map(f64::from));
    let u = [b[0] - a[0], b[1] - a[1], b[2] - a[2]];
    let v = [c[0] - a[0], c[1] - a[1], c[2] - a[2]];
    let cross = [
        u[1] * v[2] - u[2] * v[1],
        u[2] * v[0] - u[0] * v[2],
        u[0] * v[1] - u[1] * v[0],
    ];
    0.5 * (cross[0] * cross[0] + cross[1] * cross[1] + cross[2] * cross[2]).sqrt()
}

/// Area of face `face` after multiplying coordinates by `scale`.
pub fn face_area(mesh: &TriMesh, face: usize, scale: f64) -> Result<f64> {
    let f = *mesh.faces().get(face).ok_or(Error::FaceOutOfRange {
        index: face,
        face_count: mesh.face_count(),
    })?;
    Ok(triangle_area(mesh, f) * scale * scale)
}

/// Total unscaled area of every face in the mesh.
pub fn mesh_area(mesh: &TriMesh) -> f64 {
    let areas: Vec<f64> = mesh.faces().par_iter().map(|&f| triangle_area(mesh, f)).collect();
    pairwise_sum(&areas)
}

/// A set of faces of one mesh together with their unscaled areas.
///
/// Face ids are kept sorted and unique. Areas are in squared mesh units;
/// apply a coordinate scale with [`DamageLabeling::area`].
#[derive(Debug, Clone, PartialEq)]
pub struct DamageLabeling {
    face_ids: Vec<u32>,
    face_areas: Vec<f64>,
    mesh_faces: usize,
    mesh_fingerprint: u64,
}

impl DamageLabeling {
    fn collect(mesh: &TriMesh, pick: impl Fn(TriFace) -> bool + Sync) -> Self {
        let (face_ids, face_areas) = mesh
            .faces()
            .par_iter()
            .enumerate()
            .filter(|(_, &f)| pick(f))
            .map(|(i, &f)| (i as u32, triangle_area(mesh, f)))
            .unzip();
        DamageLabeling {
            face_ids,
            face_areas,
            mesh_faces: mesh.face_count(),
            mesh_fingerprint: mesh.fingerprint(),
        }
    }

    /// An empty labeling bound to `mesh`.
    pub fn empty(mesh: &TriMesh) -> Self {
        DamageLabeling {
            face_ids: Vec::new(),
            face_areas: Vec::new(),
            mesh_faces: mesh.face_count(),
            mesh_fingerprint: mesh.fingerprint(),
        }
    }

    /// Labels an explicit set of faces. Duplicates are collapsed.
    pub fn from_face_ids(mesh: &TriMesh, ids: impl IntoIterator<Item = usize>) -> Result<Self> {
        let mut ids: Vec<usize> = ids.into_iter().collect();
        ids.sort_unstable();
        ids.dedup();
        if let Some(&bad) = ids.iter().find(|&&i| i >= mesh.face_count()) {
            return Err(Error::FaceOutOfRange {
                index: bad,
                face_count: mesh.face_count(),
            });
        }
        let faces = mesh.faces();
        Ok(DamageLabeling {
            face_areas: ids.iter().map(|&i| triangle_area(mesh, faces[i])).collect(),
            face_ids: ids.into_iter().map(|i| i as u32).collect(),
            mesh_faces: mesh.face_count(),
            mesh_fingerprint: mesh.fingerprint(),
        })
    }

    pub fn face_ids(&self) -> &[u32] {
        &self.face_ids
    }

    pub fn face_areas(&self) -> &[f64] {
        &self.face_areas
    }

    pub fn len(&self) -> usize {
        self.face_ids.len()
    }

    pub fn is_empty(&self) -> bool {
        self.face_ids.is_empty()
    }

    pub fn contains(&self, face: usize) -> bool {
        u32::try_from(face).is_ok_and(|f| self.face_ids.binary_search(&f).is_ok())
    }

    /// Total area with coordinates multiplied by `scale`.
    pub fn area(&self, scale: f64) -> f64 {
        pairwise_sum(&self.face_areas) * scale * scale
    }

    /// Fails with [`Error::MeshMismatch`] unless this labeling was built
    /// from a mesh with the same geometry as `mesh`.
    pub fn check_mesh(&self, mesh: &TriMesh) -> Result<()> {
        if self.mesh_faces == mesh.face_count() && self.mesh_fingerprint == mesh.fingerprint() {
            Ok(())
        } else {
            Err(Error::MeshMismatch)
        }
    }
}

/// Face classification rule.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct ClassifyRule {
    /// A vertex passes when its red channel is strictly greater than this.
    pub threshold: u8,
    /// Additionally require red to exceed both green and blue at each vertex.
    pub red_dominance: bool,
}

impl ClassifyRule {
    pub fn new(threshold: u8) -> Self {
        ClassifyRule {
            threshold,
            red_dominance: false,
        }
    }

    pub fn vertex_passes(&self, c: Rgb) -> bool {
        c.r > self.threshold && (!self.red_dominance || (c.r > c.g && c.r > c.b))
    }
}

/// Faces whose three vertices all have red above `threshold`.
pub fn classify_damage(mesh: &TriMesh, threshold: u8) -> Result<DamageLabeling> {
    classify_damage_with(mesh, ClassifyRule::new(threshold))
}

pub fn classify_damage_with(mesh: &TriMesh, rule: ClassifyRule) -> Result<DamageLabeling> {
    let colors = mesh.vertex_colors().ok_or(Error::ColorlessMesh)?;
    if !rule.red_dominance {
        // Faster path: compare the threshold once per vertex.
        let hot: Vec<bool> = colors.par_iter().map(|c| c.r > rule.threshold).collect();
        return Ok(DamageLabeling::collect(mesh, |f| f.0.iter().all(|&v| hot[v as usize])));
    }
    Ok(DamageLabeling::collect(mesh, |f| {
        f.0.iter().all(|&v| rule.vertex_passes(colors[v as usize]))
    }))
}

/// Faces whose three vertices all lie within `tolerance` of `color` on
/// every channel.
pub fn ground_truth_from_color(mesh: &TriMesh, color: Rgb, tolerance: u8) -> Result<DamageLabeling> {
    let colors = mesh.vertex_colors().ok_or(Error::ColorlessMesh)?;
    Ok(DamageLabeling::collect(mesh, |f| {
        f.0.iter().all(|&v| colors[v as usize].within(color, tolerance))
    }))
}

/// Constants of the Joint Damage Index.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JdiParams {
    /// Observed sawcut length, mm.
    pub sawcut_length: f64,
    /// Maximum aggregate size, mm.
    pub d_max: f64,
    /// Multiplier taking mesh coordinates to mm.
    pub coordinate_scale: f64,
    pub threshold: u8,
}

impl Default for JdiParams {
    fn default() -> Self {
        JdiParams {
            sawcut_length: 500.0,
            d_max: 25.0,
            coordinate_scale: 1.0,
            threshold: DEFAULT_THRESHOLD,
        }
    }
}

impl JdiParams {
    pub fn validate(&self) -> Result<()> {
        for (name, v) in [
            ("sawcut_length", self.sawcut_length),
            ("d_max", self.d_max),
            ("coordinate_scale", self.coordinate_scale),
        ] {
            if !(v.is_finite() && v > 0.0) {
                return Err(Error::InvalidParameter(format!("{name} must be positive, got {v}")));
            }
        }
        Ok(())
    }

    /// Fixed projected area the damage is normalized by, mm².
    pub fn denominator(&self) -> f64 {
        3.0 * self.sawcut_length * self.d_max
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct JdiReport {
    /// mm².
    pub damage_area: f64,
    /// mm².
    pub denominator: f64,
    /// Percent.
    pub jdi: f64,
    pub params: JdiParams,
    pub damaged_face_count: usize,
}

pub fn compute_jdi(labeling: &DamageLabeling, params: &JdiParams) -> Result<JdiReport> {
    params.validate()?;
    let damage_area = labeling.area(params.coordinate_scale);
    let denominator = params.denominator();
    Ok(JdiReport {
        damage_area,
        denominator,
        jdi: 100.0 * damage_area / denominator,
        params: *params,
        damaged_face_count: labeling.len(),
    })
}

/// Area-weighted confusion between a predicted and a ground-truth labeling
/// of the same mesh. Magnitudes are in squared mesh units times `scale²`.
pub fn metrics_3d(pred: &DamageLabeling, gt: &DamageLabeling, mesh: &TriMesh, scale: f64) -> Result<SegMetrics> {
    pred.check_mesh(mesh)?;
    gt.check_mesh(mesh)?;
    if !(scale.is_finite() && scale > 0.0) {
        return Err(Error::InvalidParameter(format!("scale must be positive, got {scale}")));
    }
    let (mut tp, mut fp, mut fn_) = (Vec::new(), Vec::new(), Vec::new());
    let (mut i, mut j) = (0, 0);
    let (p, g) = (&pred.face_ids, &gt.face_ids);
    while i < p.len() || j < g.len() {
        match (p.get(i), g.get(j)) {
            (Some(a), Some(b)) if a == b => {
                tp.push(pred.face_areas[i]);
                i += 1;
                j += 1;
            }
            (Some(a), Some(b)) if a < b => {
                fp.push(pred.face_areas[i]);
                i += 1;
            }
            (Some(_), None) => {
                fp.push(pred.face_areas[i]);
                i += 1;
            }
            _ => {
                fn_.push(gt.face_areas[j]);
                j += 1;
            }
        }
    }
    let s2 = scale * scale;
    SegMetrics::from_magnitudes(pairwise_sum(&tp) * s2, pairwise_sum(&fp) * s2, pairwise_sum(&fn_) * s2)
}

/// One line of a threshold sweep. `jdi` is in percent.
#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct SweepRow {
    pub threshold: u8,
    pub recall: f64,
    pub error: f64,
    #[serde(rename = "jdi_percent")]
    pub jdi: f64,
}

/// Classifies at each threshold and scores against `gt`. Rows come back
/// sorted by threshold; `params.threshold` is ignored.
pub fn threshold_sweep(
    mesh: &TriMesh,
    gt: &DamageLabeling,
    thresholds: &[u8],
    params: &JdiParams,
) -> Result<Vec<SweepRow>> {
    threshold_sweep_with(mesh, gt, thresholds, params, false)
}

pub fn threshold_sweep_with(
    mesh: &TriMesh,
    gt: &DamageLabeling,
    thresholds: &[u8],
    params: &JdiParams,
    red_dominance: bool,
) -> Result<Vec<SweepRow>> {
    if thresholds.is_empty() {
        return Err(Error::InvalidParameter("no thresholds given".into()));
    }
    params.validate()?;
    gt.check_mesh(mesh)?;
    let mut sorted = thresholds.to_vec();
    sorted.sort_unstable();
    sorted
        .into_iter()
        .map(|threshold| {
            let pred = classify_damage_with(
                mesh,
                ClassifyRule {
                    threshold,
                    red_dominance,
                },
            )?;
            let m = metrics_3d(&pred, gt, mesh, params.coordinate_scale)?;
            let report = compute_jdi(&pred, &JdiParams { threshold, ..*params })?;
            Ok(SweepRow {
                threshold,
                recall: m.recall,
                error: m.error,
                jdi: report.jdi,
            })
        })
        .collect()
}

/// Writes sweep rows as CSV with header `threshold,recall,error,jdi_percent`.
pub fn write_sweep_csv<W: Write>(w: W, rows: &[SweepRow]) -> Result<()> {
    let mut out = csv::Writer::from_writer(w);
    for row in rows {
        out.serialize(row)?;
    }
    out.flush()?;
    Ok(())
}

/// Parses a face list: one index per line, `#` starts a comment, blank
/// lines ignored.
pub fn parse_face_list(text: &str) -> Result<Vec<usize>> {
    let mut ids = Vec::new();
    for (i, line) in text.lines().enumerate() {
        let content = line.split('#').next().unwrap_or_default().trim();
        if content.is_empty() {
            continue;
        }
        let id = content.parse().map_err(|_| Error::FaceList {
            line: i + 1,
            message: format!("{content:?} is not a face index"),
        })?;
        ids.push(id);
    }
    Ok(ids)
}

pub fn format_face_list(labeling: &DamageLabeling) -> String {
    let mut out = String::with_capacity(labeling.len() * 8);
    for id in labeling.face_ids() {
        out.push_str(&id.to_string());
        out.push('\n');
    }
    out
}
