//! Subcommand implementations.

use std::fs;
use std::io::Write;
use std::path::{Path, PathBuf};

use clap::Args;
use rayon::prelude::*;
use serde::Serialize;
use tracing::info;

use jdq_core::damage::{format_face_list, parse_face_list, write_sweep_csv, DEFAULT_SWEEP, DEFAULT_THRESHOLD};
use jdq_core::io::{load_mesh, write_ply, PlyEncoding, ReadOptions};
use jdq_core::synth::{generate_mask_pair, generate_plane_mesh, SynthSpec};
use jdq_core::{
    apply_color_mask, augment_batch_with, classify_damage_with, compute_jdi, ground_truth_from_color, metrics_2d,
    metrics_3d, threshold_sweep_with, AugmentConfig, BinaryMask, ClassifyRule, DamageLabeling, JdiParams, RasterImage,
    Rgb, TriMesh, Versioned,
};

use crate::error::CliError;
use crate::timing::RunReport;

/// Index constants and detection rule.
#[derive(Debug, Clone, Args)]
pub struct JdiArgs {
    /// Red threshold; a face is damaged when all three vertex reds exceed it.
    #[arg(long, default_value_t = DEFAULT_THRESHOLD)]
    pub threshold: u8,
    /// Multiplier from mesh units to millimetres.
    #[arg(long, default_value_t = 1.0)]
    pub scale: f64,
    #[arg(long = "sawcut-length-mm", default_value_t = 500.0)]
    pub sawcut_length_mm: f64,
    /// Maximum aggregate size.
    #[arg(long = "dmax-mm", default_value_t = 25.0)]
    pub dmax_mm: f64,
    /// Also require red > green and red > blue at every vertex.
    #[arg(long)]
    pub red_dominance: bool,
}

impl JdiArgs {
    fn params(&self) -> JdiParams {
        JdiParams {
            sawcut_length: self.sawcut_length_mm,
            d_max: self.dmax_mm,
            coordinate_scale: self.scale,
            threshold: self.threshold,
        }
    }

    fn rule(&self) -> ClassifyRule {
        ClassifyRule {
            threshold: self.threshold,
            red_dominance: self.red_dominance,
        }
    }
}

/// Where ground truth comes from.
#[derive(Debug, Clone, Args)]
pub struct GtArgs {
    /// Text file of damaged face indices, one per line.
    #[arg(long, conflicts_with = "gt_color")]
    pub gt_faces: Option<PathBuf>,
    /// Color marking ground-truth damage, as r,g,b.
    #[arg(long)]
    pub gt_color: Option<Rgb>,
    /// Mesh carrying the ground-truth coloring; defaults to the input mesh.
    #[arg(long, requires = "gt_color")]
    pub gt_mesh: Option<PathBuf>,
    /// Per-channel tolerance for --gt-color.
    #[arg(long, default_value_t = 0)]
    pub gt_tolerance: u8,
}

impl GtArgs {
    fn resolve(&self, mesh: &TriMesh, run: &mut RunReport) -> Result<DamageLabeling, CliError> {
        if let Some(path) = &self.gt_faces {
            run.input(path.display());
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            return Ok(DamageLabeling::from_face_ids(mesh, parse_face_list(&text)?)?);
        }
        let Some(color) = self.gt_color else {
            return Err(CliError::Invalid(
                "ground truth required: pass --gt-faces or --gt-color".into(),
            ));
        };
        let labeling = match &self.gt_mesh {
            Some(path) => {
                run.input(path.display());
                let gt_mesh = load(path, false)?;
                ground_truth_from_color(&gt_mesh, color, self.gt_tolerance)?
            }
            None => ground_truth_from_color(mesh, color, self.gt_tolerance)?,
        };
        labeling.check_mesh(mesh)?;
        Ok(labeling)
    }
}

fn io_err(path: &Path, e: std::io::Error) -> CliError {
    CliError::Io(format!("{}: {e}", path.display()))
}

fn load(path: &Path, allow_colorless: bool) -> Result<TriMesh, CliError> {
    load_mesh(path, &ReadOptions { allow_colorless }).map_err(|e| match e {
        jdq_core::Error::Io(io) => io_err(path, io),
        other => other.into(),
    })
}

fn write_file(path: &Path, bytes: &[u8]) -> Result<(), CliError> {
    if let Some(dir) = path.parent().filter(|d| !d.as_os_str().is_empty()) {
        fs::create_dir_all(dir).map_err(|e| io_err(dir, e))?;
    }
    fs::write(path, bytes).map_err(|e| io_err(path, e))
}

fn to_json<T: Serialize>(value: &T) -> Vec<u8> {
    let mut out = serde_json::to_vec_pretty(value).expect("reports serialize");
    out.push(b'\n');
    out
}

/// Writes to `path`, or stdout when absent.
fn emit(path: Option<&Path>, bytes: &[u8], run: &mut RunReport) -> Result<(), CliError> {
    match path {
        Some(p) => {
            write_file(p, bytes)?;
            run.output(p.display());
            Ok(())
        }
        None => std::io::stdout()
            .write_all(bytes)
            .map_err(|e| CliError::Io(format!("stdout: {e}"))),
    }
}

fn encoding(ascii: bool) -> PlyEncoding {
    if ascii {
        PlyEncoding::Ascii
    } else {
        PlyEncoding::BinaryLittleEndian
    }
}

#[derive(Debug, Args)]
pub struct QuantifyArgs {
    /// Reconstructed mesh (.ply or .obj) with vertex colors.
    pub mesh: PathBuf,
    #[command(flatten)]
    pub jdi: JdiArgs,
    /// JSON report path; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
    /// Write a PLY copy with damaged faces colored green.
    #[arg(long)]
    pub recolored: Option<PathBuf>,
    /// Write the recolored PLY as ASCII instead of binary.
    #[arg(long)]
    pub ascii: bool,
    /// Also write the damaged face indices.
    #[arg(long)]
    pub faces_out: Option<PathBuf>,
}

pub fn quantify(args: &QuantifyArgs, run: &mut RunReport) -> Result<(), CliError> {
    let params = args.jdi.params();
    params.validate()?;
    run.input(args.mesh.display());
    let mesh = run.stage("load", |_| load(&args.mesh, false))?;
    let labeling = run.stage("detect", |_| Ok(classify_damage_with(&mesh, args.jdi.rule())?))?;
    let report = run.stage("quantify", |_| Ok(compute_jdi(&labeling, &params)?))?;
    info!(
        "{} damaged faces, {:.3} mm², JDI {:.3}%",
        report.damaged_face_count, report.damage_area, report.jdi
    );
    run.stage("write", |run| {
        if let Some(path) = &args.recolored {
            write_file(path, &write_ply(&mesh, Some(&labeling), encoding(args.ascii))?)?;
            run.output(path.display());
        }
        if let Some(path) = &args.faces_out {
            write_file(path, format_face_list(&labeling).as_bytes())?;
            run.output(path.display());
        }
        emit(args.out.as_deref(), &to_json(&Versioned::new(report)), run)
    })
}

#[derive(Debug, Args)]
pub struct SweepArgs {
    pub mesh: PathBuf,
    #[command(flatten)]
    pub gt: GtArgs,
    /// Comma-separated red thresholds.
    #[arg(long, value_delimiter = ',', default_values_t = DEFAULT_SWEEP)]
    pub thresholds: Vec<u8>,
    #[command(flatten)]
    pub jdi: JdiArgs,
    /// CSV output; stdout when omitted.
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn sweep(args: &SweepArgs, run: &mut RunReport) -> Result<(), CliError> {
    let params = args.jdi.params();
    params.validate()?;
    run.input(args.mesh.display());
    let mesh = run.stage("load", |_| load(&args.mesh, false))?;
    let gt = run.stage("ground_truth", |run| args.gt.resolve(&mesh, run))?;
    let rows = run.stage("sweep", |_| {
        Ok(threshold_sweep_with(
            &mesh,
            &gt,
            &args.thresholds,
            &params,
            args.jdi.red_dominance,
        )?)
    })?;
    run.stage("write", |run| {
        let mut csv = Vec::new();
        write_sweep_csv(&mut csv, &rows)?;
        emit(args.out.as_deref(), &csv, run)
    })
}

#[derive(Debug, Args)]
pub struct Eval3dArgs {
    pub mesh: PathBuf,
    /// Predicted damage as a face list instead of thresholding the mesh.
    #[arg(long)]
    pub pred_faces: Option<PathBuf>,
    #[command(flatten)]
    pub gt: GtArgs,
    #[command(flatten)]
    pub jdi: JdiArgs,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn eval3d(args: &Eval3dArgs, run: &mut RunReport) -> Result<(), CliError> {
    args.jdi.params().validate()?;
    run.input(args.mesh.display());
    // Face lists alone need no colors.
    let mesh = run.stage("load", |_| load(&args.mesh, true))?;
    let gt = run.stage("ground_truth", |run| args.gt.resolve(&mesh, run))?;
    let pred = run.stage("detect", |run| match &args.pred_faces {
        Some(path) => {
            run.input(path.display());
            let text = fs::read_to_string(path).map_err(|e| io_err(path, e))?;
            Ok(DamageLabeling::from_face_ids(&mesh, parse_face_list(&text)?)?)
        }
        None => Ok(classify_damage_with(&mesh, args.jdi.rule())?),
    })?;
    let metrics = run.stage("evaluate", |_| Ok(metrics_3d(&pred, &gt, &mesh, args.jdi.scale)?))?;
    run.stage("write", |run| {
        emit(args.out.as_deref(), &to_json(&Versioned::new(metrics)), run)
    })
}

#[derive(Debug, Args)]
pub struct Eval2dArgs {
    /// Predicted mask PNG (nonzero = damage).
    pub pred: PathBuf,
    /// Ground-truth mask PNG.
    pub gt: PathBuf,
    #[arg(long)]
    pub out: Option<PathBuf>,
}

pub fn eval2d(args: &Eval2dArgs, run: &mut RunReport) -> Result<(), CliError> {
    run.input(args.pred.display());
    run.input(args.gt.display());
    let (pred, gt) = run.stage("load", |_| {
        Ok((BinaryMask::load_png(&args.pred)?, BinaryMask::load_png(&args.gt)?))
    })?;
    let metrics = run.stage("evaluate", |_| Ok(metrics_2d(&pred, &gt)?))?;
    run.stage("write", |run| {
        emit(args.out.as_deref(), &to_json(&Versioned::new(metrics)), run)
    })
}

#[derive(Debug, Args)]
pub struct MaskArgs {
    pub image: PathBuf,
    pub mask: PathBuf,
    /// Color painted over masked pixels, as r,g,b.
    #[arg(long, default_value_t = Rgb::RED)]
    pub color: Rgb,
    #[arg(long)]
    pub out: PathBuf,
}

pub fn mask(args: &MaskArgs, run: &mut RunReport) -> Result<(), CliError> {
    run.input(args.image.display());
    run.input(args.mask.display());
    let (image, mask) = run.stage("load", |_| {
        Ok((RasterImage::load_png(&args.image)?, BinaryMask::load_png(&args.mask)?))
    })?;
    let painted = run.stage("masking", |_| Ok(apply_color_mask(&image, &mask, args.color)?))?;
    run.stage("write", |run| {
        write_file(&args.out, &painted.encode_png()?)?;
        run.output(args.out.display());
        Ok(())
    })
}

#[derive(Debug, Args)]
pub struct AugmentArgs {
    /// Directory of PNG images.
    pub dir: PathBuf,
    #[arg(long)]
    pub out: PathBuf,
    #[arg(long, default_value_t = 0)]
    pub seed: u64,
    #[arg(long, default_value_t = 5)]
    pub ops_per_image: usize,
    #[arg(long, default_value_t = 0.25)]
    pub blur_sigma: f64,
    #[arg(long, default_value_t = 1.25)]
    pub brighten: f64,
    #[arg(long, default_value_t = 0.75)]
    pub darken: f64,
}

fn list_pngs(dir: &Path) -> Result<Vec<PathBuf>, CliError> {
    let mut paths: Vec<PathBuf> = fs::read_dir(dir)
        .map_err(|e| io_err(dir, e))?
        .filter_map(|entry| entry.ok().map(|e| e.path()))
        .filter(|p| {
            p.is_file()
                && p.extension()
                    .and_then(|e| e.to_str())
                    .is_some_and(|e| e.eq_ignore_ascii_case("png"))
        })
        .collect();
    paths.sort();
    Ok(paths)
}

pub fn augment(args: &AugmentArgs, run: &mut RunReport) -> Result<(), CliError> {
    let config = AugmentConfig {
        blur_sigma: args.blur_sigma,
        brighten_factor: args.brighten,
        darken_factor: args.darken,
    };
    run.input(args.dir.display());
    let paths = run.stage("list", |_| list_pngs(&args.dir))?;
    let images = run.stage("load", |_| {
        paths
            .par_iter()
            .map(|p| RasterImage::load_png(p).map_err(CliError::from))
            .collect::<Result<Vec<_>, _>>()
    })?;
    let augmented = run.stage("augment", |_| {
        Ok(augment_batch_with(&images, args.seed, args.ops_per_image, &config)?)
    })?;
    run.stage("write", |run| {
        fs::create_dir_all(&args.out).map_err(|e| io_err(&args.out, e))?;
        augmented
            .par_iter()
            .map(|a| {
                let stem = paths[a.source].file_stem().and_then(|s| s.to_str()).unwrap_or("image");
                let op = a.op.map_or("orig", |op| op.name());
                let path = args.out.join(format!("{stem}_{:02}_{op}.png", a.variant));
                write_file(&path, &a.image.encode_png()?)
            })
            .collect::<Result<Vec<()>, _>>()?;
        run.output(format!("{} ({} images)", args.out.display(), augmented.len()));
        Ok(())
    })
}

#[derive(Debug, Args)]
pub struct SynthArgs {
    /// JSON spec with "kind": "mesh" or "masks".
    pub spec: PathBuf,
    #[arg(long)]
    pub out_dir: PathBuf,
    /// Write the mesh as ASCII PLY.
    #[arg(long)]
    pub ascii: bool,
}

#[derive(Serialize)]
struct MeshExpectation {
    exact_patch_area: f64,
    gt_face_count: usize,
    face_count: usize,
}

pub fn synth(args: &SynthArgs, run: &mut RunReport) -> Result<(), CliError> {
    run.input(args.spec.display());
    let spec: SynthSpec = run.stage("load", |_| {
        let text = fs::read_to_string(&args.spec).map_err(|e| io_err(&args.spec, e))?;
        serde_json::from_str(&text).map_err(|e| CliError::Invalid(format!("{}: {e}", args.spec.display())))
    })?;
    let out = |name: &str| args.out_dir.join(name);
    match spec {
        SynthSpec::Mesh(spec) => {
            let scene = run.stage("generate", |_| Ok(generate_plane_mesh(&spec)?))?;
            run.stage("write", |run| {
                write_file(&out("mesh.ply"), &write_ply(&scene.mesh, None, encoding(args.ascii))?)?;
                write_file(&out("gt_faces.txt"), format_face_list(&scene.gt).as_bytes())?;
                let expected = MeshExpectation {
                    exact_patch_area: scene.exact_patch_area,
                    gt_face_count: scene.gt.len(),
                    face_count: scene.mesh.face_count(),
                };
                write_file(&out("expected.json"), &to_json(&Versioned::new(expected)))?;
                for name in ["mesh.ply", "gt_faces.txt", "expected.json"] {
                    run.output(out(name).display());
                }
                Ok(())
            })
        }
        SynthSpec::Masks(spec) => {
            let masks = run.stage("generate", |_| Ok(generate_mask_pair(&spec)?))?;
            run.stage("write", |run| {
                write_file(&out("pred.png"), &masks.pred.encode_png()?)?;
                write_file(&out("gt.png"), &masks.gt.encode_png()?)?;
                write_file(&out("expected.json"), &to_json(&Versioned::new(masks.expected)))?;
                for name in ["pred.png", "gt.png", "expected.json"] {
                    run.output(out(name).display());
                }
                Ok(())
            })
        }
    }
}
