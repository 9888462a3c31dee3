//! Seeded training-set augmentation.

use std::fmt;

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use rayon::prelude::*;
use serde::{Deserialize, Serialize};

use crate::raster::{adjust_brightness, gaussian_blur, RasterImage};

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, Serialize, Deserialize)]
#[serde(rename_all = "snake_case")]
pub enum AugmentOp {
    Blur,
    Brighten,
    Darken,
    FlipH,
    FlipV,
    None,
}

impl AugmentOp {
    pub const ALL: [AugmentOp; 6] = [
        AugmentOp::Blur,
        AugmentOp::Brighten,
        AugmentOp::Darken,
        AugmentOp::FlipH,
        AugmentOp::FlipV,
        AugmentOp::None,
    ];

    pub fn name(self) -> &'static str {
        match self {
            AugmentOp::Blur => "blur",
            AugmentOp::Brighten => "brighten",
            AugmentOp::Darken => "darken",
            AugmentOp::FlipH => "flip_h",
            AugmentOp::FlipV => "flip_v",
            AugmentOp::None => "none",
        }
    }
}

impl fmt::Display for AugmentOp {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(self.name())
    }
}

#[derive(Debug, Clone, Copy, PartialEq, Serialize, Deserialize)]
pub struct AugmentConfig {
    pub blur_sigma: f64,
    pub brighten_factor: f64,
    pub darken_factor: f64,
}

impl Default for AugmentConfig {
    fn default() -> Self {
        AugmentConfig {
            blur_sigma: 0.25,
            brighten_factor: 1.25,
            darken_factor: 0.75,
        }
    }
}

impl AugmentConfig {
    pub fn apply(&self, op: AugmentOp, image: &RasterImage) -> crate::Result<RasterImage> {
        Ok(match op {
            AugmentOp::Blur => gaussian_blur(image, self.blur_sigma)?,
            AugmentOp::Brighten => adjust_brightness(image, self.brighten_factor)?,
            AugmentOp::Darken => adjust_brightness(image, self.darken_factor)?,
            AugmentOp::FlipH => image.flip_h(),
            AugmentOp::FlipV => image.flip_v(),
            AugmentOp::None => image.clone(),
        })
    }
}

/// One output of [`augment_batch_with`]. `op` is `None` for the untouched
/// original, which always comes first for each source.
#[derive(Debug, Clone, PartialEq)]
pub struct Augmented {
    pub source: usize,
    pub variant: usize,
    pub op: Option<AugmentOp>,
    pub image: RasterImage,
}

/// The op sequence drawn for source image `index`. Each source gets its own
/// stream of the seeded generator, so results do not depend on batch order
/// or parallelism.
pub fn draw_ops(seed: u64, index: usize, ops_per_image: usize) -> Vec<AugmentOp> {
    let mut rng = ChaCha8Rng::seed_from_u64(seed);
    rng.set_stream(index as u64);
    (0..ops_per_image)
        .map(|_| AugmentOp::ALL[rng.random_range(0..AugmentOp::ALL.len())])
        .collect()
}

/// Expands `images` to `len × (1 + ops_per_image)` outputs: each original
/// followed by `ops_per_image` randomly transformed copies.
pub fn augment_batch(images: &[RasterImage], seed: u64, ops_per_image: usize) -> Vec<RasterImage> {
    augment_batch_with(images, seed, ops_per_image, &AugmentConfig::default())
        .expect("default augmentation parameters are valid")
        .into_iter()
        .map(|a| a.image)
        .collect()
}

pub fn augment_batch_with(
    images: &[RasterImage],
    seed: u64,
    ops_per_image: usize,
    config: &AugmentConfig,
) -> crate::Result<Vec<Augmented>> {
    let per_source: Vec<crate::Result<Vec<Augmented>>> = images
        .par_iter()
        .enumerate()
        .map(|(source, image)| {
            let mut out = Vec::with_capacity(1 + ops_per_image);
            out.push(Augmented {
                source,
                variant: 0,
                op: None,
                image: image.clone(),
            });
            for (k, op) in draw_ops(seed, source, ops_per_image).into_iter().enumerate() {
                out.push(Augmented {
                    source,
                    variant: k + 1,
                    op: Some(op),
                    image: config.apply(op, image)?,
                });
            }
            Ok(out)
        })
        .collect();
    let mut all = Vec::with_capacity(images.len() * (1 + ops_per_image));
    for batch in per_source {
        all.extend(batch?);
    }
    Ok(all)
}
