//! 2D images and damage masks.

use std::io::Cursor;
use std::path::Path;

use image::{GrayImage, ImageFormat, RgbImage};

use crate::error::{Error, Result};
use crate::mesh::Rgb;
use crate::metrics::SegMetrics;

/// Row-major RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RasterImage {
    width: u32,
    height: u32,
    pixels: Vec<[u8; 3]>,
}

/// Row-major damage mask; `true` marks damage.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryMask {
    width: u32,
    height: u32,
    bits: Vec<bool>,
}

fn check_dims(width: u32, height: u32, len: usize) -> Result<()> {
    if width == 0 || height == 0 {
        return Err(Error::InvalidParameter(format!("empty raster {width}x{height}")));
    }
    if (width as u64) * (height as u64) != len as u64 {
        return Err(Error::InvalidParameter(format!(
            "{len} pixels do not fill a {width}x{height} raster"
        )));
    }
    Ok(())
}

fn same_dims(a: (u32, u32), b: (u32, u32)) -> Result<()> {
    if a == b {
        Ok(())
    } else {
        Err(Error::DimensionMismatch { expected: a, found: b })
    }
}

/// Shared grid operations for images and masks.
macro_rules! grid_common {
    ($ty:ty, $field:ident, $px:ty) => {
        impl $ty {
            pub fn width(&self) -> u32 {
                self.width
            }

            pub fn height(&self) -> u32 {
                self.height
            }

            pub fn dims(&self) -> (u32, u32) {
                (self.width, self.height)
            }

            pub fn get(&self, x: u32, y: u32) -> $px {
                self.$field[(y as usize) * (self.width as usize) + x as usize]
            }

            /// Mirrors left to right.
            pub fn flip_h(&self) -> Self {
                let w = self.width as usize;
                let $field = self
                    .$field
                    .chunks_exact(w)
                    .flat_map(|row| row.iter().rev().copied())
                    .collect();
                Self { $field, ..*self }
            }

            /// Mirrors top to bottom.
            pub fn flip_v(&self) -> Self {
                let w = self.width as usize;
                let $field = self.$field.rchunks_exact(w).flatten().copied().collect();
                Self { $field, ..*self }
            }

            /// Swaps rows and columns.
            pub fn transpose(&self) -> Self {
                let (w, h) = (self.width as usize, self.height as usize);
                let $field = (0..w)
                    .flat_map(|x| (0..h).map(move |y| (x, y)))
                    .map(|(x, y)| self.$field[y * w + x])
                    .collect();
                Self {
                    width: self.height,
                    height: self.width,
                    $field,
                }
            }
        }
    };
}

grid_common!(RasterImage, pixels, [u8; 3]);
grid_common!(BinaryMask, bits, bool);

impl RasterImage {
    pub fn new(width: u32, height: u32, pixels: Vec<[u8; 3]>) -> Result<Self> {
        check_dims(width, height, pixels.len())?;
        Ok(RasterImage { width, height, pixels })
    }

    pub fn filled(width: u32, height: u32, color: Rgb) -> Result<Self> {
        Self::new(width, height, vec![color.to_array(); width as usize * height as usize])
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> [u8; 3]) -> Result<Self> {
        let pixels = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, pixels)
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_rgb8();
        Ok(Self::from_rgb_image(&img))
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        Self::decode_png(&std::fs::read(path)?)
    }

    fn from_rgb_image(img: &RgbImage) -> Self {
        RasterImage {
            width: img.width(),
            height: img.height(),
            pixels: img.pixels().map(|p| p.0).collect(),
        }
    }

    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let flat: Vec<u8> = self.pixels.iter().flatten().copied().collect();
        let img = RgbImage::from_raw(self.width, self.height, flat).expect("dimensions checked on construction");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }

    /// Mean over all channels of all pixels, in 0-255 units.
    pub fn mean(&self) -> f64 {
        let total: u64 = self.pixels.iter().flatten().map(|&c| c as u64).sum();
        total as f64 / (self.pixels.len() * 3) as f64
    }
}

impl BinaryMask {
    pub fn new(width: u32, height: u32, bits: Vec<bool>) -> Result<Self> {
        check_dims(width, height, bits.len())?;
        Ok(BinaryMask { width, height, bits })
    }

    pub fn from_fn(width: u32, height: u32, f: impl Fn(u32, u32) -> bool) -> Result<Self> {
        let bits = (0..height)
            .flat_map(|y| (0..width).map(move |x| (x, y)))
            .map(|(x, y)| f(x, y))
            .collect();
        Self::new(width, height, bits)
    }

    pub fn bits(&self) -> &[bool] {
        &self.bits
    }

    pub fn count(&self) -> u64 {
        self.bits.iter().filter(|&&b| b).count() as u64
    }

    /// Decodes a PNG; any nonzero luma marks damage.
    pub fn decode_png(bytes: &[u8]) -> Result<Self> {
        let img = image::load_from_memory_with_format(bytes, ImageFormat::Png)?.to_luma8();
        Ok(BinaryMask {
            width: img.width(),
            height: img.height(),
            bits: img.pixels().map(|p| p.0[0] != 0).collect(),
        })
    }

    pub fn load_png(path: &Path) -> Result<Self> {
        Self::decode_png(&std::fs::read(path)?)
    }

    /// Encodes as 8-bit grayscale with 0/255 values.
    pub fn encode_png(&self) -> Result<Vec<u8>> {
        let raw = self.bits.iter().map(|&b| if b { 255 } else { 0 }).collect();
        let img = GrayImage::from_raw(self.width, self.height, raw).expect("dimensions checked on construction");
        let mut out = Cursor::new(Vec::new());
        img.write_to(&mut out, ImageFormat::Png)?;
        Ok(out.into_inner())
    }

    pub fn save_png(&self, path: &Path) -> Result<()> {
        std::fs::write(path, self.encode_png()?)?;
        Ok(())
    }
}

/// Paints every masked pixel with `color`.
pub fn apply_color_mask(image: &RasterImage, mask: &BinaryMask, color: Rgb) -> Result<RasterImage> {
    same_dims(image.dims(), mask.dims())?;
    let c = color.to_array();
    let pixels = image
        .pixels
        .iter()
        .zip(&mask.bits)
        .map(|(&p, &m)| if m { c } else { p })
        .collect();
    Ok(RasterImage { pixels, ..*image })
}

/// Pixel-count recall and error of `pred` against `gt`.
pub fn metrics_2d(pred: &BinaryMask, gt: &BinaryMask) -> Result<SegMetrics> {
    same_dims(gt.dims(), pred.dims())?;
    let (mut tp, mut fp, mut fn_) = (0u64, 0u64, 0u64);
    for (&p, &g) in pred.bits.iter().zip(&gt.bits) {
        match (p, g) {
            (true, true) => tp += 1,
            (true, false) => fp += 1,
            (false, true) => fn_ += 1,
            (false, false) => {}
        }
    }
    SegMetrics::from_counts(tp, fp, fn_)
}

/// Normalized 1D Gaussian of radius `ceil(3σ)`, centered.
pub fn gaussian_kernel(sigma: f64) -> Result<Vec<f64>> {
    if !(sigma.is_finite() && sigma > 0.0) {
        return Err(Error::InvalidParameter(format!("sigma must be positive, got {sigma}")));
    }
    let radius = (3.0 * sigma).ceil() as i64;
    let raw: Vec<f64> = (-radius..=radius)
        .map(|i| (-((i * i) as f64) / (2.0 * sigma * sigma)).exp())
        .collect();
    let total: f64 = raw.iter().sum();
    Ok(raw.into_iter().map(|w| w / total).collect())
}

/// Maps an out-of-range index into `0..n` by mirroring with the edge sample
/// repeated (`… 1 0 | 0 1 2 … n-1 | n-1 n-2 …`).
fn mirror(i: i64, n: usize) -> usize {
    let n = n as i64;
    let period = 2 * n;
    let m = i.rem_euclid(period);
    (if m < n { m } else { period - 1 - m }) as usize
}

/// Separable Gaussian blur with mirrored edges.
pub fn gaussian_blur(image: &RasterImage, sigma: f64) -> Result<RasterImage> {
    let kernel = gaussian_kernel(sigma)?;
    let radius = (kernel.len() / 2) as i64;
    let (w, h) = (image.width as usize, image.height as usize);

    let mut horizontal = vec![[0f64; 3]; w * h];
    for y in 0..h {
        let row = &image.pixels[y * w..(y + 1) * w];
        for x in 0..w {
            let mut acc = [0f64; 3];
            for (k, &wt) in kernel.iter().enumerate() {
                let src = row[mirror(x as i64 + k as i64 - radius, w)];
                for c in 0..3 {
                    acc[c] += wt * src[c] as f64;
                }
            }
            horizontal[y * w + x] = acc;
        }
    }

    let mut pixels = vec![[0u8; 3]; w * h];
    for y in 0..h {
        for x in 0..w {
            let mut acc = [0f64; 3];
            for (k, &wt) in kernel.iter().enumerate() {
                let src = horizontal[mirror(y as i64 + k as i64 - radius, h) * w + x];
                for c in 0..3 {
                    acc[c] += wt * src[c];
                }
            }
            pixels[y * w + x] = acc.map(|v| v.round().clamp(0.0, 255.0) as u8);
        }
    }
    Ok(RasterImage { pixels, ..*image })
}

/// Scales every channel by `factor`, rounding and saturating at 255.
pub fn adjust_brightness(image: &RasterImage, factor: f64) -> Result<RasterImage> {
    if !(factor.is_finite() && factor > 0.0) {
        return Err(Error::InvalidParameter(format!(
            "brightness factor must be positive, got {factor}"
        )));
    }
    let pixels = image
        .pixels
        .iter()
        .map(|p| p.map(|c| (c as f64 * factor).round().clamp(0.0, 255.0) as u8))
        .collect();
    Ok(RasterImage { pixels, ..*image })
}
