//! Pixel buffers and the low-level image operations every later stage uses.
//!
//! Buffers are row-major. Convolutions replicate the border so outputs keep
//! the input dimensions.

mod color;
mod components;
mod edges;
mod histogram;
mod morphology;
mod wavelet;

pub use color::{
    hue_degrees, lab_luv_pixel, luma, pseudo_hue, pseudo_hue_pixel, rgb_to_lab_luv, rgb_to_ycbcr, trichromatic,
    trichromatic_pixel, warp_hue, warped_hue, warped_hue_pixel, ycbcr_pixel, LabLuv, YCbCr,
};
pub use components::{connected_components, Bounds, Component, Connectivity, Labelling};
pub use edges::{
    dual_filter_edge, dual_filter_edge_with_reference, entropy_edge, local_mean, sobel, window_entropy,
    DualFilterOutput, SobelDirection, COARSE_FILTER, FINE_FILTER,
};
pub use histogram::{entropy, histograms, histograms_in_range, mutual_information, Histograms};
pub use morphology::{morphology, MorphOp};
pub use wavelet::{binarize_local_avg, haar_level, haar_pyramid, SubBands, WaveletPyramid};

use crate::error::{Error, Result};

/// 8-bit RGB image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct RgbImage {
    width: usize,
    height: usize,
    pixels: Vec<[u8; 3]>,
}

impl RgbImage {
    pub fn new(width: usize, height: usize, fill: [u8; 3]) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            pixels: vec![fill; width * height],
        })
    }

    pub fn from_pixels(width: usize, height: usize, pixels: Vec<[u8; 3]>) -> Result<Self> {
        if width == 0 || height == 0 || pixels.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} pixels for a {width}x{height} image",
                pixels.len()
            )));
        }
        Ok(Self { width, height, pixels })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> [u8; 3]) -> Result<Self> {
        let mut img = Self::new(width, height, [0; 3])?;
        for y in 0..height {
            for x in 0..width {
                img.pixels[y * width + x] = f(x, y);
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn pixels(&self) -> &[[u8; 3]] {
        &self.pixels
    }

    pub fn get(&self, x: usize, y: usize) -> [u8; 3] {
        self.pixels[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, px: [u8; 3]) {
        self.pixels[y * self.width + x] = px;
    }

    /// Copy of the rectangle `(x, y, w, h)`, which must lie inside the image.
    pub fn crop(&self, x: usize, y: usize, w: usize, h: usize) -> Result<RgbImage> {
        if w == 0 || h == 0 || x + w > self.width || y + h > self.height {
            return Err(Error::InvalidInput(format!(
                "crop ({x},{y},{w},{h}) outside {}x{} image",
                self.width, self.height
            )));
        }
        let mut pixels = Vec::with_capacity(w * h);
        for row in y..y + h {
            let start = row * self.width + x;
            pixels.extend_from_slice(&self.pixels[start..start + w]);
        }
        RgbImage::from_pixels(w, h, pixels)
    }

    /// ITU-601 luma.
    pub fn to_gray(&self) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            values: self.pixels.iter().map(|&p| luma(p)).collect(),
        }
    }

    /// Box-average downsampling to `new_w x new_h`. Each output cell averages
    /// the source pixels whose centres fall inside it.
    pub fn resize_box(&self, new_w: usize, new_h: usize) -> Result<RgbImage> {
        if new_w == 0 || new_h == 0 {
            return Err(Error::InvalidInput("resize target must be positive".into()));
        }
        let mut sums = vec![[0u64; 3]; new_w * new_h];
        let mut counts = vec![0u64; new_w * new_h];
        for y in 0..self.height {
            let ty = (y * new_h / self.height).min(new_h - 1);
            for x in 0..self.width {
                let tx = (x * new_w / self.width).min(new_w - 1);
                let i = ty * new_w + tx;
                let p = self.get(x, y);
                for c in 0..3 {
                    sums[i][c] += p[c] as u64;
                }
                counts[i] += 1;
            }
        }
        let pixels = sums
            .iter()
            .zip(&counts)
            .map(|(s, &n)| {
                let n = n.max(1);
                [0, 1, 2].map(|c| ((s[c] as f64 / n as f64).round()) as u8)
            })
            .collect();
        RgbImage::from_pixels(new_w, new_h, pixels)
    }

    /// Blend the two interlaced fields: every pair of scanlines (2k, 2k+1)
    /// is replaced by the per-channel average of the pair. An unpaired final
    /// line of an odd-height frame is kept.
    pub fn deinterlace_blend(&self) -> Result<RgbImage> {
        deinterlace_blend(self)
    }
}

/// Real-valued single-channel image. Filter outputs may leave 0..255.
#[derive(Debug, Clone, PartialEq)]
pub struct GrayImage {
    width: usize,
    height: usize,
    values: Vec<f64>,
}

impl GrayImage {
    pub fn new(width: usize, height: usize, fill: f64) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            values: vec![fill; width * height],
        })
    }

    pub fn from_values(width: usize, height: usize, values: Vec<f64>) -> Result<Self> {
        if width == 0 || height == 0 || values.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} values for a {width}x{height} image",
                values.len()
            )));
        }
        Ok(Self { width, height, values })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> f64) -> Result<Self> {
        let mut img = Self::new(width, height, 0.0)?;
        for y in 0..height {
            for x in 0..width {
                img.values[y * width + x] = f(x, y);
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn values(&self) -> &[f64] {
        &self.values
    }

    pub fn get(&self, x: usize, y: usize) -> f64 {
        self.values[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: f64) {
        self.values[y * self.width + x] = v;
    }

    /// Sample with replicate padding.
    pub fn get_clamped(&self, x: isize, y: isize) -> f64 {
        let cx = x.clamp(0, self.width as isize - 1) as usize;
        let cy = y.clamp(0, self.height as isize - 1) as usize;
        self.values[cy * self.width + cx]
    }

    pub fn mean(&self) -> f64 {
        self.values.iter().sum::<f64>() / self.values.len() as f64
    }

    pub fn transpose(&self) -> GrayImage {
        let mut out = vec![0.0; self.values.len()];
        for y in 0..self.height {
            for x in 0..self.width {
                out[x * self.height + y] = self.values[y * self.width + x];
            }
        }
        GrayImage {
            width: self.height,
            height: self.width,
            values: out,
        }
    }

    pub fn map(&self, f: impl Fn(f64) -> f64) -> GrayImage {
        GrayImage {
            width: self.width,
            height: self.height,
            values: self.values.iter().map(|&v| f(v)).collect(),
        }
    }

    /// Bilinear resampling with pixel-centre alignment.
    pub fn resize_bilinear(&self, new_w: usize, new_h: usize) -> Result<GrayImage> {
        if new_w == 0 || new_h == 0 {
            return Err(Error::InvalidInput("resize target must be positive".into()));
        }
        let sx = self.width as f64 / new_w as f64;
        let sy = self.height as f64 / new_h as f64;
        GrayImage::from_fn(new_w, new_h, |x, y| {
            let fx = ((x as f64 + 0.5) * sx - 0.5).max(0.0);
            let fy = ((y as f64 + 0.5) * sy - 0.5).max(0.0);
            let x0 = (fx.floor() as usize).min(self.width - 1);
            let y0 = (fy.floor() as usize).min(self.height - 1);
            let x1 = (x0 + 1).min(self.width - 1);
            let y1 = (y0 + 1).min(self.height - 1);
            let ax = (fx - x0 as f64).clamp(0.0, 1.0);
            let ay = (fy - y0 as f64).clamp(0.0, 1.0);
            let top = self.get(x0, y0) * (1.0 - ax) + self.get(x1, y0) * ax;
            let bottom = self.get(x0, y1) * (1.0 - ax) + self.get(x1, y1) * ax;
            top * (1.0 - ay) + bottom * ay
        })
    }
}

/// Two-valued image. Which value is the "object" depends on the stage:
/// edge maps use 0 for features and 1 for tissue, lip masks use 1 for lip.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct BinaryImage {
    width: usize,
    height: usize,
    bits: Vec<u8>,
}

impl BinaryImage {
    pub fn new(width: usize, height: usize, fill: u8) -> Result<Self> {
        if width == 0 || height == 0 {
            return Err(Error::InvalidInput(format!(
                "image dimensions must be positive, got {width}x{height}"
            )));
        }
        Ok(Self {
            width,
            height,
            bits: vec![fill.min(1); width * height],
        })
    }

    pub fn from_bits(width: usize, height: usize, bits: Vec<u8>) -> Result<Self> {
        if width == 0 || height == 0 || bits.len() != width * height {
            return Err(Error::DimensionMismatch(format!(
                "{} bits for a {width}x{height} image",
                bits.len()
            )));
        }
        if bits.iter().any(|&b| b > 1) {
            return Err(Error::InvalidInput("binary image values must be 0 or 1".into()));
        }
        Ok(Self { width, height, bits })
    }

    pub fn from_fn(width: usize, height: usize, f: impl Fn(usize, usize) -> bool) -> Result<Self> {
        let mut img = Self::new(width, height, 0)?;
        for y in 0..height {
            for x in 0..width {
                img.bits[y * width + x] = f(x, y) as u8;
            }
        }
        Ok(img)
    }

    pub fn width(&self) -> usize {
        self.width
    }

    pub fn height(&self) -> usize {
        self.height
    }

    pub fn bits(&self) -> &[u8] {
        &self.bits
    }

    pub fn get(&self, x: usize, y: usize) -> u8 {
        self.bits[y * self.width + x]
    }

    pub fn set(&mut self, x: usize, y: usize, v: u8) {
        self.bits[y * self.width + x] = v.min(1);
    }

    pub fn count(&self, value: u8) -> usize {
        self.bits.iter().filter(|&&b| b == value).count()
    }

    pub fn invert(&self) -> BinaryImage {
        BinaryImage {
            width: self.width,
            height: self.height,
            bits: self.bits.iter().map(|&b| 1 - b).collect(),
        }
    }
}

pub fn deinterlace_blend(frame: &RgbImage) -> Result<RgbImage> {
    if frame.height < 2 {
        return Err(Error::ImageTooSmall {
            width: frame.width,
            height: frame.height,
            min_width: 1,
            min_height: 2,
        });
    }
    let mut out = frame.clone();
    for top in (0..frame.height - 1).step_by(2) {
        for x in 0..frame.width {
            let a = frame.get(x, top);
            let b = frame.get(x, top + 1);
            let blended = [0, 1, 2].map(|c| ((a[c] as f64 + b[c] as f64) / 2.0).round() as u8);
            out.set(x, top, blended);
            out.set(x, top + 1, blended);
        }
    }
    Ok(out)
}
