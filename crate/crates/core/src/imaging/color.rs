use super::{GrayImage, RgbImage};

/// Luma, chroma-blue and chroma-red planes.
#[derive(Debug, Clone, PartialEq)]
pub struct YCbCr {
    pub y: GrayImage,
    pub cb: GrayImage,
    pub cr: GrayImage,
}

/// CIE 1976 L*a*b* and L*u*v* planes (L* is shared by both spaces).
#[derive(Debug, Clone, PartialEq)]
pub struct LabLuv {
    pub l: GrayImage,
    pub a: GrayImage,
    pub b: GrayImage,
    pub u: GrayImage,
    pub v: GrayImage,
}

pub fn luma(p: [u8; 3]) -> f64 {
    0.299 * p[0] as f64 + 0.587 * p[1] as f64 + 0.114 * p[2] as f64
}

/// Unclamped (Y, Cb, Cr); Cr of pure red is 255.5.
pub fn ycbcr_pixel(p: [u8; 3]) -> (f64, f64, f64) {
    let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
    let cb = 128.0 - 0.168736 * r - 0.331264 * g + 0.5 * b;
    let cr = 128.0 + 0.5 * r - 0.418688 * g - 0.081312 * b;
    (luma(p), cb, cr)
}

pub fn rgb_to_ycbcr(img: &RgbImage) -> YCbCr {
    let n = img.pixels().len();
    let (mut y, mut cb, mut cr) = (Vec::with_capacity(n), Vec::with_capacity(n), Vec::with_capacity(n));
    for &p in img.pixels() {
        let (a, b, c) = ycbcr_pixel(p);
        y.push(a);
        cb.push(b);
        cr.push(c);
    }
    let plane = |v| GrayImage::from_values(img.width(), img.height(), v).expect("same dims");
    YCbCr {
        y: plane(y),
        cb: plane(cb),
        cr: plane(cr),
    }
}

/// HSV hue in degrees `[0, 360)`; achromatic pixels get 0.
pub fn hue_degrees(p: [u8; 3]) -> f64 {
    let (r, g, b) = (p[0] as f64, p[1] as f64, p[2] as f64);
    let max = r.max(g).max(b);
    let min = r.min(g).min(b);
    let delta = max - min;
    if delta == 0.0 {
        return 0.0;
    }
    let h = if max == r {
        60.0 * ((g - b) / delta).rem_euclid(6.0)
    } else if max == g {
        60.0 * ((b - r) / delta + 2.0)
    } else {
        60.0 * ((r - g) / delta + 4.0)
    };
    h.rem_euclid(360.0)
}

/// Hue folded onto `[0, 180]` so reds either side of 0 degrees land together.
pub fn warp_hue(h: f64) -> f64 {
    if h <= 180.0 {
        h
    } else {
        360.0 - h
    }
}

pub fn warped_hue_pixel(p: [u8; 3]) -> f64 {
    warp_hue(hue_degrees(p))
}

pub fn warped_hue(img: &RgbImage) -> GrayImage {
    map_rgb(img, warped_hue_pixel)
}

/// Chromaticity `(r, g, b)` with `r + g + b = 1`; black maps to the centre
/// of the simplex.
pub fn trichromatic_pixel(p: [u8; 3]) -> [f64; 3] {
    let sum = p[0] as f64 + p[1] as f64 + p[2] as f64;
    if sum == 0.0 {
        return [1.0 / 3.0; 3];
    }
    [p[0] as f64 / sum, p[1] as f64 / sum, p[2] as f64 / sum]
}

pub fn trichromatic(img: &RgbImage) -> Vec<[f64; 3]> {
    img.pixels().iter().map(|&p| trichromatic_pixel(p)).collect()
}

/// `R / (R + G)`, 0 when both are 0.
pub fn pseudo_hue_pixel(p: [u8; 3]) -> f64 {
    let s = p[0] as f64 + p[1] as f64;
    if s == 0.0 {
        0.0
    } else {
        p[0] as f64 / s
    }
}

pub fn pseudo_hue(img: &RgbImage) -> GrayImage {
    map_rgb(img, pseudo_hue_pixel)
}

// sRGB primaries, D65 white taken as the matrix row sums so greys are
// exactly achromatic.
const RGB_TO_XYZ: [[f64; 3]; 3] = [
    [0.4124564, 0.3575761, 0.1804375],
    [0.2126729, 0.7151522, 0.0721750],
    [0.0193339, 0.1191920, 0.9503041],
];

fn white_point() -> [f64; 3] {
    RGB_TO_XYZ.map(|row| row.iter().sum())
}

fn srgb_to_linear(c: u8) -> f64 {
    let c = c as f64 / 255.0;
    if c <= 0.04045 {
        c / 12.92
    } else {
        ((c + 0.055) / 1.055).powf(2.4)
    }
}

fn lab_f(t: f64) -> f64 {
    const DELTA: f64 = 6.0 / 29.0;
    if t > DELTA * DELTA * DELTA {
        t.cbrt()
    } else {
        t / (3.0 * DELTA * DELTA) + 4.0 / 29.0
    }
}

/// `[L*, a*, b*, u*, v*]` of one pixel.
pub fn lab_luv_pixel(p: [u8; 3]) -> [f64; 5] {
    let lin = p.map(srgb_to_linear);
    let xyz = RGB_TO_XYZ.map(|row| row[0] * lin[0] + row[1] * lin[1] + row[2] * lin[2]);
    let white = white_point();
    let fx = lab_f(xyz[0] / white[0]);
    let fy = lab_f(xyz[1] / white[1]);
    let fz = lab_f(xyz[2] / white[2]);
    let l = 116.0 * fy - 16.0;
    let a = 500.0 * (fx - fy);
    let b = 200.0 * (fy - fz);

    let uv = |x: [f64; 3]| {
        let d = x[0] + 15.0 * x[1] + 3.0 * x[2];
        if d == 0.0 {
            None
        } else {
            Some((4.0 * x[0] / d, 9.0 * x[1] / d))
        }
    };
    let (u, v) = match (uv(xyz), uv(white)) {
        (Some((up, vp)), Some((un, vn))) => (13.0 * l * (up - un), 13.0 * l * (vp - vn)),
        _ => (0.0, 0.0),
    };
    [l, a, b, u, v]
}

pub fn rgb_to_lab_luv(img: &RgbImage) -> LabLuv {
    let n = img.pixels().len();
    let mut planes: [Vec<f64>; 5] = std::array::from_fn(|_| Vec::with_capacity(n));
    for &p in img.pixels() {
        let v = lab_luv_pixel(p);
        for (plane, value) in planes.iter_mut().zip(v) {
            plane.push(value);
        }
    }
    let [l, a, b, u, v] =
        planes.map(|vals| GrayImage::from_values(img.width(), img.height(), vals).expect("same dims"));
    LabLuv { l, a, b, u, v }
}

fn map_rgb(img: &RgbImage, f: impl Fn([u8; 3]) -> f64) -> GrayImage {
    GrayImage::from_values(img.width(), img.height(), img.pixels().iter().map(|&p| f(p)).collect()).expect("same dims")
}
