//! Lip segmentation inside the bottom third of the face box.
//!
//! [`nearest_colour`] is the main segmenter: Lip-Map clustering seeds a lip
//! prototype, the farthest half of the pixels seeds a non-lip prototype, and
//! pixels are reassigned to the nearer prototype until stable.
//! [`layer_fusion`] votes five independently clustered cues and grows a
//! region from the strongest votes.

use crate::error::{Error, Result};
use crate::face::FaceBox;
use crate::imaging::{
    connected_components, morphology, pseudo_hue_pixel, sobel, trichromatic_pixel, warped_hue_pixel, ycbcr_pixel,
    BinaryImage, Connectivity, GrayImage, MorphOp, RgbImage, SobelDirection,
};

/// Lip search area: a crop of the frame plus where it came from.
#[derive(Debug, Clone, PartialEq)]
pub struct Roi {
    /// Top-left of the crop in frame pixels.
    pub origin: (usize, usize),
    pub face: FaceBox,
    pub image: RgbImage,
}

impl Roi {
    /// A Roi that is a whole image, for working on pre-cropped data.
    pub fn from_image(image: RgbImage) -> Self {
        let face = FaceBox::new(0, 0, image.width(), image.height() * 3);
        Self {
            origin: (0, 0),
            face,
            image,
        }
    }
}

/// 1 = lip pixel, same size as the Roi.
pub type LipMask = BinaryImage;

/// Axis-aligned rectangle in Roi pixels.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Rect {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

/// The mouth: bounding box of the lip mask, its inscribed ellipse and the
/// pixels under the box.
#[derive(Debug, Clone, PartialEq)]
pub struct MouthRoi {
    pub rect: Rect,
    pub face: FaceBox,
    pub pixels: RgbImage,
}

impl MouthRoi {
    /// Ellipse semi-axes `(a, b)`.
    pub fn semi_axes(&self) -> (f64, f64) {
        (self.rect.width as f64 / 2.0, self.rect.height as f64 / 2.0)
    }

    /// Whether the pixel centre of crop pixel `(x, y)` lies in the ellipse.
    pub fn in_ellipse(&self, x: usize, y: usize) -> bool {
        let (a, b) = self.semi_axes();
        let dx = (x as f64 + 0.5 - a) / a;
        let dy = (y as f64 + 0.5 - b) / b;
        dx * dx + dy * dy <= 1.0
    }

    /// Crop pixels inside the ellipse, row by row.
    pub fn ellipse_pixels(&self) -> Vec<[u8; 3]> {
        let mut out = Vec::new();
        for y in 0..self.pixels.height() {
            for x in 0..self.pixels.width() {
                if self.in_ellipse(x, y) {
                    out.push(self.pixels.get(x, y));
                }
            }
        }
        out
    }
}

/// Bottom third (floor) of the face box, clipped to the frame.
pub fn roi_from_face(face: &FaceBox, frame: &RgbImage) -> Result<Roi> {
    let third = face.height / 3;
    if face.width == 0 || third == 0 {
        return Err(Error::InvalidInput(format!(
            "face box {}x{} has no lower third",
            face.width, face.height
        )));
    }
    let x0 = face.x;
    let y0 = face.y + face.height - third;
    let x1 = (face.x + face.width).min(frame.width());
    let y1 = (y0 + third).min(frame.height());
    if x0 >= x1 || y0 >= y1 {
        return Err(Error::InvalidInput(
            "face box lower third lies outside the frame".into(),
        ));
    }
    Ok(Roi {
        origin: (x0, y0),
        face: *face,
        image: frame.crop(x0, y0, x1 - x0, y1 - y0)?,
    })
}

fn normalize(values: &mut [f64]) {
    let lo = values.iter().copied().fold(f64::INFINITY, f64::min);
    let hi = values.iter().copied().fold(f64::NEG_INFINITY, f64::max);
    let span = hi - lo;
    for v in values.iter_mut() {
        *v = if span > 0.0 { (*v - lo) / span } else { 0.0 };
    }
}

/// Raw Lip-Map value from normalized `Cr^2` and `Cr/Cb`.
pub fn lip_map_value(cr2: f64, ratio: f64, eta: f64) -> f64 {
    let d = cr2 - eta * ratio;
    cr2 * d * d
}

/// Lip-Map score per pixel, rescaled to `[0, 1]`. A uniform image maps to 0.
pub fn lip_map(img: &RgbImage) -> GrayImage {
    let n = img.pixels().len();
    let mut cr2 = Vec::with_capacity(n);
    let mut ratio = Vec::with_capacity(n);
    for &p in img.pixels() {
        let (_, cb, cr) = ycbcr_pixel(p);
        cr2.push(cr * cr);
        ratio.push(if cb > 0.0 { cr / cb } else { f64::NAN });
    }
    let finite_max = ratio.iter().copied().filter(|v| v.is_finite()).fold(0.0, f64::max);
    for r in ratio.iter_mut() {
        if !r.is_finite() {
            *r = finite_max;
        }
    }
    normalize(&mut cr2);
    normalize(&mut ratio);
    let ratio_sum: f64 = ratio.iter().sum();
    let eta = if ratio_sum > 0.0 {
        0.95 * cr2.iter().sum::<f64>() / ratio_sum
    } else {
        0.0
    };
    let mut map: Vec<f64> = cr2
        .iter()
        .zip(&ratio)
        .map(|(&c, &r)| lip_map_value(c, r, eta))
        .collect();
    normalize(&mut map);
    GrayImage::from_values(img.width(), img.height(), map).expect("same dims")
}

#[derive(Debug, Clone, PartialEq)]
pub struct KMeans<const D: usize> {
    /// Cluster (0 or 1) of every point.
    pub labels: Vec<u8>,
    pub centers: [[f64; D]; 2],
    pub sizes: [usize; 2],
    pub iterations: usize,
}

impl<const D: usize> KMeans<D> {
    /// Sum of squared distances to the assigned centres.
    pub fn objective(&self, points: &[[f64; D]]) -> f64 {
        points
            .iter()
            .zip(&self.labels)
            .map(|(p, &l)| sq_dist(p, &self.centers[l as usize]))
            .sum()
    }
}

fn sq_dist<const D: usize>(a: &[f64; D], b: &[f64; D]) -> f64 {
    a.iter().zip(b).map(|(x, y)| (x - y) * (x - y)).sum()
}

fn class_mean<const D: usize>(points: &[[f64; D]], labels: &[u8], class: u8) -> Option<[f64; D]> {
    let mut sum = [0.0; D];
    let mut n = 0usize;
    for (p, &l) in points.iter().zip(labels) {
        if l == class {
            for (s, v) in sum.iter_mut().zip(p) {
                *s += v;
            }
            n += 1;
        }
    }
    (n > 0).then(|| sum.map(|s| s / n as f64))
}

fn assign<const D: usize>(points: &[[f64; D]], centers: &[[f64; D]; 2]) -> Vec<u8> {
    points
        .iter()
        .map(|p| u8::from(sq_dist(p, &centers[1]) < sq_dist(p, &centers[0])))
        .collect()
}

/// Two-cluster Lloyd iteration. Centres start at the points with the
/// smallest and largest first coordinate; an emptied cluster keeps its centre.
pub fn kmeans2<const D: usize>(points: &[[f64; D]], max_iters: usize) -> Result<KMeans<D>> {
    if points.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "k-means needs at least 2 points, got {}",
            points.len()
        )));
    }
    let mut lo = 0;
    let mut hi = 0;
    for (i, p) in points.iter().enumerate() {
        if p[0] < points[lo][0] {
            lo = i;
        }
        if p[0] > points[hi][0] {
            hi = i;
        }
    }
    let mut centers = [points[lo], points[hi]];
    let mut labels = assign(points, &centers);
    let mut iterations = 0;
    while iterations < max_iters {
        iterations += 1;
        for class in 0..2u8 {
            if let Some(m) = class_mean(points, &labels, class) {
                centers[class as usize] = m;
            }
        }
        let next = assign(points, &centers);
        if next == labels {
            break;
        }
        labels = next;
    }
    let ones = labels.iter().filter(|&&l| l == 1).count();
    Ok(KMeans {
        sizes: [labels.len() - ones, ones],
        labels,
        centers,
        iterations,
    })
}

/// `(r, g, b, warped hue, Cb, Cr, x, y)`, every component in `[0, 1]`.
pub type PixelFeature = [f64; 8];

pub fn pixel_feature(p: [u8; 3], x: usize, y: usize, width: usize, height: usize) -> PixelFeature {
    let t = trichromatic_pixel(p);
    let (_, cb, cr) = ycbcr_pixel(p);
    let pos = |v: usize, n: usize| if n > 1 { v as f64 / (n - 1) as f64 } else { 0.0 };
    [
        t[0],
        t[1],
        t[2],
        warped_hue_pixel(p) / 180.0,
        (cb / 255.0).clamp(0.0, 1.0),
        (cr / 255.0).clamp(0.0, 1.0),
        pos(x, width),
        pos(y, height),
    ]
}

/// Pixel features of the whole image with every component min-max scaled
/// over the image, so colour and position spread over the same range.
pub fn pixel_features(img: &RgbImage) -> Vec<PixelFeature> {
    let (w, h) = (img.width(), img.height());
    let mut out = Vec::with_capacity(w * h);
    for y in 0..h {
        for x in 0..w {
            out.push(pixel_feature(img.get(x, y), x, y, w, h));
        }
    }
    for c in 0..8 {
        let mut column: Vec<f64> = out.iter().map(|f| f[c]).collect();
        normalize(&mut column);
        for (f, v) in out.iter_mut().zip(column) {
            f[c] = v;
        }
    }
    out
}

fn ensure_roi(img: &RgbImage) -> Result<()> {
    crate::error::ensure_min_size(img.width(), img.height(), 3, 3)
}

/// Largest 8-connected component of `mask`, joined by the second largest
/// when their bounding boxes are within `merge_gap` pixels.
pub fn keep_lip_components(mask: &BinaryImage, merge_gap: usize) -> BinaryImage {
    let labelling = connected_components(mask, Connectivity::Eight);
    let ranked = labelling.by_area();
    let mut keep = Vec::new();
    if let Some(first) = ranked.first() {
        keep.push(first.label);
        if let Some(second) = ranked.get(1) {
            if first.bounds.gap(&second.bounds) <= merge_gap {
                keep.push(second.label);
            }
        }
    }
    labelling.select(mask.height(), &keep)
}

pub const MAX_ITERATIONS: usize = 50;
const MERGE_GAP: usize = 2;

pub fn nearest_colour(roi: &Roi) -> Result<LipMask> {
    let img = &roi.image;
    ensure_roi(img)?;
    let (w, h) = (img.width(), img.height());
    let map = lip_map(img);
    let scores: Vec<[f64; 1]> = map.values().iter().map(|&v| [v]).collect();
    let km = kmeans2(&scores, MAX_ITERATIONS)?;
    let lip_class = u8::from(km.centers[1][0] > km.centers[0][0]);

    let features = pixel_features(img);
    let Some(lip_proto) = class_mean(&features, &km.labels, lip_class) else {
        return BinaryImage::new(w, h, 0);
    };
    let mut order: Vec<(f64, usize)> = features
        .iter()
        .enumerate()
        .map(|(i, f)| (sq_dist(f, &lip_proto), i))
        .collect();
    order.sort_by(|a, b| b.0.total_cmp(&a.0).then(a.1.cmp(&b.1)));
    let far = order.len() / 2;
    let mut labels = vec![1u8; features.len()];
    for &(_, i) in &order[..far] {
        labels[i] = 0;
    }
    let non_lip = class_mean(&features, &labels, 0).unwrap_or(lip_proto);
    // prototypes stay fixed, so a single assignment pass is already stable
    let labels = assign(&features, &[non_lip, lip_proto]);
    let raw = BinaryImage::from_bits(w, h, labels)?;
    let opened = morphology(&raw, MorphOp::Open, 1);
    Ok(keep_lip_components(&opened, MERGE_GAP))
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FusionConfig {
    /// Minimum votes (of 5) for a pixel to join the grown region.
    pub vote_threshold: u8,
    /// Mean absolute grey difference below which the previous mask is reused.
    pub motion_threshold: f64,
}

impl Default for FusionConfig {
    fn default() -> Self {
        Self {
            vote_threshold: 2,
            motion_threshold: 5.0,
        }
    }
}

/// Per-pixel count (0..=5) of cue layers that call the pixel lip.
pub fn vote_matrix(img: &RgbImage) -> Result<Vec<u8>> {
    ensure_roi(img)?;
    let n = img.pixels().len();
    let mut votes = vec![0u8; n];
    let mut add = |labels: &[u8], class: u8| {
        for (v, &l) in votes.iter_mut().zip(labels) {
            *v += u8::from(l == class);
        }
    };

    let tri: Vec<[f64; 3]> = img.pixels().iter().map(|&p| trichromatic_pixel(p)).collect();
    let km = kmeans2(&tri, MAX_ITERATIONS)?;
    add(&km.labels, u8::from(km.centers[1][0] > km.centers[0][0]));

    let one_d = |f: &dyn Fn([u8; 3]) -> f64| -> Vec<[f64; 1]> { img.pixels().iter().map(|&p| [f(p)]).collect() };
    let km = kmeans2(&one_d(&pseudo_hue_pixel), MAX_ITERATIONS)?;
    add(&km.labels, u8::from(km.centers[1][0] > km.centers[0][0]));

    let km = kmeans2(&one_d(&warped_hue_pixel), MAX_ITERATIONS)?;
    add(&km.labels, u8::from(km.centers[1][0] < km.centers[0][0]));

    let lm: Vec<[f64; 1]> = lip_map(img).values().iter().map(|&v| [v]).collect();
    let km = kmeans2(&lm, MAX_ITERATIONS)?;
    add(&km.labels, u8::from(km.centers[1][0] > km.centers[0][0]));

    let gray = img.to_gray();
    let gv = sobel(&gray, SobelDirection::Vertical)?;
    let gh = sobel(&gray, SobelDirection::Horizontal)?;
    let mag: Vec<[f64; 1]> = gv
        .values()
        .iter()
        .zip(gh.values())
        .map(|(a, b)| [a.hypot(*b)])
        .collect();
    let km = kmeans2(&mag, MAX_ITERATIONS)?;
    add(&km.labels, u8::from(km.centers[1][0] > km.centers[0][0]));

    Ok(votes)
}

fn mean_abs_difference(a: &RgbImage, b: &RgbImage) -> Option<f64> {
    if a.width() != b.width() || a.height() != b.height() {
        return None;
    }
    let (ga, gb) = (a.to_gray(), b.to_gray());
    let total: f64 = ga.values().iter().zip(gb.values()).map(|(x, y)| (x - y).abs()).sum();
    Some(total / ga.values().len() as f64)
}

/// Multi-cue segmentation. With `previous` (last Roi and its mask) and too
/// little motion since then, the previous mask is returned as is.
pub fn layer_fusion(roi: &Roi, previous: Option<(&Roi, &LipMask)>, config: &FusionConfig) -> Result<LipMask> {
    let img = &roi.image;
    ensure_roi(img)?;
    if let Some((prev_roi, prev_mask)) = previous {
        if let Some(diff) = mean_abs_difference(img, &prev_roi.image) {
            if diff < config.motion_threshold {
                return Ok(prev_mask.clone());
            }
        }
    }
    let (w, h) = (img.width(), img.height());
    let votes = vote_matrix(img)?;
    let max = votes.iter().copied().max().unwrap_or(0);
    let mut grown = BinaryImage::new(w, h, 0)?;
    if max >= config.vote_threshold && max > 0 {
        let mut stack: Vec<usize> = (0..votes.len()).filter(|&i| votes[i] == max).collect();
        for &i in &stack {
            grown.set(i % w, i / w, 1);
        }
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut visit = |nx: usize, ny: usize| {
                let j = ny * w + nx;
                if grown.get(nx, ny) == 0 && votes[j] >= config.vote_threshold {
                    grown.set(nx, ny, 1);
                    stack.push(j);
                }
            };
            if x > 0 {
                visit(x - 1, y);
            }
            if x + 1 < w {
                visit(x + 1, y);
            }
            if y > 0 {
                visit(x, y - 1);
            }
            if y + 1 < h {
                visit(x, y + 1);
            }
        }
    }
    let opened = morphology(&grown, MorphOp::Open, 1);
    Ok(largest_component(&opened))
}

fn largest_component(mask: &BinaryImage) -> BinaryImage {
    let labelling = connected_components(mask, Connectivity::Eight);
    let keep: Vec<u32> = labelling.by_area().first().map(|c| c.label).into_iter().collect();
    labelling.select(mask.height(), &keep)
}

/// Bounding box, inscribed ellipse and crop of a non-empty lip mask.
pub fn mouth_from_mask(mask: &LipMask, roi: &Roi) -> Result<MouthRoi> {
    if mask.width() != roi.image.width() || mask.height() != roi.image.height() {
        return Err(Error::DimensionMismatch(format!(
            "mask {}x{} vs roi {}x{}",
            mask.width(),
            mask.height(),
            roi.image.width(),
            roi.image.height()
        )));
    }
    let (mut x0, mut y0, mut x1, mut y1) = (usize::MAX, usize::MAX, 0, 0);
    for y in 0..mask.height() {
        for x in 0..mask.width() {
            if mask.get(x, y) == 1 {
                x0 = x0.min(x);
                y0 = y0.min(y);
                x1 = x1.max(x);
                y1 = y1.max(y);
            }
        }
    }
    if x0 == usize::MAX {
        return Err(Error::LipsNotFound);
    }
    let rect = Rect {
        x: x0,
        y: y0,
        width: x1 - x0 + 1,
        height: y1 - y0 + 1,
    };
    Ok(MouthRoi {
        rect,
        face: roi.face,
        pixels: roi.image.crop(rect.x, rect.y, rect.width, rect.height)?,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::synth::LipScene;

    fn iou(a: &BinaryImage, b: &BinaryImage) -> f64 {
        let inter = a
            .bits()
            .iter()
            .zip(b.bits())
            .filter(|(x, y)| **x == 1 && **y == 1)
            .count();
        let union = a
            .bits()
            .iter()
            .zip(b.bits())
            .filter(|(x, y)| **x == 1 || **y == 1)
            .count();
        inter as f64 / union.max(1) as f64
    }

    fn lip_scene() -> (Roi, BinaryImage) {
        let truth = BinaryImage::from_fn(60, 30, |x, y| {
            let dx = (x as f64 + 0.5 - 30.0) / 10.0;
            let dy = (y as f64 + 0.5 - 15.0) / 5.0;
            dx * dx + dy * dy <= 1.0
        })
        .unwrap();
        let img = RgbImage::from_fn(60, 30, |x, y| {
            if truth.get(x, y) == 1 {
                [170, 60, 70]
            } else {
                [220, 180, 160]
            }
        })
        .unwrap();
        (Roi::from_image(img), truth)
    }

    #[test]
    fn roi_is_bottom_third() {
        let frame = RgbImage::new(200, 120, [0; 3]).unwrap();
        let roi = roi_from_face(&FaceBox::new(0, 0, 90, 90), &frame).unwrap();
        assert_eq!(roi.origin, (0, 60));
        assert_eq!((roi.image.width(), roi.image.height()), (90, 30));
        let roi = roi_from_face(&FaceBox::new(10, 5, 90, 91), &frame).unwrap();
        assert_eq!(roi.image.height(), 30);
        assert_eq!(roi.origin, (10, 66));
        let roi = roi_from_face(&FaceBox::new(150, 0, 90, 90), &frame).unwrap();
        assert_eq!(roi.image.width(), 50);
        assert_eq!(roi.image.height(), 30);
        let clipped = roi_from_face(&FaceBox::new(0, 50, 90, 90), &frame).unwrap();
        assert_eq!(clipped.image.height(), 10);
        assert!(roi_from_face(&FaceBox::new(0, 0, 0, 90), &frame).is_err());
        assert!(roi_from_face(&FaceBox::new(0, 0, 90, 2), &frame).is_err());
    }

    #[test]
    fn lip_map_examples() {
        assert_eq!(lip_map_value(0.0, 0.7, 0.4), 0.0);
        assert_eq!(lip_map_value(1.0, 0.0, 0.9), 1.0);
        let uniform = RgbImage::new(8, 8, [180, 120, 100]).unwrap();
        assert!(lip_map(&uniform).values().iter().all(|&v| v == 0.0));
        let (roi, truth) = lip_scene();
        let map = lip_map(&roi.image);
        assert!(map.values().iter().all(|v| (0.0..=1.0).contains(v)));
        assert!(map.get(30, 15) > map.get(2, 2));
        assert_eq!(truth.get(30, 15), 1);
    }

    #[test]
    fn kmeans_examples() {
        let pts = [[0.0], [0.1], [0.2], [10.0], [10.1]];
        let km = kmeans2(&pts, 50).unwrap();
        assert!((km.centers[0][0] - 0.1).abs() < 1e-12);
        assert!((km.centers[1][0] - 10.05).abs() < 1e-12);
        assert_eq!(km.labels, vec![0, 0, 0, 1, 1]);

        let two = kmeans2(&[[1.0, 2.0], [3.0, 0.0]], 50).unwrap();
        assert_eq!(two.sizes, [1, 1]);

        let same = kmeans2(&[[4.0]; 5], 50).unwrap();
        assert_eq!(same.centers[0], same.centers[1]);
        assert!(same.sizes.contains(&0));

        assert!(kmeans2(&[[1.0]], 50).is_err());
    }

    #[test]
    fn kmeans_converged_is_fixed_point() {
        let pts: Vec<[f64; 2]> = (0..40)
            .map(|i| [(i % 7) as f64, (i / 7) as f64 * 0.3 + if i > 20 { 9.0 } else { 0.0 }])
            .collect();
        let a = kmeans2(&pts, 50).unwrap();
        let b = kmeans2(&pts, 50).unwrap();
        assert_eq!(a, b);
        let once = kmeans2(&pts, 1).unwrap();
        assert!(a.objective(&pts) <= once.objective(&pts) + 1e-9);
    }

    #[test]
    fn nearest_colour_recovers_planted_lips() {
        let (roi, truth) = lip_scene();
        let mask = nearest_colour(&roi).unwrap();
        assert!(iou(&mask, &truth) >= 0.9, "iou {}", iou(&mask, &truth));
    }

    #[test]
    fn nearest_colour_is_idempotent_on_prototype_colours() {
        let (roi, _) = lip_scene();
        let mask = nearest_colour(&roi).unwrap();
        let recoloured = RgbImage::from_fn(roi.image.width(), roi.image.height(), |x, y| {
            if mask.get(x, y) == 1 {
                [170, 60, 70]
            } else {
                [220, 180, 160]
            }
        })
        .unwrap();
        assert_eq!(nearest_colour(&Roi::from_image(recoloured)).unwrap(), mask);
    }

    #[test]
    fn speck_is_removed() {
        let mut img = RgbImage::new(20, 12, [220, 180, 160]).unwrap();
        img.set(10, 6, [200, 30, 40]);
        let mask = nearest_colour(&Roi::from_image(img.clone())).unwrap();
        assert_eq!(mask.count(1), 0);
        assert!(matches!(
            mouth_from_mask(&mask, &Roi::from_image(img)),
            Err(Error::LipsNotFound)
        ));
    }

    #[test]
    fn split_lips_are_kept_together() {
        let img = RgbImage::from_fn(60, 30, |x, y| {
            let lip = (15..45).contains(&x) && ((8..13).contains(&y) || (14..19).contains(&y));
            if lip {
                [170, 60, 70]
            } else {
                [220, 180, 160]
            }
        })
        .unwrap();
        let mask = nearest_colour(&Roi::from_image(img)).unwrap();
        assert!(mask.get(30, 10) == 1 && mask.get(30, 16) == 1);
    }

    #[test]
    fn layer_fusion_examples() {
        let (roi, truth) = lip_scene();
        let cfg = FusionConfig::default();
        let mask = layer_fusion(&roi, None, &cfg).unwrap();
        assert!(iou(&mask, &truth) >= 0.8);
        let votes = vote_matrix(&roi.image).unwrap();
        for (i, &b) in mask.bits().iter().enumerate() {
            if b == 1 {
                assert!(votes[i] >= cfg.vote_threshold);
            }
        }
        let strict = FusionConfig {
            vote_threshold: 6,
            ..cfg
        };
        assert_eq!(layer_fusion(&roi, None, &strict).unwrap().count(1), 0);

        let prev_mask = BinaryImage::new(60, 30, 0).unwrap();
        let reused = layer_fusion(&roi, Some((&roi, &prev_mask)), &cfg).unwrap();
        assert_eq!(reused, prev_mask);
    }

    #[test]
    fn tiny_roi_is_rejected() {
        let roi = Roi::from_image(RgbImage::new(2, 5, [0; 3]).unwrap());
        assert!(nearest_colour(&roi).is_err());
        assert!(layer_fusion(&roi, None, &FusionConfig::default()).is_err());
    }

    #[test]
    fn mouth_box_examples() {
        let roi = Roi::from_image(RgbImage::new(50, 30, [1, 2, 3]).unwrap());
        let rect = BinaryImage::from_fn(50, 30, |x, y| (5..35).contains(&x) && (6..18).contains(&y)).unwrap();
        let m = mouth_from_mask(&rect, &roi).unwrap();
        assert_eq!(
            m.rect,
            Rect {
                x: 5,
                y: 6,
                width: 30,
                height: 12
            }
        );
        assert_eq!(m.semi_axes(), (15.0, 6.0));

        let mut single = BinaryImage::new(50, 30, 0).unwrap();
        single.set(7, 3, 1);
        let m = mouth_from_mask(&single, &roi).unwrap();
        assert_eq!((m.rect.width, m.rect.height), (1, 1));
        assert!(m.in_ellipse(0, 0));

        let l_shape = BinaryImage::from_fn(50, 30, |x, y| (x == 3 && y < 20) || (y == 19 && x < 40)).unwrap();
        let m = mouth_from_mask(&l_shape, &roi).unwrap();
        assert_eq!(
            m.rect,
            Rect {
                x: 0,
                y: 0,
                width: 40,
                height: 20
            }
        );
        let empty = BinaryImage::new(50, 30, 0).unwrap();
        assert!(matches!(mouth_from_mask(&empty, &roi), Err(Error::LipsNotFound)));
    }

    #[test]
    fn synthetic_family_segments() {
        for i in 0..4 {
            let (img, truth) = LipScene::family(i).render();
            let mask = nearest_colour(&Roi::from_image(img)).unwrap();
            assert!(iou(&mask, &truth) > 0.85);
        }
    }
}
