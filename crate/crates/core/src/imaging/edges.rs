use super::{BinaryImage, GrayImage};
use crate::error::{ensure_min_size, Result};

/// 5x5 filter used where the neighbourhood is darker than the image average.
pub const COARSE_FILTER: [[f64; 5]; 5] = [
    [-1.0, -1.0, 0.0, -1.0, -1.0],
    [-2.0, -2.0, 0.0, -2.0, -2.0],
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [2.0, 2.0, 0.0, 2.0, 2.0],
    [2.0, 2.0, 0.0, 2.0, 2.0],
];

/// 5x5 filter used in brighter neighbourhoods.
pub const FINE_FILTER: [[f64; 5]; 5] = [
    [-1.0, -1.0, 0.0, -1.0, -1.0],
    [-2.0, -2.0, 0.0, -2.0, -2.0],
    [0.0, 0.0, 0.0, 0.0, 0.0],
    [2.0, 2.0, 0.0, 2.0, 2.0],
    [1.5, 1.7, 0.0, 1.7, 1.5],
];

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum SobelDirection {
    /// Responds to horizontal edges (intensity change along y).
    Horizontal,
    /// Responds to vertical edges (intensity change along x).
    Vertical,
}

const SOBEL_H: [[f64; 3]; 3] = [[-1.0, -2.0, -1.0], [0.0, 0.0, 0.0], [1.0, 2.0, 1.0]];
const SOBEL_V: [[f64; 3]; 3] = [[-1.0, 0.0, 1.0], [-2.0, 0.0, 2.0], [-1.0, 0.0, 1.0]];

/// Signed 3x3 Sobel response.
pub fn sobel(img: &GrayImage, direction: SobelDirection) -> Result<GrayImage> {
    ensure_min_size(img.width(), img.height(), 3, 3)?;
    let k = match direction {
        SobelDirection::Horizontal => &SOBEL_H,
        SobelDirection::Vertical => &SOBEL_V,
    };
    Ok(correlate(img, k))
}

fn correlate<const N: usize>(img: &GrayImage, kernel: &[[f64; N]; N]) -> GrayImage {
    let r = (N / 2) as isize;
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0.0;
        for (ky, row) in kernel.iter().enumerate() {
            for (kx, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    acc += w * img.get_clamped(x as isize + kx as isize - r, y as isize + ky as isize - r);
                }
            }
        }
        acc
    })
    .expect("non-empty")
}

/// Mean over the `(2r+1)^2` neighbourhood of every pixel, replicate padded.
pub fn local_mean(img: &GrayImage, radius: usize) -> GrayImage {
    let r = radius as isize;
    let n = ((2 * radius + 1) * (2 * radius + 1)) as f64;
    GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let mut acc = 0.0;
        for dy in -r..=r {
            for dx in -r..=r {
                acc += img.get_clamped(x as isize + dx, y as isize + dy);
            }
        }
        acc / n
    })
    .expect("non-empty")
}

/// Shannon entropy (bits) of the 256-level intensity histogram of the 5x5
/// window centred on `(x, y)`.
pub fn window_entropy(img: &GrayImage, x: usize, y: usize) -> f64 {
    let mut hist = [0u32; 256];
    for dy in -2isize..=2 {
        for dx in -2isize..=2 {
            let v = img.get_clamped(x as isize + dx, y as isize + dy);
            hist[v.round().clamp(0.0, 255.0) as usize] += 1;
        }
    }
    hist.iter()
        .filter(|&&c| c > 0)
        .map(|&c| {
            let p = c as f64 / 25.0;
            -p * p.log2()
        })
        .sum()
}

/// Entropy edge map: 0 (edge) where the local entropy reaches `theta`,
/// 1 (tissue) elsewhere.
pub fn entropy_edge(img: &GrayImage, theta: f64) -> Result<BinaryImage> {
    ensure_min_size(img.width(), img.height(), 5, 5)?;
    BinaryImage::from_fn(img.width(), img.height(), |x, y| window_entropy(img, x, y) < theta)
}

#[derive(Debug, Clone, PartialEq)]
pub struct DualFilterOutput {
    /// Filter response clamped to `[0, 255]`.
    pub response: GrayImage,
    /// 1 (tissue) where the clamped response saturates at 255, else 0.
    pub binary: BinaryImage,
}

/// Adaptive two-filter edge detector. Each pixel takes the coarse filter
/// when its 5x5 mean is at most the global mean, otherwise the fine one.
pub fn dual_filter_edge(img: &GrayImage) -> Result<DualFilterOutput> {
    dual_filter_edge_with_reference(img, img.mean())
}

/// As [`dual_filter_edge`] with an explicit global reference level.
pub fn dual_filter_edge_with_reference(img: &GrayImage, global_mean: f64) -> Result<DualFilterOutput> {
    ensure_min_size(img.width(), img.height(), 5, 5)?;
    let local = local_mean(img, 2);
    let response = GrayImage::from_fn(img.width(), img.height(), |x, y| {
        let k = if local.get(x, y) <= global_mean {
            &COARSE_FILTER
        } else {
            &FINE_FILTER
        };
        let mut acc = 0.0;
        for (ky, row) in k.iter().enumerate() {
            for (kx, &w) in row.iter().enumerate() {
                if w != 0.0 {
                    acc += w * img.get_clamped(x as isize + kx as isize - 2, y as isize + ky as isize - 2);
                }
            }
        }
        acc.clamp(0.0, 255.0)
    })?;
    let binary = BinaryImage::from_fn(img.width(), img.height(), |x, y| response.get(x, y) >= 255.0)?;
    Ok(DualFilterOutput { response, binary })
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn vertical_step(w: usize, h: usize) -> GrayImage {
        GrayImage::from_fn(w, h, |x, _| if x < w / 2 { 0.0 } else { 255.0 }).unwrap()
    }

    #[test]
    fn sobel_constant_is_zero() {
        let g = GrayImage::new(7, 6, 91.0).unwrap();
        for d in [SobelDirection::Horizontal, SobelDirection::Vertical] {
            assert!(sobel(&g, d).unwrap().values().iter().all(|&v| v == 0.0));
        }
    }

    #[test]
    fn sobel_vertical_step() {
        let g = vertical_step(10, 8);
        let v = sobel(&g, SobelDirection::Vertical).unwrap();
        let h = sobel(&g, SobelDirection::Horizontal).unwrap();
        for y in 1..7 {
            assert_eq!(v.get(5, y).abs(), 4.0 * 255.0);
            assert_eq!(v.get(4, y).abs(), 4.0 * 255.0);
            assert_eq!(v.get(2, y), 0.0);
            for x in 1..9 {
                assert_eq!(h.get(x, y), 0.0);
            }
        }
        // transposing swaps the roles of the filters
        let t = g.transpose();
        let ht = sobel(&t, SobelDirection::Horizontal).unwrap();
        assert_eq!(ht.get(3, 5).abs(), 4.0 * 255.0);
        assert!(sobel(&t, SobelDirection::Vertical)
            .unwrap()
            .values()
            .iter()
            .all(|&v| v == 0.0));
    }

    #[test]
    fn sobel_too_small() {
        let g = GrayImage::new(2, 5, 0.0).unwrap();
        assert!(sobel(&g, SobelDirection::Vertical).is_err());
    }

    #[test]
    fn entropy_windows() {
        let flat = GrayImage::new(5, 5, 10.0).unwrap();
        assert_eq!(window_entropy(&flat, 2, 2), 0.0);
        assert!(entropy_edge(&flat, 0.1).unwrap().bits().iter().all(|&b| b == 1));

        let distinct = GrayImage::from_fn(5, 5, |x, y| (y * 5 + x) as f64 * 10.0).unwrap();
        assert!((window_entropy(&distinct, 2, 2) - 25f64.log2()).abs() < 1e-12);
        assert_eq!(entropy_edge(&distinct, 3.5).unwrap().get(2, 2), 0);

        // 13 zeros and 12 ones
        let split = GrayImage::from_fn(5, 5, |x, y| if y * 5 + x < 13 { 0.0 } else { 1.0 }).unwrap();
        let h = window_entropy(&split, 2, 2);
        let expected = -(0.52f64 * 0.52f64.log2() + 0.48 * 0.48f64.log2());
        assert!((h - expected).abs() < 1e-12);
        assert!((h - 0.99885).abs() < 1e-5);
        assert_eq!(entropy_edge(&split, 3.0).unwrap().get(2, 2), 1);
    }

    #[test]
    fn dual_filter_flat_fields() {
        let g = GrayImage::new(9, 9, 128.0).unwrap();
        let coarse = dual_filter_edge(&g).unwrap();
        assert!(coarse.response.values().iter().all(|&v| v == 255.0));
        assert!(coarse.binary.bits().iter().all(|&b| b == 1));

        // force the fine branch: every local mean exceeds the reference
        let out = dual_filter_edge_with_reference(&g, 0.0).unwrap();
        assert!(out.binary.bits().iter().all(|&b| b == 1));
        let fine_sum: f64 = FINE_FILTER.iter().flatten().sum();
        assert!((fine_sum * 128.0 - 307.2).abs() < 1e-9);
        let coarse_sum: f64 = COARSE_FILTER.iter().flatten().sum();
        assert_eq!(coarse_sum * 128.0, 512.0);
    }

    #[test]
    fn dual_filter_flags_horizontal_step() {
        let g = GrayImage::from_fn(12, 12, |_, y| if y < 6 { 0.0 } else { 255.0 }).unwrap();
        let out = dual_filter_edge(&g).unwrap();
        // the rows straddling the step see dark above and bright below or vice versa
        for x in 0..12 {
            assert_eq!(out.binary.get(x, 2), 0);
            assert_eq!(out.binary.get(x, 5), 1);
            assert_eq!(out.binary.get(x, 9), 1);
        }
        assert!(out.binary.count(0) > 0);

        // bright above dark: the heavy bottom rows hit the dark side and the
        // response goes negative on the last bright rows
        let inv = g.map(|v| 255.0 - v);
        let out = dual_filter_edge(&inv).unwrap();
        for x in 0..12 {
            assert_eq!(out.response.get(x, 4), 0.0);
            assert_eq!(out.binary.get(x, 1), 1);
        }
        assert!(dual_filter_edge(&GrayImage::new(4, 9, 0.0).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn sobel_negates_with_image(vals in proptest::collection::vec(-255.0f64..255.0, 20)) {
            let g = GrayImage::from_values(5, 4, vals).unwrap();
            let neg = g.map(|v| -v);
            for d in [SobelDirection::Horizontal, SobelDirection::Vertical] {
                let a = sobel(&g, d).unwrap();
                let b = sobel(&neg, d).unwrap();
                for (p, q) in a.values().iter().zip(b.values()) {
                    prop_assert!((p + q).abs() < 1e-9);
                }
            }
        }
    }
}
