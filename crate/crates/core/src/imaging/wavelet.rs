use super::{local_mean, BinaryImage, GrayImage};
use crate::error::{ensure_min_size, Error, Result};

/// One level of the averaging Haar transform.
///
/// For each 2x2 block `[[a, b], [c, d]]`:
/// `LL = (a+b+c+d)/4`, `HL = ((b+d)-(a+c))/4` (vertical features),
/// `LH = ((c+d)-(a+b))/4` (horizontal features), `HH = ((a+d)-(b+c))/4`.
#[derive(Debug, Clone, PartialEq)]
pub struct SubBands {
    pub ll: GrayImage,
    pub hl: GrayImage,
    pub lh: GrayImage,
    pub hh: GrayImage,
}

impl SubBands {
    /// Bands in `LL, HL, LH, HH` order.
    pub fn bands(&self) -> [&GrayImage; 4] {
        [&self.ll, &self.hl, &self.lh, &self.hh]
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct WaveletPyramid {
    /// `levels[0]` is level 1 (finest).
    pub levels: Vec<SubBands>,
}

impl WaveletPyramid {
    pub fn depth(&self) -> usize {
        self.levels.len()
    }

    /// Approximation band of the deepest level.
    pub fn ll(&self) -> &GrayImage {
        &self.levels.last().expect("at least one level").ll
    }

    pub fn level(&self, k: usize) -> Option<&SubBands> {
        k.checked_sub(1).and_then(|i| self.levels.get(i))
    }
}

/// Single-level decomposition. Odd dimensions replicate the last row/column.
pub fn haar_level(img: &GrayImage) -> SubBands {
    let w = img.width().div_ceil(2);
    let h = img.height().div_ceil(2);
    let mut bands: [Vec<f64>; 4] = std::array::from_fn(|_| Vec::with_capacity(w * h));
    for by in 0..h {
        for bx in 0..w {
            let (x, y) = (2 * bx as isize, 2 * by as isize);
            let a = img.get_clamped(x, y);
            let b = img.get_clamped(x + 1, y);
            let c = img.get_clamped(x, y + 1);
            let d = img.get_clamped(x + 1, y + 1);
            bands[0].push((a + b + c + d) / 4.0);
            bands[1].push(((b + d) - (a + c)) / 4.0);
            bands[2].push(((c + d) - (a + b)) / 4.0);
            bands[3].push(((a + d) - (b + c)) / 4.0);
        }
    }
    let [ll, hl, lh, hh] = bands.map(|v| GrayImage::from_values(w, h, v).expect("dims"));
    SubBands { ll, hl, lh, hh }
}

/// Recursive decomposition on the approximation band.
pub fn haar_pyramid(img: &GrayImage, levels: usize) -> Result<WaveletPyramid> {
    if levels == 0 {
        return Err(Error::InvalidInput("pyramid needs at least one level".into()));
    }
    let min = 1usize
        .checked_shl(levels as u32)
        .ok_or_else(|| Error::InvalidInput(format!("{levels} levels is too deep")))?;
    ensure_min_size(img.width(), img.height(), min, min)?;
    let mut out = Vec::with_capacity(levels);
    let mut current = img.clone();
    for _ in 0..levels {
        let bands = haar_level(&current);
        current = bands.ll.clone();
        out.push(bands);
    }
    Ok(WaveletPyramid { levels: out })
}

/// 0 where a coefficient is at most its 5x5 local average, 1 otherwise.
pub fn binarize_local_avg(grid: &GrayImage) -> Result<BinaryImage> {
    ensure_min_size(grid.width(), grid.height(), 5, 5)?;
    let mean = local_mean(grid, 2);
    BinaryImage::from_fn(grid.width(), grid.height(), |x, y| grid.get(x, y) > mean.get(x, y))
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    #[test]
    fn constant_image_has_no_detail() {
        let g = GrayImage::new(24, 16, 77.0).unwrap();
        let p = haar_pyramid(&g, 3).unwrap();
        for lvl in &p.levels {
            assert!(lvl.ll.values().iter().all(|&v| v == 77.0));
            for band in [&lvl.hl, &lvl.lh, &lvl.hh] {
                assert!(band.values().iter().all(|&v| v == 0.0));
            }
        }
    }

    #[test]
    fn two_by_two_horizontal_feature() {
        let g = GrayImage::from_values(2, 2, vec![0.0, 0.0, 255.0, 255.0]).unwrap();
        let b = haar_level(&g);
        assert_eq!(b.ll.values(), &[127.5]);
        assert_eq!(b.lh.values()[0].abs(), 127.5);
        assert_eq!(b.hl.values(), &[0.0]);
        assert_eq!(b.hh.values(), &[0.0]);
    }

    #[test]
    fn three_levels_of_a_video_frame() {
        let g = GrayImage::from_fn(320, 240, |x, y| ((x * 3 + y * 5) % 256) as f64).unwrap();
        let p = haar_pyramid(&g, 3).unwrap();
        assert_eq!((p.ll().width(), p.ll().height()), (40, 30));
        assert_eq!(p.depth(), 3);
    }

    #[test]
    fn odd_dimensions_round_up() {
        let g = GrayImage::new(7, 5, 1.0).unwrap();
        let b = haar_level(&g);
        assert_eq!((b.ll.width(), b.ll.height()), (4, 3));
    }

    #[test]
    fn too_small_for_depth() {
        let g = GrayImage::new(7, 16, 1.0).unwrap();
        assert!(haar_pyramid(&g, 3).is_err());
        assert!(haar_pyramid(&g, 0).is_err());
    }

    #[test]
    fn binarize_examples() {
        let flat = GrayImage::new(6, 6, 3.0).unwrap();
        assert!(binarize_local_avg(&flat).unwrap().bits().iter().all(|&b| b == 0));

        let mut spike = GrayImage::new(7, 7, 10.0).unwrap();
        spike.set(3, 3, 100.0);
        let b = binarize_local_avg(&spike).unwrap();
        assert_eq!(b.get(3, 3), 1);
        assert_eq!(b.count(1), 1);

        let checker = GrayImage::from_fn(8, 8, |x, y| if (x + y) % 2 == 0 { 0.0 } else { 255.0 }).unwrap();
        let b = binarize_local_avg(&checker).unwrap();
        for y in 0..8 {
            for x in 0..8 {
                assert_eq!(b.get(x, y) as usize, (x + y) % 2);
            }
        }
        assert!(binarize_local_avg(&GrayImage::new(4, 8, 0.0).unwrap()).is_err());
    }

    proptest! {
        #[test]
        fn approximation_preserves_mean(vals in proptest::collection::vec(0.0f64..255.0, 16 * 8)) {
            let g = GrayImage::from_values(16, 8, vals).unwrap();
            let p = haar_pyramid(&g, 3).unwrap();
            for lvl in &p.levels {
                prop_assert!((lvl.ll.mean() - g.mean()).abs() < 1e-9);
            }
        }
    }
}
