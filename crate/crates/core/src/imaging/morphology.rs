use super::BinaryImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum MorphOp {
    Erode,
    Dilate,
    /// Erosion followed by dilation.
    Open,
    /// Dilation followed by erosion.
    Close,
}

/// 3x3 square-kernel morphology. `object` names the foreground value (1 for
/// lip masks, 0 for edge maps). Borders are replicated.
pub fn morphology(img: &BinaryImage, op: MorphOp, object: u8) -> BinaryImage {
    match op {
        MorphOp::Erode => erode(img, object),
        MorphOp::Dilate => dilate(img, object),
        MorphOp::Open => dilate(&erode(img, object), object),
        MorphOp::Close => erode(&dilate(img, object), object),
    }
}

fn neighbourhood(img: &BinaryImage, x: usize, y: usize) -> impl Iterator<Item = u8> + '_ {
    let (w, h) = (img.width() as isize, img.height() as isize);
    (-1isize..=1).flat_map(move |dy| {
        (-1isize..=1).map(move |dx| {
            let cx = (x as isize + dx).clamp(0, w - 1) as usize;
            let cy = (y as isize + dy).clamp(0, h - 1) as usize;
            img.get(cx, cy)
        })
    })
}

fn erode(img: &BinaryImage, object: u8) -> BinaryImage {
    let background = 1 - object;
    BinaryImage::from_fn(img.width(), img.height(), |x, y| {
        let keep = neighbourhood(img, x, y).all(|v| v == object);
        if keep {
            object == 1
        } else {
            background == 1
        }
    })
    .expect("same dims")
}

fn dilate(img: &BinaryImage, object: u8) -> BinaryImage {
    let background = 1 - object;
    BinaryImage::from_fn(img.width(), img.height(), |x, y| {
        let grow = neighbourhood(img, x, y).any(|v| v == object);
        if grow {
            object == 1
        } else {
            background == 1
        }
    })
    .expect("same dims")
}

#[cfg(test)]
mod tests {
    use super::*;
    use proptest::prelude::*;

    fn rect(w: usize, h: usize, x0: usize, y0: usize, rw: usize, rh: usize) -> BinaryImage {
        BinaryImage::from_fn(w, h, |x, y| x >= x0 && x < x0 + rw && y >= y0 && y < y0 + rh).unwrap()
    }

    #[test]
    fn opening_removes_specks() {
        let mut img = BinaryImage::new(7, 7, 0).unwrap();
        img.set(3, 3, 1);
        assert_eq!(morphology(&img, MorphOp::Open, 1).count(1), 0);
    }

    #[test]
    fn erode_square() {
        let img = rect(9, 9, 2, 2, 5, 5);
        assert_eq!(morphology(&img, MorphOp::Erode, 1), rect(9, 9, 3, 3, 3, 3));
    }

    #[test]
    fn closing_a_rectangle_is_identity() {
        let img = rect(12, 10, 3, 2, 6, 4);
        assert_eq!(morphology(&img, MorphOp::Close, 1), img);
    }

    #[test]
    fn zero_polarity_mirrors_one_polarity() {
        let img = rect(10, 10, 2, 3, 5, 4);
        let inv = img.invert();
        let a = morphology(&img, MorphOp::Open, 1);
        let b = morphology(&inv, MorphOp::Open, 0).invert();
        assert_eq!(a, b);
    }

    proptest! {
        #[test]
        fn opening_is_idempotent(bits in proptest::collection::vec(0u8..=1, 64)) {
            let img = BinaryImage::from_bits(8, 8, bits).unwrap();
            let once = morphology(&img, MorphOp::Open, 1);
            let twice = morphology(&once, MorphOp::Open, 1);
            prop_assert_eq!(once, twice);
        }
    }
}
