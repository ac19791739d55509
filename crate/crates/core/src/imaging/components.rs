use super::BinaryImage;

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum Connectivity {
    Four,
    Eight,
}

/// Inclusive pixel bounds of a component.
#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct Bounds {
    pub x0: usize,
    pub y0: usize,
    pub x1: usize,
    pub y1: usize,
}

impl Bounds {
    pub fn width(&self) -> usize {
        self.x1 - self.x0 + 1
    }

    pub fn height(&self) -> usize {
        self.y1 - self.y0 + 1
    }

    /// Chebyshev gap between two boxes; 0 when they overlap or touch.
    pub fn gap(&self, other: &Bounds) -> usize {
        let dx = if other.x0 > self.x1 {
            other.x0 - self.x1 - 1
        } else if self.x0 > other.x1 {
            self.x0 - other.x1 - 1
        } else {
            0
        };
        let dy = if other.y0 > self.y1 {
            other.y0 - self.y1 - 1
        } else if self.y0 > other.y1 {
            self.y0 - other.y1 - 1
        } else {
            0
        };
        dx.max(dy)
    }
}

#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Component {
    pub label: u32,
    pub area: usize,
    pub bounds: Bounds,
}

/// Labels of the 1-pixels (0 = background) and per-component stats, in
/// raster order of each component's first pixel.
#[derive(Debug, Clone, PartialEq)]
pub struct Labelling {
    pub width: usize,
    pub labels: Vec<u32>,
    pub components: Vec<Component>,
}

impl Labelling {
    pub fn label(&self, x: usize, y: usize) -> u32 {
        self.labels[y * self.width + x]
    }

    /// Components sorted by decreasing area; equal areas keep raster order.
    pub fn by_area(&self) -> Vec<&Component> {
        let mut v: Vec<&Component> = self.components.iter().collect();
        v.sort_by_key(|c| std::cmp::Reverse(c.area));
        v
    }

    /// Binary image holding only the listed labels.
    pub fn select(&self, height: usize, keep: &[u32]) -> BinaryImage {
        BinaryImage::from_fn(self.width, height, |x, y| {
            let l = self.label(x, y);
            l != 0 && keep.contains(&l)
        })
        .expect("labelling dimensions are valid")
    }
}

pub fn connected_components(img: &BinaryImage, connectivity: Connectivity) -> Labelling {
    let (w, h) = (img.width(), img.height());
    let mut labels = vec![0u32; w * h];
    let mut components = Vec::new();
    let mut stack = Vec::new();
    let offsets: &[(isize, isize)] = match connectivity {
        Connectivity::Four => &[(1, 0), (-1, 0), (0, 1), (0, -1)],
        Connectivity::Eight => &[(1, 0), (-1, 0), (0, 1), (0, -1), (1, 1), (1, -1), (-1, 1), (-1, -1)],
    };
    for sy in 0..h {
        for sx in 0..w {
            if img.get(sx, sy) == 0 || labels[sy * w + sx] != 0 {
                continue;
            }
            let label = components.len() as u32 + 1;
            let mut bounds = Bounds {
                x0: sx,
                y0: sy,
                x1: sx,
                y1: sy,
            };
            let mut area = 0;
            labels[sy * w + sx] = label;
            stack.push((sx, sy));
            while let Some((x, y)) = stack.pop() {
                area += 1;
                bounds.x0 = bounds.x0.min(x);
                bounds.x1 = bounds.x1.max(x);
                bounds.y0 = bounds.y0.min(y);
                bounds.y1 = bounds.y1.max(y);
                for &(dx, dy) in offsets {
                    let (nx, ny) = (x as isize + dx, y as isize + dy);
                    if nx < 0 || ny < 0 || nx >= w as isize || ny >= h as isize {
                        continue;
                    }
                    let (nx, ny) = (nx as usize, ny as usize);
                    let i = ny * w + nx;
                    if img.get(nx, ny) == 1 && labels[i] == 0 {
                        labels[i] = label;
                        stack.push((nx, ny));
                    }
                }
            }
            components.push(Component { label, area, bounds });
        }
    }
    Labelling {
        width: w,
        labels,
        components,
    }
}

#[cfg(test)]
mod tests {
    use super::*;

    fn parse(rows: &[&str]) -> BinaryImage {
        let w = rows[0].len();
        BinaryImage::from_fn(w, rows.len(), |x, y| rows[y].as_bytes()[x] == b'1').unwrap()
    }

    #[test]
    fn diagonal_pixels_depend_on_connectivity() {
        let img = parse(&["100", "010", "001"]);
        assert_eq!(connected_components(&img, Connectivity::Eight).components.len(), 1);
        assert_eq!(connected_components(&img, Connectivity::Four).components.len(), 3);
    }

    #[test]
    fn areas_and_bounds() {
        let img = parse(&["11000", "11001", "00001", "00001"]);
        let l = connected_components(&img, Connectivity::Eight);
        assert_eq!(l.components.len(), 2);
        let big = l.by_area();
        assert_eq!(big[0].area, 4);
        assert_eq!(
            big[0].bounds,
            Bounds {
                x0: 0,
                y0: 0,
                x1: 1,
                y1: 1
            }
        );
        assert_eq!(big[1].bounds.height(), 3);
        assert_eq!(big[0].bounds.gap(&big[1].bounds), 2);
        let only = l.select(4, &[big[1].label]);
        assert_eq!(only.count(1), 3);
    }

    #[test]
    fn empty_image_has_no_components() {
        let img = BinaryImage::new(4, 4, 0).unwrap();
        assert!(connected_components(&img, Connectivity::Four).components.is_empty());
    }
}
