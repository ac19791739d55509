//! Single-face localization on the level-3 Haar approximation of an edge map.
//!
//! The frame is edge-filtered, reduced to `LL3` (1/8 scale), binarized
//! against its local average and scanned with a 13x13 face template. The best
//! few placements are re-ranked with a skin-colour count and a two-input fuzzy
//! OR, and the winner is scaled back to frame pixels.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{ensure_min_size, Error, Result};
use crate::imaging::{binarize_local_avg, dual_filter_edge, haar_pyramid, BinaryImage, RgbImage};

pub const TEMPLATE_SIZE: usize = 13;
/// One template cell covers this many frame pixels per side.
pub const SCALE_FACTOR: usize = 8;
/// Side of the face box in frame pixels.
pub const FACE_SIDE: usize = TEMPLATE_SIZE * SCALE_FACTOR;

const FIG_TEMPLATE: [[u8; 13]; 13] = [
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1],
    [1, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1],
    [1, 0, 0, 0, 0, 1, 1, 1, 0, 0, 0, 0, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 1, 0, 0, 0, 1, 1, 1, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
    [1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1],
    [1, 1, 1, 0, 0, 0, 0, 0, 0, 0, 1, 1, 1],
    [1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1, 1],
];

/// 13x13 face template. Cells are 0 (feature, dark), 1 (tissue, bright) or
/// 2 (neutral, ignored when scoring).
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct FaceTemplate {
    grid: [[u8; TEMPLATE_SIZE]; TEMPLATE_SIZE],
}

impl Default for FaceTemplate {
    fn default() -> Self {
        Self { grid: FIG_TEMPLATE }
    }
}

impl FaceTemplate {
    pub fn new(grid: [[u8; TEMPLATE_SIZE]; TEMPLATE_SIZE]) -> Result<Self> {
        if grid.iter().flatten().any(|&v| v > 2) {
            return Err(Error::InvalidInput("template cells must be 0, 1 or 2".into()));
        }
        Ok(Self { grid })
    }

    /// Default grid with the two bottom rows' corner cells marked neutral,
    /// for chins that may or may not show up in the edge map.
    pub fn with_neutral_corners() -> Self {
        let mut grid = FIG_TEMPLATE;
        for row in [11, 12] {
            grid[row][0] = 2;
            grid[row][TEMPLATE_SIZE - 1] = 2;
        }
        Self { grid }
    }

    pub fn cell(&self, col: usize, row: usize) -> u8 {
        self.grid[row][col]
    }

    pub fn count(&self, value: u8) -> usize {
        self.grid.iter().flatten().filter(|&&v| v == value).count()
    }

    pub fn load(path: &Path) -> Result<Self> {
        let text = crate::error::read_text(path)?;
        text.parse().map_err(|e| match e {
            Error::Parse { line, msg, .. } => Error::Parse {
                path: path.to_path_buf(),
                line,
                msg,
            },
            other => other,
        })
    }
}

impl FromStr for FaceTemplate {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        let parse_err = |line: usize, msg: String| Error::Parse {
            path: "<template>".into(),
            line,
            msg,
        };
        let mut grid = [[0u8; TEMPLATE_SIZE]; TEMPLATE_SIZE];
        let mut rows = 0;
        for (i, line) in s.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if rows == TEMPLATE_SIZE {
                return Err(parse_err(i + 1, "more than 13 rows".into()));
            }
            let cells: Vec<&str> = line.split_whitespace().collect();
            if cells.len() != TEMPLATE_SIZE {
                return Err(parse_err(i + 1, format!("expected 13 cells, found {}", cells.len())));
            }
            for (c, cell) in cells.iter().enumerate() {
                let v: u8 = cell
                    .parse()
                    .ok()
                    .filter(|v| *v <= 2)
                    .ok_or_else(|| parse_err(i + 1, format!("bad cell {cell:?}")))?;
                grid[rows][c] = v;
            }
            rows += 1;
        }
        if rows != TEMPLATE_SIZE {
            return Err(parse_err(s.lines().count(), format!("expected 13 rows, found {rows}")));
        }
        Self::new(grid)
    }
}

impl fmt::Display for FaceTemplate {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for row in &self.grid {
            let cells: Vec<String> = row.iter().map(|v| v.to_string()).collect();
            writeln!(f, "{}", cells.join(" "))?;
        }
        Ok(())
    }
}

/// A template placement on the `LL3` grid.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct CandidateWindow {
    pub x: usize,
    pub y: usize,
    /// Hamming match score (weighted or plain).
    pub hd: f64,
    /// Skin pixels aligned with tissue cells.
    pub colour_score: u32,
}

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub struct FaceBox {
    pub x: usize,
    pub y: usize,
    pub width: usize,
    pub height: usize,
}

impl FaceBox {
    pub fn new(x: usize, y: usize, width: usize, height: usize) -> Self {
        Self { x, y, width, height }
    }

    pub fn fits(&self, frame_w: usize, frame_h: usize) -> bool {
        self.width > 0 && self.height > 0 && self.x + self.width <= frame_w && self.y + self.height <= frame_h
    }
}

/// Match score of the window at `(x, y)`. Plain scoring adds 1 per matching
/// non-neutral cell; weighted scoring adds `B/(B+W)` per white match and
/// `W/(B+W)` per black match, `W`/`B` being the window's white/black counts.
pub fn window_score(ll3: &BinaryImage, template: &FaceTemplate, x: usize, y: usize, weighted: bool) -> f64 {
    let mut white_matches = 0u32;
    let mut black_matches = 0u32;
    let mut white = 0u32;
    for j in 0..TEMPLATE_SIZE {
        for i in 0..TEMPLATE_SIZE {
            let w = ll3.get(x + i, y + j);
            white += w as u32;
            let t = template.cell(i, j);
            if t != 2 && t == w {
                if w == 1 {
                    white_matches += 1;
                } else {
                    black_matches += 1;
                }
            }
        }
    }
    if !weighted {
        return (white_matches + black_matches) as f64;
    }
    let total = (TEMPLATE_SIZE * TEMPLATE_SIZE) as f64;
    let white = white as f64;
    let black = total - white;
    let white_weight = black / total;
    let black_weight = white / total;
    white_matches as f64 * white_weight + black_matches as f64 * black_weight
}

/// Scores every placement and returns the `top_n` best, highest first. Equal
/// scores keep raster order (row by row, left to right).
pub fn scan_template(
    ll3: &BinaryImage,
    template: &FaceTemplate,
    weighted: bool,
    top_n: usize,
) -> Result<Vec<CandidateWindow>> {
    ensure_min_size(ll3.width(), ll3.height(), TEMPLATE_SIZE, TEMPLATE_SIZE)?;
    if top_n == 0 {
        return Err(Error::InvalidInput("top_n must be at least 1".into()));
    }
    let mut all = Vec::with_capacity((ll3.width() - TEMPLATE_SIZE + 1) * (ll3.height() - TEMPLATE_SIZE + 1));
    for y in 0..=ll3.height() - TEMPLATE_SIZE {
        for x in 0..=ll3.width() - TEMPLATE_SIZE {
            all.push(CandidateWindow {
                x,
                y,
                hd: window_score(ll3, template, x, y, weighted),
                colour_score: 0,
            });
        }
    }
    // stable sort keeps raster order among ties
    all.sort_by(|a, b| b.hd.total_cmp(&a.hd));
    all.truncate(top_n);
    Ok(all)
}

/// Simplified Kovac skin rule for RGB under uniform daylight.
pub fn is_skin(p: [u8; 3]) -> bool {
    let (r, g, b) = (p[0] as i32, p[1] as i32, p[2] as i32);
    r > 95 && g > 40 && b > 20 && r - g.min(b) > 15 && r - g > 15 && r > b
}

/// Skin pixels inside the window that sit under tissue (1) cells.
/// `frame_resized` must already be at `LL3` resolution.
pub fn skin_score(frame_resized: &RgbImage, window: &CandidateWindow, template: &FaceTemplate) -> u32 {
    let mut n = 0;
    for j in 0..TEMPLATE_SIZE {
        for i in 0..TEMPLATE_SIZE {
            let (x, y) = (window.x + i, window.y + j);
            if x < frame_resized.width()
                && y < frame_resized.height()
                && template.cell(i, j) == 1
                && is_skin(frame_resized.get(x, y))
            {
                n += 1;
            }
        }
    }
    n
}

fn is_high(value: f64, max: f64, min: f64) -> bool {
    value >= (max + min) / 2.0
}

/// Index of the first candidate whose wavelet or colour counter is High
/// (at least the midpoint of that counter's range over all candidates).
pub fn fuzzy_fuse(candidates: &[CandidateWindow]) -> Result<usize> {
    if candidates.is_empty() {
        return Err(Error::Empty("fuzzy fusion needs at least one candidate"));
    }
    let range = |f: &dyn Fn(&CandidateWindow) -> f64| {
        candidates
            .iter()
            .map(f)
            .fold((f64::NEG_INFINITY, f64::INFINITY), |(hi, lo), v| (hi.max(v), lo.min(v)))
    };
    let (hd_max, hd_min) = range(&|c| c.hd);
    let (col_max, col_min) = range(&|c| c.colour_score as f64);
    candidates
        .iter()
        .position(|c| is_high(c.hd, hd_max, hd_min) || is_high(c.colour_score as f64, col_max, col_min))
        .ok_or(Error::Empty("no candidate rated high"))
}

#[derive(Debug, Clone, PartialEq)]
pub struct FaceConfig {
    pub template: FaceTemplate,
    pub weighted: bool,
    pub top_n: usize,
}

impl Default for FaceConfig {
    fn default() -> Self {
        Self {
            template: FaceTemplate::default(),
            weighted: true,
            top_n: 5,
        }
    }
}

/// Everything the localizer computed on the way to its answer.
#[derive(Debug, Clone)]
pub struct FaceSearch {
    pub ll3_binary: BinaryImage,
    pub candidates: Vec<CandidateWindow>,
    pub chosen: usize,
    pub face: FaceBox,
}

pub fn localize_face(frame: &RgbImage, config: &FaceConfig) -> Result<FaceBox> {
    Ok(search_face(frame, config)?.face)
}

pub fn search_face(frame: &RgbImage, config: &FaceConfig) -> Result<FaceSearch> {
    ensure_min_size(frame.width(), frame.height(), FACE_SIDE, FACE_SIDE)?;
    let edges = dual_filter_edge(&frame.to_gray())?;
    let pyramid = haar_pyramid(&edges.response, 3)?;
    let ll3 = pyramid.ll();
    let ll3_binary = binarize_local_avg(ll3)?;
    let mut candidates = scan_template(&ll3_binary, &config.template, config.weighted, config.top_n)?;
    let small = frame.resize_box(ll3.width(), ll3.height())?;
    for c in candidates.iter_mut() {
        c.colour_score = skin_score(&small, c, &config.template);
    }
    let chosen = fuzzy_fuse(&candidates)?;
    let c = candidates[chosen];
    let x = (c.x * SCALE_FACTOR).min(frame.width() - FACE_SIDE);
    let y = (c.y * SCALE_FACTOR).min(frame.height() - FACE_SIDE);
    Ok(FaceSearch {
        ll3_binary,
        candidates,
        chosen,
        face: FaceBox::new(x, y, FACE_SIDE, FACE_SIDE),
    })
}

/// Re-localizes inside `prev` grown by `margin` on every side, clamped to the
/// frame and aligned to the 8-pixel `LL3` grid. Falls back to the whole frame
/// when that region is smaller than a face.
pub fn track_face(prev: &FaceBox, frame: &RgbImage, margin: usize, config: &FaceConfig) -> Result<FaceBox> {
    let (fw, fh) = (frame.width(), frame.height());
    let x0 = prev.x.saturating_sub(margin) / SCALE_FACTOR * SCALE_FACTOR;
    let y0 = prev.y.saturating_sub(margin) / SCALE_FACTOR * SCALE_FACTOR;
    let x1 = (prev.x + prev.width + margin).next_multiple_of(SCALE_FACTOR).min(fw);
    let y1 = (prev.y + prev.height + margin).next_multiple_of(SCALE_FACTOR).min(fh);
    if x0 >= x1 || y0 >= y1 || x1 - x0 < FACE_SIDE || y1 - y0 < FACE_SIDE {
        return localize_face(frame, config);
    }
    let region = frame.crop(x0, y0, x1 - x0, y1 - y0)?;
    let local = localize_face(&region, config)?;
    Ok(FaceBox::new(local.x + x0, local.y + y0, local.width, local.height))
}
