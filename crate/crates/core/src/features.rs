//! The eight per-frame mouth features and the normalized per-word signature.
//!
//! Columns: mouth height `H`, width `W`, mutual information `M` and quality
//! index `Q` against the previous frame, wavelet ratio `R`, edge ratio `ER`,
//! mean red `RC` and teeth count `T`.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::imaging::{
    haar_level, histograms_in_range, lab_luv_pixel, mutual_information, sobel, GrayImage, SobelDirection, SubBands,
};
use crate::lips::MouthRoi;

pub const FEATURE_NAMES: [&str; 8] = ["H", "W", "M", "Q", "R", "ER", "RC", "T"];
pub const FEATURE_COUNT: usize = 8;
/// Side of the square grey patch the texture features work on.
pub const PATCH_SIDE: usize = 50;
pub const MI_BINS: usize = 32;
/// Divisor that maps mutual information (bits) into `[0, 1]`.
pub const MI_SCALE: f64 = 8.0;

/// Raw, unnormalized features of one frame.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FrameFeatures {
    pub h: f64,
    pub w: f64,
    pub m: f64,
    pub q: f64,
    pub r: f64,
    pub er: f64,
    pub rc: f64,
    pub t: f64,
}

pub fn geom_hw(mouth: &MouthRoi) -> (usize, usize) {
    (mouth.rect.height, mouth.rect.width)
}

/// Level-1 Haar bands of the mouth crop's luma scaled to 50x50.
pub fn mouth_bands(mouth: &MouthRoi) -> Result<SubBands> {
    let gray = mouth.pixels.to_gray().resize_bilinear(PATCH_SIDE, PATCH_SIDE)?;
    Ok(haar_level(&gray))
}

fn band_range(index: usize) -> (f64, f64) {
    if index == 0 {
        (0.0, 255.0)
    } else {
        (-127.5, 127.5)
    }
}

/// Mean over the four sub-bands of the 32-bin mutual information.
pub fn mutual_feature_bands(curr: &SubBands, prev: &SubBands) -> Result<f64> {
    let mut total = 0.0;
    for (i, (c, p)) in curr.bands().iter().zip(prev.bands()).enumerate() {
        let (lo, hi) = band_range(i);
        total += mutual_information(&histograms_in_range(c, p, MI_BINS, lo, hi)?);
    }
    Ok(total / 4.0)
}

pub fn mutual_feature(curr: &MouthRoi, prev: &MouthRoi) -> Result<f64> {
    mutual_feature_bands(&mouth_bands(curr)?, &mouth_bands(prev)?)
}

/// Universal quality index between two equally long samples. A vanishing
/// denominator gives 1 for identical inputs and 0 otherwise.
pub fn quality_index(x: &[f64], y: &[f64]) -> Result<f64> {
    if x.len() != y.len() {
        return Err(Error::DimensionMismatch(format!("{} vs {} samples", x.len(), y.len())));
    }
    if x.len() < 2 {
        return Err(Error::InsufficientData("quality index needs at least 2 samples".into()));
    }
    let n = x.len() as f64;
    let mx = x.iter().sum::<f64>() / n;
    let my = y.iter().sum::<f64>() / n;
    let (mut vx, mut vy, mut cxy) = (0.0, 0.0, 0.0);
    for (a, b) in x.iter().zip(y) {
        vx += (a - mx) * (a - mx);
        vy += (b - my) * (b - my);
        cxy += (a - mx) * (b - my);
    }
    let (vx, vy, cxy) = (vx / (n - 1.0), vy / (n - 1.0), cxy / (n - 1.0));
    let denom = (vx + vy) * (mx * mx + my * my);
    if denom == 0.0 {
        return Ok(if x == y { 1.0 } else { 0.0 });
    }
    Ok((4.0 * cxy * mx * my / denom).clamp(-1.0, 1.0))
}

pub fn quality_feature_bands(curr: &SubBands, prev: &SubBands) -> Result<f64> {
    let mut total = 0.0;
    for (c, p) in curr.bands().iter().zip(prev.bands()) {
        total += quality_index(c.values(), p.values())?;
    }
    Ok(total / 4.0)
}

pub fn quality_feature(curr: &MouthRoi, prev: &MouthRoi) -> Result<f64> {
    quality_feature_bands(&mouth_bands(curr)?, &mouth_bands(prev)?)
}

fn median(values: &[f64]) -> f64 {
    let mut v = values.to_vec();
    v.sort_by(f64::total_cmp);
    let n = v.len();
    if n % 2 == 1 {
        v[n / 2]
    } else {
        (v[n / 2 - 1] + v[n / 2]) / 2.0
    }
}

/// Coefficients lying outside `median +- std` of their band.
pub fn significant_count(band: &GrayImage) -> usize {
    let v = band.values();
    let n = v.len() as f64;
    let mean = v.iter().sum::<f64>() / n;
    let sd = (v.iter().map(|x| (x - mean) * (x - mean)).sum::<f64>() / n).sqrt();
    let med = median(v);
    v.iter().filter(|&&x| x > med + sd || x < med - sd).count()
}

/// `(significant HL + 1) / (significant LH + 1)`.
pub fn wavelet_ratio_bands(bands: &SubBands) -> f64 {
    (significant_count(&bands.hl) as f64 + 1.0) / (significant_count(&bands.lh) as f64 + 1.0)
}

pub fn wavelet_ratio(mouth: &MouthRoi) -> Result<f64> {
    Ok(wavelet_ratio_bands(&mouth_bands(mouth)?))
}

/// Vertical over horizontal Sobel energy, `sum|V| / (sum|H| + 1)`. Crops
/// too small for the 3x3 filters count as direction-neutral (1).
pub fn edge_ratio_gray(gray: &GrayImage) -> Result<f64> {
    if gray.width() < 3 || gray.height() < 3 {
        return Ok(1.0);
    }
    let v = sobel(gray, SobelDirection::Vertical)?;
    let h = sobel(gray, SobelDirection::Horizontal)?;
    let sv: f64 = v.values().iter().map(|x| x.abs()).sum();
    let sh: f64 = h.values().iter().map(|x| x.abs()).sum();
    Ok(sv / (sh + 1.0))
}

pub fn edge_ratio(mouth: &MouthRoi) -> Result<f64> {
    edge_ratio_gray(&mouth.pixels.to_gray())
}

/// Mean red value over the mouth ellipse.
pub fn red_colour(mouth: &MouthRoi) -> f64 {
    let px = mouth.ellipse_pixels();
    if px.is_empty() {
        return 0.0;
    }
    px.iter().map(|p| p[0] as f64).sum::<f64>() / px.len() as f64
}

fn mean_sd(v: &[f64]) -> (f64, f64) {
    let n = v.len() as f64;
    let m = v.iter().sum::<f64>() / n;
    (m, (v.iter().map(|x| (x - m) * (x - m)).sum::<f64>() / n).sqrt())
}

/// Teeth count from per-pixel `a*` and `u*`: pixels at least one standard
/// deviation below the mean on either axis. An axis with no spread is not
/// tested.
pub fn teeth_from_chroma(a: &[f64], u: &[f64]) -> usize {
    if a.is_empty() {
        return 0;
    }
    let (ma, sa) = mean_sd(a);
    let (mu, su) = mean_sd(u);
    // tolerate rounding noise on constant inputs
    let flat = |sd: f64, m: f64| sd <= 1e-9 * m.abs().max(1.0);
    let (test_a, test_u) = (!flat(sa, ma), !flat(su, mu));
    a.iter()
        .zip(u)
        .filter(|(&x, &y)| (test_a && x <= ma - sa) || (test_u && y <= mu - su))
        .count()
}

pub fn teeth(mouth: &MouthRoi) -> usize {
    let (a, u): (Vec<f64>, Vec<f64>) = mouth
        .ellipse_pixels()
        .iter()
        .map(|&p| {
            let c = lab_luv_pixel(p);
            (c[1], c[3])
        })
        .unzip();
    teeth_from_chroma(&a, &u)
}

/// Raw features of `curr`; `prev` is the preceding frame (or `curr` itself
/// for the first frame of a word).
pub fn frame_features(curr: &MouthRoi, prev: &MouthRoi) -> Result<FrameFeatures> {
    let bands = mouth_bands(curr)?;
    let prev_bands = mouth_bands(prev)?;
    let (h, w) = geom_hw(curr);
    Ok(FrameFeatures {
        h: h as f64,
        w: w as f64,
        m: mutual_feature_bands(&bands, &prev_bands)?,
        q: quality_feature_bands(&bands, &prev_bands)?,
        r: wavelet_ratio_bands(&bands),
        er: edge_ratio(curr)?,
        rc: red_colour(curr),
        t: teeth(curr) as f64,
    })
}

fn squash(x: f64) -> f64 {
    x / (1.0 + x)
}

/// Fixed, data-independent scaling of one frame's features into `[0, 1]`.
pub fn normalize_frame(f: &FrameFeatures, mouth: &MouthRoi) -> [f64; FEATURE_COUNT] {
    let ellipse = mouth.ellipse_pixels().len().max(1) as f64;
    let face_h = mouth.face.height.max(1) as f64;
    let face_w = mouth.face.width.max(1) as f64;
    [
        f.h / face_h,
        f.w / face_w,
        f.m / MI_SCALE,
        (f.q + 1.0) / 2.0,
        squash(f.r),
        squash(f.er),
        f.rc / 255.0,
        f.t / ellipse,
    ]
    .map(|v| v.clamp(0.0, 1.0))
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Hash, PartialOrd, Ord)]
pub enum WordGroup {
    Nu,
    Lal1,
    Lal2,
    Lg,
    Sec,
}

impl fmt::Display for WordGroup {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            WordGroup::Nu => "Nu",
            WordGroup::Lal1 => "LAL1",
            WordGroup::Lal2 => "LAL2",
            WordGroup::Lg => "LG",
            WordGroup::Sec => "Sec",
        })
    }
}

impl FromStr for WordGroup {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "Nu" => Ok(WordGroup::Nu),
            "LAL1" => Ok(WordGroup::Lal1),
            "LAL2" => Ok(WordGroup::Lal2),
            "LG" => Ok(WordGroup::Lg),
            "Sec" => Ok(WordGroup::Sec),
            other => Err(Error::InvalidInput(format!("unknown word group {other:?}"))),
        }
    }
}

/// Who said which word, when.
#[derive(Debug, Clone, PartialEq, Eq, Hash)]
pub struct SampleMeta {
    pub word: String,
    pub speaker: String,
    pub session: u8,
    pub repetition: u32,
    pub group: WordGroup,
}

impl SampleMeta {
    pub fn new(word: &str, speaker: &str, session: u8, repetition: u32, group: WordGroup) -> Self {
        Self {
            word: word.to_string(),
            speaker: speaker.to_string(),
            session,
            repetition,
            group,
        }
    }
}

/// A visual-word signature: one normalized feature row per frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMatrix {
    pub meta: SampleMeta,
    pub rows: Vec<[f64; FEATURE_COUNT]>,
}

impl FeatureMatrix {
    pub fn new(meta: SampleMeta, rows: Vec<[f64; FEATURE_COUNT]>) -> Result<Self> {
        if rows.len() < 2 {
            return Err(Error::InsufficientData(format!(
                "a signature needs at least 2 frames, got {}",
                rows.len()
            )));
        }
        if rows.iter().flatten().any(|v| !(0.0..=1.0).contains(v)) {
            return Err(Error::InvalidInput("feature values must lie in [0, 1]".into()));
        }
        Ok(Self { meta, rows })
    }

    pub fn frames(&self) -> usize {
        self.rows.len()
    }

    /// One feature's time series.
    pub fn column(&self, feature: usize) -> Vec<f64> {
        self.rows.iter().map(|r| r[feature]).collect()
    }

    /// Frames of `self` followed by frames of `other`, keeping `self`'s labels.
    pub fn concat(&self, other: &FeatureMatrix) -> FeatureMatrix {
        let mut rows = self.rows.clone();
        rows.extend_from_slice(&other.rows);
        FeatureMatrix {
            meta: self.meta.clone(),
            rows,
        }
    }

    pub fn to_text(&self) -> String {
        let m = &self.meta;
        let mut out = format!(
            "# word={} speaker={} session={} repetition={} group={}\nframe,{}\n",
            m.word,
            m.speaker,
            m.session,
            m.repetition,
            m.group,
            FEATURE_NAMES.join(",")
        );
        for (i, row) in self.rows.iter().enumerate() {
            out.push_str(&(i + 1).to_string());
            for v in row {
                out.push_str(&format!(",{v:.6}"));
            }
            out.push('\n');
        }
        out
    }

    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut meta = None;
        let mut header = false;
        let mut rows = Vec::new();
        for (i, line) in text.lines().enumerate() {
            let n = i + 1;
            let line = line.trim();
            if line.is_empty() {
                continue;
            }
            if let Some(rest) = line.strip_prefix('#') {
                if meta.is_none() {
                    meta = Some(parse_meta(rest).map_err(|m| err(n, m))?);
                }
                continue;
            }
            if !header {
                let expected = format!("frame,{}", FEATURE_NAMES.join(","));
                if line != expected {
                    return Err(err(n, format!("expected header {expected:?}")));
                }
                header = true;
                continue;
            }
            let fields: Vec<&str> = line.split(',').collect();
            if fields.len() != FEATURE_COUNT + 1 {
                return Err(err(
                    n,
                    format!("expected {} fields, found {}", FEATURE_COUNT + 1, fields.len()),
                ));
            }
            let mut row = [0.0; FEATURE_COUNT];
            for (slot, f) in row.iter_mut().zip(&fields[1..]) {
                *slot = f.trim().parse().map_err(|_| err(n, format!("bad number {f:?}")))?;
            }
            rows.push(row);
        }
        let meta = meta.ok_or_else(|| err(1, "missing metadata comment".into()))?;
        FeatureMatrix::new(meta, rows).map_err(|e| err(text.lines().count(), e.to_string()))
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::error::write_text(path, &self.to_text())?;
        Ok(())
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&crate::error::read_text(path)?, path)
    }
}

fn parse_meta(s: &str) -> std::result::Result<SampleMeta, String> {
    let (mut word, mut speaker, mut session, mut repetition, mut group) = (None, None, None, None, None);
    for kv in s.split_whitespace() {
        let (k, v) = kv.split_once('=').ok_or_else(|| format!("bad metadata field {kv:?}"))?;
        match k {
            "word" => word = Some(v.to_string()),
            "speaker" => speaker = Some(v.to_string()),
            "session" => session = Some(v.parse::<u8>().map_err(|_| format!("bad session {v:?}"))?),
            "repetition" => repetition = Some(v.parse::<u32>().map_err(|_| format!("bad repetition {v:?}"))?),
            "group" => group = Some(v.parse::<WordGroup>().map_err(|e| e.to_string())?),
            _ => return Err(format!("unknown metadata key {k:?}")),
        }
    }
    Ok(SampleMeta {
        word: word.ok_or("missing word")?,
        speaker: speaker.ok_or("missing speaker")?,
        session: session.ok_or("missing session")?,
        repetition: repetition.ok_or("missing repetition")?,
        group: group.ok_or("missing group")?,
    })
}

/// Signature of one spoken word. The first frame is compared with itself.
pub fn build_signature(frames: &[MouthRoi], meta: SampleMeta) -> Result<FeatureMatrix> {
    if frames.len() < 2 {
        return Err(Error::InsufficientData(format!(
            "word {:?} has {} frame(s), need at least 2",
            meta.word,
            frames.len()
        )));
    }
    let mut rows = Vec::with_capacity(frames.len());
    for (i, curr) in frames.iter().enumerate() {
        let prev = if i == 0 { curr } else { &frames[i - 1] };
        let raw = frame_features(curr, prev)?;
        rows.push(normalize_frame(&raw, curr));
    }
    FeatureMatrix::new(meta, rows)
}
