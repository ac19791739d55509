//! Clip ingestion, word segmentation and the frames-to-signatures pipeline.

use std::ops::RangeInclusive;
use std::path::{Path, PathBuf};
use std::str::FromStr;

use image::codecs::pnm::{PnmEncoder, PnmSubtype, SampleEncoding};
use image::{ExtendedColorType, ImageEncoder};

use crate::classify::{DistanceMode, FeatureWeights, Rule};
use crate::error::{Error, Result};
use crate::face::{localize_face, track_face, FaceBox, FaceConfig, FaceTemplate};
use crate::features::{build_signature, FeatureMatrix, SampleMeta, WordGroup};
use crate::imaging::{BinaryImage, RgbImage};
use crate::lips::{layer_fusion, mouth_from_mask, nearest_colour, roi_from_face, FusionConfig, LipMask, MouthRoi, Roi};
use crate::synth::TalkingClip;

pub fn load_frame(path: &Path) -> Result<RgbImage> {
    let img = image::open(path)?.to_rgb8();
    let (w, h) = (img.width() as usize, img.height() as usize);
    RgbImage::from_pixels(w, h, img.pixels().map(|p| p.0).collect())
}

/// Writes a binary (P6) portable pixmap.
pub fn save_frame(img: &RgbImage, path: &Path) -> Result<()> {
    let raw: Vec<u8> = img.pixels().iter().flatten().copied().collect();
    write_pnm(
        path,
        &raw,
        img.width(),
        img.height(),
        PnmSubtype::Pixmap(SampleEncoding::Binary),
        ExtendedColorType::Rgb8,
    )
}

/// Writes a mask as a binary (P5) greymap, lips white.
pub fn save_mask(mask: &BinaryImage, path: &Path) -> Result<()> {
    let raw: Vec<u8> = mask.bits().iter().map(|&b| b * 255).collect();
    write_pnm(
        path,
        &raw,
        mask.width(),
        mask.height(),
        PnmSubtype::Graymap(SampleEncoding::Binary),
        ExtendedColorType::L8,
    )
}

fn write_pnm(
    path: &Path,
    raw: &[u8],
    w: usize,
    h: usize,
    subtype: PnmSubtype,
    colour: ExtendedColorType,
) -> Result<()> {
    let file = std::io::BufWriter::new(std::fs::File::create(path)?);
    PnmEncoder::new(file)
        .with_subtype(subtype)
        .write_image(raw, w as u32, h as u32, colour)?;
    Ok(())
}

/// File name of frame `number`.
pub fn frame_name(number: usize) -> String {
    format!("frame_{number:06}.ppm")
}

/// Decoded frames of one clip.
#[derive(Debug, Clone, PartialEq)]
pub struct Clip {
    /// Number of the first frame file.
    pub first: usize,
    pub frames: Vec<RgbImage>,
}

fn frame_number(path: &Path) -> Option<usize> {
    let stem = path.file_stem()?.to_str()?;
    let digits: String = stem.chars().rev().take_while(|c| c.is_ascii_digit()).collect();
    digits.chars().rev().collect::<String>().parse().ok()
}

/// Loads every numbered `.ppm` in `dir`; numbering must be contiguous and all
/// frames the same size.
pub fn load_clip(dir: &Path) -> Result<Clip> {
    let mut numbered: Vec<(usize, PathBuf)> = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|source| Error::File {
        path: dir.to_path_buf(),
        source,
    })?;
    for entry in entries {
        let path = entry?.path();
        if path.extension().and_then(|e| e.to_str()) == Some("ppm") {
            if let Some(n) = frame_number(&path) {
                numbered.push((n, path));
            }
        }
    }
    numbered.sort();
    let first = numbered
        .first()
        .ok_or(Error::Empty("clip directory has no numbered .ppm frames"))?
        .0;
    let mut frames: Vec<RgbImage> = Vec::with_capacity(numbered.len());
    for (i, (n, path)) in numbered.iter().enumerate() {
        if *n != first + i {
            return Err(Error::MissingFrame(dir.join(frame_name(first + i))));
        }
        let f = load_frame(path)?;
        if let Some(f0) = frames.first() {
            if (f.width(), f.height()) != (f0.width(), f0.height()) {
                return Err(Error::DimensionMismatch(format!(
                    "{} is {}x{}, expected {}x{}",
                    path.display(),
                    f.width(),
                    f.height(),
                    f0.width(),
                    f0.height()
                )));
            }
        }
        frames.push(f);
    }
    Ok(Clip { first, frames })
}

/// One spoken word's boundaries and labels.
#[derive(Debug, Clone, PartialEq)]
pub struct Annotation {
    pub meta: SampleMeta,
    pub start: usize,
    pub end: usize,
    /// Line in the annotation file, for diagnostics.
    pub line: usize,
}

pub fn parse_annotations(text: &str, path: &Path) -> Result<Vec<Annotation>> {
    let mut out = Vec::new();
    for (i, raw) in text.lines().enumerate() {
        let line = raw.trim();
        if line.is_empty() || line.starts_with('#') {
            continue;
        }
        let err = |msg: String| Error::Parse {
            path: path.to_path_buf(),
            line: i + 1,
            msg,
        };
        let f: Vec<&str> = line.split(',').map(str::trim).collect();
        if f.len() != 7 {
            return Err(err(format!(
                "expected label,start,end,speaker,session,repetition,group; found {} fields",
                f.len()
            )));
        }
        let num = |s: &str, what: &str| s.parse::<usize>().map_err(|_| err(format!("bad {what} {s:?}")));
        let (start, end) = (num(f[1], "start")?, num(f[2], "end")?);
        if start > end {
            return Err(err(format!("start {start} after end {end}")));
        }
        let session = match f[4] {
            "1" => 1,
            "2" => 2,
            s => return Err(err(format!("session must be 1 or 2, got {s:?}"))),
        };
        if f[0].is_empty()
            || f[0].contains(char::is_whitespace)
            || f[3].is_empty()
            || f[3].contains(char::is_whitespace)
        {
            return Err(err("labels and speaker ids must be non-empty without spaces".into()));
        }
        let group = WordGroup::from_str(f[6]).map_err(|e| err(e.to_string()))?;
        out.push(Annotation {
            meta: SampleMeta::new(f[0], f[3], session, num(f[5], "repetition")? as u32, group),
            start,
            end,
            line: i + 1,
        });
    }
    Ok(out)
}

pub fn load_annotations(path: &Path) -> Result<Vec<Annotation>> {
    parse_annotations(&crate::error::read_text(path)?, path)
}

/// Frame indices of a word, `lead` frames earlier when available.
pub fn word_range(clip_first: usize, clip_len: usize, a: &Annotation, lead: usize) -> Result<RangeInclusive<usize>> {
    let last = clip_first + clip_len - 1;
    if a.start < clip_first || a.end > last {
        return Err(Error::InvalidInput(format!(
            "annotation line {} ({:?}, frames {}..{}) lies outside the clip's frames {clip_first}..{last}",
            a.line, a.meta.word, a.start, a.end
        )));
    }
    let start = a.start.saturating_sub(lead).max(clip_first);
    Ok(start - clip_first..=a.end - clip_first)
}

/// Per-word frame slices; overlapping words may share frames.
pub fn segment<'a>(clip: &'a Clip, annotations: &[Annotation], lead: usize) -> Result<Vec<&'a [RgbImage]>> {
    annotations
        .iter()
        .map(|a| word_range(clip.first, clip.frames.len(), a, lead).map(|r| &clip.frames[r]))
        .collect()
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum LipMethod {
    #[default]
    NearestColour,
    LayerFusion,
}

impl FromStr for LipMethod {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "nearest_colour" => Ok(LipMethod::NearestColour),
            "layer_fusion" => Ok(LipMethod::LayerFusion),
            other => Err(Error::InvalidInput(format!("unknown lip method {other:?}"))),
        }
    }
}

/// Settings for the whole system; every field has a default.
#[derive(Debug, Clone, PartialEq)]
pub struct PipelineConfig {
    pub deinterlace: bool,
    pub face: FaceConfig,
    /// Search near the previous face instead of the whole frame.
    pub track: bool,
    pub track_margin: usize,
    pub lip_method: LipMethod,
    pub fusion: FusionConfig,
    /// Frames added before each annotated word.
    pub lead: usize,
    pub k: usize,
    pub rule: Rule,
    pub weights: FeatureWeights,
    pub mode: DistanceMode,
    /// Acceptance threshold for verification and spotting.
    pub threshold: Option<f64>,
}

impl Default for PipelineConfig {
    fn default() -> Self {
        Self {
            deinterlace: false,
            face: FaceConfig::default(),
            track: true,
            track_margin: 16,
            lip_method: LipMethod::NearestColour,
            fusion: FusionConfig::default(),
            lead: 3,
            k: 1,
            rule: Rule::Wknn,
            weights: FeatureWeights::default(),
            mode: DistanceMode::Dtw,
            threshold: None,
        }
    }
}

impl PipelineConfig {
    /// `key=value` lines, `#` comments; unknown keys are errors.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let mut c = Self::default();
        for (i, raw) in text.lines().enumerate() {
            let line = raw.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            let err = |msg: String| Error::Parse {
                path: path.to_path_buf(),
                line: i + 1,
                msg,
            };
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(format!("expected key=value, got {line:?}")))?;
            let (k, v) = (k.trim(), v.trim());
            fn val<T: FromStr>(v: &str) -> std::result::Result<T, String> {
                v.parse().map_err(|_| format!("bad value {v:?}"))
            }
            let r: std::result::Result<(), String> = (|| {
                match k {
                    "deinterlace" => c.deinterlace = val(v)?,
                    "template" => c.face.template = FaceTemplate::load(Path::new(v)).map_err(|e| e.to_string())?,
                    "weighted_template" => c.face.weighted = val(v)?,
                    "top_n" => c.face.top_n = val(v)?,
                    "track" => c.track = val(v)?,
                    "track_margin" => c.track_margin = val(v)?,
                    "lip_method" => c.lip_method = v.parse().map_err(|e: Error| e.to_string())?,
                    "vote_threshold" => c.fusion.vote_threshold = val(v)?,
                    "motion_threshold" => c.fusion.motion_threshold = val(v)?,
                    "lead" => c.lead = val(v)?,
                    "k" => c.k = val(v)?,
                    "rule" => c.rule = v.parse().map_err(|e: Error| e.to_string())?,
                    "weights" => c.weights = FeatureWeights::from_profile(v).map_err(|e| e.to_string())?,
                    "mode" => c.mode = v.parse().map_err(|e: Error| e.to_string())?,
                    "threshold" => c.threshold = Some(val(v)?),
                    _ => return Err(format!("unknown key {k:?}")),
                }
                Ok(())
            })();
            r.map_err(err)?;
        }
        if c.k == 0 || c.face.top_n == 0 {
            return Err(Error::InvalidInput(format!(
                "{}: k and top_n must be at least 1",
                path.display()
            )));
        }
        Ok(c)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&crate::error::read_text(path)?, path)
    }
}

/// What the pipeline found in one frame.
#[derive(Debug, Clone, PartialEq)]
pub struct FrameResult {
    pub face: FaceBox,
    pub roi_origin: (usize, usize),
    pub mask: LipMask,
    /// `None` when no lips were found.
    pub mouth: Option<MouthRoi>,
}

/// Face, lip mask and mouth for each frame in order.
pub fn process_frames(frames: &[RgbImage], config: &PipelineConfig) -> Result<Vec<FrameResult>> {
    let mut out: Vec<FrameResult> = Vec::with_capacity(frames.len());
    let mut previous: Option<(Roi, LipMask)> = None;
    for raw in frames {
        let blended;
        let frame = if config.deinterlace {
            blended = raw.deinterlace_blend()?;
            &blended
        } else {
            raw
        };
        let face = match out.last() {
            Some(prev) if config.track => track_face(&prev.face, frame, config.track_margin, &config.face)?,
            _ => localize_face(frame, &config.face)?,
        };
        let roi = roi_from_face(&face, frame)?;
        let mask = match config.lip_method {
            LipMethod::NearestColour => nearest_colour(&roi)?,
            LipMethod::LayerFusion => layer_fusion(&roi, previous.as_ref().map(|(r, m)| (r, m)), &config.fusion)?,
        };
        let mouth = match mouth_from_mask(&mask, &roi) {
            Ok(m) => Some(m),
            Err(Error::LipsNotFound) => None,
            Err(e) => return Err(e),
        };
        out.push(FrameResult {
            face,
            roi_origin: roi.origin,
            mask: mask.clone(),
            mouth,
        });
        previous = Some((roi, mask));
    }
    Ok(out)
}

/// Mouths of a word with failed frames filled from the previous success
/// (leading failures from the first success).
pub fn fill_mouths(results: &[FrameResult], word: &str) -> Result<Vec<MouthRoi>> {
    let first = results
        .iter()
        .find_map(|r| r.mouth.as_ref())
        .ok_or_else(|| Error::InsufficientData(format!("no lips found in any frame of word {word:?}")))?;
    let mut last = first;
    Ok(results
        .iter()
        .map(|r| {
            if let Some(m) = &r.mouth {
                last = m;
            }
            last.clone()
        })
        .collect())
}

/// One signature per annotated word. The clip is processed once in frame
/// order so tracking carries across word boundaries.
pub fn run_pipeline(clip: &Clip, annotations: &[Annotation], config: &PipelineConfig) -> Result<Vec<FeatureMatrix>> {
    let ranges = annotations
        .iter()
        .map(|a| word_range(clip.first, clip.frames.len(), a, config.lead))
        .collect::<Result<Vec<_>>>()?;
    let (Some(lo), Some(hi)) = (
        ranges.iter().map(|r| *r.start()).min(),
        ranges.iter().map(|r| *r.end()).max(),
    ) else {
        return Ok(Vec::new());
    };
    let results = process_frames(&clip.frames[lo..=hi], config)?;
    annotations
        .iter()
        .zip(ranges)
        .map(|(a, r)| {
            let mouths = fill_mouths(&results[r.start() - lo..=r.end() - lo], &a.meta.word)?;
            build_signature(&mouths, a.meta.clone())
        })
        .collect()
}

/// File name of a word's signature.
pub fn signature_name(meta: &SampleMeta) -> String {
    format!(
        "{}_{}_s{}_r{:02}.csv",
        meta.speaker, meta.word, meta.session, meta.repetition
    )
}

/// Writes a clip's frames and `annotations.txt` into `dir`.
pub fn write_clip(clip: &TalkingClip, dir: &Path) -> Result<()> {
    std::fs::create_dir_all(dir)?;
    for i in 0..clip.len() {
        save_frame(&clip.render_frame(i), &dir.join(frame_name(i)))?;
    }
    std::fs::write(dir.join("annotations.txt"), clip.annotations())?;
    Ok(())
}

/// Writes `speakers x sessions` scripted clips, one directory each, and
/// returns the directories.
pub fn write_corpus(dir: &Path, speakers: usize, sessions: u8, repetitions: u32, seed: u64) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for sp in 0..speakers {
        for session in 1..=sessions {
            let clip = TalkingClip::scripted(sp, session, repetitions, seed);
            let d = dir.join(format!("{}_session{session}", clip.speaker));
            write_clip(&clip, &d)?;
            out.push(d);
        }
    }
    Ok(out)
}
