//! Speaker identification, visual passwords and security-word spotting.

use std::path::{Path, PathBuf};

use crate::classify::{feature_distances, fuse, wknn, DistanceMode, FeatureWeights, TrainingSet};
use crate::error::{Error, Result};
use crate::features::FeatureMatrix;

/// Wknn over a gallery whose entries are labelled by speaker.
pub fn identify_speaker(
    test: &FeatureMatrix,
    gallery: &TrainingSet,
    k: usize,
    weights: &FeatureWeights,
    mode: DistanceMode,
) -> Result<String> {
    if gallery.is_empty() {
        return Err(Error::Empty("speaker gallery"));
    }
    wknn(test, gallery, k, weights, mode)
}

/// Smallest fused distance from `test` to any of `refs`, with its index.
pub fn nearest_distance(
    test: &FeatureMatrix,
    refs: &[FeatureMatrix],
    weights: &FeatureWeights,
    mode: DistanceMode,
) -> Result<(usize, f64)> {
    let mut best: Option<(usize, f64)> = None;
    for (i, r) in refs.iter().enumerate() {
        let d = fuse(&feature_distances(test, r, mode)?, weights);
        if best.is_none_or(|(_, b)| d < b) {
            best = Some((i, d));
        }
    }
    best.ok_or(Error::Empty("reference signatures"))
}

/// A client's enrolled password.
#[derive(Debug, Clone, PartialEq)]
pub struct PasswordProfile {
    pub client: String,
    pub enrolled: Vec<FeatureMatrix>,
    pub threshold: f64,
    pub max_tries: u32,
    pub weights: FeatureWeights,
    pub mode: DistanceMode,
}

impl PasswordProfile {
    pub fn new(client: &str, enrolled: Vec<FeatureMatrix>, threshold: f64, max_tries: u32) -> Result<Self> {
        if enrolled.is_empty() {
            return Err(Error::Empty("enrolled signatures"));
        }
        if threshold.is_nan() || threshold <= 0.0 {
            return Err(Error::InvalidInput(format!(
                "threshold must be positive, got {threshold}"
            )));
        }
        if max_tries == 0 {
            return Err(Error::InvalidInput("max_tries must be at least 1".into()));
        }
        Ok(Self {
            client: client.to_string(),
            enrolled,
            threshold,
            max_tries,
            weights: FeatureWeights::default(),
            mode: DistanceMode::Dtw,
        })
    }
}

#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Verdict {
    Pass { distance: f64 },
    Retry { distance: f64 },
    Block { distance: f64 },
}

/// Pass when the nearest enrolled distance is below the threshold; otherwise
/// retry until `max_tries` failures, then block.
pub fn verify_password(attempt: &FeatureMatrix, profile: &PasswordProfile, tries_so_far: u32) -> Result<Verdict> {
    let (_, distance) = nearest_distance(attempt, &profile.enrolled, &profile.weights, profile.mode)?;
    Ok(decide_attempt(
        distance,
        profile.threshold,
        tries_so_far,
        profile.max_tries,
    ))
}

pub fn decide_attempt(distance: f64, threshold: f64, tries_so_far: u32, max_tries: u32) -> Verdict {
    if distance < threshold {
        Verdict::Pass { distance }
    } else if tries_so_far + 1 < max_tries {
        Verdict::Retry { distance }
    } else {
        Verdict::Block { distance }
    }
}

/// Frames of `a` followed by frames of `b`.
pub fn concat_signatures(a: &FeatureMatrix, b: &FeatureMatrix) -> FeatureMatrix {
    a.concat(b)
}

/// Every `a` then `b` concatenation, in `a`-major order.
pub fn bootstrap_pairs(word_a: &[FeatureMatrix], word_b: &[FeatureMatrix]) -> Vec<FeatureMatrix> {
    word_a
        .iter()
        .flat_map(|a| word_b.iter().map(move |b| concat_signatures(a, b)))
        .collect()
}

#[derive(Debug, Clone, PartialEq)]
pub struct WatchList {
    pub signatures: Vec<FeatureMatrix>,
    pub labels: Vec<String>,
    pub threshold: f64,
    pub weights: FeatureWeights,
    pub mode: DistanceMode,
}

impl WatchList {
    /// Signatures labelled by their word.
    pub fn new(signatures: Vec<FeatureMatrix>, threshold: f64) -> Result<Self> {
        if signatures.is_empty() {
            return Err(Error::Empty("watch list"));
        }
        Ok(Self {
            labels: signatures.iter().map(|s| s.meta.word.clone()).collect(),
            signatures,
            threshold,
            weights: FeatureWeights::default(),
            mode: DistanceMode::Dtw,
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub enum SpotResult {
    Alarm { label: String, distance: f64 },
    Clear { distance: f64 },
}

pub fn spot_security_word(test: &FeatureMatrix, list: &WatchList) -> Result<SpotResult> {
    let (i, distance) = nearest_distance(test, &list.signatures, &list.weights, list.mode)?;
    Ok(if distance < list.threshold {
        SpotResult::Alarm {
            label: list.labels[i].clone(),
            distance,
        }
    } else {
        SpotResult::Clear { distance }
    })
}

/// A `key=value` manifest. `signature=<label>:<file>` lines may repeat;
/// files are relative to the manifest's directory.
#[derive(Debug, Clone, PartialEq, Default)]
pub struct Manifest {
    pub values: Vec<(String, String)>,
    pub signatures: Vec<(String, PathBuf)>,
}

impl Manifest {
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let base = path.parent().unwrap_or(Path::new("."));
        let mut m = Manifest::default();
        for (i, line) in text.lines().enumerate() {
            let line = line.trim();
            if line.is_empty() || line.starts_with('#') {
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
            if k == "signature" {
                let (label, file) = v
                    .split_once(':')
                    .ok_or_else(|| err("expected signature=<label>:<file>".into()))?;
                m.signatures.push((label.to_string(), base.join(file)));
            } else {
                m.values.push((k.to_string(), v.to_string()));
            }
        }
        Ok(m)
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&crate::error::read_text(path)?, path)
    }

    pub fn get(&self, key: &str) -> Option<&str> {
        self.values
            .iter()
            .rev()
            .find(|(k, _)| k == key)
            .map(|(_, v)| v.as_str())
    }

    fn require<T: std::str::FromStr>(&self, key: &str, path: &Path) -> Result<T> {
        let v = self
            .get(key)
            .ok_or_else(|| Error::InvalidInput(format!("{}: missing {key}", path.display())))?;
        v.parse()
            .map_err(|_| Error::InvalidInput(format!("{}: bad {key} value {v:?}", path.display())))
    }

    fn optional<T: std::str::FromStr>(&self, key: &str, path: &Path) -> Result<Option<T>> {
        match self.get(key) {
            None => Ok(None),
            Some(_) => self.require(key, path).map(Some),
        }
    }

    fn load_signatures(&self) -> Result<Vec<(String, FeatureMatrix)>> {
        self.signatures
            .iter()
            .map(|(l, p)| Ok((l.clone(), FeatureMatrix::load(p)?)))
            .collect()
    }

    pub fn to_text(&self) -> String {
        let mut out = String::new();
        for (k, v) in &self.values {
            out.push_str(&format!("{k}={v}\n"));
        }
        for (l, p) in &self.signatures {
            out.push_str(&format!("signature={l}:{}\n", p.display()));
        }
        out
    }
}

fn scoring(m: &Manifest, path: &Path) -> Result<(FeatureWeights, DistanceMode)> {
    let weights = match m.get("weights") {
        Some(w) => FeatureWeights::from_profile(w)?,
        None => FeatureWeights::default(),
    };
    let mode = m.optional::<DistanceMode>("mode", path)?.unwrap_or_default();
    Ok((weights, mode))
}

/// Reads `client`, `threshold`, `max_tries`, optional `weights` and `mode`,
/// and the enrolled signatures.
pub fn load_profile(path: &Path) -> Result<PasswordProfile> {
    let m = Manifest::load(path)?;
    let enrolled = m.load_signatures()?.into_iter().map(|(_, s)| s).collect();
    let client: String = m.require("client", path)?;
    let mut p = PasswordProfile::new(
        &client,
        enrolled,
        m.require("threshold", path)?,
        m.require("max_tries", path)?,
    )?;
    (p.weights, p.mode) = scoring(&m, path)?;
    Ok(p)
}

/// Reads `threshold`, optional `weights` and `mode`, and the labelled
/// security signatures.
pub fn load_watch_list(path: &Path) -> Result<WatchList> {
    let m = Manifest::load(path)?;
    let (labels, signatures): (Vec<String>, Vec<FeatureMatrix>) = m.load_signatures()?.into_iter().unzip();
    let mut w = WatchList::new(signatures, m.require("threshold", path)?)?;
    w.labels = labels;
    (w.weights, w.mode) = scoring(&m, path)?;
    Ok(w)
}
