//! Signature distances, weighted score fusion and nearest-neighbour decisions.

use std::fmt;
use std::path::Path;
use std::str::FromStr;

use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, FEATURE_COUNT, FEATURE_NAMES};

/// Dynamic time warping distance with `|a - b|` local cost and unconstrained
/// left/up/diagonal steps.
pub fn dtw(a: &[f64], b: &[f64]) -> Result<f64> {
    if a.is_empty() || b.is_empty() {
        return Err(Error::Empty("dtw sequence"));
    }
    let t = b.len();
    // rolling rows of the (N+1) x (T+1) table
    let mut prev = vec![f64::INFINITY; t + 1];
    let mut curr = vec![f64::INFINITY; t + 1];
    prev[0] = 0.0;
    for &x in a {
        curr[0] = f64::INFINITY;
        for j in 1..=t {
            let best = prev[j].min(curr[j - 1]).min(prev[j - 1]);
            curr[j] = (x - b[j - 1]).abs() + best;
        }
        std::mem::swap(&mut prev, &mut curr);
    }
    Ok(prev[t])
}

/// Piecewise-linear resampling to `target_len` points, endpoints kept.
pub fn resample(s: &[f64], target_len: usize) -> Result<Vec<f64>> {
    if s.is_empty() {
        return Err(Error::Empty("resample sequence"));
    }
    if target_len == 0 {
        return Err(Error::InvalidInput("resample target length must be at least 1".into()));
    }
    if target_len == s.len() {
        return Ok(s.to_vec());
    }
    if s.len() == 1 || target_len == 1 {
        return Ok(vec![s[0]; target_len]);
    }
    let scale = (s.len() - 1) as f64 / (target_len - 1) as f64;
    Ok((0..target_len)
        .map(|i| {
            let pos = i as f64 * scale;
            let lo = (pos.floor() as usize).min(s.len() - 2);
            let frac = pos - lo as f64;
            s[lo] + (s[lo + 1] - s[lo]) * frac
        })
        .collect())
}

/// Euclidean distance after stretching the shorter sequence to the longer.
pub fn euclid_interp(a: &[f64], b: &[f64]) -> Result<f64> {
    let n = a.len().max(b.len());
    let ra = resample(a, n)?;
    let rb = resample(b, n)?;
    Ok(ra.iter().zip(&rb).map(|(x, y)| (x - y) * (x - y)).sum::<f64>().sqrt())
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum DistanceMode {
    #[default]
    Dtw,
    EuclidInterp,
}

impl FromStr for DistanceMode {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "dtw" => Ok(DistanceMode::Dtw),
            "euclid" | "euclid_interp" => Ok(DistanceMode::EuclidInterp),
            other => Err(Error::InvalidInput(format!("unknown distance mode {other:?}"))),
        }
    }
}

impl fmt::Display for DistanceMode {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            DistanceMode::Dtw => "dtw",
            DistanceMode::EuclidInterp => "euclid",
        })
    }
}

/// Per-column distances between two signatures.
pub fn feature_distances(a: &FeatureMatrix, b: &FeatureMatrix, mode: DistanceMode) -> Result<[f64; FEATURE_COUNT]> {
    let mut out = [0.0; FEATURE_COUNT];
    for (f, slot) in out.iter_mut().enumerate() {
        let (x, y) = (a.column(f), b.column(f));
        *slot = match mode {
            DistanceMode::Dtw => dtw(&x, &y)?,
            DistanceMode::EuclidInterp => euclid_interp(&x, &y)?,
        };
    }
    Ok(out)
}

/// Relative importance of the eight features; sums to 1.
#[derive(Debug, Clone, Copy, PartialEq)]
pub struct FeatureWeights([f64; FEATURE_COUNT]);

const SD_PERCENT: [f64; FEATURE_COUNT] = [15.0, 12.0, 9.0, 10.0, 6.0, 15.0, 16.0, 18.0];
const SI_PERCENT: [f64; FEATURE_COUNT] = [15.0, 14.0, 9.0, 10.0, 7.0, 9.0, 12.0, 23.0];

impl FeatureWeights {
    pub fn new(w: [f64; FEATURE_COUNT]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
        }
        let sum: f64 = w.iter().sum();
        if (sum - 1.0).abs() > 1e-9 {
            return Err(Error::InvalidInput(format!("weights sum to {sum}, expected 1")));
        }
        Ok(Self(w))
    }

    /// Scales non-negative values to sum to 1.
    pub fn normalized(w: [f64; FEATURE_COUNT]) -> Result<Self> {
        if w.iter().any(|v| !v.is_finite() || *v < 0.0) {
            return Err(Error::InvalidInput("weights must be finite and non-negative".into()));
        }
        let sum: f64 = w.iter().sum();
        if sum <= 0.0 {
            return Err(Error::InvalidInput("weights are all zero".into()));
        }
        Ok(Self(w.map(|v| v / sum)))
    }

    /// Speaker-dependent profile, rescaled since the tabulated percentages
    /// do not add up to exactly 100.
    pub fn speaker_dependent() -> Self {
        Self::normalized(SD_PERCENT).expect("positive table")
    }

    /// Speaker-independent profile, rescaled likewise.
    pub fn speaker_independent() -> Self {
        Self::normalized(SI_PERCENT).expect("positive table")
    }

    pub fn uniform() -> Self {
        Self([1.0 / FEATURE_COUNT as f64; FEATURE_COUNT])
    }

    pub fn values(&self) -> &[f64; FEATURE_COUNT] {
        &self.0
    }

    /// `sd`, `si`, `uniform` or a path to a weights file.
    pub fn from_profile(name: &str) -> Result<Self> {
        match name {
            "sd" => Ok(Self::speaker_dependent()),
            "si" => Ok(Self::speaker_independent()),
            "uniform" => Ok(Self::uniform()),
            path => Self::load(Path::new(path)),
        }
    }

    /// Parses `NAME=value` lines, one per feature, `#` comments allowed.
    pub fn parse(text: &str, path: &Path) -> Result<Self> {
        let err = |line: usize, msg: String| Error::Parse {
            path: path.to_path_buf(),
            line,
            msg,
        };
        let mut w = [None; FEATURE_COUNT];
        let mut last = 0;
        for (i, line) in text.lines().enumerate() {
            let line = line.split('#').next().unwrap_or("").trim();
            if line.is_empty() {
                continue;
            }
            last = i + 1;
            let (k, v) = line
                .split_once('=')
                .ok_or_else(|| err(i + 1, format!("expected NAME=value, got {line:?}")))?;
            let idx = FEATURE_NAMES
                .iter()
                .position(|n| *n == k.trim())
                .ok_or_else(|| err(i + 1, format!("unknown feature {:?}", k.trim())))?;
            let v: f64 = v
                .trim()
                .parse()
                .map_err(|_| err(i + 1, format!("bad number {:?}", v.trim())))?;
            if w[idx].replace(v).is_some() {
                return Err(err(i + 1, format!("duplicate weight for {}", FEATURE_NAMES[idx])));
            }
        }
        let mut out = [0.0; FEATURE_COUNT];
        for (f, slot) in out.iter_mut().enumerate() {
            *slot = w[f].ok_or_else(|| err(last, format!("missing weight for {}", FEATURE_NAMES[f])))?;
        }
        let sum: f64 = out.iter().sum();
        if (sum - 1.0).abs() > 1e-6 {
            return Err(err(last, format!("weights sum to {sum}, expected 1")));
        }
        Self::normalized(out).map_err(|e| err(last, e.to_string()))
    }

    pub fn load(path: &Path) -> Result<Self> {
        Self::parse(&crate::error::read_text(path)?, path)
    }

    pub fn save(&self, path: &Path) -> Result<()> {
        crate::error::write_text(path, &self.to_string())?;
        Ok(())
    }
}

impl Default for FeatureWeights {
    fn default() -> Self {
        Self::speaker_dependent()
    }
}

impl fmt::Display for FeatureWeights {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        for (name, w) in FEATURE_NAMES.iter().zip(&self.0) {
            writeln!(f, "{name}={w}")?;
        }
        Ok(())
    }
}

/// `sum(w_i * d_i) / 8`.
pub fn fuse(distances: &[f64; FEATURE_COUNT], weights: &FeatureWeights) -> f64 {
    distances.iter().zip(weights.values()).map(|(d, w)| w * d).sum::<f64>() / FEATURE_COUNT as f64
}

/// Weights proportional to each feature's own recognition rate.
pub fn learn_weights(per_feature_wrr: &[f64; FEATURE_COUNT]) -> Result<FeatureWeights> {
    if per_feature_wrr.iter().any(|r| !r.is_finite() || *r < 0.0) {
        return Err(Error::InvalidInput("recognition rates must be non-negative".into()));
    }
    if per_feature_wrr.iter().all(|&r| r == 0.0) {
        return Err(Error::InvalidInput("all recognition rates are zero".into()));
    }
    FeatureWeights::normalized(*per_feature_wrr)
}

/// A labelled signature.
#[derive(Debug, Clone, PartialEq)]
pub struct TrainingEntry {
    pub signature: FeatureMatrix,
    pub label: String,
}

#[derive(Debug, Clone, PartialEq, Default)]
pub struct TrainingSet {
    pub entries: Vec<TrainingEntry>,
}

impl TrainingSet {
    /// Labels each signature by its word.
    pub fn by_word(signatures: impl IntoIterator<Item = FeatureMatrix>) -> Self {
        Self::labelled(signatures, |s| s.meta.word.clone())
    }

    /// Labels each signature by its speaker.
    pub fn by_speaker(signatures: impl IntoIterator<Item = FeatureMatrix>) -> Self {
        Self::labelled(signatures, |s| s.meta.speaker.clone())
    }

    pub fn labelled(
        signatures: impl IntoIterator<Item = FeatureMatrix>,
        label: impl Fn(&FeatureMatrix) -> String,
    ) -> Self {
        Self {
            entries: signatures
                .into_iter()
                .map(|signature| TrainingEntry {
                    label: label(&signature),
                    signature,
                })
                .collect(),
        }
    }

    pub fn len(&self) -> usize {
        self.entries.len()
    }

    pub fn is_empty(&self) -> bool {
        self.entries.is_empty()
    }

    /// Distinct labels in first-seen order.
    pub fn vocabulary(&self) -> Vec<String> {
        let mut out: Vec<String> = Vec::new();
        for e in &self.entries {
            if !out.contains(&e.label) {
                out.push(e.label.clone());
            }
        }
        out
    }
}

/// One test-versus-training comparison.
#[derive(Debug, Clone, PartialEq)]
pub struct MatchScore {
    /// Index of the training entry.
    pub index: usize,
    pub label: String,
    pub per_feature: [f64; FEATURE_COUNT],
    pub fused: f64,
    /// 0 for the nearest entry.
    pub neighbour_rank: usize,
}

/// Scores against every training entry, nearest first; equal scores keep
/// training order.
pub fn score_all(
    test: &FeatureMatrix,
    train: &TrainingSet,
    weights: &FeatureWeights,
    mode: DistanceMode,
) -> Result<Vec<MatchScore>> {
    if train.is_empty() {
        return Err(Error::Empty("training set"));
    }
    let mut scores = train
        .entries
        .iter()
        .enumerate()
        .map(|(index, e)| {
            let per_feature = feature_distances(test, &e.signature, mode)?;
            Ok(MatchScore {
                index,
                label: e.label.clone(),
                fused: fuse(&per_feature, weights),
                per_feature,
                neighbour_rank: 0,
            })
        })
        .collect::<Result<Vec<_>>>()?;
    scores.sort_by(|a, b| a.fused.total_cmp(&b.fused).then(a.index.cmp(&b.index)));
    for (rank, s) in scores.iter_mut().enumerate() {
        s.neighbour_rank = rank;
    }
    Ok(scores)
}

#[derive(Debug, Clone, Copy, PartialEq, Eq, Default)]
pub enum Rule {
    /// Majority vote among the k nearest.
    Knn,
    /// Per class, nearest distance divided by class count; smallest wins.
    #[default]
    Wknn,
}

impl FromStr for Rule {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "knn" => Ok(Rule::Knn),
            "wknn" => Ok(Rule::Wknn),
            other => Err(Error::InvalidInput(format!("unknown rule {other:?}"))),
        }
    }
}

/// A prediction plus every training label in decreasing preference.
#[derive(Debug, Clone, PartialEq)]
pub struct Decision {
    pub label: String,
    pub ranking: Vec<String>,
}

struct ClassStat<'a> {
    label: &'a str,
    count: usize,
    nearest: f64,
    first: usize,
}

/// Applies `rule` to scores already sorted by [`score_all`]. Classes inside
/// the k nearest come first in rule order (ties: smaller nearest distance,
/// then earlier neighbour); remaining labels follow by nearest distance.
pub fn decide(sorted: &[MatchScore], k: usize, rule: Rule) -> Result<Decision> {
    if sorted.is_empty() {
        return Err(Error::Empty("training set"));
    }
    if k == 0 {
        return Err(Error::InvalidInput("k must be at least 1".into()));
    }
    let k = k.min(sorted.len());
    let mut stats: Vec<ClassStat> = Vec::new();
    for (pos, s) in sorted[..k].iter().enumerate() {
        match stats.iter_mut().find(|c| c.label == s.label) {
            Some(c) => c.count += 1,
            None => stats.push(ClassStat {
                label: &s.label,
                count: 1,
                nearest: s.fused,
                first: pos,
            }),
        }
    }
    let tie = |a: &ClassStat, b: &ClassStat| a.nearest.total_cmp(&b.nearest).then(a.first.cmp(&b.first));
    match rule {
        Rule::Knn => stats.sort_by(|a, b| b.count.cmp(&a.count).then(tie(a, b))),
        Rule::Wknn => stats.sort_by(|a, b| {
            let wa = a.nearest / a.count as f64;
            let wb = b.nearest / b.count as f64;
            wa.total_cmp(&wb).then(tie(a, b))
        }),
    }
    let mut ranking: Vec<String> = stats.iter().map(|c| c.label.to_string()).collect();
    for s in &sorted[k..] {
        if !ranking.contains(&s.label) {
            ranking.push(s.label.clone());
        }
    }
    Ok(Decision {
        label: ranking[0].clone(),
        ranking,
    })
}

pub fn classify(
    test: &FeatureMatrix,
    train: &TrainingSet,
    k: usize,
    weights: &FeatureWeights,
    mode: DistanceMode,
    rule: Rule,
) -> Result<Decision> {
    decide(&score_all(test, train, weights, mode)?, k, rule)
}

pub fn knn(
    test: &FeatureMatrix,
    train: &TrainingSet,
    k: usize,
    weights: &FeatureWeights,
    mode: DistanceMode,
) -> Result<String> {
    Ok(classify(test, train, k, weights, mode, Rule::Knn)?.label)
}

pub fn wknn(
    test: &FeatureMatrix,
    train: &TrainingSet,
    k: usize,
    weights: &FeatureWeights,
    mode: DistanceMode,
) -> Result<String> {
    Ok(classify(test, train, k, weights, mode, Rule::Wknn)?.label)
}
