//! Cross-validation protocols, the word-group decoding rule and
//! FAR/FRR threshold selection.

use std::collections::BTreeMap;
use std::fmt::{self, Write as _};
use std::str::FromStr;

use crate::classify::{decide, score_all, DistanceMode, FeatureWeights, Rule, TrainingSet};
use crate::error::{Error, Result};
use crate::features::{FeatureMatrix, WordGroup};

#[derive(Debug, Clone, Copy, PartialEq, Eq)]
pub enum ProtocolKind {
    /// Speaker dependent, leave one word sample out.
    SdLoo,
    /// Speaker independent, leave one subject out.
    SiLoso,
    /// Speaker dependent across sessions: train on session 2, test session 1.
    Sd2Session,
}

impl FromStr for ProtocolKind {
    type Err = Error;

    fn from_str(s: &str) -> Result<Self> {
        match s {
            "sd" => Ok(ProtocolKind::SdLoo),
            "si" => Ok(ProtocolKind::SiLoso),
            "sd2" => Ok(ProtocolKind::Sd2Session),
            other => Err(Error::InvalidInput(format!("unknown protocol {other:?}"))),
        }
    }
}

impl fmt::Display for ProtocolKind {
    fn fmt(&self, f: &mut fmt::Formatter<'_>) -> fmt::Result {
        f.write_str(match self {
            ProtocolKind::SdLoo => "sd",
            ProtocolKind::SiLoso => "si",
            ProtocolKind::Sd2Session => "sd2",
        })
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct Protocol {
    pub kind: ProtocolKind,
    pub k_range: Vec<usize>,
    pub mode: DistanceMode,
    pub rule: Rule,
    pub weights: FeatureWeights,
    /// Discard predictions outside the test word's group. This uses the
    /// test label's group, so results are oracle-assisted.
    pub group_rule: bool,
}

impl Protocol {
    pub fn new(kind: ProtocolKind) -> Self {
        Self {
            kind,
            k_range: vec![1],
            mode: DistanceMode::Dtw,
            rule: Rule::Wknn,
            weights: match kind {
                ProtocolKind::SiLoso => FeatureWeights::speaker_independent(),
                _ => FeatureWeights::speaker_dependent(),
            },
            group_rule: false,
        }
    }
}

/// Results for one value of k.
#[derive(Debug, Clone, PartialEq)]
pub struct KResult {
    pub k: usize,
    /// Per speaker: (correct, tested).
    pub per_subject: BTreeMap<String, (usize, usize)>,
    /// `confusion[true][predicted]`, indexed like `EvalReport::vocabulary`.
    pub confusion: Vec<Vec<usize>>,
}

impl KResult {
    pub fn correct(&self) -> usize {
        self.per_subject.values().map(|c| c.0).sum()
    }

    pub fn tested(&self) -> usize {
        self.per_subject.values().map(|c| c.1).sum()
    }

    /// Overall word recognition rate in percent.
    pub fn wrr(&self) -> f64 {
        percent(self.correct(), self.tested())
    }

    pub fn subject_wrr(&self, speaker: &str) -> Option<f64> {
        self.per_subject.get(speaker).map(|&(c, n)| percent(c, n))
    }
}

fn percent(num: usize, den: usize) -> f64 {
    if den == 0 {
        0.0
    } else {
        100.0 * num as f64 / den as f64
    }
}

#[derive(Debug, Clone, PartialEq)]
pub struct EvalReport {
    pub kind: ProtocolKind,
    pub folds: usize,
    pub oracle_assisted: bool,
    pub vocabulary: Vec<String>,
    pub results: Vec<KResult>,
}

impl EvalReport {
    pub fn for_k(&self, k: usize) -> Option<&KResult> {
        self.results.iter().find(|r| r.k == k)
    }

    /// Per-subject and overall WRR for every k, then the confusion matrix of
    /// the first k.
    pub fn to_text(&self) -> String {
        let mut out = String::new();
        let _ = writeln!(out, "# protocol={} folds={}", self.kind, self.folds);
        if self.oracle_assisted {
            let _ = writeln!(out, "# group rule applied with the true test group (oracle-assisted)");
        }
        let ks: Vec<String> = self.results.iter().map(|r| format!("k={}", r.k)).collect();
        let _ = writeln!(out, "subject,{}", ks.join(","));
        if let Some(first) = self.results.first() {
            for speaker in first.per_subject.keys() {
                let rates: Vec<String> = self
                    .results
                    .iter()
                    .map(|r| format!("{:.2}", r.subject_wrr(speaker).unwrap_or(0.0)))
                    .collect();
                let _ = writeln!(out, "{speaker},{}", rates.join(","));
            }
        }
        let overall: Vec<String> = self.results.iter().map(|r| format!("{:.2}", r.wrr())).collect();
        let _ = writeln!(out, "overall,{}", overall.join(","));
        if let Some(first) = self.results.first() {
            let _ = writeln!(out, "\n# confusion k={} (rows: true, columns: predicted)", first.k);
            let _ = writeln!(out, "word,{}", self.vocabulary.join(","));
            for (w, row) in self.vocabulary.iter().zip(&first.confusion) {
                let cells: Vec<String> = row.iter().map(|c| c.to_string()).collect();
                let _ = writeln!(out, "{w},{}", cells.join(","));
            }
        }
        out
    }
}

/// First ranked label in `test_group`; rank 1 when none is.
pub fn group_constrained(
    ranking: &[String],
    test_group: WordGroup,
    group_of: impl Fn(&str) -> Option<WordGroup>,
) -> Option<&String> {
    ranking
        .iter()
        .find(|l| group_of(l) == Some(test_group))
        .or_else(|| ranking.first())
}

struct Fold<'a> {
    test: Vec<&'a FeatureMatrix>,
    train: Vec<&'a FeatureMatrix>,
}

fn speakers(data: &[FeatureMatrix]) -> Vec<String> {
    let mut v: Vec<String> = data.iter().map(|s| s.meta.speaker.clone()).collect();
    v.sort();
    v.dedup();
    v
}

fn folds(data: &[FeatureMatrix], kind: ProtocolKind) -> Result<Vec<Fold<'_>>> {
    let subjects = speakers(data);
    match kind {
        ProtocolKind::SdLoo => {
            let mut counts: BTreeMap<(&str, &str), usize> = BTreeMap::new();
            for s in data {
                *counts.entry((&s.meta.speaker, &s.meta.word)).or_default() += 1;
            }
            if let Some(((sp, w), n)) = counts.iter().find(|(_, &n)| n < 2) {
                return Err(Error::InsufficientData(format!(
                    "speaker {sp} has {n} sample(s) of word {w:?}; leave-one-out needs at least 2"
                )));
            }
            Ok((0..data.len())
                .map(|i| Fold {
                    test: vec![&data[i]],
                    train: data
                        .iter()
                        .enumerate()
                        .filter(|(j, s)| *j != i && s.meta.speaker == data[i].meta.speaker)
                        .map(|(_, s)| s)
                        .collect(),
                })
                .collect())
        }
        ProtocolKind::SiLoso => {
            if subjects.len() < 2 {
                return Err(Error::InsufficientData(format!(
                    "leave-one-subject-out needs at least 2 speakers, found {}",
                    subjects.len()
                )));
            }
            Ok(subjects
                .iter()
                .map(|sp| Fold {
                    test: data.iter().filter(|s| &s.meta.speaker == sp).collect(),
                    train: data.iter().filter(|s| &s.meta.speaker != sp).collect(),
                })
                .collect())
        }
        ProtocolKind::Sd2Session => subjects
            .iter()
            .map(|sp| {
                let of = |session| {
                    data.iter()
                        .filter(move |s| &s.meta.speaker == sp && s.meta.session == session)
                };
                let (test, train): (Vec<_>, Vec<_>) = (of(1).collect(), of(2).collect());
                if test.is_empty() || train.is_empty() {
                    let missing = if train.is_empty() { 2 } else { 1 };
                    return Err(Error::InsufficientData(format!(
                        "speaker {sp} has no session {missing} samples"
                    )));
                }
                Ok(Fold { test, train })
            })
            .collect(),
    }
}

pub fn run_protocol(data: &[FeatureMatrix], p: &Protocol) -> Result<EvalReport> {
    if data.is_empty() {
        return Err(Error::Empty("evaluation data"));
    }
    if p.k_range.is_empty() || p.k_range.contains(&0) {
        return Err(Error::InvalidInput("k range must be non-empty and positive".into()));
    }
    let folds = folds(data, p.kind)?;
    let vocabulary = TrainingSet::by_word(data.iter().cloned()).vocabulary();
    let index = |w: &str| vocabulary.iter().position(|v| v == w).expect("word in vocabulary");
    let mut groups: BTreeMap<&str, WordGroup> = BTreeMap::new();
    for s in data {
        groups.entry(&s.meta.word).or_insert(s.meta.group);
    }
    let mut results: Vec<KResult> = p
        .k_range
        .iter()
        .map(|&k| KResult {
            k,
            per_subject: speakers(data).into_iter().map(|s| (s, (0, 0))).collect(),
            confusion: vec![vec![0; vocabulary.len()]; vocabulary.len()],
        })
        .collect();
    for fold in &folds {
        let train = TrainingSet::by_word(fold.train.iter().map(|&s| s.clone()));
        for test in &fold.test {
            let scores = score_all(test, &train, &p.weights, p.mode)?;
            for r in results.iter_mut() {
                let decision = decide(&scores, r.k, p.rule)?;
                let predicted = if p.group_rule {
                    group_constrained(&decision.ranking, test.meta.group, |l| groups.get(l).copied())
                        .expect("non-empty ranking")
                        .clone()
                } else {
                    decision.label
                };
                let cell = r.per_subject.get_mut(&test.meta.speaker).expect("known speaker");
                cell.1 += 1;
                if predicted == test.meta.word {
                    cell.0 += 1;
                }
                r.confusion[index(&test.meta.word)][index(&predicted)] += 1;
            }
        }
    }
    Ok(EvalReport {
        kind: p.kind,
        folds: folds.len(),
        oracle_assisted: p.group_rule,
        vocabulary,
        results,
    })
}

/// How the best threshold is chosen.
#[derive(Debug, Clone, Copy, PartialEq)]
pub enum Criterion {
    /// Minimize FAR + FRR.
    Total,
    /// Minimize `(omega FAR + FRR) / (omega + 1)`.
    Weighted(f64),
}

#[derive(Debug, Clone, PartialEq)]
pub struct ThresholdCurve {
    pub thresholds: Vec<f64>,
    /// Fractions in `[0, 1]`.
    pub frr: Vec<f64>,
    pub far: Vec<f64>,
    pub best: usize,
}

impl ThresholdCurve {
    pub fn best_threshold(&self) -> f64 {
        self.thresholds[self.best]
    }

    /// `threshold,frr,far` rows for plotting.
    pub fn to_text(&self) -> String {
        let mut out = String::from("threshold,frr,far\n");
        for i in 0..self.thresholds.len() {
            let _ = writeln!(out, "{:.4},{:.6},{:.6}", self.thresholds[i], self.frr[i], self.far[i]);
        }
        let _ = writeln!(out, "# best={:.4}", self.best_threshold());
        out
    }
}

/// 1.0, 1.1, ..., 5.0.
pub fn default_grid() -> Vec<f64> {
    (10..=50).map(|i| i as f64 / 10.0).collect()
}

pub fn weighted_error(far: f64, frr: f64, omega: f64) -> Result<f64> {
    if omega.is_nan() || omega <= 0.0 {
        return Err(Error::InvalidInput(format!("omega must be positive, got {omega}")));
    }
    Ok((omega * far + frr) / (omega + 1.0))
}

/// Accept iff `distance < t`. Ties in the criterion go to the smallest t.
pub fn far_frr_sweep(genuine: &[f64], impostor: &[f64], grid: &[f64], criterion: Criterion) -> Result<ThresholdCurve> {
    if genuine.is_empty() {
        return Err(Error::Empty("genuine distances"));
    }
    if impostor.is_empty() {
        return Err(Error::Empty("impostor distances"));
    }
    if grid.is_empty() {
        return Err(Error::Empty("threshold grid"));
    }
    if let Criterion::Weighted(omega) = criterion {
        weighted_error(0.0, 0.0, omega)?;
    }
    let (ng, ni) = (genuine.len(), impostor.len());
    let mut frr = Vec::with_capacity(grid.len());
    let mut far = Vec::with_capacity(grid.len());
    let mut best = 0;
    let mut best_key = (u128::MAX, f64::INFINITY);
    for (i, &t) in grid.iter().enumerate() {
        let rejected = genuine.iter().filter(|&&d| d >= t).count();
        let accepted = impostor.iter().filter(|&&d| d < t).count();
        frr.push(rejected as f64 / ng as f64);
        far.push(accepted as f64 / ni as f64);
        // integer cross-multiplied total avoids float ties
        let key = match criterion {
            Criterion::Total => ((rejected * ni + accepted * ng) as u128, 0.0),
            Criterion::Weighted(omega) => (0, weighted_error(far[i], frr[i], omega)?),
        };
        if key.0 < best_key.0 || (key.0 == best_key.0 && key.1 < best_key.1) {
            best = i;
            best_key = key;
        }
    }
    Ok(ThresholdCurve {
        thresholds: grid.to_vec(),
        frr,
        far,
        best,
    })
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::features::{SampleMeta, FEATURE_COUNT};
    use proptest::prelude::*;

    fn sample(word: &str, speaker: &str, session: u8, rep: u32, level: f64) -> FeatureMatrix {
        FeatureMatrix::new(
            SampleMeta::new(word, speaker, session, rep, WordGroup::Nu),
            vec![[level; FEATURE_COUNT]; 3],
        )
        .unwrap()
    }

    fn separable() -> Vec<FeatureMatrix> {
        let mut v = Vec::new();
        for sp in ["s1", "s2"] {
            for (w, level) in [("one", 0.1), ("two", 0.5), ("three", 0.9)] {
                for rep in 0..3 {
                    v.push(sample(w, sp, 1 + (rep % 2) as u8, rep, level));
                }
            }
        }
        v
    }

    #[test]
    fn separable_data_is_perfect() {
        let data = separable();
        for kind in [ProtocolKind::SdLoo, ProtocolKind::SiLoso, ProtocolKind::Sd2Session] {
            let mut p = Protocol::new(kind);
            p.k_range = vec![1, 2, 3];
            let r = run_protocol(&data, &p).unwrap();
            for k in &r.results {
                assert_eq!(k.wrr(), 100.0, "{kind} k={}", k.k);
            }
        }
    }

    #[test]
    fn fold_counts() {
        let data = separable();
        assert_eq!(
            run_protocol(&data, &Protocol::new(ProtocolKind::SdLoo)).unwrap().folds,
            data.len()
        );
        assert_eq!(
            run_protocol(&data, &Protocol::new(ProtocolKind::SiLoso)).unwrap().folds,
            2
        );
        let r = run_protocol(&data, &Protocol::new(ProtocolKind::SdLoo)).unwrap();
        let k1 = r.for_k(1).unwrap();
        for (i, row) in k1.confusion.iter().enumerate() {
            assert_eq!(row.iter().sum::<usize>(), 6, "{}", r.vocabulary[i]);
        }
        assert!(r.to_text().contains("overall,100.00"));
    }

    #[test]
    fn identical_signatures_follow_tie_break() {
        let data: Vec<FeatureMatrix> = ["A", "A", "B", "B"]
            .iter()
            .enumerate()
            .map(|(i, w)| sample(w, "s1", 1, i as u32, 0.4))
            .collect();
        let mut p = Protocol::new(ProtocolKind::SdLoo);
        p.k_range = vec![1];
        assert_eq!(run_protocol(&data, &p).unwrap().results[0].wrr(), 50.0);
    }

    #[test]
    fn protocol_preconditions() {
        let one_speaker: Vec<FeatureMatrix> = separable().into_iter().filter(|s| s.meta.speaker == "s1").collect();
        assert!(matches!(
            run_protocol(&one_speaker, &Protocol::new(ProtocolKind::SiLoso)),
            Err(Error::InsufficientData(_))
        ));
        let single = vec![
            sample("a", "s1", 1, 0, 0.1),
            sample("b", "s1", 1, 0, 0.2),
            sample("b", "s1", 1, 1, 0.2),
        ];
        assert!(run_protocol(&single, &Protocol::new(ProtocolKind::SdLoo)).is_err());
        let session1 = vec![sample("a", "s1", 1, 0, 0.1)];
        match run_protocol(&session1, &Protocol::new(ProtocolKind::Sd2Session)) {
            Err(Error::InsufficientData(m)) => assert!(m.contains("session 2")),
            other => panic!("{other:?}"),
        }
    }

    #[test]
    fn group_rule() {
        let groups = |l: &str| match l {
            "X" => Some(WordGroup::Lal1),
            "Y" | "Z" => Some(WordGroup::Nu),
            _ => None,
        };
        let r: Vec<String> = ["X", "Y"].map(String::from).to_vec();
        assert_eq!(group_constrained(&r, WordGroup::Nu, groups).unwrap(), "Y");
        let r2: Vec<String> = ["Z", "X"].map(String::from).to_vec();
        assert_eq!(group_constrained(&r2, WordGroup::Nu, groups).unwrap(), "Z");
        assert_eq!(group_constrained(&r, WordGroup::Sec, groups).unwrap(), "X");
    }

    #[test]
    fn group_rule_rescues_cross_group_confusions() {
        let mut data = Vec::new();
        for rep in 0..3 {
            let mut a = sample("bomb", "s1", 1, rep, 0.5);
            a.meta.group = WordGroup::Sec;
            let mut b = sample("two", "s1", 1, rep, 0.5 + 0.001 * rep as f64);
            b.meta.group = WordGroup::Nu;
            data.push(a);
            data.push(b);
        }
        let plain = run_protocol(&data, &Protocol::new(ProtocolKind::SdLoo)).unwrap();
        let mut p = Protocol::new(ProtocolKind::SdLoo);
        p.group_rule = true;
        let grouped = run_protocol(&data, &p).unwrap();
        assert!(grouped.oracle_assisted);
        assert_eq!(grouped.results[0].wrr(), 100.0);
        assert!(plain.results[0].wrr() < 100.0);
    }

    #[test]
    fn sweep_examples() {
        let c = far_frr_sweep(&[1.0, 2.0], &[3.0, 4.0], &default_grid(), Criterion::Total).unwrap();
        assert_eq!(c.best_threshold(), 2.1);
        let limits = far_frr_sweep(&[1.0, 2.0], &[3.0, 4.0], &[0.0, 1e9], Criterion::Total).unwrap();
        assert_eq!((limits.frr[0], limits.far[0]), (1.0, 0.0));
        assert_eq!((limits.frr[1], limits.far[1]), (0.0, 1.0));
        assert!(far_frr_sweep(&[], &[1.0], &default_grid(), Criterion::Total).is_err());
        assert!(far_frr_sweep(&[1.0], &[1.0], &default_grid(), Criterion::Weighted(0.0)).is_err());
        let g = default_grid();
        assert_eq!((g.len(), g[0], g[40]), (41, 1.0, 5.0));
        assert!(c.to_text().starts_with("threshold,frr,far\n"));
    }

    #[test]
    fn weighted_error_examples() {
        assert!((weighted_error(0.3, 0.4, 2.0).unwrap() - 1.0 / 3.0).abs() < 1e-15);
        assert_eq!(weighted_error(0.2, 0.6, 1.0).unwrap(), 0.4);
        assert!((weighted_error(0.25, 0.25, 7.0).unwrap() - 0.25).abs() < 1e-15);
        assert!(weighted_error(0.1, 0.1, -1.0).is_err());
    }

    proptest! {
        #[test]
        fn sweep_rates_are_monotone(
            genuine in proptest::collection::vec(0.0f64..6.0, 1..20),
            impostor in proptest::collection::vec(0.0f64..6.0, 1..20),
        ) {
            let c = far_frr_sweep(&genuine, &impostor, &default_grid(), Criterion::Total).unwrap();
            for i in 1..c.thresholds.len() {
                prop_assert!(c.frr[i] <= c.frr[i - 1]);
                prop_assert!(c.far[i] >= c.far[i - 1]);
            }
            let mut more = impostor.clone();
            more.push(100.0);
            let d = far_frr_sweep(&genuine, &more, &default_grid(), Criterion::Total).unwrap();
            prop_assert_eq!(c.frr, d.frr);
        }
    }
}
