use std::path::{Path, PathBuf};
use std::process::ExitCode;

use clap::{Args, Parser, Subcommand};
use vwords_core::apps::{
    identify_speaker, load_profile, load_watch_list, nearest_distance, verify_password, Manifest, SpotResult, Verdict,
};
use vwords_core::classify::{classify, DistanceMode, FeatureWeights, Rule, TrainingSet};
use vwords_core::eval::{far_frr_sweep, run_protocol, Criterion, Protocol, ProtocolKind};
use vwords_core::pipeline::{
    frame_name, load_annotations, load_clip, process_frames, run_pipeline, save_frame, save_mask, signature_name,
    write_corpus, PipelineConfig,
};
use vwords_core::{Error, FeatureMatrix, Result, RgbImage};

/// `println!` that reports a closed stdout as an error instead of panicking.
macro_rules! out {
    ($($arg:tt)*) => {{
        use std::io::Write as _;
        writeln!(std::io::stdout().lock(), $($arg)*)?
    }};
}

#[derive(Parser)]
#[command(name = "vwords", version, about = "Visual-word lip reading toolkit")]
struct Cli {
    #[command(subcommand)]
    command: Command,
}

#[derive(Subcommand)]
enum Command {
    /// Locate the face in every frame of a clip.
    Faces(FacesArgs),
    /// Segment the lips in every frame of a clip.
    Lips(LipsArgs),
    /// Extract one signature file per annotated word.
    Features(FeaturesArgs),
    /// Collect signatures into a labelled training store.
    Train(TrainArgs),
    /// Predict the word of each test signature.
    Classify(ClassifyArgs),
    /// Cross-validate a set of signatures.
    Eval(EvalArgs),
    /// Identify the speaker of each test signature.
    Identify(IdentifyArgs),
    /// Check a password attempt against an enrolled profile.
    Verify(VerifyArgs),
    /// Check test signatures against a security watch list.
    Spot(SpotArgs),
    /// FAR/FRR threshold curve for a profile.
    Sweep(SweepArgs),
    /// Generate the synthetic talking-face corpus.
    Synth(SynthArgs),
}

#[derive(Args)]
struct ClipArgs {
    /// Directory of numbered .ppm frames.
    #[arg(long)]
    clip: PathBuf,
    /// key=value settings file.
    #[arg(long)]
    config: Option<PathBuf>,
}

#[derive(Args)]
struct FacesArgs {
    #[command(flatten)]
    input: ClipArgs,
    /// Write frames with the face box drawn into this directory.
    #[arg(long)]
    overlays: Option<PathBuf>,
}

#[derive(Args)]
struct LipsArgs {
    #[command(flatten)]
    input: ClipArgs,
    /// Directory for the per-frame lip masks (.pgm).
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct FeaturesArgs {
    #[command(flatten)]
    input: ClipArgs,
    /// Word boundaries; defaults to annotations.txt inside the clip.
    #[arg(long)]
    annotations: Option<PathBuf>,
    #[arg(long)]
    out: PathBuf,
}

#[derive(Args)]
struct ScoringArgs {
    /// key=value settings file supplying defaults for the options below.
    #[arg(long)]
    config: Option<PathBuf>,
    #[arg(short, long)]
    k: Option<usize>,
    /// knn or wknn.
    #[arg(long)]
    rule: Option<Rule>,
    /// dtw or euclid.
    #[arg(long)]
    mode: Option<DistanceMode>,
    /// sd, si, uniform or a weights file.
    #[arg(long)]
    weights: Option<String>,
}

impl ScoringArgs {
    fn resolve(&self) -> Result<PipelineConfig> {
        let mut c = load_config(self.config.as_deref())?;
        if let Some(k) = self.k {
            c.k = k;
        }
        if let Some(r) = self.rule {
            c.rule = r;
        }
        if let Some(m) = self.mode {
            c.mode = m;
        }
        if let Some(w) = &self.weights {
            c.weights = FeatureWeights::from_profile(w)?;
        }
        Ok(c)
    }
}

#[derive(Args)]
struct TrainArgs {
    /// Signature files or directories of them.
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
    /// Store directory to create.
    #[arg(long)]
    out: PathBuf,
    /// Label entries by word or by speaker.
    #[arg(long, default_value = "word", value_parser = ["word", "speaker"])]
    by: String,
}

#[derive(Args)]
struct ClassifyArgs {
    /// Training store made by `train`.
    #[arg(long)]
    train: PathBuf,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(required = true)]
    tests: Vec<PathBuf>,
}

#[derive(Args)]
struct EvalArgs {
    /// sd, si or sd2.
    #[arg(long)]
    protocol: ProtocolKind,
    /// Keep only predictions in the test word's group.
    #[arg(long)]
    group_rule: bool,
    /// Comma-separated neighbour counts.
    #[arg(long, value_delimiter = ',')]
    ks: Option<Vec<usize>>,
    #[command(flatten)]
    scoring: ScoringArgs,
    /// Write the report here as well as to stdout.
    #[arg(long)]
    out: Option<PathBuf>,
    #[arg(required = true)]
    inputs: Vec<PathBuf>,
}

#[derive(Args)]
struct IdentifyArgs {
    /// Gallery signatures or directories; labelled by speaker.
    #[arg(long, required = true, num_args = 1..)]
    gallery: Vec<PathBuf>,
    /// Only use gallery samples of this word.
    #[arg(long)]
    word: Option<String>,
    #[command(flatten)]
    scoring: ScoringArgs,
    #[arg(required = true)]
    tests: Vec<PathBuf>,
}

#[derive(Args)]
struct VerifyArgs {
    /// Profile manifest.
    #[arg(long)]
    profile: PathBuf,
    /// Failed attempts so far.
    #[arg(long, default_value_t = 0)]
    tries: u32,
    attempt: PathBuf,
}

#[derive(Args)]
struct SpotArgs {
    /// Watch-list manifest.
    #[arg(long)]
    watch: PathBuf,
    #[arg(required = true)]
    tests: Vec<PathBuf>,
}

#[derive(Args)]
struct SweepArgs {
    /// Profile manifest whose enrolled signatures are matched against.
    #[arg(long)]
    profile: PathBuf,
    #[arg(long, required = true, num_args = 1..)]
    genuine: Vec<PathBuf>,
    #[arg(long, required = true, num_args = 1..)]
    impostor: Vec<PathBuf>,
    /// Threshold grid as start:stop:step.
    #[arg(long, default_value = "1.0:5.0:0.1")]
    grid: String,
    /// Weight of false acceptances; plain FAR+FRR when absent.
    #[arg(long)]
    omega: Option<f64>,
    #[arg(long)]
    out: Option<PathBuf>,
}

#[derive(Args)]
struct SynthArgs {
    #[arg(long)]
    out: PathBuf,
    #[arg(long, default_value_t = 1)]
    speakers: usize,
    #[arg(long, default_value_t = 1)]
    sessions: u8,
    #[arg(long, default_value_t = 5)]
    repetitions: u32,
    #[arg(long, default_value_t = 1)]
    seed: u64,
}

fn load_config(path: Option<&Path>) -> Result<PipelineConfig> {
    path.map_or_else(|| Ok(PipelineConfig::default()), PipelineConfig::load)
}

/// Files as given; directories contribute their `.csv` files in name order.
fn signature_paths(inputs: &[PathBuf]) -> Result<Vec<PathBuf>> {
    let mut out = Vec::new();
    for p in inputs {
        if p.is_dir() {
            let mut v: Vec<PathBuf> = std::fs::read_dir(p)?
                .map(|e| e.map(|e| e.path()))
                .collect::<std::io::Result<Vec<_>>>()?
                .into_iter()
                .filter(|f| f.extension().and_then(|e| e.to_str()) == Some("csv"))
                .collect();
            v.sort();
            out.extend(v);
        } else {
            out.push(p.clone());
        }
    }
    if out.is_empty() {
        return Err(Error::Empty("no signature files found"));
    }
    Ok(out)
}

fn load_signatures(inputs: &[PathBuf]) -> Result<Vec<(PathBuf, FeatureMatrix)>> {
    signature_paths(inputs)?
        .into_iter()
        .map(|p| FeatureMatrix::load(&p).map(|s| (p, s)))
        .collect()
}

fn draw_box(img: &mut RgbImage, x: usize, y: usize, w: usize, h: usize, colour: [u8; 3]) {
    let (x1, y1) = ((x + w).min(img.width()) - 1, (y + h).min(img.height()) - 1);
    for i in x..=x1 {
        img.set(i, y, colour);
        img.set(i, y1, colour);
    }
    for j in y..=y1 {
        img.set(x, j, colour);
        img.set(x1, j, colour);
    }
}

fn faces(a: FacesArgs) -> Result<()> {
    let config = load_config(a.input.config.as_deref())?;
    let clip = load_clip(&a.input.clip)?;
    let results = process_frames(&clip.frames, &config)?;
    if let Some(dir) = &a.overlays {
        std::fs::create_dir_all(dir)?;
    }
    out!("frame,x,y,width,height");
    for (i, r) in results.iter().enumerate() {
        let n = clip.first + i;
        let f = r.face;
        out!("{n},{},{},{},{}", f.x, f.y, f.width, f.height);
        if let Some(dir) = &a.overlays {
            let mut img = clip.frames[i].clone();
            draw_box(&mut img, f.x, f.y, f.width, f.height, [0, 255, 0]);
            if let Some(m) = &r.mouth {
                let (ox, oy) = r.roi_origin;
                draw_box(
                    &mut img,
                    ox + m.rect.x,
                    oy + m.rect.y,
                    m.rect.width,
                    m.rect.height,
                    [255, 0, 0],
                );
            }
            save_frame(&img, &dir.join(frame_name(n)))?;
        }
    }
    Ok(())
}

fn lips(a: LipsArgs) -> Result<()> {
    let config = load_config(a.input.config.as_deref())?;
    let clip = load_clip(&a.input.clip)?;
    let results = process_frames(&clip.frames, &config)?;
    std::fs::create_dir_all(&a.out)?;
    out!("frame,found,x,y,width,height");
    for (i, r) in results.iter().enumerate() {
        let n = clip.first + i;
        save_mask(&r.mask, &a.out.join(format!("mask_{n:06}.pgm")))?;
        match &r.mouth {
            Some(m) => {
                let (ox, oy) = r.roi_origin;
                out!(
                    "{n},1,{},{},{},{}",
                    ox + m.rect.x,
                    oy + m.rect.y,
                    m.rect.width,
                    m.rect.height
                );
            }
            None => out!("{n},0,,,,"),
        }
    }
    Ok(())
}

fn features(a: FeaturesArgs) -> Result<()> {
    let config = load_config(a.input.config.as_deref())?;
    let clip = load_clip(&a.input.clip)?;
    let ann_path = a.annotations.unwrap_or_else(|| a.input.clip.join("annotations.txt"));
    let annotations = load_annotations(&ann_path)?;
    let sigs = run_pipeline(&clip, &annotations, &config)?;
    std::fs::create_dir_all(&a.out)?;
    for s in &sigs {
        let path = a.out.join(signature_name(&s.meta));
        s.save(&path)?;
        out!("{}", path.display());
    }
    Ok(())
}

const STORE_MANIFEST: &str = "store.txt";

fn train(a: TrainArgs) -> Result<()> {
    let sigs = load_signatures(&a.inputs)?;
    std::fs::create_dir_all(&a.out)?;
    let mut manifest = Manifest::default();
    manifest.values.push(("by".into(), a.by.clone()));
    for (i, (_, s)) in sigs.iter().enumerate() {
        let name = format!("{i:05}_{}", signature_name(&s.meta));
        s.save(&a.out.join(&name))?;
        let label = if a.by == "speaker" {
            &s.meta.speaker
        } else {
            &s.meta.word
        };
        manifest.signatures.push((label.clone(), PathBuf::from(name)));
    }
    std::fs::write(a.out.join(STORE_MANIFEST), manifest.to_text())?;
    out!("{} signatures in {}", sigs.len(), a.out.display());
    Ok(())
}

fn load_store(dir: &Path) -> Result<TrainingSet> {
    let manifest = Manifest::load(&dir.join(STORE_MANIFEST))?;
    let mut set = TrainingSet::default();
    for (label, path) in &manifest.signatures {
        set.entries.push(vwords_core::classify::TrainingEntry {
            signature: FeatureMatrix::load(path)?,
            label: label.clone(),
        });
    }
    Ok(set)
}

fn classify_cmd(a: ClassifyArgs) -> Result<()> {
    let c = a.scoring.resolve()?;
    let train = load_store(&a.train)?;
    out!("file,predicted,truth");
    for (path, s) in load_signatures(&a.tests)? {
        let d = classify(&s, &train, c.k, &c.weights, c.mode, c.rule)?;
        out!("{},{},{}", path.display(), d.label, s.meta.word);
    }
    Ok(())
}

fn eval_cmd(a: EvalArgs) -> Result<()> {
    let c = a.scoring.resolve()?;
    let data: Vec<FeatureMatrix> = load_signatures(&a.inputs)?.into_iter().map(|(_, s)| s).collect();
    let mut p = Protocol::new(a.protocol);
    p.k_range = a.ks.unwrap_or_else(|| vec![c.k]);
    p.mode = c.mode;
    p.rule = c.rule;
    if a.scoring.weights.is_some() || a.scoring.config.is_some() {
        p.weights = c.weights;
    }
    p.group_rule = a.group_rule;
    let report = run_protocol(&data, &p)?;
    let text = report.to_text();
    std::io::Write::write_all(&mut std::io::stdout().lock(), text.as_bytes())?;
    if let Some(out) = a.out {
        std::fs::write(out, text)?;
    }
    Ok(())
}

fn identify(a: IdentifyArgs) -> Result<()> {
    let c = a.scoring.resolve()?;
    let gallery = load_signatures(&a.gallery)?
        .into_iter()
        .map(|(_, s)| s)
        .filter(|s| a.word.as_ref().is_none_or(|w| &s.meta.word == w));
    let gallery = TrainingSet::by_speaker(gallery);
    out!("file,speaker,truth");
    for (path, s) in load_signatures(&a.tests)? {
        let who = identify_speaker(&s, &gallery, c.k, &c.weights, c.mode)?;
        out!("{},{who},{}", path.display(), s.meta.speaker);
    }
    Ok(())
}

fn verify(a: VerifyArgs) -> Result<()> {
    let profile = load_profile(&a.profile)?;
    let attempt = FeatureMatrix::load(&a.attempt)?;
    match verify_password(&attempt, &profile, a.tries)? {
        Verdict::Pass { distance } => out!("PASS {distance:.6}"),
        Verdict::Retry { distance } => out!("RETRY {distance:.6}"),
        Verdict::Block { distance } => out!("BLOCK {distance:.6}"),
    }
    Ok(())
}

fn spot(a: SpotArgs) -> Result<()> {
    let list = load_watch_list(&a.watch)?;
    for (path, s) in load_signatures(&a.tests)? {
        match vwords_core::apps::spot_security_word(&s, &list)? {
            SpotResult::Alarm { label, distance } => out!("{} ALARM {label} {distance:.6}", path.display()),
            SpotResult::Clear { distance } => out!("{} CLEAR {distance:.6}", path.display()),
        }
    }
    Ok(())
}

fn parse_grid(spec: &str) -> Result<Vec<f64>> {
    let bad = || Error::InvalidInput(format!("grid must be start:stop:step, got {spec:?}"));
    let parts: Vec<f64> = spec
        .split(':')
        .map(|p| p.trim().parse::<f64>().map_err(|_| bad()))
        .collect::<Result<_>>()?;
    let [start, stop, step] = parts[..] else {
        return Err(bad());
    };
    if !parts.iter().all(|v| v.is_finite()) || step <= 0.0 || stop < start {
        return Err(bad());
    }
    let n = ((stop - start) / step + 1e-9).floor() as usize;
    // Rounding keeps grid points like 1.3 exact enough to print cleanly.
    Ok((0..=n)
        .map(|i| ((start + i as f64 * step) * 1e9).round() / 1e9)
        .collect())
}

fn sweep(a: SweepArgs) -> Result<()> {
    let profile = load_profile(&a.profile)?;
    let distances = |inputs: &[PathBuf]| -> Result<Vec<f64>> {
        load_signatures(inputs)?
            .iter()
            .map(|(_, s)| nearest_distance(s, &profile.enrolled, &profile.weights, profile.mode).map(|(_, d)| d))
            .collect()
    };
    let criterion = a.omega.map_or(Criterion::Total, Criterion::Weighted);
    let curve = far_frr_sweep(
        &distances(&a.genuine)?,
        &distances(&a.impostor)?,
        &parse_grid(&a.grid)?,
        criterion,
    )?;
    let text = curve.to_text();
    std::io::Write::write_all(&mut std::io::stdout().lock(), text.as_bytes())?;
    if let Some(out) = a.out {
        std::fs::write(out, text)?;
    }
    Ok(())
}

fn synth(a: SynthArgs) -> Result<()> {
    for dir in write_corpus(&a.out, a.speakers, a.sessions, a.repetitions, a.seed)? {
        out!("{}", dir.display());
    }
    Ok(())
}

fn closed_pipe(e: &Error) -> bool {
    matches!(e, Error::Io(io) if io.kind() == std::io::ErrorKind::BrokenPipe)
}

fn main() -> ExitCode {
    let cli = Cli::parse();
    let result = match cli.command {
        Command::Faces(a) => faces(a),
        Command::Lips(a) => lips(a),
        Command::Features(a) => features(a),
        Command::Train(a) => train(a),
        Command::Classify(a) => classify_cmd(a),
        Command::Eval(a) => eval_cmd(a),
        Command::Identify(a) => identify(a),
        Command::Verify(a) => verify(a),
        Command::Spot(a) => spot(a),
        Command::Sweep(a) => sweep(a),
        Command::Synth(a) => synth(a),
    };
    match result {
        Ok(()) => ExitCode::SUCCESS,
        Err(e) if closed_pipe(&e) => ExitCode::SUCCESS,
        Err(e) => {
            eprintln!("vwords: {e}");
            ExitCode::FAILURE
        }
    }
}
