//! Fixtures shared by the benchmarks.

use std::path::Path;

use vwords_core::features::FeatureMatrix;
use vwords_core::pipeline::{parse_annotations, run_pipeline, Clip, PipelineConfig};
use vwords_core::synth::TalkingClip;

/// Rendered frames of a scripted clip with `repetitions` of every word.
pub fn clip(repetitions: u32, seed: u64) -> (TalkingClip, Clip) {
    let script = TalkingClip::scripted(0, 1, repetitions, seed);
    let frames = Clip {
        first: 0,
        frames: (0..script.len()).map(|i| script.render_frame(i)).collect(),
    };
    (script, frames)
}

/// Word signatures extracted from [`clip`].
pub fn signatures(repetitions: u32, seed: u64) -> Vec<FeatureMatrix> {
    let (script, frames) = clip(repetitions, seed);
    let annotations = parse_annotations(&script.annotations(), Path::new("annotations.txt")).expect("valid script");
    run_pipeline(&frames, &annotations, &PipelineConfig::default()).expect("fixture clip")
}
