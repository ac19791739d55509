pub mod apps;
pub mod classify;
pub mod error;
pub mod eval;
pub mod face;
pub mod features;
pub mod imaging;
pub mod lips;
pub mod pipeline;
pub mod synth;

pub use classify::{DistanceMode, FeatureWeights, MatchScore, Rule, TrainingSet};
pub use error::{Error, Result};
pub use face::{FaceBox, FaceConfig};
pub use features::{FeatureMatrix, SampleMeta, WordGroup};
pub use imaging::{BinaryImage, GrayImage, RgbImage};
pub use lips::{MouthRoi, Roi};
pub use pipeline::{Annotation, Clip, PipelineConfig};
