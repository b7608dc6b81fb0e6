//! Pluggable foundation-model roles: patch-embedding extraction and
//! promptable mask generation, plus a disk cache for embeddings.
//!
//! The deterministic mock backends are the reference implementations the
//! test suite runs against; real model adapters plug in behind the same
//! traits and are selected by name.

mod cache;
mod mock_extractor;
mod mock_segmenter;

pub use cache::{CacheKey, FeatureCache};
pub use mock_extractor::{color_vector, jittered_vector, MockFeatureExtractor};
pub use mock_segmenter::MockSegmenter;

use std::sync::Arc;

use crate::error::{Result, SacError};
use crate::types::{ClassId, FeatureMap, ImageRef};

/// Static description of a patch-embedding encoder.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct FeatureExtractorSpec {
    pub name: String,
    /// Square model input side in pixels.
    pub input_resolution: u32,
    pub patch_size: u32,
    pub dim: usize,
}

impl FeatureExtractorSpec {
    pub fn new(name: impl Into<String>, input_resolution: u32, patch_size: u32, dim: usize) -> Self {
        assert_eq!(input_resolution % patch_size, 0);
        Self {
            name: name.into(),
            input_resolution,
            patch_size,
            dim,
        }
    }

    pub fn grid_side(&self) -> usize {
        (self.input_resolution / self.patch_size) as usize
    }
}

/// Which generation rule produced a prompt set.
#[derive(Debug, Clone, Copy, PartialEq, Eq, serde::Serialize, serde::Deserialize)]
pub enum GroupTag {
    /// The set of spatial cluster centers.
    Centers,
    /// All positives of spatial cluster `i`.
    Group(usize),
    /// Positive `i` paired with a random negative.
    Pair(usize),
}

/// A class-labeled point prompt set for the segmenter.
#[derive(Debug, Clone, PartialEq, serde::Serialize, serde::Deserialize)]
pub struct PromptSet {
    pub class_id: ClassId,
    pub positives: Vec<(u32, u32)>,
    pub negatives: Vec<(u32, u32)>,
    pub group_tag: GroupTag,
}

/// A binary mask proposed by the segmenter for one prompt set.
#[derive(Debug, Clone)]
pub struct MaskCandidate {
    pub class_id: ClassId,
    pub width: u32,
    pub height: u32,
    pub mask: Vec<bool>,
    pub model_score: f32,
    pub prompt: PromptSet,
}

impl MaskCandidate {
    pub fn area(&self) -> usize {
        self.mask.iter().filter(|&&b| b).count()
    }
}

/// Patch-embedding feature extraction role.
pub trait FeatureExtractor: Send + Sync {
    fn spec(&self) -> &FeatureExtractorSpec;
    fn extract(&self, image: &ImageRef) -> Result<FeatureMap>;
}

/// Promptable mask generation role.
pub trait PromptableSegmenter: Send + Sync {
    fn name(&self) -> &str;
    fn segment(&self, image: &ImageRef, prompts: &PromptSet) -> Result<Vec<MaskCandidate>>;
}

/// Look up a feature extractor by configured name.
///
/// `seed` feeds the mock codebook. Unknown names are reported as backend
/// errors so that missing real adapters never break mock-only runs.
pub fn make_extractor(name: &str, seed: u64) -> Result<Arc<dyn FeatureExtractor>> {
    match name {
        "mock" => Ok(Arc::new(MockFeatureExtractor::standard(seed))),
        "mock-alt" => Ok(Arc::new(MockFeatureExtractor::degraded(seed))),
        other => Err(SacError::Backend(format!(
            "feature extractor '{other}' is not available in this build"
        ))),
    }
}

/// Look up a promptable segmenter by configured name.
pub fn make_segmenter(name: &str) -> Result<Arc<dyn PromptableSegmenter>> {
    match name {
        "mock" => Ok(Arc::new(MockSegmenter::new())),
        other => Err(SacError::Backend(format!(
            "segmenter '{other}' is not available in this build"
        ))),
    }
}
