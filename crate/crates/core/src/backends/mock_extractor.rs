//! Deterministic mock feature extractor.
//!
//! Fixture images are solid-color blobs on a flat background. Each patch is
//! mapped to a unit vector chosen per color from a seeded codebook, with a
//! small deterministic angular jitter per patch. Everything is a pure
//! function of (seed, image content), so repeated runs are bit-identical.

use std::collections::HashMap;

use rand::Rng;
use rand_chacha::rand_core::SeedableRng;
use rand_chacha::ChaCha8Rng;
use sha2::{Digest, Sha256};

use super::{FeatureExtractor, FeatureExtractorSpec};
use crate::error::Result;
use crate::types::{FeatureMap, ImageRef, SourceGeometry};

fn keyed_rng(seed: u64, tag: &str, payload: &[u8]) -> ChaCha8Rng {
    let mut hasher = Sha256::new();
    hasher.update(seed.to_le_bytes());
    hasher.update(tag.as_bytes());
    hasher.update(payload);
    let digest = hasher.finalize();
    let mut key = [0u8; 32];
    key.copy_from_slice(&digest);
    ChaCha8Rng::from_seed(key)
}

fn random_unit(rng: &mut ChaCha8Rng, dim: usize) -> Vec<f64> {
    // Box-Muller gaussian, then normalize
    let mut v = Vec::with_capacity(dim);
    while v.len() < dim {
        let u1: f64 = rng.gen::<f64>().max(1e-12);
        let u2: f64 = rng.gen();
        let r = (-2.0 * u1.ln()).sqrt();
        v.push(r * (2.0 * std::f64::consts::PI * u2).cos());
        if v.len() < dim {
            v.push(r * (2.0 * std::f64::consts::PI * u2).sin());
        }
    }
    let norm = v.iter().map(|x| x * x).sum::<f64>().sqrt();
    v.iter().map(|x| x / norm).collect()
}

/// The codebook direction for one RGB color.
pub fn color_vector(seed: u64, color: [u8; 3], dim: usize) -> Vec<f64> {
    let mut rng = keyed_rng(seed, "codebook", &color);
    random_unit(&mut rng, dim)
}

/// Rotate `v` by `angle` toward a direction drawn from `rng`.
fn rotate_toward_random(v: &[f64], angle: f64, rng: &mut ChaCha8Rng) -> Vec<f64> {
    if angle == 0.0 {
        return v.to_vec();
    }
    let g = random_unit(rng, v.len());
    let dot: f64 = g.iter().zip(v).map(|(a, b)| a * b).sum();
    let mut ortho: Vec<f64> = g.iter().zip(v).map(|(a, b)| a - dot * b).collect();
    let norm = ortho.iter().map(|x| x * x).sum::<f64>().sqrt();
    if norm < 1e-12 {
        return v.to_vec();
    }
    for o in ortho.iter_mut() {
        *o /= norm;
    }
    let (s, c) = angle.sin_cos();
    v.iter().zip(&ortho).map(|(a, b)| c * a + s * b).collect()
}

/// The per-patch feature: codebook direction jittered by at most `max_jitter`
/// radians, keyed by (seed, color, patch coordinate).
pub fn jittered_vector(
    seed: u64,
    color: [u8; 3],
    dim: usize,
    px: usize,
    py: usize,
    max_jitter: f64,
) -> Vec<f64> {
    let base = color_vector(seed, color, dim);
    let mut payload = Vec::with_capacity(19);
    payload.extend_from_slice(&color);
    payload.extend_from_slice(&(px as u64).to_le_bytes());
    payload.extend_from_slice(&(py as u64).to_le_bytes());
    let mut rng = keyed_rng(seed, "jitter", &payload);
    let angle = rng.gen::<f64>() * max_jitter;
    rotate_toward_random(&base, angle, &mut rng)
}

pub struct MockFeatureExtractor {
    spec: FeatureExtractorSpec,
    seed: u64,
    max_jitter: f64,
}

impl MockFeatureExtractor {
    pub fn new(spec: FeatureExtractorSpec, seed: u64, max_jitter: f64) -> Self {
        Self {
            spec,
            seed,
            max_jitter,
        }
    }

    /// The primary mock encoder: 16x16 patch grid, 32-dim codebook,
    /// jitter <= 0.05 rad.
    pub fn standard(seed: u64) -> Self {
        Self::new(FeatureExtractorSpec::new("mock", 256, 16, 32), seed, 0.05)
    }

    /// A deliberately weaker encoder used as the backbone-swap ablation row:
    /// low-dimensional codebook and heavy jitter blur class separation.
    pub fn degraded(seed: u64) -> Self {
        Self::new(FeatureExtractorSpec::new("mock-alt", 256, 16, 6), seed, 0.45)
    }

    pub fn seed(&self) -> u64 {
        self.seed
    }

    pub fn max_jitter(&self) -> f64 {
        self.max_jitter
    }

    /// Codebook direction for a color under this extractor's seed.
    pub fn codebook_vector(&self, color: [u8; 3]) -> Vec<f64> {
        color_vector(self.seed, color, self.spec.dim)
    }
}

impl FeatureExtractor for MockFeatureExtractor {
    fn spec(&self) -> &FeatureExtractorSpec {
        &self.spec
    }

    fn extract(&self, image: &ImageRef) -> Result<FeatureMap> {
        let pixels = image.load_pixels()?;
        let geometry = SourceGeometry::for_image(
            image.width,
            image.height,
            self.spec.input_resolution,
            self.spec.patch_size,
        );
        let side = self.spec.grid_side();
        let dim = self.spec.dim;

        // dominant fixture color per patch, over the unpadded pixels
        let mut counts: Vec<HashMap<[u8; 3], u32>> = vec![HashMap::new(); side * side];
        for y in 0..image.height {
            for x in 0..image.width {
                let (gx, gy) = geometry.pixel_to_cell(x, y);
                *counts[gy * side + gx].entry(pixels.pixel(x, y)).or_insert(0) += 1;
            }
        }

        let mut data = vec![0f32; side * side * dim];
        for gy in 0..side {
            for gx in 0..side {
                let cell = &counts[gy * side + gx];
                if cell.is_empty() {
                    continue; // fully padded cell stays the zero vector
                }
                // majority color; ties broken by color bytes for determinism
                let dominant = cell
                    .iter()
                    .max_by(|a, b| a.1.cmp(b.1).then(a.0.cmp(b.0)))
                    .map(|(c, _)| *c)
                    .unwrap();
                let vec = jittered_vector(self.seed, dominant, dim, gx, gy, self.max_jitter);
                let off = (gy * side + gx) * dim;
                for (d, v) in data[off..off + dim].iter_mut().zip(&vec) {
                    *d = *v as f32;
                }
            }
        }

        Ok(FeatureMap::new(side, side, dim, data, false, geometry))
    }
}
