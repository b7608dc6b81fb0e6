//! Deterministic mock promptable segmenter.
//!
//! Segments fixture images by flood-filling connected components of equal
//! color. A candidate mask is the union of the components containing the
//! positive points; if any of those components also contains a negative
//! point the prompts are contradictory and the candidate is empty with
//! score 0.

use super::{MaskCandidate, PromptableSegmenter, PromptSet};
use crate::error::{Result, SacError};
use crate::types::{ImageRef, Rgb8Image};

pub struct MockSegmenter;

impl MockSegmenter {
    pub fn new() -> Self {
        Self
    }
}

impl Default for MockSegmenter {
    fn default() -> Self {
        Self::new()
    }
}

/// 4-connected components of exactly-equal color. Returns per-pixel labels.
fn color_components(img: &Rgb8Image) -> Vec<u32> {
    let (w, h) = (img.width as usize, img.height as usize);
    let mut labels = vec![u32::MAX; w * h];
    let mut next = 0u32;
    let mut stack = Vec::new();
    for start in 0..w * h {
        if labels[start] != u32::MAX {
            continue;
        }
        let color = {
            let (x, y) = ((start % w) as u32, (start / w) as u32);
            img.pixel(x, y)
        };
        labels[start] = next;
        stack.push(start);
        while let Some(i) = stack.pop() {
            let (x, y) = (i % w, i / w);
            let mut visit = |nx: usize, ny: usize| {
                let ni = ny * w + nx;
                if labels[ni] == u32::MAX && img.pixel(nx as u32, ny as u32) == color {
                    labels[ni] = next;
                    stack.push(ni);
                }
            };
            if x > 0 {
                visit(x - 1, y);
            }
            if x + 1 < w {
                visit(x + 1, y);
            }
            if y > 0 {
                visit(x, y - 1);
            }
            if y + 1 < h {
                visit(x, y + 1);
            }
        }
        next += 1;
    }
    labels
}

impl PromptableSegmenter for MockSegmenter {
    fn name(&self) -> &str {
        "mock"
    }

    fn segment(&self, image: &ImageRef, prompts: &PromptSet) -> Result<Vec<MaskCandidate>> {
        if prompts.positives.is_empty() {
            return Err(SacError::Backend("prompt set has no positive points".into()));
        }
        for &(x, y) in prompts.positives.iter().chain(&prompts.negatives) {
            if x >= image.width || y >= image.height {
                return Err(SacError::Backend(format!(
                    "prompt point ({x},{y}) outside {}x{} image",
                    image.width, image.height
                )));
            }
        }
        let pixels = image.load_pixels()?;
        let labels = color_components(&pixels);
        let w = image.width as usize;

        let mut positive_comps: Vec<u32> = prompts
            .positives
            .iter()
            .map(|&(x, y)| labels[y as usize * w + x as usize])
            .collect();
        positive_comps.sort_unstable();
        positive_comps.dedup();

        let contradictory = prompts
            .negatives
            .iter()
            .any(|&(x, y)| positive_comps.binary_search(&labels[y as usize * w + x as usize]).is_ok());

        let (mask, score) = if contradictory {
            (vec![false; labels.len()], 0.0)
        } else {
            let mask: Vec<bool> = labels
                .iter()
                .map(|l| positive_comps.binary_search(l).is_ok())
                .collect();
            (mask, 1.0)
        };

        Ok(vec![MaskCandidate {
            class_id: prompts.class_id,
            width: image.width,
            height: image.height,
            mask,
            model_score: score,
            prompt: prompts.clone(),
        }])
    }
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::backends::GroupTag;
    use std::sync::Arc;

    fn two_blob_image() -> ImageRef {
        let mut img = Rgb8Image::filled(32, 32, [0, 0, 0]);
        for y in 2..10 {
            for x in 2..10 {
                img.set_pixel(x, y, [255, 0, 0]);
            }
        }
        for y in 20..30 {
            for x in 20..30 {
                img.set_pixel(x, y, [0, 255, 0]);
            }
        }
        ImageRef::from_memory("blobs", Arc::new(img))
    }

    fn prompt(pos: Vec<(u32, u32)>, neg: Vec<(u32, u32)>) -> PromptSet {
        PromptSet {
            class_id: 1,
            positives: pos,
            negatives: neg,
            group_tag: GroupTag::Pair(0),
        }
    }

    #[test]
    fn single_blob_exact_mask() {
        let img = two_blob_image();
        let seg = MockSegmenter::new();
        let cands = seg.segment(&img, &prompt(vec![(5, 5)], vec![(15, 15)])).unwrap();
        assert_eq!(cands.len(), 1);
        let c = &cands[0];
        assert_eq!(c.model_score, 1.0);
        assert_eq!(c.area(), 64);
        assert!(c.mask[5 * 32 + 5]);
        assert!(!c.mask[25 * 32 + 25]);
    }

    #[test]
    fn contradictory_prompts_empty() {
        let img = two_blob_image();
        let seg = MockSegmenter::new();
        let cands = seg.segment(&img, &prompt(vec![(5, 5)], vec![(6, 6)])).unwrap();
        assert_eq!(cands[0].area(), 0);
        assert_eq!(cands[0].model_score, 0.0);
    }

    #[test]
    fn two_positives_union_of_blobs() {
        let img = two_blob_image();
        let seg = MockSegmenter::new();
        let cands = seg
            .segment(&img, &prompt(vec![(5, 5), (25, 25)], vec![]))
            .unwrap();
        assert_eq!(cands[0].area(), 64 + 100);
    }

    #[test]
    fn empty_positives_rejected() {
        let img = two_blob_image();
        let seg = MockSegmenter::new();
        assert!(seg.segment(&img, &prompt(vec![], vec![(1, 1)])).is_err());
    }
}
