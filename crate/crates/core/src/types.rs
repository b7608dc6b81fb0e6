//! Shared domain types: images, masks, feature maps, episodes.

use std::path::PathBuf;
use std::sync::Arc;

use serde::{Deserialize, Serialize};

use crate::error::{Result, SacError};

/// Dense class identifier. 0 is reserved for background everywhere.
pub type ClassId = u16;

pub const BACKGROUND: ClassId = 0;

/// An 8-bit RGB raster, row-major.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct Rgb8Image {
    pub width: u32,
    pub height: u32,
    /// `height * width * 3` bytes.
    pub data: Vec<u8>,
}

impl Rgb8Image {
    pub fn new(width: u32, height: u32, data: Vec<u8>) -> Self {
        assert_eq!(data.len(), (width * height * 3) as usize);
        Self {
            width,
            height,
            data,
        }
    }

    pub fn filled(width: u32, height: u32, color: [u8; 3]) -> Self {
        let mut data = Vec::with_capacity((width * height * 3) as usize);
        for _ in 0..width * height {
            data.extend_from_slice(&color);
        }
        Self {
            width,
            height,
            data,
        }
    }

    #[inline]
    pub fn pixel(&self, x: u32, y: u32) -> [u8; 3] {
        let i = ((y * self.width + x) * 3) as usize;
        [self.data[i], self.data[i + 1], self.data[i + 2]]
    }

    #[inline]
    pub fn set_pixel(&mut self, x: u32, y: u32, color: [u8; 3]) {
        let i = ((y * self.width + x) * 3) as usize;
        self.data[i..i + 3].copy_from_slice(&color);
    }
}

/// Where an image's pixels come from. Decoding is deferred until access.
#[derive(Debug, Clone)]
pub enum PixelSource {
    File(PathBuf),
    Memory(Arc<Rgb8Image>),
}

/// A reference to one dataset or fixture image.
#[derive(Debug, Clone)]
pub struct ImageRef {
    pub id: String,
    pub width: u32,
    pub height: u32,
    pub source: PixelSource,
}

impl ImageRef {
    pub fn from_memory(id: impl Into<String>, image: Arc<Rgb8Image>) -> Self {
        Self {
            id: id.into(),
            width: image.width,
            height: image.height,
            source: PixelSource::Memory(image),
        }
    }

    /// Resolve the pixel source. File decode errors surface here, not at
    /// index construction time.
    pub fn load_pixels(&self) -> Result<Arc<Rgb8Image>> {
        match &self.source {
            PixelSource::Memory(img) => Ok(Arc::clone(img)),
            PixelSource::File(path) => {
                let img = image::open(path)
                    .map_err(|e| {
                        SacError::Data(format!("cannot decode image {:?}: {e}", path))
                    })?
                    .to_rgb8();
                if img.width() != self.width || img.height() != self.height {
                    return Err(SacError::Data(format!(
                        "image {} is {}x{}, index says {}x{}",
                        self.id,
                        img.width(),
                        img.height(),
                        self.width,
                        self.height
                    )));
                }
                Ok(Arc::new(Rgb8Image::new(
                    img.width(),
                    img.height(),
                    img.into_raw(),
                )))
            }
        }
    }
}

/// A multi-class annotation grid paired with an image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct MultiClassMask {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<ClassId>,
}

impl MultiClassMask {
    pub fn new(width: u32, height: u32, labels: Vec<ClassId>) -> Self {
        assert_eq!(labels.len(), (width * height) as usize);
        Self {
            width,
            height,
            labels,
        }
    }

    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            labels: vec![BACKGROUND; (width * height) as usize],
        }
    }

    #[inline]
    pub fn label(&self, x: u32, y: u32) -> ClassId {
        self.labels[(y * self.width + x) as usize]
    }

    #[inline]
    pub fn set_label(&mut self, x: u32, y: u32, label: ClassId) {
        self.labels[(y * self.width + x) as usize] = label;
    }
}

/// The final exclusive per-pixel class assignment for a query image.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct LabelMap {
    pub width: u32,
    pub height: u32,
    pub labels: Vec<ClassId>,
}

impl LabelMap {
    pub fn empty(width: u32, height: u32) -> Self {
        Self {
            width,
            height,
            labels: vec![BACKGROUND; (width * height) as usize],
        }
    }

    #[inline]
    pub fn label(&self, x: u32, y: u32) -> ClassId {
        self.labels[(y * self.width + x) as usize]
    }
}

/// One N-way K-shot task instance.
#[derive(Debug, Clone)]
pub struct Episode {
    pub id: u64,
    pub supports: Vec<(ImageRef, MultiClassMask)>,
    pub query: ImageRef,
    pub class_ids: Vec<ClassId>,
    pub query_truth: Option<MultiClassMask>,
    pub n_way: usize,
    pub k_shot: usize,
}

/// How the model input square maps back to the original image: the image is
/// rescaled so its long side fits `input_resolution`, then padded bottom/right.
#[derive(Debug, Clone, PartialEq, Serialize, Deserialize)]
pub struct SourceGeometry {
    pub input_resolution: u32,
    pub patch_size: u32,
    pub image_w: u32,
    pub image_h: u32,
    pub scale_factor: f64,
    pub scaled_w: u32,
    pub scaled_h: u32,
    pub pad_right: u32,
    pub pad_bottom: u32,
}

impl SourceGeometry {
    pub fn for_image(image_w: u32, image_h: u32, input_resolution: u32, patch_size: u32) -> Self {
        assert!(image_w >= 1 && image_h >= 1);
        assert_eq!(input_resolution % patch_size, 0);
        let long = image_w.max(image_h) as f64;
        let scale = input_resolution as f64 / long;
        let scaled_w = ((image_w as f64 * scale).round() as u32)
            .clamp(1, input_resolution);
        let scaled_h = ((image_h as f64 * scale).round() as u32)
            .clamp(1, input_resolution);
        Self {
            input_resolution,
            patch_size,
            image_w,
            image_h,
            scale_factor: scale,
            scaled_w,
            scaled_h,
            pad_right: input_resolution - scaled_w,
            pad_bottom: input_resolution - scaled_h,
        }
    }

    pub fn grid_side(&self) -> usize {
        (self.input_resolution / self.patch_size) as usize
    }

    /// Grid columns that contain any image content (the rest is padding).
    pub fn valid_grid_w(&self) -> usize {
        (self.scaled_w as usize).div_ceil(self.patch_size as usize)
    }

    pub fn valid_grid_h(&self) -> usize {
        (self.scaled_h as usize).div_ceil(self.patch_size as usize)
    }

    /// Grid cell covering original-image pixel (x, y).
    #[inline]
    pub fn pixel_to_cell(&self, x: u32, y: u32) -> (usize, usize) {
        let sx = (x as f64 + 0.5) * self.scale_factor;
        let sy = (y as f64 + 0.5) * self.scale_factor;
        let gx = ((sx / self.patch_size as f64) as usize).min(self.valid_grid_w() - 1);
        let gy = ((sy / self.patch_size as f64) as usize).min(self.valid_grid_h() - 1);
        (gx, gy)
    }
}

/// An h x w grid of patch embeddings plus the geometry that maps it back to
/// image pixels.
#[derive(Debug, Clone, PartialEq)]
pub struct FeatureMap {
    pub grid_h: usize,
    pub grid_w: usize,
    pub dim: usize,
    /// Row-major `grid_h * grid_w * dim` values.
    pub data: Vec<f32>,
    pub normalized: bool,
    pub geometry: SourceGeometry,
}

impl FeatureMap {
    pub fn new(
        grid_h: usize,
        grid_w: usize,
        dim: usize,
        data: Vec<f32>,
        normalized: bool,
        geometry: SourceGeometry,
    ) -> Self {
        assert_eq!(data.len(), grid_h * grid_w * dim);
        assert!(grid_h * grid_w >= 1);
        Self {
            grid_h,
            grid_w,
            dim,
            data,
            normalized,
            geometry,
        }
    }

    #[inline]
    pub fn at(&self, gy: usize, gx: usize) -> &[f32] {
        let i = (gy * self.grid_w + gx) * self.dim;
        &self.data[i..i + self.dim]
    }

    /// True if the cell lies entirely in the padded margin.
    #[inline]
    pub fn is_padded_cell(&self, gy: usize, gx: usize) -> bool {
        gx >= self.geometry.valid_grid_w() || gy >= self.geometry.valid_grid_h()
    }
}

/// Scale every feature vector to unit Euclidean norm. Zero vectors stay zero.
pub fn l2_normalize(fm: &FeatureMap) -> Result<FeatureMap> {
    if fm.normalized {
        return Ok(fm.clone());
    }
    if fm.data.iter().any(|v| !v.is_finite()) {
        return Err(SacError::Data(
            "feature map contains non-finite values".into(),
        ));
    }
    let mut out = fm.data.clone();
    for cell in out.chunks_mut(fm.dim) {
        let norm = cell.iter().map(|v| (*v as f64) * (*v as f64)).sum::<f64>().sqrt();
        if norm > 0.0 {
            for v in cell.iter_mut() {
                *v = (*v as f64 / norm) as f32;
            }
        }
    }
    Ok(FeatureMap {
        grid_h: fm.grid_h,
        grid_w: fm.grid_w,
        dim: fm.dim,
        data: out,
        normalized: true,
        geometry: fm.geometry.clone(),
    })
}

#[cfg(test)]
mod tests {
    use super::*;

    fn unit_geometry(grid: usize, dimpx: u32) -> SourceGeometry {
        SourceGeometry::for_image(dimpx, dimpx, dimpx, dimpx / grid as u32)
    }

    #[test]
    fn normalize_analytic() {
        let geom = unit_geometry(1, 16);
        let fm = FeatureMap::new(1, 1, 2, vec![3.0, 4.0], false, geom);
        let n = l2_normalize(&fm).unwrap();
        assert!((n.data[0] - 0.6).abs() < 1e-6);
        assert!((n.data[1] - 0.8).abs() < 1e-6);
        assert!(n.normalized);
    }

    #[test]
    fn normalize_idempotent_and_zero_preserving() {
        let geom = unit_geometry(2, 16);
        let fm = FeatureMap::new(2, 2, 2, vec![1.0, 1.0, 0.0, 0.0, -2.0, 0.5, 0.1, 0.0], false, geom);
        let once = l2_normalize(&fm).unwrap();
        let twice = l2_normalize(&once).unwrap();
        assert_eq!(once, twice);
        assert_eq!(&once.data[2..4], &[0.0, 0.0]);
    }

    #[test]
    fn normalize_rejects_nan() {
        let geom = unit_geometry(1, 16);
        let fm = FeatureMap::new(1, 1, 2, vec![f32::NAN, 1.0], false, geom);
        assert!(l2_normalize(&fm).is_err());
    }

    #[test]
    fn normalize_random_map_unit_norms() {
        // independent per-cell norm check
        let geom = unit_geometry(2, 32);
        let data: Vec<f32> = (0..16).map(|i| ((i * 37 + 11) % 23) as f32 - 7.0).collect();
        let fm = FeatureMap::new(2, 2, 4, data, false, geom);
        let n = l2_normalize(&fm).unwrap();
        for cell in n.data.chunks(4) {
            let norm: f32 = cell.iter().map(|v| v * v).sum::<f32>().sqrt();
            assert!((norm - 1.0).abs() < 1e-5, "norm {norm}");
        }
    }

    #[test]
    fn geometry_518_14_gives_37() {
        let g = SourceGeometry::for_image(640, 480, 518, 14);
        assert_eq!(g.grid_side(), 37);
        assert_eq!(g.scaled_w, 518);
        assert!(g.pad_bottom > 0);
        assert_eq!(g.pad_right, 0);
    }
}
