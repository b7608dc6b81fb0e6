//! Patch-grid to pixel-grid resampling.

use crate::error::{Result, SacError};
use crate::types::SourceGeometry;

/// Bilinearly interpolate a patch-resolution grid up to pixel resolution.
///
/// Only cells inside the unpadded content region are sampled; the padded
/// bottom/right margins never contribute. The output covers the original
/// image extent, `out_h` rows by `out_w` columns.
pub fn resample_to_pixels(
    grid: &[f32],
    grid_h: usize,
    grid_w: usize,
    geometry: &SourceGeometry,
    out_w: u32,
    out_h: u32,
) -> Result<Vec<f32>> {
    if grid.len() != grid_h * grid_w {
        return Err(SacError::Config(format!(
            "grid length {} does not match {}x{}",
            grid.len(),
            grid_h,
            grid_w
        )));
    }
    if out_w == 0 || out_h == 0 {
        return Err(SacError::Config("zero-sized resample target".into()));
    }
    if geometry.valid_grid_w() > grid_w || geometry.valid_grid_h() > grid_h {
        return Err(SacError::Config(
            "geometry valid extent exceeds grid shape".into(),
        ));
    }
    let valid_w = geometry.valid_grid_w();
    let valid_h = geometry.valid_grid_h();
    let patch = geometry.patch_size as f64;

    let mut out = vec![0f32; out_w as usize * out_h as usize];
    for y in 0..out_h as usize {
        // position in model-input pixels, then in grid cell coordinates
        let sy = (y as f64 + 0.5) * geometry.scaled_h as f64 / out_h as f64;
        let gy = (sy / patch - 0.5).clamp(0.0, (valid_h - 1) as f64);
        let y0 = gy.floor() as usize;
        let y1 = (y0 + 1).min(valid_h - 1);
        let fy = gy - y0 as f64;
        for x in 0..out_w as usize {
            let sx = (x as f64 + 0.5) * geometry.scaled_w as f64 / out_w as f64;
            let gx = (sx / patch - 0.5).clamp(0.0, (valid_w - 1) as f64);
            let x0 = gx.floor() as usize;
            let x1 = (x0 + 1).min(valid_w - 1);
            let fx = gx - x0 as f64;

            let v00 = grid[y0 * grid_w + x0] as f64;
            let v01 = grid[y0 * grid_w + x1] as f64;
            let v10 = grid[y1 * grid_w + x0] as f64;
            let v11 = grid[y1 * grid_w + x1] as f64;
            let top = v00 + (v01 - v00) * fx;
            let bot = v10 + (v11 - v10) * fx;
            out[y * out_w as usize + x] = (top + (bot - top) * fy) as f32;
        }
    }
    Ok(out)
}

/// Resample a boolean patch indicator to a pixel mask (bilinear, >= 0.5 cut).
pub fn resample_indicator(
    indicator: &[bool],
    grid_h: usize,
    grid_w: usize,
    geometry: &SourceGeometry,
    out_w: u32,
    out_h: u32,
) -> Result<Vec<bool>> {
    let grid: Vec<f32> = indicator.iter().map(|&b| if b { 1.0 } else { 0.0 }).collect();
    let real = resample_to_pixels(&grid, grid_h, grid_w, geometry, out_w, out_h)?;
    Ok(real.into_iter().map(|v| v >= 0.5).collect())
}
