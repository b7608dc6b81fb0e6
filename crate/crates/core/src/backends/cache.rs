//! Disk cache for extracted feature maps.
//!
//! File format: magic "SACF" | format version u32 LE | header length u32 LE |
//! UTF-8 JSON header | raw row-major float32 LE payload. Writers stage to a
//! temp file and rename; corrupt files are quarantined and treated as misses.

use std::fs;
use std::io::{Read, Write};
use std::path::{Path, PathBuf};

use serde::{Deserialize, Serialize};

use crate::error::{Result, SacError};
use crate::types::{FeatureMap, SourceGeometry};

const MAGIC: &[u8; 4] = b"SACF";
const FORMAT_VERSION: u32 = 1;

/// Identifies one cached embedding.
#[derive(Debug, Clone, PartialEq, Eq)]
pub struct CacheKey {
    pub extractor_name: String,
    pub extractor_version: String,
    pub image_id: String,
    pub content_hash: String,
}

#[derive(Debug, Serialize, Deserialize)]
struct CacheHeader {
    grid_h: usize,
    grid_w: usize,
    dim: usize,
    normalized: bool,
    geometry: SourceGeometry,
    extractor: String,
    extractor_version: String,
    image_id: String,
    content_hash: String,
    dtype: String,
}

pub struct FeatureCache {
    root: PathBuf,
}

impl FeatureCache {
    pub fn new(root: impl Into<PathBuf>) -> Self {
        Self { root: root.into() }
    }

    pub fn root(&self) -> &Path {
        &self.root
    }

    fn entry_path(&self, key: &CacheKey) -> PathBuf {
        self.root
            .join(&key.extractor_name)
            .join(format!("{}.sacf", key.image_id))
    }

    fn quarantine(path: &Path) {
        let mut q = path.as_os_str().to_owned();
        q.push(".quarantined");
        let _ = fs::rename(path, PathBuf::from(q));
    }

    pub fn get(&self, key: &CacheKey) -> Result<Option<FeatureMap>> {
        let path = self.entry_path(key);
        let mut file = match fs::File::open(&path) {
            Ok(f) => f,
            Err(e) if e.kind() == std::io::ErrorKind::NotFound => return Ok(None),
            Err(e) => return Err(e.into()),
        };
        match read_entry(&mut file, key) {
            Ok(fm) => Ok(Some(fm)),
            Err(_) => {
                Self::quarantine(&path);
                Ok(None)
            }
        }
    }

    pub fn put(&self, key: &CacheKey, fm: &FeatureMap) -> Result<()> {
        let path = self.entry_path(key);
        let dir = path.parent().unwrap();
        fs::create_dir_all(dir)?;
        let header = CacheHeader {
            grid_h: fm.grid_h,
            grid_w: fm.grid_w,
            dim: fm.dim,
            normalized: fm.normalized,
            geometry: fm.geometry.clone(),
            extractor: key.extractor_name.clone(),
            extractor_version: key.extractor_version.clone(),
            image_id: key.image_id.clone(),
            content_hash: key.content_hash.clone(),
            dtype: "f32le".into(),
        };
        let header_bytes = serde_json::to_vec(&header)?;

        let tmp = dir.join(format!(
            ".{}.tmp-{}",
            key.image_id,
            std::process::id()
        ));
        {
            let mut f = fs::File::create(&tmp)?;
            f.write_all(MAGIC)?;
            f.write_all(&FORMAT_VERSION.to_le_bytes())?;
            f.write_all(&(header_bytes.len() as u32).to_le_bytes())?;
            f.write_all(&header_bytes)?;
            let mut payload = Vec::with_capacity(fm.data.len() * 4);
            for v in &fm.data {
                payload.extend_from_slice(&v.to_le_bytes());
            }
            f.write_all(&payload)?;
            f.sync_all()?;
        }
        fs::rename(&tmp, &path)?;
        Ok(())
    }
}

fn read_entry(file: &mut fs::File, key: &CacheKey) -> Result<FeatureMap> {
    let corrupt = |what: &str| SacError::Data(format!("corrupt cache entry: {what}"));
    let mut magic = [0u8; 4];
    file.read_exact(&mut magic).map_err(|_| corrupt("magic"))?;
    if &magic != MAGIC {
        return Err(corrupt("bad magic"));
    }
    let mut word = [0u8; 4];
    file.read_exact(&mut word).map_err(|_| corrupt("version"))?;
    if u32::from_le_bytes(word) != FORMAT_VERSION {
        return Err(corrupt("format version"));
    }
    file.read_exact(&mut word).map_err(|_| corrupt("header length"))?;
    let header_len = u32::from_le_bytes(word) as usize;
    let mut header_bytes = vec![0u8; header_len];
    file.read_exact(&mut header_bytes).map_err(|_| corrupt("header"))?;
    let header: CacheHeader =
        serde_json::from_slice(&header_bytes).map_err(|_| corrupt("header json"))?;
    if header.dtype != "f32le" {
        return Err(corrupt("dtype"));
    }
    if header.extractor != key.extractor_name
        || header.extractor_version != key.extractor_version
        || header.image_id != key.image_id
        || header.content_hash != key.content_hash
    {
        return Err(corrupt("key mismatch"));
    }
    let count = header.grid_h * header.grid_w * header.dim;
    let mut payload = vec![0u8; count * 4];
    file.read_exact(&mut payload).map_err(|_| corrupt("payload"))?;
    let mut trailing = [0u8; 1];
    if file.read(&mut trailing).map_err(|_| corrupt("trailer"))? != 0 {
        return Err(corrupt("trailing bytes"));
    }
    let data: Vec<f32> = payload
        .chunks_exact(4)
        .map(|c| f32::from_le_bytes([c[0], c[1], c[2], c[3]]))
        .collect();
    Ok(FeatureMap::new(
        header.grid_h,
        header.grid_w,
        header.dim,
        data,
        header.normalized,
        header.geometry,
    ))
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::types::SourceGeometry;

    fn sample_map() -> FeatureMap {
        let geometry = SourceGeometry::for_image(64, 48, 64, 16);
        let data: Vec<f32> = (0..4 * 4 * 3).map(|i| i as f32 * 0.5 - 3.0).collect();
        FeatureMap::new(4, 4, 3, data, false, geometry)
    }

    fn key() -> CacheKey {
        CacheKey {
            extractor_name: "mock".into(),
            extractor_version: "1".into(),
            image_id: "img01".into(),
            content_hash: "abc".into(),
        }
    }

    #[test]
    fn roundtrip_bit_exact() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::new(dir.path());
        let fm = sample_map();
        cache.put(&key(), &fm).unwrap();
        let back = cache.get(&key()).unwrap().unwrap();
        assert_eq!(fm, back);
    }

    #[test]
    fn miss_on_empty_cache() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::new(dir.path());
        assert!(cache.get(&key()).unwrap().is_none());
    }

    #[test]
    fn truncated_file_is_quarantined() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::new(dir.path());
        cache.put(&key(), &sample_map()).unwrap();
        let path = dir.path().join("mock").join("img01.sacf");
        let bytes = fs::read(&path).unwrap();
        fs::write(&path, &bytes[..bytes.len() / 2]).unwrap();
        assert!(cache.get(&key()).unwrap().is_none());
        assert!(!path.exists());
        let quarantined = dir.path().join("mock").join("img01.sacf.quarantined");
        assert!(quarantined.exists());
    }

    #[test]
    fn key_mismatch_is_miss() {
        let dir = tempfile::tempdir().unwrap();
        let cache = FeatureCache::new(dir.path());
        cache.put(&key(), &sample_map()).unwrap();
        let mut other = key();
        other.content_hash = "different".into();
        assert!(cache.get(&other).unwrap().is_none());
    }
}
