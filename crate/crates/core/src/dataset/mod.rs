//! Multi-view scene datasets: images + camera records, ray generation, and
//! training-patch sampling.
//!
//! On-disk layout of a scene directory:
//!
//! ```text
//! scene/
//!   rainy/001.png ...      input views (required)
//!   clean/001.png ...      ground-truth backgrounds (optional)
//!   rain/001.png ...       ground-truth rain layers (optional)
//!   depth/001.bin ...      raw depth grids (optional)
//!   cameras.csv            ten-column camera sheet
//!   meta.txt               key=value: near, far
//! ```

mod camera;
mod patch;
mod rays;

pub use camera::{
    euler_deg_from_rotation, parse_camera_csv, rotation_from_euler_deg, serialize_camera_csv,
    Camera, CameraPose, CameraRecord, Intrinsics, CAMERA_CSV_HEADER,
};
pub use patch::{patch_at, sample_patch, PatchSample};
pub use rays::{generate_rays, ray_for_pixel, Ray};

use crate::config::KvConfig;
use crate::error::{Error, Result};
use crate::image_io::{self, Image};
use ndarray::Array2;
use std::path::Path;

/// Posed multi-view images; the unit of training and evaluation.
#[derive(Debug, Clone)]
pub struct SceneDataset {
    pub views: Vec<(Image, CameraRecord)>,
    pub clean_images: Option<Vec<Image>>,
    pub rain_layers: Option<Vec<Image>>,
    pub depth: Option<Vec<Array2<f64>>>,
    pub near_far: (f64, f64),
}

impl SceneDataset {
    pub fn new(
        views: Vec<(Image, CameraRecord)>,
        clean_images: Option<Vec<Image>>,
        rain_layers: Option<Vec<Image>>,
        depth: Option<Vec<Array2<f64>>>,
        near_far: (f64, f64),
    ) -> Result<Self> {
        if views.len() < 2 {
            return Err(Error::SceneLoad(format!(
                "need at least 2 views, got {}",
                views.len()
            )));
        }
        if !(near_far.0 > 0.0 && near_far.0 < near_far.1) {
            return Err(Error::SceneLoad(format!(
                "invalid near/far bounds {:?}",
                near_far
            )));
        }
        let shape = views[0].0.dim();
        for (img, rec) in &views {
            if img.dim() != shape {
                return Err(Error::SceneLoad(format!(
                    "view '{}' has shape {:?}, expected {:?}",
                    rec.name,
                    img.dim(),
                    shape
                )));
            }
            rec.validate()?;
        }
        for (label, set) in [("clean", &clean_images), ("rain", &rain_layers)] {
            if let Some(set) = set {
                if set.len() != views.len() {
                    return Err(Error::SceneLoad(format!(
                        "{label} image count {} != view count {}",
                        set.len(),
                        views.len()
                    )));
                }
            }
        }
        Ok(SceneDataset {
            views,
            clean_images,
            rain_layers,
            depth,
            near_far,
        })
    }

    pub fn len(&self) -> usize {
        self.views.len()
    }

    pub fn is_empty(&self) -> bool {
        self.views.is_empty()
    }

    pub fn image_size(&self) -> (usize, usize) {
        let s = self.views[0].0.shape();
        (s[0], s[1])
    }

    pub fn camera(&self, view_index: usize) -> Result<Camera> {
        let (h, w) = self.image_size();
        let rec = &self
            .views
            .get(view_index)
            .ok_or(Error::ViewIndex {
                index: view_index,
                count: self.views.len(),
            })?
            .1;
        Camera::from_record(rec, h, w)
    }

    /// Axis-aligned bounding box of all camera positions (used to normalize
    /// the fixed camera feature vectors).
    pub fn camera_bounds(&self) -> ([f64; 3], [f64; 3]) {
        let mut lo = [f64::INFINITY; 3];
        let mut hi = [f64::NEG_INFINITY; 3];
        for (_, rec) in &self.views {
            for k in 0..3 {
                lo[k] = lo[k].min(rec.position[k]);
                hi[k] = hi[k].max(rec.position[k]);
            }
        }
        (lo, hi)
    }
}

fn numbered_pngs(dir: &Path) -> Result<Vec<(u32, std::path::PathBuf)>> {
    let mut files = Vec::new();
    let entries = std::fs::read_dir(dir).map_err(|e| Error::io(dir, e))?;
    for entry in entries {
        let entry = entry.map_err(|e| Error::io(dir, e))?;
        let path = entry.path();
        if path.extension().and_then(|e| e.to_str()) != Some("png") {
            continue;
        }
        let stem = path
            .file_stem()
            .and_then(|s| s.to_str())
            .unwrap_or_default();
        let index: u32 = stem.parse().map_err(|_| {
            Error::SceneLoad(format!(
                "{}: view files must be numbered, got '{stem}.png'",
                dir.display()
            ))
        })?;
        files.push((index, path));
    }
    files.sort_by_key(|(i, _)| *i);
    Ok(files)
}

fn load_image_set(dir: &Path, expected: usize, label: &str) -> Result<Vec<Image>> {
    let files = numbered_pngs(dir)?;
    if files.len() != expected {
        return Err(Error::SceneLoad(format!(
            "{label}: found {} images, expected {}",
            files.len(),
            expected
        )));
    }
    files.iter().map(|(_, p)| image_io::load_png(p)).collect()
}

/// Loads a scene directory (see module docs for the layout).
pub fn load_scene(dir: &Path) -> Result<SceneDataset> {
    let rainy_dir = dir.join("rainy");
    let files = numbered_pngs(&rainy_dir)?;
    if files.is_empty() {
        return Err(Error::SceneLoad(format!(
            "{}: no rainy views found",
            rainy_dir.display()
        )));
    }
    let csv_path = dir.join("cameras.csv");
    let csv_text = std::fs::read_to_string(&csv_path).map_err(|e| Error::io(&csv_path, e))?;
    let records = parse_camera_csv(&csv_text)?;
    if records.len() != files.len() {
        return Err(Error::SceneLoad(format!(
            "camera count {} != image count {}",
            records.len(),
            files.len()
        )));
    }
    let mut views = Vec::with_capacity(files.len());
    for ((_, path), rec) in files.iter().zip(records) {
        views.push((image_io::load_png(path)?, rec));
    }

    let meta_path = dir.join("meta.txt");
    let meta = KvConfig::from_file(&meta_path)?;
    let near = meta.get_f64("near", 2.0)?;
    let far = meta.get_f64("far", 6.0)?;

    let clean_dir = dir.join("clean");
    let clean_images = clean_dir
        .is_dir()
        .then(|| load_image_set(&clean_dir, views.len(), "clean"))
        .transpose()?;
    let rain_dir = dir.join("rain");
    let rain_layers = rain_dir
        .is_dir()
        .then(|| load_image_set(&rain_dir, views.len(), "rain"))
        .transpose()?;

    let depth_dir = dir.join("depth");
    let depth = if depth_dir.is_dir() {
        let mut grids = Vec::new();
        let mut entries: Vec<_> = std::fs::read_dir(&depth_dir)
            .map_err(|e| Error::io(&depth_dir, e))?
            .filter_map(|e| e.ok().map(|e| e.path()))
            .filter(|p| p.extension().and_then(|e| e.to_str()) == Some("bin"))
            .collect();
        entries.sort();
        for path in entries {
            grids.push(image_io::load_depth(&path)?);
        }
        if grids.len() != views.len() {
            return Err(Error::SceneLoad(format!(
                "depth: found {} grids, expected {}",
                grids.len(),
                views.len()
            )));
        }
        Some(grids)
    } else {
        None
    };

    SceneDataset::new(views, clean_images, rain_layers, depth, (near, far))
}

#[cfg(test)]
mod tests {
    use super::*;
    use ndarray::Array3;

    fn record(i: usize) -> CameraRecord {
        CameraRecord {
            name: format!("cameraShape{}", i + 1),
            position: [i as f64, 0.0, 5.0],
            rotation_euler_deg: [0.0, 0.0, 0.0],
            focal_length_mm: 35.0,
            horizontal_aperture_mm: 36.0,
            vertical_aperture_mm: 36.0,
        }
    }

    fn write_scene(dir: &Path, n: usize, with_csv_rows: usize) {
        std::fs::create_dir_all(dir.join("rainy")).unwrap();
        for i in 0..n {
            let img = Array3::from_elem((8, 8, 3), i as f64 / n as f64);
            image_io::save_png(&dir.join(format!("rainy/{:03}.png", i + 1)), &img).unwrap();
        }
        let recs: Vec<CameraRecord> = (0..with_csv_rows).map(record).collect();
        std::fs::write(dir.join("cameras.csv"), serialize_camera_csv(&recs)).unwrap();
        std::fs::write(dir.join("meta.txt"), "near=2.0\nfar=6.0\n").unwrap();
    }

    #[test]
    fn loads_matching_scene() {
        let tmp = tempfile::tempdir().unwrap();
        write_scene(tmp.path(), 8, 8);
        let ds = load_scene(tmp.path()).unwrap();
        assert_eq!(ds.len(), 8);
        assert_eq!(ds.image_size(), (8, 8));
        assert_eq!(ds.near_far, (2.0, 6.0));
        // Views sorted by numeric filename: view 0 is the darkest.
        assert!(ds.views[0].0[(0, 0, 0)] < ds.views[7].0[(0, 0, 0)]);
    }

    #[test]
    fn count_mismatch_errors() {
        let tmp = tempfile::tempdir().unwrap();
        write_scene(tmp.path(), 8, 7);
        match load_scene(tmp.path()) {
            Err(Error::SceneLoad(msg)) => assert!(msg.contains("7"), "{msg}"),
            other => panic!("expected load error, got {other:?}"),
        }
    }

    #[test]
    fn undecodable_image_names_file() {
        let tmp = tempfile::tempdir().unwrap();
        write_scene(tmp.path(), 3, 3);
        std::fs::write(tmp.path().join("rainy/002.png"), b"not a png").unwrap();
        match load_scene(tmp.path()) {
            Err(Error::Image { path, .. }) => {
                assert!(path.to_string_lossy().contains("002.png"))
            }
            other => panic!("expected image error, got {other:?}"),
        }
    }

    #[test]
    fn fewer_than_two_views_rejected() {
        let tmp = tempfile::tempdir().unwrap();
        write_scene(tmp.path(), 1, 1);
        assert!(load_scene(tmp.path()).is_err());
    }
}
