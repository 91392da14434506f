//! The rain prediction module: learnable rain embeddings (scene state `s`,
//! per-view states `v`, fixed camera vectors `p`) mapped through an MLP and a
//! CNN decoder to a per-view nonnegative rain map.

mod predictor;

pub use predictor::{
    crop_rain_patch, predict_rain_map, predict_rain_map_train, PredictorCache, PredictorConfig,
    PredictorGrads, PredictorParams, RainMap,
};

use crate::dataset::{CameraRecord, SceneDataset};
use crate::error::{Error, Result};
use ndarray::{Array1, Array2};
use rand::Rng;
use rand_distr::{Distribution, Normal};

pub const SCENE_STATE_DIM: usize = 128;
pub const VIEW_STATE_DIM: usize = 64;
pub const CAMERA_VECTOR_DIM: usize = 16;
pub const EMBEDDING_DIM: usize = SCENE_STATE_DIM + VIEW_STATE_DIM + CAMERA_VECTOR_DIM;

/// Rain embedding: one scene state vector, one state vector per view, and a
/// fixed (never optimized) camera feature vector per view.
#[derive(Debug, Clone, PartialEq)]
pub struct RainEmbedding {
    pub scene_state: Array1<f64>,
    pub view_states: Array2<f64>,
    pub camera_vectors: Array2<f64>,
}

impl RainEmbedding {
    /// Gaussian(0, 0.01) init for the learnable parts; `p` is derived from
    /// the camera records and the camera bounding box.
    pub fn init(dataset: &SceneDataset, rng: &mut impl Rng) -> Self {
        let n = dataset.len();
        let normal = Normal::new(0.0, 0.01).unwrap();
        let scene_state = Array1::from_shape_fn(SCENE_STATE_DIM, |_| normal.sample(rng));
        let view_states = Array2::from_shape_fn((n, VIEW_STATE_DIM), |_| normal.sample(rng));
        let (lo, hi) = dataset.camera_bounds();
        let (h, w) = dataset.image_size();
        let mut camera_vectors = Array2::zeros((n, CAMERA_VECTOR_DIM));
        for (i, (_, rec)) in dataset.views.iter().enumerate() {
            let feat = camera_feature_vector(rec, h, w, lo, hi);
            for (j, v) in feat.iter().enumerate() {
                camera_vectors[(i, j)] = *v;
            }
        }
        RainEmbedding {
            scene_state,
            view_states,
            camera_vectors,
        }
    }

    pub fn view_count(&self) -> usize {
        self.view_states.nrows()
    }

    /// Concatenation `[s; v_i; p_i]`.
    pub fn assemble(&self, view_index: usize) -> Result<Array1<f64>> {
        if view_index >= self.view_count() {
            return Err(Error::ViewIndex {
                index: view_index,
                count: self.view_count(),
            });
        }
        let mut out = Array1::zeros(EMBEDDING_DIM);
        for (i, &v) in self.scene_state.iter().enumerate() {
            out[i] = v;
        }
        for (i, &v) in self.view_states.row(view_index).iter().enumerate() {
            out[SCENE_STATE_DIM + i] = v;
        }
        for (i, &v) in self.camera_vectors.row(view_index).iter().enumerate() {
            out[SCENE_STATE_DIM + VIEW_STATE_DIM + i] = v;
        }
        Ok(out)
    }
}

/// Normalized 16-entry camera feature: position scaled to the camera
/// bounding box (3), first two rotation columns (6), normalized pixel focal
/// and aspect ratio (2), zero padding (5 + 0 spare).
pub fn camera_feature_vector(
    rec: &CameraRecord,
    h: usize,
    w: usize,
    box_lo: [f64; 3],
    box_hi: [f64; 3],
) -> [f64; CAMERA_VECTOR_DIM] {
    let mut out = [0.0; CAMERA_VECTOR_DIM];
    let center = [
        0.5 * (box_lo[0] + box_hi[0]),
        0.5 * (box_lo[1] + box_hi[1]),
        0.5 * (box_lo[2] + box_hi[2]),
    ];
    let half_extent = (0..3)
        .map(|k| (box_hi[k] - box_lo[k]) * 0.5)
        .fold(0.0f64, f64::max)
        .max(1e-9);
    for k in 0..3 {
        out[k] = (rec.position[k] - center[k]) / half_extent;
    }
    // Continuous 6-entry rotation encoding: first two columns of R.
    let r = rec.pose().rotation;
    for col in 0..2 {
        for row in 0..3 {
            out[3 + col * 3 + row] = r[row][col];
        }
    }
    let fx = rec.focal_length_mm * w as f64 / rec.horizontal_aperture_mm;
    out[9] = fx / w.max(h) as f64;
    out[10] = w as f64 / h as f64;
    out
}

#[cfg(test)]
mod tests {
    use super::*;
    use crate::dataset::CameraRecord;
    use ndarray::Array3;
    use rand::SeedableRng;
    use rand_chacha::ChaCha8Rng;

    fn record(position: [f64; 3]) -> CameraRecord {
        CameraRecord {
            name: "cam".into(),
            position,
            rotation_euler_deg: [0.0, 0.0, 0.0],
            focal_length_mm: 35.0,
            horizontal_aperture_mm: 36.0,
            vertical_aperture_mm: 36.0,
        }
    }

    fn dataset() -> SceneDataset {
        let img = Array3::zeros((8, 8, 3));
        SceneDataset::new(
            vec![
                (img.clone(), record([1.0, 0.0, 0.0])),
                (img, record([-1.0, 0.0, 0.0])),
            ],
            None,
            None,
            None,
            (2.0, 6.0),
        )
        .unwrap()
    }

    #[test]
    fn dimensions_match_contract() {
        let ds = dataset();
        let emb = RainEmbedding::init(&ds, &mut ChaCha8Rng::seed_from_u64(1));
        assert_eq!(emb.scene_state.len(), 128);
        assert_eq!(emb.view_states.dim(), (2, 64));
        assert_eq!(emb.camera_vectors.dim(), (2, 16));
        assert_eq!(emb.assemble(0).unwrap().len(), 208);
        assert!(emb.assemble(2).is_err());
    }

    #[test]
    fn zeroed_states_leave_only_camera_block() {
        let ds = dataset();
        let mut emb = RainEmbedding::init(&ds, &mut ChaCha8Rng::seed_from_u64(2));
        emb.scene_state.fill(0.0);
        emb.view_states.fill(0.0);
        let a = emb.assemble(0).unwrap();
        assert!(a.slice(ndarray::s![..192]).iter().all(|&v| v == 0.0));
        assert!(a.slice(ndarray::s![192..]).iter().any(|&v| v != 0.0));
    }

    #[test]
    fn same_camera_views_differ_only_in_view_block() {
        let img = Array3::zeros((8, 8, 3));
        let ds = SceneDataset::new(
            vec![
                (img.clone(), record([1.0, 2.0, 3.0])),
                (img, record([1.0, 2.0, 3.0])),
            ],
            None,
            None,
            None,
            (2.0, 6.0),
        )
        .unwrap();
        let emb = RainEmbedding::init(&ds, &mut ChaCha8Rng::seed_from_u64(3));
        let a = emb.assemble(0).unwrap();
        let b = emb.assemble(1).unwrap();
        assert_eq!(a.slice(ndarray::s![..128]), b.slice(ndarray::s![..128]));
        assert_ne!(a.slice(ndarray::s![128..192]), b.slice(ndarray::s![128..192]));
        assert_eq!(a.slice(ndarray::s![192..]), b.slice(ndarray::s![192..]));
    }

    #[test]
    fn identity_camera_at_origin_normalizes_cleanly() {
        // Use a box centered at the origin so the position block vanishes.
        let feat = camera_feature_vector(
            &record([0.0, 0.0, 0.0]),
            64,
            64,
            [-1.0, -1.0, -1.0],
            [1.0, 1.0, 1.0],
        );
        assert_eq!(&feat[0..3], &[0.0, 0.0, 0.0]);
        assert_eq!(&feat[3..9], &[1.0, 0.0, 0.0, 0.0, 1.0, 0.0]);
        // fx = 35 * 64 / 36; normalized by max(w, h) = 64 -> 35/36.
        assert!((feat[9] - 35.0 / 36.0).abs() < 1e-12);
        assert_eq!(feat[10], 1.0);
        assert_eq!(&feat[11..], &[0.0; 5]);
    }
}
