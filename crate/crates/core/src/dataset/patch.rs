use crate::dataset::rays::{ray_for_pixel, Ray};
use crate::dataset::SceneDataset;
use crate::error::{Error, Result};
use ndarray::Array3;
use rand::Rng;

/// A square training patch: aligned rays plus the rainy target pixels.
#[derive(Debug, Clone)]
pub struct PatchSample {
    pub view_index: usize,
    pub top_left: (usize, usize),
    pub size: usize,
    /// Row-major; `rays[k]` covers pixel `(top + k / size, left + k % size)`.
    pub rays: Vec<Ray>,
    pub target_pixels: Array3<f64>,
}

/// Cuts a patch at an explicit position (used by the trainer and tests).
pub fn patch_at(
    dataset: &SceneDataset,
    view_index: usize,
    top_left: (usize, usize),
    size: usize,
) -> Result<PatchSample> {
    let (h, w) = dataset.image_size();
    if size == 0 || size > h.min(w) {
        return Err(Error::PatchSize { size, h, w });
    }
    let (top, left) = top_left;
    if top + size > h || left + size > w {
        return Err(Error::PatchSize { size, h, w });
    }
    let camera = dataset.camera(view_index)?;
    let mut rays = Vec::with_capacity(size * size);
    for r in 0..size {
        for c in 0..size {
            rays.push(ray_for_pixel(&camera, view_index, top + r, left + c));
        }
    }
    let image = &dataset.views[view_index].0;
    let target_pixels = image
        .slice(ndarray::s![top..top + size, left..left + size, ..])
        .to_owned();
    Ok(PatchSample {
        view_index,
        top_left,
        size,
        rays,
        target_pixels,
    })
}

/// Uniformly random patch placement; deterministic under a fixed rng state.
pub fn sample_patch(
    dataset: &SceneDataset,
    view_index: usize,
    size: usize,
    rng: &mut impl Rng,
) -> Result<PatchSample> {
    let (h, w) = dataset.image_size();
    if size == 0 || size > h.min(w) {
        return Err(Error::PatchSize { size, h, w });
    }
    let top = rng.gen_range(0..=h - size);
    let left = rng.gen_range(0..=w - size);
    patch_at(dataset, view_index, (top, left), size)
}
